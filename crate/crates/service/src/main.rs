use clap::Parser;
use skein_service::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(message) = run(cli) {
        eprintln!("{message}");
        std::process::exit(1);
    }
}
