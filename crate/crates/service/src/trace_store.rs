//! Durable trace sink: one append-only JSONL file per day with an
//! in-memory index from trace id to event positions.

use skein_core::{TraceEvent, TraceLog};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

pub struct TraceStore {
    dir: PathBuf,
    /// Guards file appends; the in-memory log handles reads.
    write_lock: Mutex<()>,
}

/// Civil date from days since the Unix epoch (Gregorian calendar).
fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

impl TraceStore {
    pub fn new(dir: PathBuf) -> std::io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    fn day_file(&self, ts_ms: u64) -> PathBuf {
        let (y, m, d) = civil_from_days((ts_ms / 86_400_000) as i64);
        self.dir.join(format!("trace-{y:04}-{m:02}-{d:02}.jsonl"))
    }

    /// Appends events to the daily file.
    pub fn append(&self, events: &[TraceEvent]) -> std::io::Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let _guard = self.write_lock.lock().expect("trace store lock");
        let path = self.day_file(events[0].ts_ms);
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        file.write_all(TraceLog::to_jsonl(events).as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn civil_dates_are_correct() {
        assert_eq!(civil_from_days(0), (1970, 1, 1));
        assert_eq!(civil_from_days(19_723), (2024, 1, 1));
        // Leap day.
        assert_eq!(civil_from_days(19_782), (2024, 2, 29));
    }

    #[test]
    fn appends_land_in_a_daily_file() {
        let dir = tempfile::tempdir().unwrap();
        let store = TraceStore::new(dir.path().to_path_buf()).unwrap();
        let log = TraceLog::new();
        log.emit("t1", "kind", serde_json::json!({}));
        store.append(&log.snapshot()).unwrap();
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
    }
}
