//! Replays the shipped 100-query log: 31 of the queries paraphrase
//! earlier ones closely enough to clear the similarity threshold, so the
//! observed hit rate settles at 0.31.

use serde::Deserialize;
use skein_cache::{SemanticCache, DEFAULT_TAU};
use skein_core::{Query, TraceLog};
use skein_gateway::{Gateway, MockProvider};
use skein_writer::{CitationedAnswer, Statement};
use std::sync::Arc;

#[derive(Deserialize)]
struct LogLine {
    text: String,
    kind: String,
}

fn load_log() -> Vec<LogLine> {
    let path = format!(
        "{}/../../fixtures/cache/queries.jsonl",
        env!("CARGO_MANIFEST_DIR")
    );
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn gateway() -> Gateway {
    Gateway::new(
        Arc::new(MockProvider::new(vec![]).unwrap()),
        Arc::new(TraceLog::new()),
    )
}

#[test]
fn replaying_the_query_log_yields_a_31_percent_hit_rate() {
    let log = load_log();
    assert_eq!(log.len(), 100);

    let cache = SemanticCache::new(200, DEFAULT_TAU).unwrap();
    let gw = gateway();
    let mut paraphrase_hit_cosines = Vec::new();

    for (i, line) in log.iter().enumerate() {
        let query = Query::new(format!("q{i}"), &line.text);
        match cache.lookup(&query, DEFAULT_TAU, &gw).unwrap() {
            Some(hit) => {
                assert_eq!(
                    line.kind, "paraphrase",
                    "unique query {:?} must not hit",
                    line.text
                );
                assert!(hit.cosine >= DEFAULT_TAU);
                paraphrase_hit_cosines.push(hit.cosine);
            }
            None => {
                assert_eq!(
                    line.kind, "unique",
                    "paraphrase {:?} should have hit",
                    line.text
                );
                let answer = CitationedAnswer {
                    statements: vec![Statement::new(format!("answer to {}", line.text), vec![])],
                    degraded: false,
                };
                cache.store(&query, &answer, &gw).unwrap();
            }
        }
    }

    let stats = cache.stats();
    assert_eq!(stats.lookups, 100);
    assert_eq!(stats.hits, 31);
    assert!((stats.hit_rate() - 0.31).abs() <= 0.02);

    // The log exercises both near-identical repeats (cosine 1) and genuine
    // paraphrases in the open (tau, 1) band.
    assert!(paraphrase_hit_cosines.iter().any(|&c| c > 0.999));
    assert!(
        paraphrase_hit_cosines
            .iter()
            .any(|&c| c > DEFAULT_TAU && c < 0.99),
        "expected a paraphrase in the near-threshold band: {paraphrase_hit_cosines:?}"
    );
}

#[test]
fn tau_monotonicity_over_the_log() {
    let log = load_log();
    let gw = gateway();
    let mut hits_by_tau = Vec::new();
    for tau in [0.90, 0.95, 0.99] {
        let cache = SemanticCache::new(200, tau).unwrap();
        let mut hits = 0u64;
        for (i, line) in log.iter().enumerate() {
            let query = Query::new(format!("q{i}"), &line.text);
            if cache.lookup(&query, tau, &gw).unwrap().is_some() {
                hits += 1;
            } else {
                let answer = CitationedAnswer {
                    statements: vec![Statement::new("a", vec![])],
                    degraded: false,
                };
                cache.store(&query, &answer, &gw).unwrap();
            }
        }
        hits_by_tau.push(hits);
    }
    assert!(
        hits_by_tau[0] >= hits_by_tau[1] && hits_by_tau[1] >= hits_by_tau[2],
        "raising tau can only lose hits: {hits_by_tau:?}"
    );
}
