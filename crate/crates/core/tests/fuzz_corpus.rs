//! Replays the fuzz corpus seeds through the parser invariants the fuzz
//! targets check, so they run on stable without cargo-fuzz.

use std::path::PathBuf;

use onebit::harness::{parse_config_toml, serve_local, LocalBackend};
use onebit::model::ChannelMatrix;
use onebit::qubo::exchange::{parse_request, parse_response};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn exchange_request_seeds() {
    let mut accepted = 0;
    for (path, text) in seeds("exchange_request") {
        if let Ok(req) = parse_request(&text) {
            accepted += 1;
            assert_eq!(parse_request(&req.to_json()).unwrap(), req, "{}", path.display());
            if req.n <= 12 && req.num_reads <= 64 {
                serve_local(&text, LocalBackend::Exact, 0).unwrap();
            }
        }
    }
    assert!(accepted >= 1);
}

#[test]
fn exchange_response_seeds() {
    let inst = onebit::qubo::QuboInstance::from_coeffs(ndarray::array![
        [-1.0, 0.5, 0.0],
        [0.5, -1.0, 0.25],
        [0.0, 0.25, 0.5]
    ])
    .unwrap();
    let mut accepted = 0;
    for (_, text) in seeds("exchange_response") {
        let Ok(resp) = parse_response(&text) else { continue };
        let reads = resp.samples.iter().map(|s| s.occurrences).sum();
        if let Ok(ss) = resp.into_sample_set(&inst, reads) {
            ss.validate(&inst).unwrap();
            accepted += 1;
        }
    }
    assert!(accepted >= 1);
}

#[test]
fn channel_file_seeds() {
    let mut accepted = 0;
    for (_, text) in seeds("channel_file") {
        if let Ok(h) = ChannelMatrix::from_json(&text) {
            accepted += 1;
            let again = serde_json::to_string(&h.to_document()).unwrap();
            assert_eq!(ChannelMatrix::from_json(&again).unwrap().entries(), h.entries());
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn experiment_config_seeds() {
    for (path, text) in seeds("experiment_config") {
        let cfg = parse_config_toml(&text)
            .and_then(|f| f.resolve())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
    }
}
