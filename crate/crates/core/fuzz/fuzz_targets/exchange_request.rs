#![no_main]

use libfuzzer_sys::fuzz_target;
use onebit::harness::{serve_local, LocalBackend};
use onebit::qubo::exchange::parse_request;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(req) = parse_request(text) {
        // Whatever parses must survive a re-encode unchanged.
        assert_eq!(parse_request(&req.to_json()).unwrap(), req);
        if req.n <= 12 && req.num_reads <= 64 {
            let _ = serve_local(text, LocalBackend::Exact, 0);
        }
    }
});
