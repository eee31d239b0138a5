#![no_main]

use libfuzzer_sys::fuzz_target;
use ndarray::array;
use onebit::qubo::exchange::parse_response;
use onebit::qubo::QuboInstance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(resp) = parse_response(text) else { return };
    let inst = QuboInstance::from_coeffs(array![[-1.0, 0.5, 0.0], [0.5, -1.0, 0.25], [0.0, 0.25, 0.5]]).unwrap();
    let reads: u64 = resp.samples.iter().map(|s| s.occurrences).fold(0, u64::saturating_add);
    if let Ok(ss) = resp.into_sample_set(&inst, reads) {
        ss.validate(&inst).unwrap();
    }
});
