#![no_main]

use libfuzzer_sys::fuzz_target;
use onebit::model::ChannelMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = ChannelMatrix::from_json(text) {
        assert_eq!(h.entries().len(), h.n_r() * h.n_t());
        let again = serde_json::to_string(&h.to_document()).unwrap();
        assert_eq!(ChannelMatrix::from_json(&again).unwrap().entries(), h.entries());
    }
});
