#![no_main]

use libfuzzer_sys::fuzz_target;
use onebit::harness::parse_config_toml;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_config_toml(text) {
        if let Ok(cfg) = file.resolve() {
            cfg.validate().unwrap();
        }
    }
});
