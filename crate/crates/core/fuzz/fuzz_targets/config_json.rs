#![no_main]

use libfuzzer_sys::fuzz_target;
use strainforge::config::Config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = Config::from_json(text) {
            // Anything accepted must survive a round trip.
            let again = Config::from_json(&cfg.to_json().unwrap()).unwrap();
            assert_eq!(again, cfg);
        }
    }
});
