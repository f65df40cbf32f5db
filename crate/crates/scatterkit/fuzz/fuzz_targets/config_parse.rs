//! The scenario parser must reject arbitrary bytes with an error, never a
//! panic, and any accepted input must satisfy its own validation.

#![no_main]

use libfuzzer_sys::fuzz_target;
use scatterkit::config::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        cfg.validate().expect("accepted config must validate");
    }
});
