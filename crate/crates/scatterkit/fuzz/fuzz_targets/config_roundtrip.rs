//! Any config the parser accepts must survive serialize -> parse with a
//! byte-stable second serialization.

#![no_main]

use libfuzzer_sys::fuzz_target;
use scatterkit::config::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ScenarioConfig::from_toml_str(text) else {
        return;
    };
    let emitted = cfg.to_toml_string().expect("accepted config serializes");
    let reparsed = ScenarioConfig::from_toml_str(&emitted)
        .expect("serialized config parses back");
    let emitted_again = reparsed.to_toml_string().unwrap();
    assert_eq!(emitted, emitted_again, "round trip is not stable");
});
