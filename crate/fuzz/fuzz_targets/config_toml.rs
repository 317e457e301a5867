#![no_main]

use libfuzzer_sys::fuzz_target;
use spc_rsma::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ScenarioConfig::from_toml_str(text) {
        // anything accepted must survive a round trip and validation must
        // not panic
        let again = ScenarioConfig::from_toml_str(&config.to_toml_string()).expect("round trip");
        assert_eq!(again, config);
        let _ = config.validate();
    }
});
