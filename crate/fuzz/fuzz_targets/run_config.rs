#![no_main]

use fieldnav_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::from_toml_str(text) else { return };
    let back = RunConfig::from_toml_str(&cfg.to_toml()).expect("effective config parses");
    assert_eq!(back.to_toml(), cfg.to_toml());
});
