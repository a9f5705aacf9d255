#![no_main]
use libfuzzer_sys::fuzz_target;
use qpd_sim::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml(text) {
        let _ = cfg.resolve();
        let snapshot = cfg.to_toml();
        let again = RunConfig::from_toml(&snapshot).expect("snapshot parses");
        assert_eq!(again.to_toml(), snapshot);
    }
});
