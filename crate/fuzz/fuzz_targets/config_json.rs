#![no_main]
use fritem::config::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::from_json(text) {
        let _ = cfg.tem_params(None);
        let _ = cfg.window();
    }
});
