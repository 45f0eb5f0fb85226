#![no_main]
use fritem::RecoveredParams;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = RecoveredParams::from_json(text);
    }
});
