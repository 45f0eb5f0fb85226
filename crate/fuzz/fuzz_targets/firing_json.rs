#![no_main]
use fritem::FiringRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = FiringRecord::from_json(text) {
        assert_eq!(FiringRecord::from_json(&rec.to_json().unwrap()).unwrap(), rec);
    }
});
