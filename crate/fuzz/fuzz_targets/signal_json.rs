#![no_main]
use fritem::FriSignal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(x) = FriSignal::from_json(text) {
        let again = FriSignal::from_json(&x.to_json().unwrap()).unwrap();
        assert_eq!(x, again);
        let _ = x.fsc(1);
    }
});
