#![no_main]
use fritem::encoder::{instants_from_csv, instants_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = instants_from_csv(text) {
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        // 17 significant digits survive the trip exactly
        assert_eq!(instants_from_csv(&instants_to_csv(&t)).unwrap(), t);
    }
});
