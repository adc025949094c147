#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_core::Modes;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = text.parse::<Modes>() {
        assert_eq!(m.to_string().parse::<Modes>().unwrap(), m);
    }
});
