#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_cli::config::Format;
use readout_core::Benchmark;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = text.parse::<Benchmark>() {
        assert_eq!(b.as_str().parse::<Benchmark>().unwrap(), b);
    }
    let _ = text.parse::<Format>();
});
