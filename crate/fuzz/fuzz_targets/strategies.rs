#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_cli::config::parse_strategies;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = parse_strategies(text) {
        assert!(!list.is_empty());
        assert!(list.windows(2).all(|w| w[0] < w[1]));
    }
});
