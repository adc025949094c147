#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_cli::config::{ParamRange, Spacing};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(range) = text.parse::<ParamRange>() {
        let again: ParamRange = range.to_string().parse().expect("display round-trips");
        assert_eq!(range, again);
        for spacing in [Spacing::Linear, Spacing::Log] {
            if let ParamRange::Grid { count, .. } = range {
                assert_eq!(range.values(spacing).len(), count);
            }
        }
    }
});
