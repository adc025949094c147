#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_cli::config::{ExperimentConfig, Settings};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml_with(text, &Settings::new()) {
        // accepted configs must expand to finite, in-range grids
        for mu in cfg.mu_values() {
            assert!(mu.is_finite() && mu >= 0.0);
        }
        for tau in cfg.tau0_values() {
            assert!((0.0..=1.0).contains(&tau));
        }
    }
});
