//! Experiment configuration: a flat TOML file overridden by command-line
//! flags, parsed into one validated [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use readout_core::dists::{DEFAULT_K, DEFAULT_N_SIGMA};
use readout_core::strategies::DEFAULT_GRID_CAP;
use readout_core::{Benchmark, ChiOptions, Modes};

use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}

/// Keys accepted in a config file, and their flag spellings on the command line.
pub const KEYS: &[&str] = &[
    "tau0",
    "sigma0",
    "tau1",
    "sigma1",
    "mu",
    "eta",
    "modes",
    "k",
    "n_sigma",
    "strategies",
    "benchmark",
    "out",
    "format",
    "jobs",
    "chi_tol",
    "k_cap",
    "grid_cap",
];

/// Grids with more points than this are refused outright.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// A single value or an evenly spaced grid `start:stop:count[:log|lin]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamRange {
    Value(f64),
    Grid {
        start: f64,
        stop: f64,
        count: usize,
        /// `None` defers to the variable's default spacing.
        spacing: Option<Spacing>,
    },
}

fn parse_real(s: &str, what: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => bad(format!("{what}: `{}` is not a finite number", s.trim())),
    }
}

impl FromStr for ParamRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(ParamRange::Value(parse_real(parts[0], "value")?)),
            3 | 4 => {
                let start = parse_real(parts[0], "range start")?;
                let stop = parse_real(parts[1], "range stop")?;
                let count = match parts[2].trim().parse::<usize>() {
                    Ok(c) if (1..=MAX_GRID_POINTS).contains(&c) => c,
                    _ => return bad(format!("range count `{}` must be in 1..={MAX_GRID_POINTS}", parts[2].trim())),
                };
                let spacing = match parts.get(3).map(|p| p.trim().to_ascii_lowercase()) {
                    None => None,
                    Some(p) if p == "log" => Some(Spacing::Log),
                    Some(p) if p == "lin" || p == "linear" => Some(Spacing::Linear),
                    Some(p) => return bad(format!("range spacing `{p}` must be `log` or `lin`")),
                };
                if spacing == Some(Spacing::Log) && !(start > 0.0 && stop > 0.0) {
                    return bad("log-spaced ranges need positive endpoints");
                }
                Ok(ParamRange::Grid {
                    start,
                    stop,
                    count,
                    spacing,
                })
            }
            _ => bad(format!("`{s}` is neither a value nor start:stop:count[:log|lin]")),
        }
    }
}

impl fmt::Display for ParamRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamRange::Value(v) => write!(f, "{v}"),
            ParamRange::Grid {
                start,
                stop,
                count,
                spacing,
            } => {
                write!(f, "{start}:{stop}:{count}")?;
                match spacing {
                    Some(Spacing::Log) => f.write_str(":log"),
                    Some(Spacing::Linear) => f.write_str(":lin"),
                    None => Ok(()),
                }
            }
        }
    }
}

impl ParamRange {
    pub fn is_grid(&self) -> bool {
        matches!(self, ParamRange::Grid { .. })
    }

    /// Grid points in order. Endpoints are reproduced exactly.
    pub fn values(&self, default: Spacing) -> Vec<f64> {
        match *self {
            ParamRange::Value(v) => vec![v],
            ParamRange::Grid {
                start,
                stop,
                count,
                spacing,
            } => {
                if count == 1 {
                    return vec![start];
                }
                let spacing = match spacing {
                    Some(s) => s,
                    // a log default cannot apply to non-positive endpoints
                    None if default == Spacing::Log && start > 0.0 && stop > 0.0 => Spacing::Log,
                    None => Spacing::Linear,
                };
                let last = (count - 1) as f64;
                (0..count)
                    .map(|i| {
                        if i == 0 {
                            return start;
                        }
                        if i == count - 1 {
                            return stop;
                        }
                        let t = i as f64 / last;
                        match spacing {
                            Spacing::Linear => start + t * (stop - start),
                            Spacing::Log => {
                                let (a, b) = (start.log10(), stop.log10());
                                10f64.powf(a + t * (b - a))
                            }
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Columns a run can report. `Chi` is the capacity bound, not a receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Chb,
    Cpc,
    Cmv,
    Quantum,
    Chi,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Chb,
        Strategy::Cpc,
        Strategy::Cmv,
        Strategy::Quantum,
        Strategy::Chi,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Chb => "CHB",
            Strategy::Cpc => "CPC",
            Strategy::Cmv => "CMV",
            Strategy::Quantum => "QUANTUM",
            Strategy::Chi => "CHI",
        }
    }
}

impl FromStr for Strategy {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CHB" | "HB" => Ok(Strategy::Chb),
            "CPC" | "PC" => Ok(Strategy::Cpc),
            "CMV" | "MV" => Ok(Strategy::Cmv),
            "QUANTUM" | "Q" => Ok(Strategy::Quantum),
            "CHI" => Ok(Strategy::Chi),
            other => bad(format!("unknown strategy `{other}` (expected CHB, CPC, CMV, QUANTUM, CHI)")),
        }
    }
}

/// Comma-separated strategy list, returned sorted and without duplicates.
pub fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        if item.trim().is_empty() {
            continue;
        }
        out.push(item.parse::<Strategy>()?);
    }
    if out.is_empty() {
        return bad("strategy set is empty");
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bad(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub tau0: ParamRange,
    pub sigma0: f64,
    pub tau1: f64,
    pub sigma1: f64,
    pub mu: ParamRange,
    pub eta: f64,
    pub modes: Modes,
    pub k: usize,
    pub n_sigma: f64,
    pub strategies: Vec<Strategy>,
    pub benchmark: Benchmark,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    pub chi: ChiOptions,
    pub grid_cap: f64,
}

/// Raw `key = value` settings, before validation.
pub type Settings = BTreeMap<String, String>;

/// Reads a flat TOML document into [`Settings`]. Nested tables and unknown
/// keys are rejected.
pub fn settings_from_toml(text: &str) -> Result<Settings> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("config file: {}", e.message())))?;
    let mut out = Settings::new();
    for (key, value) in table {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return bad(format!("config file: unknown key `{key}`"));
        }
        let text = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Array(items) => {
                let mut parts = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::String(s) => parts.push(s),
                        _ => return bad(format!("config file: `{key}` must be a list of strings")),
                    }
                }
                parts.join(",")
            }
            _ => return bad(format!("config file: `{key}` must be a number, string or list")),
        };
        out.insert(key, text);
    }
    Ok(out)
}

fn in_unit(v: f64, what: &str) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return bad(format!("{what} = {v} outside [0, 1]"));
    }
    Ok(v)
}

fn non_negative(v: f64, what: &str) -> Result<f64> {
    if !(v >= 0.0) {
        return bad(format!("{what} = {v} must be >= 0"));
    }
    Ok(v)
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => bad(format!("{what}: `{}` is not a positive integer", s.trim())),
    }
}

impl ExperimentConfig {
    /// Builds and validates a configuration; missing keys take their defaults.
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        for key in settings.keys() {
            if !KEYS.contains(&key.as_str()) {
                return bad(format!("unknown setting `{key}`"));
            }
        }
        let get = |key: &str| settings.get(key).map(String::as_str);
        let real = |key: &str, default: f64| get(key).map_or(Ok(default), |s| parse_real(s, key));

        let tau0: ParamRange = get("tau0").unwrap_or("0.972").parse()?;
        for v in tau0.values(Spacing::Linear) {
            in_unit(v, "tau0")?;
        }
        let mu: ParamRange = get("mu").unwrap_or("10000").parse()?;
        for v in mu.values(Spacing::Log) {
            non_negative(v, "mu")?;
        }
        let eta = real("eta", 1.0)?;
        if !(eta > 0.0 && eta <= 1.0) {
            return bad(format!("eta = {eta} outside (0, 1]"));
        }
        let n_sigma = real("n_sigma", DEFAULT_N_SIGMA)?;
        if !(n_sigma > 0.0) {
            return bad(format!("n_sigma = {n_sigma} must be > 0"));
        }
        let chi_tol = real("chi_tol", ChiOptions::default().tol)?;
        if !(chi_tol > 0.0) {
            return bad(format!("chi_tol = {chi_tol} must be > 0"));
        }
        let grid_cap = real("grid_cap", DEFAULT_GRID_CAP)?;
        if !(grid_cap > 0.0) {
            return bad(format!("grid_cap = {grid_cap} must be > 0"));
        }
        let k_cap = get("k_cap").map_or(Ok(ChiOptions::default().k_cap), |s| parse_count(s, "k_cap"))?;
        let k_start = ChiOptions::default().k_start.min(k_cap);
        if k_start < 2 {
            return bad("k_cap must be at least 2");
        }
        Ok(Self {
            tau0,
            sigma0: non_negative(real("sigma0", 0.001)?, "sigma0")?,
            tau1: in_unit(real("tau1", 0.982)?, "tau1")?,
            sigma1: non_negative(real("sigma1", 0.001)?, "sigma1")?,
            mu,
            eta,
            modes: get("modes")
                .map_or(Ok(Modes::Infinite), str::parse)
                .map_err(|e| CliError::Config(e.to_string()))?,
            k: get("k").map_or(Ok(DEFAULT_K), |s| parse_count(s, "k"))?,
            n_sigma,
            strategies: get("strategies").map_or(Ok(Strategy::ALL.to_vec()), parse_strategies)?,
            benchmark: get("benchmark")
                .map_or(Ok(Benchmark::Pc), str::parse)
                .map_err(|e| CliError::Config(e.to_string()))?,
            out: get("out").map(PathBuf::from),
            format: get("format").map_or(Ok(Format::Csv), str::parse)?,
            jobs: get("jobs").map(|s| parse_count(s, "jobs")).transpose()?,
            chi: ChiOptions {
                tol: chi_tol,
                k_start,
                k_cap,
            },
            grid_cap,
        })
    }

    /// Parses a config file, then applies `overrides` on top.
    pub fn from_toml_with(text: &str, overrides: &Settings) -> Result<Self> {
        let mut settings = settings_from_toml(text)?;
        settings.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self::from_settings(&settings)
    }

    pub fn mu_values(&self) -> Vec<f64> {
        self.mu.values(Spacing::Log)
    }

    pub fn tau0_values(&self) -> Vec<f64> {
        self.tau0.values(Spacing::Linear)
    }

    pub fn wants(&self, s: Strategy) -> bool {
        self.strategies.contains(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!("3.5".parse::<ParamRange>().unwrap(), ParamRange::Value(3.5));
        let r: ParamRange = "100:100000:4".parse().unwrap();
        assert_eq!(r.values(Spacing::Log), vec![100.0, 1000.0, 10000.0, 100000.0]);
        let r: ParamRange = "0.9:0.95:6:lin".parse().unwrap();
        let v = r.values(Spacing::Log);
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], 0.9);
        assert_eq!(v[5], 0.95);
        assert!((v[1] - 0.91).abs() < 1e-15);
        assert_eq!("0:1:3".parse::<ParamRange>().unwrap().values(Spacing::Log), vec![0.0, 0.5, 1.0]);
        assert_eq!("5:9:1".parse::<ParamRange>().unwrap().values(Spacing::Linear), vec![5.0]);
        for bad in ["", "1:2", "1:2:0", "1:2:x", "0:1:3:log", "1:2:3:cubic", "nan", "1:inf:3", "1:2:3:log:5"] {
            assert!(bad.parse::<ParamRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn range_display_round_trips() {
        for s in ["0.5", "100:100000:25:log", "0.9:0.99:10:lin", "1:2:3"] {
            let r: ParamRange = s.parse().unwrap();
            assert_eq!(r.to_string().parse::<ParamRange>().unwrap(), r);
        }
    }

    #[test]
    fn strategy_lists() {
        assert_eq!(
            parse_strategies("quantum, chb,CHB").unwrap(),
            vec![Strategy::Chb, Strategy::Quantum]
        );
        assert!(parse_strategies("").is_err());
        assert!(parse_strategies(" , ").is_err());
        assert!(parse_strategies("CPC,XYZ").is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::from_settings(&Settings::new()).unwrap();
        assert_eq!(c.modes, Modes::Infinite);
        assert_eq!(c.k, DEFAULT_K);
        assert_eq!(c.strategies, Strategy::ALL.to_vec());

        let file = "tau0 = 0.95\nmu = \"10:1000:3\"\nmodes = 4\nstrategies = [\"CPC\", \"QUANTUM\"]\n";
        let mut over = Settings::new();
        over.insert("tau0".into(), "0.9".into());
        let c = ExperimentConfig::from_toml_with(file, &over).unwrap();
        assert_eq!(c.tau0, ParamRange::Value(0.9));
        assert_eq!(c.mu_values(), vec![10.0, 100.0, 1000.0]);
        assert_eq!(c.modes, Modes::finite(4).unwrap());
        assert_eq!(c.strategies, vec![Strategy::Cpc, Strategy::Quantum]);
    }

    #[test]
    fn rejects_bad_configs() {
        for file in [
            "bogus = 1",
            "tau0 = 1.5",
            "sigma0 = -0.1",
            "eta = 0",
            "eta = 1.2",
            "k = 0",
            "modes = 0",
            "modes = \"many\"",
            "strategies = []",
            "format = \"xml\"",
            "[table]\ntau0 = 0.5",
            "mu = -3",
            "mu = \"-1:10:3:lin\"",
            "tau0 = \"0.5:1.2:4\"",
            "jobs = 0",
            "n_sigma = 0",
            "tau0 = 0.5\ntau0 = 0.6",
        ] {
            assert!(ExperimentConfig::from_toml_with(file, &Settings::new()).is_err(), "{file}");
        }
    }
}
