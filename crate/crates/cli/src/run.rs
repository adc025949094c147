//! Drivers behind the subcommands. Every driver returns a [`RunOutput`]: the
//! table is always complete and in grid order; a point whose capacity
//! refinement did not converge is still reported, and flagged in `failure`.

use rayon::prelude::*;
use readout_core::strategies::{classical_hb, classical_mv, classical_pc, quantum_pc_with, Diagnostics};
use readout_core::{
    binary_entropy, chi_classical, chi_coherent, check_concavity, coherent_gram, info_from_perr, Benchmark,
    CapacityResult, CellModel, CellSpec, ChiOptions, DiscreteDistribution, ProbeParams, QuantumOptions,
    ReadoutError, StrategyResult,
};

use crate::config::{ExperimentConfig, Strategy};
use crate::output::{Cell, RowBuilder, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;
type Row = Vec<(String, Cell)>;

#[derive(Debug)]
pub struct RunOutput {
    pub table: Table,
    /// Set when the table is complete but some value is not trustworthy.
    pub failure: Option<CliError>,
}

/// Evaluates `f` over `points` on a pool of `jobs` workers, keeping the
/// input order. The first error in grid order wins, whatever the scheduling.
fn par_map<P: Sync, T: Send>(jobs: Option<usize>, points: &[P], f: impl Fn(&P) -> Result<T> + Sync) -> Result<Vec<T>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| points.par_iter().map(&f).collect());
    results.into_iter().collect()
}

fn cell_spec(cfg: &ExperimentConfig, tau0: f64) -> Result<CellSpec> {
    Ok(CellSpec::gaussian(tau0, cfg.sigma0, cfg.tau1, cfg.sigma1)?.with_n_sigma(cfg.n_sigma)?)
}

fn probe(cfg: &ExperimentConfig, mu: f64) -> Result<ProbeParams> {
    Ok(ProbeParams::new(mu, cfg.modes, cfg.eta)?)
}

fn quantum_options(cfg: &ExperimentConfig) -> QuantumOptions {
    QuantumOptions { grid_cap: cfg.grid_cap }
}

fn echo_params(row: &mut RowBuilder, cfg: &ExperimentConfig, mu: f64, tau0: f64) {
    row.real("mu", mu)
        .real("tau0", tau0)
        .real("sigma0", cfg.sigma0)
        .real("tau1", cfg.tau1)
        .real("sigma1", cfg.sigma1)
        .real("eta", cfg.eta)
        .text("modes", cfg.modes.to_string())
        .int("k", cfg.k as u64)
        .real("n_sigma", cfg.n_sigma);
}

/// Running maximum / sum of the diagnostics of several strategies.
#[derive(Default)]
struct DiagTotals {
    k0: usize,
    k1: usize,
    tail_bound: f64,
    mass_deficit: f64,
    cells: u64,
}

impl DiagTotals {
    fn add(&mut self, d: &Diagnostics) {
        self.k0 = self.k0.max(d.k0);
        self.k1 = self.k1.max(d.k1);
        self.tail_bound = self.tail_bound.max(d.tail_bound);
        self.mass_deficit = self.mass_deficit.max(d.mass_deficit);
        self.cells += d.cells;
    }

    fn write(&self, row: &mut RowBuilder) {
        row.int("k0", self.k0 as u64)
            .int("k1", self.k1 as u64)
            .real("tail_bound", self.tail_bound)
            .real("mass_deficit", self.mass_deficit)
            .int("cells", self.cells);
    }
}

fn non_convergence(cap: &CapacityResult, opts: &ChiOptions) -> CliError {
    CliError::Compute(ReadoutError::NonConvergence {
        k: cap.k_used,
        gap: cap.convergence_gap,
        tol: opts.tol,
    })
}

fn write_chi(row: &mut RowBuilder, cap: &CapacityResult) {
    row.real("CHI_info", cap.chi_bits)
        .int("CHI_k_used", cap.k_used as u64)
        .real("CHI_gap", cap.convergence_gap)
        .flag("CHI_converged", cap.converged);
}

/// One row with every requested strategy at `(mu, tau0)`.
fn strategy_row(cfg: &ExperimentConfig, mu: f64, tau0: f64) -> Result<(Row, Option<CliError>)> {
    let spec = cell_spec(cfg, tau0)?;
    let model = spec.discretize(cfg.k)?;
    let mut diag = DiagTotals {
        k0: model.g0.len(),
        k1: model.g1.len(),
        ..DiagTotals::default()
    };
    let mut results: Vec<StrategyResult> = Vec::new();
    let mut cap = None;
    for s in &cfg.strategies {
        match s {
            Strategy::Chb => results.push(classical_hb(&model, cfg.eta * mu)?),
            Strategy::Cpc => results.push(classical_pc(&model, mu, cfg.eta)?),
            Strategy::Cmv => results.push(classical_mv(&model, mu, cfg.eta)?),
            Strategy::Quantum => results.push(quantum_pc_with(&model, &probe(cfg, mu)?, &quantum_options(cfg))?),
            Strategy::Chi => cap = Some(chi_classical(&spec, cfg.eta * mu, &cfg.chi)?),
        }
    }

    let mut row = RowBuilder::default();
    echo_params(&mut row, cfg, mu, tau0);
    let info = |name: &str| results.iter().find(|r| r.strategy.as_str() == name).map(|r| r.info_bits);
    for r in &results {
        diag.add(&r.diagnostics);
        row.real(&format!("{}_p_err", r.strategy), r.p_err)
            .real(&format!("{}_info", r.strategy), r.info_bits);
    }
    if let Some(cap) = &cap {
        write_chi(&mut row, cap);
    }
    if let Some(q) = info("QUANTUM") {
        if let Some(c) = info("CPC") {
            row.real("G_PC", q - c);
        }
        if let Some(c) = info("CHB") {
            row.real("G_HB", q - c);
        }
        if let Some(cap) = &cap {
            row.real("G_CHI", q - cap.chi_bits);
        }
    }
    diag.write(&mut row);
    let failure = cap.filter(|c| !c.converged).map(|c| non_convergence(&c, &cfg.chi));
    Ok((row.finish(), failure))
}

fn collect(rows: Vec<(Row, Option<CliError>)>) -> RunOutput {
    let mut failure = None;
    let mut table_rows = Vec::with_capacity(rows.len());
    for (row, f) in rows {
        if failure.is_none() {
            failure = f;
        }
        table_rows.push(row);
    }
    RunOutput {
        table: Table::from_rows(table_rows),
        failure,
    }
}

/// Single parameter point.
pub fn run_eval(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.mu.is_grid() || cfg.tau0.is_grid() {
        return Err(CliError::Config("eval takes single values; use sweep or gainmap for ranges".into()));
    }
    let row = strategy_row(cfg, cfg.mu_values()[0], cfg.tau0_values()[0])?;
    Ok(collect(vec![row]))
}

/// One row per point of the single swept variable (`mu` or `tau0`).
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let points: Vec<(f64, f64)> = match (cfg.mu.is_grid(), cfg.tau0.is_grid()) {
        (true, false) => {
            let tau0 = cfg.tau0_values()[0];
            cfg.mu_values().into_iter().map(|mu| (mu, tau0)).collect()
        }
        (false, true) => {
            let mu = cfg.mu_values()[0];
            cfg.tau0_values().into_iter().map(|t| (mu, t)).collect()
        }
        _ => return Err(CliError::Config("sweep needs exactly one range, over mu or tau0".into())),
    };
    let rows = par_map(cfg.jobs, &points, |&(mu, tau0)| strategy_row(cfg, mu, tau0))?;
    Ok(collect(rows))
}

/// Quantum gain over `cfg.benchmark` on the `mu x tau0` grid (mu outer).
pub fn run_gainmap(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if !(cfg.mu.is_grid() && cfg.tau0.is_grid()) {
        return Err(CliError::Config("gainmap needs ranges for both mu and tau0".into()));
    }
    let taus = cfg.tau0_values();
    let points: Vec<(f64, f64)> = cfg
        .mu_values()
        .into_iter()
        .flat_map(|mu| taus.iter().map(move |&t| (mu, t)))
        .collect();
    let rows = par_map(cfg.jobs, &points, |&(mu, tau0)| gain_row(cfg, mu, tau0))?;
    Ok(collect(rows))
}

fn gain_row(cfg: &ExperimentConfig, mu: f64, tau0: f64) -> Result<(Row, Option<CliError>)> {
    let spec = cell_spec(cfg, tau0)?;
    let model = spec.discretize(cfg.k)?;
    let q = quantum_pc_with(&model, &probe(cfg, mu)?, &quantum_options(cfg))?;
    let mut diag = DiagTotals::default();
    diag.add(&q.diagnostics);
    let mut cap = None;
    let classical = match cfg.benchmark {
        Benchmark::Pc => {
            let r = classical_pc(&model, mu, cfg.eta)?;
            diag.add(&r.diagnostics);
            r.info_bits
        }
        Benchmark::Hb => classical_hb(&model, cfg.eta * mu)?.info_bits,
        Benchmark::Chi => {
            let c = chi_classical(&spec, cfg.eta * mu, &cfg.chi)?;
            cap = Some(c);
            c.chi_bits
        }
    };
    let mut row = RowBuilder::default();
    echo_params(&mut row, cfg, mu, tau0);
    row.text("benchmark", cfg.benchmark.as_str())
        .real("quantum_info", q.info_bits)
        .real("benchmark_info", classical)
        .real("gain", q.info_bits - classical);
    if let Some(c) = &cap {
        row.int("CHI_k_used", c.k_used as u64)
            .real("CHI_gap", c.convergence_gap)
            .flag("CHI_converged", c.converged);
    }
    diag.write(&mut row);
    let failure = cap.filter(|c| !c.converged).map(|c| non_convergence(&c, &cfg.chi));
    Ok((row.finish(), failure))
}

/// Classical capacity over the `mu x tau0` grid, with a concavity check of
/// `chi` along each `mu` line of three or more points.
pub fn run_capacity(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mus = cfg.mu_values();
    let mut rows = Vec::new();
    for tau0 in cfg.tau0_values() {
        let spec = cell_spec(cfg, tau0)?;
        let caps = par_map(cfg.jobs, &mus, |&mu| Ok(chi_classical(&spec, cfg.eta * mu, &cfg.chi)?))?;
        let (concave, excess) = if mus.len() >= 3 {
            let k = caps.iter().map(|c| c.k_used).max().unwrap_or(cfg.chi.k_start);
            let energies: Vec<f64> = mus.iter().map(|mu| cfg.eta * mu).collect();
            let report = check_concavity(&spec.discretize(k)?, &energies)?;
            let worst = report.violations.iter().map(|v| v.excess).fold(0.0, f64::max);
            (Some(report.concave), Some(worst))
        } else {
            (None, None)
        };
        for (&mu, cap) in mus.iter().zip(&caps) {
            let mut row = RowBuilder::default();
            row.real("mu", mu)
                .real("tau0", tau0)
                .real("sigma0", cfg.sigma0)
                .real("tau1", cfg.tau1)
                .real("sigma1", cfg.sigma1)
                .real("eta", cfg.eta)
                .real("n_sigma", cfg.n_sigma)
                .real("chi_bits", cap.chi_bits)
                .int("k_used", cap.k_used as u64)
                .real("convergence_gap", cap.convergence_gap)
                .flag("converged", cap.converged);
            match concave {
                Some(c) => row.flag("concave_on_grid", c),
                None => row.text("concave_on_grid", ""),
            };
            row.opt_real("concavity_excess", excess);
            let failure = (!cap.converged).then(|| non_convergence(cap, &cfg.chi));
            rows.push((row.finish(), failure));
        }
    }
    Ok(collect(rows))
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

fn poisson(n: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * lambda.ln() - lambda - ln_factorial(n)).exp()
}

fn binomial(k: u64, n: u64, p: f64) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp() * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn deltas(t0: f64, t1: f64) -> Result<CellModel> {
    Ok(CellModel::new(DiscreteDistribution::point(t0)?, DiscreteDistribution::point(t1)?))
}

struct Check {
    name: &'static str,
    value: f64,
    reference: f64,
    tol: f64,
}

/// Fast consistency checks against closed forms and direct enumeration.
pub fn run_selftest() -> Result<RunOutput> {
    let mut checks = Vec::new();

    checks.push(Check {
        name: "binary_entropy(0.11)",
        value: binary_entropy(0.11)?,
        reference: 0.499_915_958_164,
        tol: 1e-9,
    });

    let g = coherent_gram(&[0.0, 1.0], 2.0)?;
    checks.push(Check {
        name: "coherent overlap tau 0 vs 1, mu 2",
        value: g[(0, 1)],
        reference: (-1.0f64).exp(),
        tol: 1e-15,
    });

    let (t0, t1, mu) = (0.972, 0.982, 1e4);
    checks.push(Check {
        name: "local classical bound, delta levels",
        value: classical_hb(&deltas(t0, t1)?, mu)?.p_err,
        reference: 0.262_423_392_2,
        tol: 1e-9,
    });

    let c = (-0.5 * mu * (f64::sqrt(t0) - f64::sqrt(t1)).powi(2)).exp();
    checks.push(Check {
        name: "capacity of two pure states",
        value: chi_coherent(&deltas(t0, t1)?, mu)?,
        reference: binary_entropy((1.0 + c) / 2.0)?,
        tol: 1e-8,
    });

    let floor = CellSpec::gaussian(0.966, 0.0025, 0.976, 0.0025)?.bayes_error_floor(20_001)?;
    checks.push(Check {
        name: "Bayes floor of overlapping levels",
        value: floor,
        reference: 0.022_750_131_948,
        tol: 1e-6,
    });

    // photon counting on delta levels by enumeration
    let (t0, t1, mu) = (0.3, 0.8, 3.0);
    let cpc: f64 = (0..80u64)
        .map(|n| 0.5 * poisson(n, mu * t0).min(poisson(n, mu * t1)))
        .sum();
    checks.push(Check {
        name: "classical counting by enumeration",
        value: classical_pc(&deltas(t0, t1)?, mu, 1.0)?.p_err,
        reference: cpc,
        tol: 1e-12,
    });

    // entangled probe: generated n is Poisson, the signal is thinned, the
    // idler keeps all n photons
    let mut q = 0.0;
    for n in 0..80u64 {
        let pn = poisson(n, mu);
        for k in 0..=n {
            q += 0.5 * pn * binomial(k, n, t0).min(binomial(k, n, t1));
        }
    }
    let params = ProbeParams::ideal(mu, readout_core::Modes::Infinite)?;
    checks.push(Check {
        name: "entangled counting by enumeration",
        value: quantum_pc_with(&deltas(t0, t1)?, &params, &QuantumOptions::default())?.p_err,
        reference: q,
        tol: 1e-12,
    });

    checks.push(Check {
        name: "information of a fair coin",
        value: info_from_perr(0.5)?,
        reference: 0.0,
        tol: 0.0,
    });

    let mut failed = Vec::new();
    let rows = checks
        .iter()
        .map(|c| {
            let err = (c.value - c.reference).abs();
            let pass = err <= c.tol;
            if !pass {
                failed.push(c.name);
            }
            let mut row = RowBuilder::default();
            row.text("check", c.name)
                .text("status", if pass { "PASS" } else { "FAIL" })
                .real("value", c.value)
                .real("reference", c.reference)
                .real("abs_error", err)
                .real("tolerance", c.tol);
            (row.finish(), None)
        })
        .collect();
    let mut out = collect(rows);
    if !failed.is_empty() {
        out.failure = Some(CliError::SelfTest(failed.join("; ")));
    }
    Ok(out)
}
