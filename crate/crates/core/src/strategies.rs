//! The four single-cell readout strategies and the quantum gain.
//!
//! * `CHB`: bound on any classical (coherent-mixture) probe with an optimal
//!   receiver, averaged over both transmittance distributions.
//! * `CPC`: coherent probe, photon counting, maximum-likelihood decision
//!   that knows the full transmittance distributions.
//! * `CMV`: same receiver, but the decision threshold only uses the mean
//!   transmittances.
//! * `QUANTUM`: two-mode squeezed vacuum probe, photon counting on signal
//!   and idler, maximum-likelihood decision on the count pair.
//!
//! Ties in the likelihood comparison decide bit 0.

use std::fmt;
use std::str::FromStr;

use crate::capacity::{chi_classical, ChiOptions};
use crate::counting::{
    estimate_cells, poisson_row, scan_joint, CountDistribution, ProbeParams, Row, Span, MIN_JOINT_MASS,
    ROW_TAIL,
};
use crate::dists::{CellModel, CellSpec, DiscreteDistribution};
use crate::error::{invalid, ReadoutError, Result};
use crate::infotheory::info_from_perr;
use crate::special::ln_poisson;

/// Default cap on the number of `(n_S, n_I)` cells of the quantum receiver.
pub const DEFAULT_GRID_CAP: f64 = 2e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    Chb,
    Cpc,
    Cmv,
    Quantum,
}

impl StrategyId {
    pub const ALL: [StrategyId; 4] = [StrategyId::Chb, StrategyId::Cpc, StrategyId::Cmv, StrategyId::Quantum];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyId::Chb => "CHB",
            StrategyId::Cpc => "CPC",
            StrategyId::Cmv => "CMV",
            StrategyId::Quantum => "QUANTUM",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Diagnostics attached to every strategy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Support sizes of the two discretized levels.
    pub k0: usize,
    pub k1: usize,
    /// Tail mass dropped per truncated distribution (0 when nothing is truncated).
    pub tail_bound: f64,
    /// Largest `1 - retained mass` over the two hypotheses.
    pub mass_deficit: f64,
    /// Count cells evaluated.
    pub cells: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyResult {
    pub strategy: StrategyId,
    pub p_err: f64,
    pub info_bits: f64,
    pub diagnostics: Diagnostics,
}

impl StrategyResult {
    fn new(strategy: StrategyId, p_err: f64, diagnostics: Diagnostics) -> Result<Self> {
        // rounding can push a coin-flip decoder a hair above 1/2
        let p_err = p_err.clamp(0.0, 0.5);
        Ok(Self {
            strategy,
            p_err,
            info_bits: info_from_perr(p_err)?,
            diagnostics,
        })
    }
}

fn base_diagnostics(model: &CellModel) -> Diagnostics {
    Diagnostics {
        k0: model.g0.len(),
        k1: model.g1.len(),
        ..Diagnostics::default()
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return invalid(format!("mean photon number {mu} must be finite and >= 0"));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return invalid(format!("efficiency {eta} outside (0, 1]"));
    }
    Ok(())
}

fn check_masses(masses: &[f64], what: &'static str) -> Result<f64> {
    let mut deficit: f64 = 0.0;
    for &mass in masses {
        if mass < MIN_JOINT_MASS {
            return Err(ReadoutError::MassDeficit {
                what,
                mass,
                required: MIN_JOINT_MASS,
            });
        }
        deficit = deficit.max(1.0 - mass);
    }
    Ok(deficit)
}

/// Local bound for classical probes with an optimal receiver:
/// `p = (1 - E_g0 E_g1 sqrt(1 - exp(-mu (sqrt(t0) - sqrt(t1))^2))) / 2`.
pub fn classical_hb(model: &CellModel, mu: f64) -> Result<StrategyResult> {
    check_mu(mu)?;
    if !model.is_equiprobable() {
        return invalid("the local classical bound is only defined for equiprobable levels");
    }
    let mut overlap = 0.0;
    for (t0, w0) in model.g0.points() {
        let a = t0.sqrt();
        let mut inner = 0.0;
        for (t1, w1) in model.g1.points() {
            let d = a - t1.sqrt();
            inner += w1 * (-(-mu * d * d).exp_m1()).sqrt();
        }
        overlap += w0 * inner;
    }
    StrategyResult::new(StrategyId::Chb, 0.5 * (1.0 - overlap), base_diagnostics(model))
}

/// Count law `sum_j w_j Poisson(n; eff tau_j)` written into `out` (offset `start`).
fn poisson_mixture(dist: &DiscreteDistribution, eff: f64) -> Row {
    let rows: Vec<(Row, f64)> = dist.points().map(|(t, w)| (poisson_row(eff * t), w)).collect();
    let start = rows.iter().map(|r| r.0.start).min().unwrap_or(0);
    let end = rows.iter().map(|r| r.0.end()).max().unwrap_or(0);
    let mut vals = vec![0.0; end - start];
    for (r, w) in &rows {
        let off = r.start - start;
        for (d, v) in vals[off..off + r.vals.len()].iter_mut().zip(&r.vals) {
            *d += w * v;
        }
    }
    Row { start, vals }
}

/// Classical counting laws of both hypotheses on a shared count range.
struct ClassicalLaws {
    start: usize,
    p0: Vec<f64>,
    p1: Vec<f64>,
    deficit: f64,
}

fn classical_laws(model: &CellModel, eff: f64) -> Result<ClassicalLaws> {
    let r0 = poisson_mixture(&model.g0, eff);
    let r1 = poisson_mixture(&model.g1, eff);
    let deficit = check_masses(&[r0.mass(), r1.mass()], "classical count law")?;
    let start = r0.start.min(r1.start);
    let end = r0.end().max(r1.end());
    let spread = |r: &Row| (start..end).map(|n| r.get(n)).collect::<Vec<f64>>();
    Ok(ClassicalLaws {
        start,
        p0: spread(&r0),
        p1: spread(&r1),
        deficit,
    })
}

/// Coherent probe with photon counting and a likelihood test that uses the
/// full transmittance distributions. Loss only rescales the energy.
pub fn classical_pc(model: &CellModel, mu: f64, eta: f64) -> Result<StrategyResult> {
    check_mu(mu)?;
    check_eta(eta)?;
    let laws = classical_laws(model, eta * mu)?;
    let (a0, a1) = (model.p0(), model.p1());
    let p_err: f64 = laws
        .p0
        .iter()
        .zip(&laws.p1)
        .map(|(&x, &y)| if a1 * y > a0 * x { a0 * x } else { a1 * y })
        .sum();
    let diagnostics = Diagnostics {
        tail_bound: ROW_TAIL,
        mass_deficit: laws.deficit,
        cells: laws.p0.len() as u64,
        ..base_diagnostics(model)
    };
    StrategyResult::new(StrategyId::Cpc, p_err, diagnostics)
}

/// Same receiver as [`classical_pc`], but the count threshold is built from
/// the mean transmittances only; the error is scored under the true mixtures.
pub fn classical_mv(model: &CellModel, mu: f64, eta: f64) -> Result<StrategyResult> {
    check_mu(mu)?;
    check_eta(eta)?;
    let eff = eta * mu;
    let laws = classical_laws(model, eff)?;
    let (a0, a1) = (model.p0(), model.p1());
    let (m0, m1) = (model.g0.mean(), model.g1.mean());
    let q0 = poisson_row(eff * m0);
    let q1 = poisson_row(eff * m1);
    let (la0, la1) = (a0.ln(), a1.ln());
    let decide_one = |n: usize| {
        let (x, y) = (q0.get(n), q1.get(n));
        if x > 0.0 || y > 0.0 {
            a1 * y > a0 * x
        } else {
            la1 + ln_poisson(n as u64, eff * m1) > la0 + ln_poisson(n as u64, eff * m0)
        }
    };
    let p_err: f64 = laws
        .p0
        .iter()
        .zip(&laws.p1)
        .enumerate()
        .map(|(i, (&x, &y))| if decide_one(laws.start + i) { a0 * x } else { a1 * y })
        .sum();
    let diagnostics = Diagnostics {
        tail_bound: ROW_TAIL,
        mass_deficit: laws.deficit,
        cells: laws.p0.len() as u64,
        ..base_diagnostics(model)
    };
    StrategyResult::new(StrategyId::Cmv, p_err, diagnostics)
}

/// Options of the quantum receiver evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumOptions {
    /// Refuse count grids larger than this many cells.
    pub grid_cap: f64,
}

impl Default for QuantumOptions {
    fn default() -> Self {
        Self {
            grid_cap: DEFAULT_GRID_CAP,
        }
    }
}

/// Two-mode squeezed vacuum probe with photon counting on both arms and a
/// maximum-likelihood decision on `(n_S, n_I)`.
pub fn quantum_pc(model: &CellModel, params: &ProbeParams) -> Result<StrategyResult> {
    quantum_pc_with(model, params, &QuantumOptions::default())
}

/// [`quantum_pc`] with an explicit grid cap.
///
/// Cost: without idler loss the grid is walked once per generated photon
/// number, `O(n_max * width)` per hypothesis with `width` the span of the
/// conditional signal rows. With idler loss each idler count mixes a band of
/// generated numbers, multiplying the cost by the width of the idler
/// binomial rows.
pub fn quantum_pc_with(model: &CellModel, params: &ProbeParams, opts: &QuantumOptions) -> Result<StrategyResult> {
    if !model.is_equiprobable() {
        return invalid("the quantum receiver assumes equiprobable levels");
    }
    let source = CountDistribution::multimode_thermal(params.mu(), params.modes())?;
    let hyps = [&model.g0, &model.g1];
    let estimate = estimate_cells(&source, params, &hyps);
    if estimate > opts.grid_cap {
        return Err(ReadoutError::BudgetExceeded {
            cells: estimate,
            cap: opts.grid_cap,
        });
    }
    let mut err = 0.0;
    let pass = scan_joint(&source, params, &hyps, Span::Intersection, |_, _, bufs| {
        err += bufs[0]
            .iter()
            .zip(&bufs[1])
            .map(|(&x, &y)| if y > x { x } else { y })
            .sum::<f64>();
    });
    let deficit = check_masses(&pass.masses, "joint count law")?;
    let diagnostics = Diagnostics {
        tail_bound: source.tail_mass_bound().max(ROW_TAIL),
        mass_deficit: deficit,
        cells: pass.cells,
        ..base_diagnostics(model)
    };
    StrategyResult::new(StrategyId::Quantum, 0.5 * err, diagnostics)
}

/// Classical reference the quantum strategy is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Pc,
    Hb,
    Chi,
}

impl Benchmark {
    pub fn as_str(&self) -> &'static str {
        match self {
            Benchmark::Pc => "PC",
            Benchmark::Hb => "HB",
            Benchmark::Chi => "CHI",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = ReadoutError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PC" | "CPC" => Ok(Benchmark::Pc),
            "HB" | "CHB" => Ok(Benchmark::Hb),
            "CHI" | "X" => Ok(Benchmark::Chi),
            other => invalid(format!("unknown benchmark `{other}` (expected PC, HB or CHI)")),
        }
    }
}

/// Settings shared by every evaluation at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Grid points per discretized level.
    pub k: usize,
    pub quantum: QuantumOptions,
    pub chi: ChiOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: crate::dists::DEFAULT_K,
            quantum: QuantumOptions::default(),
            chi: ChiOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain {
    pub quantum_bits: f64,
    pub benchmark_bits: f64,
    /// `quantum_bits - benchmark_bits`; negative when the benchmark wins.
    pub gain_bits: f64,
}

/// Information benchmark of a classical strategy under loss `eta`. Classical
/// probes only see the reduced energy `eta mu`.
pub fn benchmark_info(spec: &CellSpec, mu: f64, eta: f64, benchmark: Benchmark, opts: &EvalOptions) -> Result<f64> {
    check_eta(eta)?;
    match benchmark {
        Benchmark::Pc => Ok(classical_pc(&spec.discretize(opts.k)?, mu, eta)?.info_bits),
        Benchmark::Hb => Ok(classical_hb(&spec.discretize(opts.k)?, eta * mu)?.info_bits),
        Benchmark::Chi => {
            let cap = chi_classical(spec, eta * mu, &opts.chi)?;
            if !cap.converged {
                return Err(ReadoutError::NonConvergence {
                    k: cap.k_used,
                    gap: cap.convergence_gap,
                    tol: opts.chi.tol,
                });
            }
            Ok(cap.chi_bits)
        }
    }
}

/// Quantum gain `Q - C` over the selected classical benchmark.
pub fn quantum_gain(spec: &CellSpec, params: &ProbeParams, benchmark: Benchmark, opts: &EvalOptions) -> Result<Gain> {
    let quantum = quantum_pc_with(&spec.discretize(opts.k)?, params, &opts.quantum)?.info_bits;
    let classical = benchmark_info(spec, params.mu(), params.eta(), benchmark, opts)?;
    Ok(Gain {
        quantum_bits: quantum,
        benchmark_bits: classical,
        gain_bits: quantum - classical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::Modes;
    use crate::dists::bayes_error_floor;
    use crate::infotheory::binary_entropy;

    fn deltas(t0: f64, t1: f64) -> CellModel {
        CellModel::new(
            DiscreteDistribution::point(t0).unwrap(),
            DiscreteDistribution::point(t1).unwrap(),
        )
    }

    fn fig2a(k: usize) -> CellModel {
        CellSpec::gaussian(0.972, 0.001, 0.982, 0.001)
            .unwrap()
            .discretize(k)
            .unwrap()
    }

    #[test]
    fn hb_trivial_cases() {
        let r = classical_hb(&deltas(0.9, 0.9), 1e4).unwrap();
        assert_eq!(r.p_err, 0.5);
        assert_eq!(r.info_bits, 0.0);
        assert_eq!(classical_hb(&deltas(0.3, 0.9), 0.0).unwrap().p_err, 0.5);
    }

    #[test]
    fn hb_perfect_memory_value() {
        let r = classical_hb(&deltas(0.972, 0.982), 1e4).unwrap();
        // (1 - sqrt(1 - exp(-mu d^2))) / 2, evaluated independently
        assert!((r.p_err - 0.262_423_392_197).abs() < 1e-10);
        assert!((r.info_bits - 0.169_618_669_937).abs() < 1e-9);
    }

    #[test]
    fn hb_rejects_unequal_priors() {
        let m = CellModel::with_priors(
            DiscreteDistribution::point(0.9).unwrap(),
            DiscreteDistribution::point(0.95).unwrap(),
            0.3,
        )
        .unwrap();
        assert!(classical_hb(&m, 10.0).is_err());
        assert!(quantum_pc(&m, &ProbeParams::ideal(10.0, Modes::Infinite).unwrap()).is_err());
    }

    /// Two-Poisson ML error from the crossing threshold
    /// `n* = (l1 - l0) / ln(l1 / l0)`: decide 1 above it.
    fn threshold_oracle(l0: f64, l1: f64) -> f64 {
        let cut = (l1 - l0) / (l1 / l0).ln();
        let top = (l1 + 40.0 * l1.sqrt() + 50.0) as u64;
        let mut err = 0.0;
        for n in 0..=top {
            let (a, b) = (ln_poisson(n, l0).exp(), ln_poisson(n, l1).exp());
            err += if (n as f64) > cut { a } else { b };
        }
        0.5 * err
    }

    #[test]
    fn pc_matches_threshold_oracle() {
        let mu = 1e4;
        let r = classical_pc(&deltas(0.972, 0.982), mu, 1.0).unwrap();
        let oracle = threshold_oracle(mu * 0.972, mu * 0.982);
        assert!((r.p_err - oracle).abs() < 1e-12, "{} vs {oracle}", r.p_err);
    }

    #[test]
    fn pc_identical_levels() {
        let m = fig2a(21);
        let same = CellModel::new(m.g0.clone(), m.g0.clone());
        assert!((classical_pc(&same, 1e3, 1.0).unwrap().p_err - 0.5).abs() < 1e-12);
        assert!((classical_mv(&same, 1e3, 1.0).unwrap().p_err - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pc_below_hb_at_fig2a() {
        let m = fig2a(101);
        let pc = classical_pc(&m, 1e4, 1.0).unwrap();
        let hb = classical_hb(&m, 1e4).unwrap();
        assert!(pc.info_bits <= hb.info_bits);
    }

    #[test]
    fn loss_is_energy_rescaling_for_classical_probes() {
        let m = fig2a(31);
        for &(mu, eta) in &[(1e3, 0.8), (5e3, 0.9), (2e4, 0.55)] {
            let a = classical_pc(&m, mu, eta).unwrap();
            let b = classical_pc(&m, eta * mu, 1.0).unwrap();
            assert_eq!(a.p_err, b.p_err);
        }
    }

    #[test]
    fn mv_equals_pc_for_perfect_levels() {
        for &mu in &[10.0, 1e3, 3e4] {
            let m = deltas(0.925, 0.965);
            assert_eq!(
                classical_mv(&m, mu, 0.9).unwrap().p_err,
                classical_pc(&m, mu, 0.9).unwrap().p_err
            );
        }
        assert_eq!(classical_mv(&deltas(0.925, 0.965), 0.0, 1.0).unwrap().p_err, 0.5);
    }

    #[test]
    fn mv_not_better_than_pc() {
        let m = CellSpec::gaussian(0.925, 0.005, 0.965, 0.01)
            .unwrap()
            .discretize(101)
            .unwrap();
        for &mu in &[1e2, 1e3, 1e4] {
            let pc = classical_pc(&m, mu, 1.0).unwrap();
            let mv = classical_mv(&m, mu, 1.0).unwrap();
            assert!(mv.info_bits <= pc.info_bits + 1e-12);
        }
    }

    #[test]
    fn quantum_trivial_cases() {
        let m = fig2a(11);
        let same = CellModel::new(m.g1.clone(), m.g1.clone());
        let params = ProbeParams::ideal(500.0, Modes::Infinite).unwrap();
        assert!((quantum_pc(&same, &params).unwrap().p_err - 0.5).abs() < 1e-12);
        let lossy = ProbeParams::new(500.0, Modes::Infinite, 0.8).unwrap();
        assert!((quantum_pc(&same, &lossy).unwrap().p_err - 0.5).abs() < 1e-12);
        assert!((quantum_pc(&deltas(0.97, 0.97), &params).unwrap().p_err - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quantum_budget_is_enforced() {
        let m = fig2a(11);
        let params = ProbeParams::ideal(1e5, Modes::Infinite).unwrap();
        let opts = QuantumOptions { grid_cap: 1e4 };
        assert!(matches!(
            quantum_pc_with(&m, &params, &opts),
            Err(ReadoutError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn quantum_beats_hb_on_fig2a() {
        let m = fig2a(101);
        let params = ProbeParams::ideal(1e4, Modes::Infinite).unwrap();
        let q = quantum_pc(&m, &params).unwrap();
        let hb = classical_hb(&m, 1e4).unwrap();
        assert!(q.info_bits > hb.info_bits, "{} vs {}", q.info_bits, hb.info_bits);
        assert!((q.info_bits - (1.0 - binary_entropy(q.p_err).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn strategies_respect_the_discrete_floor() {
        let spec = CellSpec::gaussian(0.966, 0.0025, 0.976, 0.0025).unwrap();
        let m = spec.discretize(41).unwrap();
        let floor = bayes_error_floor(&m);
        assert!(floor > 0.01);
        let params = ProbeParams::ideal(3e4, Modes::Infinite).unwrap();
        assert!(quantum_pc(&m, &params).unwrap().p_err >= floor - 1e-9);
        assert!(classical_pc(&m, 3e4, 1.0).unwrap().p_err >= floor - 1e-9);
        assert!(classical_mv(&m, 3e4, 1.0).unwrap().p_err >= floor - 1e-9);
    }

    #[test]
    fn gain_is_zero_for_identical_levels() {
        let params = ProbeParams::ideal(1e3, Modes::Infinite).unwrap();
        let opts = EvalOptions {
            k: 21,
            ..EvalOptions::default()
        };
        let spread = CellSpec::gaussian(0.97, 0.001, 0.97, 0.001).unwrap();
        let sharp = CellSpec::gaussian(0.97, 0.0, 0.97, 0.0).unwrap();
        for b in [Benchmark::Pc, Benchmark::Hb, Benchmark::Chi] {
            let g = quantum_gain(&sharp, &params, b, &opts).unwrap();
            assert!(g.gain_bits.abs() < 1e-9, "{b}: {}", g.gain_bits);
        }
        for b in [Benchmark::Pc, Benchmark::Chi] {
            let g = quantum_gain(&spread, &params, b, &opts).unwrap();
            assert!(g.gain_bits.abs() < 1e-9, "{b}: {}", g.gain_bits);
        }
        // the averaged local bound stays below 1/2 for identical spread
        // levels: pairs of distinct points still look distinguishable
        let hb = quantum_gain(&spread, &params, Benchmark::Hb, &opts).unwrap();
        assert!(hb.benchmark_bits > 0.0 && hb.quantum_bits < 1e-12);
    }
}
