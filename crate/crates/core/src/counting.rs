//! Photon-counting statistics in the log domain: Poisson, multimode thermal
//! (negative binomial), binomial thinning, and the joint signal/idler count
//! law of a two-mode squeezed vacuum probe after loss.
//!
//! All distributions here are log-concave, so truncation uses the geometric
//! tail bound `P(n) r / (1 - r)` with `r` the ratio of successive
//! probabilities at the cut: the ratios only shrink further out.

use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use crate::dists::DiscreteDistribution;
use crate::error::{invalid, ReadoutError, Result};
use crate::special::{ln_binomial, ln_negative_binomial, ln_poisson};

/// Tail mass discarded from the generated-photon law.
pub const MARGINAL_TAIL: f64 = 1e-12;
/// Tail mass discarded from every conditional binomial or Poisson row.
pub const ROW_TAIL: f64 = 1e-14;
/// Minimum probability mass a truncated joint law must keep.
pub const MIN_JOINT_MASS: f64 = 1.0 - 1e-9;

/// Number of signal/idler mode pairs sharing the photon budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modes {
    Finite(NonZeroU64),
    /// The many-mode limit, where the generated photon number is Poissonian.
    #[default]
    Infinite,
}

impl Modes {
    pub fn finite(m: u64) -> Result<Self> {
        NonZeroU64::new(m)
            .map(Modes::Finite)
            .ok_or_else(|| ReadoutError::InvalidInput("mode count must be >= 1".into()))
    }
}

impl fmt::Display for Modes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modes::Finite(m) => write!(f, "{m}"),
            Modes::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Modes {
    type Err = ReadoutError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" => Ok(Modes::Infinite),
            _ => match s.parse::<u64>() {
                Ok(m) => Modes::finite(m),
                Err(_) => invalid(format!("mode count `{s}` is neither a positive integer nor `inf`")),
            },
        }
    }
}

/// Probe configuration: photon budget, mode count and efficiencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams {
    mu: f64,
    modes: Modes,
    eta: f64,
    idler_eta: f64,
}

impl ProbeParams {
    pub fn new(mu: f64, modes: Modes, eta: f64) -> Result<Self> {
        check_mu(mu)?;
        check_efficiency(eta)?;
        Ok(Self {
            mu,
            modes,
            eta,
            idler_eta: eta,
        })
    }

    /// Lossless probe with the given budget and mode count.
    pub fn ideal(mu: f64, modes: Modes) -> Result<Self> {
        Self::new(mu, modes, 1.0)
    }

    /// Overrides the idler-arm efficiency (defaults to the signal-arm one).
    pub fn with_idler_efficiency(mut self, idler_eta: f64) -> Result<Self> {
        check_efficiency(idler_eta)?;
        self.idler_eta = idler_eta;
        Ok(self)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn idler_eta(&self) -> f64 {
        self.idler_eta
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return invalid(format!("mean photon number {mu} must be finite and >= 0"));
    }
    Ok(())
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return invalid(format!("efficiency {eta} outside (0, 1]"));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("probability {p} outside [0, 1]"));
    }
    Ok(())
}

/// `ln Poisson(n; lambda)`.
pub fn poisson_log_pmf(n: u64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("Poisson mean {lambda} must be finite and >= 0"));
    }
    Ok(ln_poisson(n, lambda))
}

/// Log pmf of the total photon number generated by `modes` two-mode squeezed
/// vacuum pairs with total mean `mu`: negative binomial with per-mode mean
/// `mu / M`, thermal for `M = 1`, Poisson in the infinite-mode limit.
pub fn multimode_thermal_log_pmf(n: u64, mu: f64, modes: Modes) -> Result<f64> {
    check_mu(mu)?;
    Ok(match modes {
        Modes::Infinite => ln_poisson(n, mu),
        Modes::Finite(m) => ln_negative_binomial(n, m.get(), mu / m.get() as f64),
    })
}

/// `ln Bin(k; n, p)`: probability that `k` of `n` photons survive a loss
/// channel of transmissivity `p`.
pub fn binomial_thin_log_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return invalid(format!("cannot keep {k} of {n} photons"));
    }
    check_probability(p)?;
    Ok(ln_binomial(k, n, p))
}

/// Dense run of probabilities on consecutive counts starting at `start`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Row {
    pub start: usize,
    pub vals: Vec<f64>,
}

impl Row {
    pub fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    pub fn mass(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn get(&self, n: usize) -> f64 {
        if n < self.start {
            0.0
        } else {
            self.vals.get(n - self.start).copied().unwrap_or(0.0)
        }
    }
}

/// Walks outward from `mode`, multiplying successive ratios
/// `ratio(n) = P(n + 1) / P(n)`, until both tails are certified below
/// `tol / 2`. Returns the linear probabilities and the certified tail bound.
fn walk(mode: u64, ln_at_mode: f64, max_n: u64, tol: f64, ratio: impl Fn(u64) -> f64) -> (Row, f64) {
    let half = 0.5 * tol;
    let top = ln_at_mode.exp();

    let mut right = Vec::new();
    let mut right_bound = 0.0;
    let (mut n, mut v) = (mode, top);
    while n < max_n {
        let r = ratio(n);
        if r < 1.0 {
            let bound = v * r / (1.0 - r);
            if bound < half {
                right_bound = bound;
                break;
            }
        }
        v *= r;
        if v == 0.0 {
            break;
        }
        n += 1;
        right.push(v);
    }

    let mut left = Vec::new();
    let mut left_bound = 0.0;
    let (mut n, mut v) = (mode, top);
    while n > 0 {
        let back = ratio(n - 1);
        let s = if back > 0.0 { 1.0 / back } else { 0.0 };
        if s < 1.0 {
            let bound = v * s / (1.0 - s);
            if bound < half {
                left_bound = bound;
                break;
            }
        }
        v *= s;
        if v == 0.0 {
            break;
        }
        n -= 1;
        left.push(v);
    }

    let start = (mode - left.len() as u64) as usize;
    let mut vals = Vec::with_capacity(left.len() + 1 + right.len());
    vals.extend(left.into_iter().rev());
    vals.push(top);
    vals.extend(right);
    (Row { start, vals }, left_bound + right_bound)
}

fn poisson_walk(lambda: f64, tol: f64) -> (Row, f64) {
    if lambda == 0.0 {
        return (Row { start: 0, vals: vec![1.0] }, 0.0);
    }
    let mode = lambda.floor() as u64;
    walk(mode, ln_poisson(mode, lambda), u64::MAX, tol, |n| lambda / (n + 1) as f64)
}

fn binomial_walk(n: u64, p: f64, tol: f64) -> (Row, f64) {
    if p == 0.0 || n == 0 {
        return (Row { start: 0, vals: vec![1.0] }, 0.0);
    }
    if p == 1.0 {
        return (Row { start: n as usize, vals: vec![1.0] }, 0.0);
    }
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
    walk(mode, ln_binomial(mode, n, p), n, tol, |k| {
        (n - k) as f64 / (k + 1) as f64 * odds
    })
}

fn thermal_walk(mu: f64, modes: Modes, tol: f64) -> (Row, f64) {
    match modes {
        Modes::Infinite => poisson_walk(mu, tol),
        Modes::Finite(m) => {
            let m = m.get();
            let per_mode = mu / m as f64;
            if per_mode == 0.0 {
                return (Row { start: 0, vals: vec![1.0] }, 0.0);
            }
            let x = per_mode / (1.0 + per_mode);
            let mode = ((m - 1) as f64 * per_mode).floor() as u64;
            walk(mode, ln_negative_binomial(mode, m, per_mode), u64::MAX, tol, |n| {
                (n + m) as f64 / (n + 1) as f64 * x
            })
        }
    }
}

/// Linear binomial row truncated at [`ROW_TAIL`].
pub(crate) fn binomial_row(n: u64, p: f64) -> Row {
    binomial_walk(n, p, ROW_TAIL).0
}

/// Linear Poisson row truncated at [`ROW_TAIL`].
pub(crate) fn poisson_row(lambda: f64) -> Row {
    poisson_walk(lambda, ROW_TAIL).0
}

/// Truncated count distribution stored as log probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    start: u64,
    log_pmf: Vec<f64>,
    tail_mass_bound: f64,
}

impl CountDistribution {
    fn from_walk(bounds: (Row, f64), ln_pmf: impl Fn(u64) -> f64) -> Self {
        let (row, tail_mass_bound) = bounds;
        let start = row.start as u64;
        let log_pmf = (start..row.end() as u64).map(ln_pmf).collect();
        Self {
            start,
            log_pmf,
            tail_mass_bound,
        }
    }

    /// Poisson(`lambda`) truncated at [`MARGINAL_TAIL`].
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return invalid(format!("Poisson mean {lambda} must be finite and >= 0"));
        }
        Ok(Self::from_walk(poisson_walk(lambda, MARGINAL_TAIL), |n| {
            ln_poisson(n, lambda)
        }))
    }

    /// Generated photon number of the multimode probe, truncated at [`MARGINAL_TAIL`].
    pub fn multimode_thermal(mu: f64, modes: Modes) -> Result<Self> {
        check_mu(mu)?;
        Ok(Self::from_walk(thermal_walk(mu, modes, MARGINAL_TAIL), |n| match modes {
            Modes::Infinite => ln_poisson(n, mu),
            Modes::Finite(m) => ln_negative_binomial(n, m.get(), mu / m.get() as f64),
        }))
    }

    /// Binomial(`n`, `p`) truncated at [`ROW_TAIL`].
    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self::from_walk(binomial_walk(n, p, ROW_TAIL), |k| ln_binomial(k, n, p)))
    }

    pub fn support_min(&self) -> u64 {
        self.start
    }

    pub fn support_max(&self) -> u64 {
        self.start + self.log_pmf.len() as u64 - 1
    }

    /// Upper bound on the probability outside the stored support.
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    pub fn log_pmf(&self, n: u64) -> f64 {
        if n < self.start {
            return f64::NEG_INFINITY;
        }
        self.log_pmf
            .get((n - self.start) as usize)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn pmf(&self, n: u64) -> f64 {
        self.log_pmf(n).exp()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.log_pmf
            .iter()
            .enumerate()
            .map(move |(i, l)| (self.start + i as u64, l.exp()))
    }

    pub fn mass(&self) -> f64 {
        self.iter().map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(n, p)| n as f64 * p).sum()
    }

    pub(crate) fn to_row(&self) -> Row {
        Row {
            start: self.start as usize,
            vals: self.iter().map(|(_, p)| p).collect(),
        }
    }
}

/// Mixture of binomial rows `sum_j w_j Bin(.; n, eff tau_j)` over the union
/// of the component supports, with its total mass.
pub(crate) fn mixture_row(n: u64, eff: f64, dist: &DiscreteDistribution) -> Row {
    let parts: Vec<(Row, f64)> = dist
        .points()
        .map(|(t, w)| (binomial_row(n, eff * t), w))
        .collect();
    let start = parts.iter().map(|(r, _)| r.start).min().unwrap_or(0);
    let end = parts.iter().map(|(r, _)| r.end()).max().unwrap_or(0);
    let mut vals = vec![0.0; end - start];
    for (r, w) in &parts {
        let off = r.start - start;
        for (dst, v) in vals[off..off + r.vals.len()].iter_mut().zip(&r.vals) {
            *dst += w * v;
        }
    }
    Row { start, vals }
}

/// How per-hypothesis rows are aligned before they reach the visitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Span {
    /// Every count with mass under any hypothesis.
    Union,
    /// Only counts with mass under every hypothesis (enough for `min` sums).
    Intersection,
}

/// Outcome of a pass over the joint count grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GridPass {
    /// Retained probability mass per hypothesis.
    pub masses: Vec<f64>,
    /// Number of `(n_S, n_I)` cells handed to the visitor.
    pub cells: u64,
}

/// Rough upper estimate of the `(n_S, n_I)` cells a pass will touch.
pub(crate) fn estimate_cells(source: &CountDistribution, params: &ProbeParams, hyps: &[&DiscreteDistribution]) -> f64 {
    let n_hi = source.support_max() as f64;
    let idlers = if params.idler_eta() < 1.0 {
        // idler counts spread below n_lo by the thinning as well
        n_hi - params.idler_eta() * source.support_min() as f64 + 1.0
    } else {
        (source.support_max() - source.support_min() + 1) as f64
    };
    let lo = hyps.iter().map(|d| d.min_tau()).fold(1.0, f64::min);
    let hi = hyps.iter().map(|d| d.max_tau()).fold(0.0, f64::max);
    let p = params.eta() * 0.5 * (lo + hi);
    let spread = 18.0 * (n_hi * p * (1.0 - p)).sqrt() + 20.0;
    idlers * (params.eta() * n_hi * (hi - lo) + spread)
}

/// Streams the joint law `p_h(n_S, n_I)` of every hypothesis `h`, one idler
/// count at a time.
///
/// The generated photon number `n` follows `source`; the idler keeps each
/// photon with probability `idler_eta` and the signal with `eta tau`, with
/// `tau` drawn from the hypothesis mixture. The visitor receives `n_I`, the
/// first signal count of the aligned window, and one buffer per hypothesis.
pub(crate) fn scan_joint(
    source: &CountDistribution,
    params: &ProbeParams,
    hyps: &[&DiscreteDistribution],
    span: Span,
    mut visit: impl FnMut(u64, usize, &[Vec<f64>]),
) -> GridPass {
    let eta_s = params.eta();
    let eta_i = params.idler_eta();
    let marginal = source.to_row();
    let mut masses = vec![0.0; hyps.len()];
    let mut cells = 0u64;
    let mut bufs: Vec<Vec<f64>> = vec![Vec::new(); hyps.len()];

    if eta_i == 1.0 {
        for (i, &pn) in marginal.vals.iter().enumerate() {
            let n = (marginal.start + i) as u64;
            let rows: Vec<Row> = hyps.iter().map(|d| mixture_row(n, eta_s, d)).collect();
            for (m, r) in masses.iter_mut().zip(&rows) {
                *m += pn * r.mass();
            }
            let Some((a, b)) = align(rows.iter().map(|r| (r.start, r.end())), span) else {
                continue;
            };
            for (buf, r) in bufs.iter_mut().zip(&rows) {
                buf.clear();
                buf.resize(b - a, 0.0);
                add_scaled(buf, a, r, pn);
            }
            cells += (b - a) as u64;
            visit(n, a, &bufs);
        }
        return GridPass { masses, cells };
    }

    // Generated-photon rows, each row the idler law for that n.
    let idler_rows: Vec<Row> = marginal
        .vals
        .iter()
        .enumerate()
        .map(|(i, &pn)| {
            let mut r = binomial_row((marginal.start + i) as u64, eta_i);
            r.vals.iter_mut().for_each(|v| *v *= pn);
            r
        })
        .collect();
    let signal_rows: Vec<Vec<Row>> = hyps
        .iter()
        .map(|d| {
            (0..marginal.vals.len())
                .map(|i| mixture_row((marginal.start + i) as u64, eta_s, d))
                .collect()
        })
        .collect();
    for (h, rows) in signal_rows.iter().enumerate() {
        masses[h] = rows
            .iter()
            .zip(&idler_rows)
            .map(|(s, d)| s.mass() * d.mass())
            .sum();
    }

    // Generated counts feeding each idler count.
    let idler_lo = idler_rows.iter().map(|r| r.start).min().unwrap_or(0);
    let idler_hi = idler_rows.iter().map(|r| r.end()).max().unwrap_or(0);
    let mut feeders: Vec<(usize, usize)> = vec![(usize::MAX, 0); idler_hi - idler_lo];
    for (i, r) in idler_rows.iter().enumerate() {
        for slot in &mut feeders[r.start - idler_lo..r.end() - idler_lo] {
            slot.0 = slot.0.min(i);
            slot.1 = slot.1.max(i + 1);
        }
    }

    for (offset, &(f_lo, f_hi)) in feeders.iter().enumerate() {
        let n_i = idler_lo + offset;
        let live: Vec<usize> = (f_lo..f_hi)
            .filter(|&i| idler_rows[i].get(n_i) > 0.0)
            .collect();
        let ranges = signal_rows.iter().map(|rows| {
            live.iter().fold((usize::MAX, 0), |(s, e), &i| {
                (s.min(rows[i].start), e.max(rows[i].end()))
            })
        });
        let Some((a, b)) = align(ranges, span) else {
            continue;
        };
        for (buf, rows) in bufs.iter_mut().zip(&signal_rows) {
            buf.clear();
            buf.resize(b - a, 0.0);
            for &i in &live {
                add_scaled(buf, a, &rows[i], idler_rows[i].get(n_i));
            }
        }
        cells += (b - a) as u64;
        visit(n_i as u64, a, &bufs);
    }
    GridPass { masses, cells }
}

/// Combines per-hypothesis `[start, end)` ranges; `None` when empty.
fn align(ranges: impl Iterator<Item = (usize, usize)>, span: Span) -> Option<(usize, usize)> {
    let (a, b) = match span {
        Span::Union => ranges.fold((usize::MAX, 0), |(s, e), (rs, re)| (s.min(rs), e.max(re))),
        Span::Intersection => ranges.fold((0, usize::MAX), |(s, e), (rs, re)| (s.max(rs), e.min(re))),
    };
    (a < b).then_some((a, b))
}

/// `buf[n - a] += scale * row[n]` over the overlap of `row` with the buffer.
fn add_scaled(buf: &mut [f64], a: usize, row: &Row, scale: f64) {
    let lo = row.start.max(a);
    let hi = row.end().min(a + buf.len());
    if lo >= hi {
        return;
    }
    let src = &row.vals[lo - row.start..hi - row.start];
    for (d, s) in buf[lo - a..hi - a].iter_mut().zip(src) {
        *d += scale * s;
    }
}

/// Joint signal/idler count law for one transmittance value.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCounts {
    idler_start: u64,
    rows: Vec<(usize, Vec<f64>)>,
    mass: f64,
}

impl JointCounts {
    /// `p(n_S, n_I)`; zero outside the truncated support.
    pub fn prob(&self, n_s: u64, n_i: u64) -> f64 {
        let Some(idx) = n_i.checked_sub(self.idler_start) else {
            return 0.0;
        };
        match self.rows.get(idx as usize) {
            Some((start, vals)) => {
                let n_s = n_s as usize;
                if n_s < *start {
                    0.0
                } else {
                    vals.get(n_s - start).copied().unwrap_or(0.0)
                }
            }
            None => 0.0,
        }
    }

    /// All stored cells as `(n_S, n_I, p)`.
    pub fn cells(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(i, (start, vals))| {
            let n_i = self.idler_start + i as u64;
            vals.iter()
                .enumerate()
                .map(move |(j, &p)| ((start + j) as u64, n_i, p))
        })
    }

    /// Retained probability mass.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn idler_marginal(&self) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, (_, v))| (self.idler_start + i as u64, v.iter().sum()))
            .collect()
    }

    pub fn signal_mean(&self) -> f64 {
        self.cells().map(|(s, _, p)| s as f64 * p).sum()
    }

    pub fn idler_mean(&self) -> f64 {
        self.cells().map(|(_, i, p)| i as f64 * p).sum()
    }

    pub fn covariance(&self) -> f64 {
        let ms = self.signal_mean();
        let mi = self.idler_mean();
        self.cells()
            .map(|(s, i, p)| (s as f64 - ms) * (i as f64 - mi) * p)
            .sum()
    }
}

/// Joint count law `p(n_S, n_I | tau)` of the probe after the cell: the
/// generated photon number is shared by both arms, then the idler is thinned
/// by `idler_eta` and the signal by `eta tau`, independently.
pub fn joint_tmsv_counts(params: &ProbeParams, tau: f64) -> Result<JointCounts> {
    if !(0.0..=1.0).contains(&tau) {
        return invalid(format!("transmittance {tau} outside [0, 1]"));
    }
    let source = CountDistribution::multimode_thermal(params.mu(), params.modes())?;
    let point = DiscreteDistribution::point(tau)?;
    let mut rows: Vec<(u64, usize, Vec<f64>)> = Vec::new();
    let pass = scan_joint(&source, params, &[&point], Span::Union, |n_i, a, bufs| {
        rows.push((n_i, a, bufs[0].clone()));
    });
    let mass = pass.masses[0];
    if mass < MIN_JOINT_MASS {
        return Err(ReadoutError::MassDeficit {
            what: "joint count law",
            mass,
            required: MIN_JOINT_MASS,
        });
    }
    let idler_start = rows.first().map_or(0, |r| r.0);
    // idler counts are visited in order; fill any skipped ones
    let mut dense: Vec<(usize, Vec<f64>)> = Vec::with_capacity(rows.len());
    for (n_i, a, vals) in rows {
        while idler_start + (dense.len() as u64) < n_i {
            dense.push((0, Vec::new()));
        }
        dense.push((a, vals));
    }
    Ok(JointCounts {
        idler_start,
        rows: dense,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_log_pmf(0, 3.5).unwrap(), -3.5);
        assert!((poisson_log_pmf(1, 1.0).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(poisson_log_pmf(0, 0.0).unwrap(), 0.0);
        assert_eq!(poisson_log_pmf(3, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(poisson_log_pmf(1, -1.0).is_err());
    }

    #[test]
    fn poisson_tail_at_large_mean() {
        let lam: f64 = 1e4;
        let cut = (lam + 10.0 * lam.sqrt() + 20.0) as u64;
        let total: f64 = (0..=cut).map(|n| poisson_log_pmf(n, lam).unwrap().exp()).sum();
        assert!(total >= 1.0 - 1e-12, "total={total}");
        let at_mode = poisson_log_pmf(10_000, lam).unwrap().exp();
        assert!(at_mode.is_finite() && at_mode > 0.0);
        let huge = poisson_log_pmf(100_000, 1e5).unwrap().exp();
        assert!(huge > 0.0);
    }

    #[test]
    fn thermal_single_mode() {
        let p = multimode_thermal_log_pmf(0, 1.0, Modes::finite(1).unwrap()).unwrap().exp();
        assert!((p - 0.5).abs() < 1e-15);
        let mu: f64 = 3.0;
        for n in 0..20u64 {
            let direct = n as f64 * mu.ln() - (n + 1) as f64 * (mu + 1.0).ln();
            let got = multimode_thermal_log_pmf(n, mu, Modes::finite(1).unwrap()).unwrap();
            assert!((got - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_many_modes_approaches_poisson() {
        // the relative gap at n behaves like ((n - mu)^2 - n) / (2M)
        let mu = 1.0;
        let m = Modes::finite(1_000_000).unwrap();
        let mut tv = 0.0;
        for n in 0..60u64 {
            let a = multimode_thermal_log_pmf(n, mu, m).unwrap().exp();
            let b = poisson_log_pmf(n, mu).unwrap().exp();
            if n <= 2 {
                assert!((a - b).abs() <= 1e-6 * b, "n={n} {a} {b}");
            }
            tv += 0.5 * (a - b).abs();
        }
        assert!(tv < 1e-6, "tv={tv}");
        for n in 0..40u64 {
            assert_eq!(
                multimode_thermal_log_pmf(n, 7.0, Modes::Infinite).unwrap(),
                poisson_log_pmf(n, 7.0).unwrap()
            );
        }
    }

    #[test]
    fn thermal_mean() {
        let d = CountDistribution::multimode_thermal(5.0, Modes::finite(20).unwrap()).unwrap();
        assert!((d.mean() - 5.0).abs() < 1e-9);
        assert!(d.mass() >= 1.0 - 1e-12 && d.mass() <= 1.0 + 1e-12);
        assert!(d.tail_mass_bound() <= 1e-12);
    }

    #[test]
    fn binomial_edges() {
        assert_eq!(binomial_thin_log_pmf(5, 5, 1.0).unwrap(), 0.0);
        assert_eq!(binomial_thin_log_pmf(4, 5, 1.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(binomial_thin_log_pmf(0, 5, 0.0).unwrap(), 0.0);
        assert_eq!(binomial_thin_log_pmf(1, 5, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(binomial_thin_log_pmf(6, 5, 0.5).is_err());
        assert!(binomial_thin_log_pmf(1, 5, 1.5).is_err());
    }

    #[test]
    fn thinned_poisson_is_poisson() {
        let (lam, p) = (50.0, 0.7);
        let source = CountDistribution::poisson(lam).unwrap();
        let mut out = vec![0.0; source.support_max() as usize + 1];
        for (n, pn) in source.iter() {
            for k in 0..=n {
                out[k as usize] += pn * binomial_thin_log_pmf(k, n, p).unwrap().exp();
            }
        }
        let tv: f64 = out
            .iter()
            .enumerate()
            .map(|(k, q)| (q - poisson_log_pmf(k as u64, lam * p).unwrap().exp()).abs())
            .sum::<f64>()
            * 0.5;
        assert!(tv < 1e-10, "tv={tv}");
    }

    #[test]
    fn truncated_rows_keep_their_mass() {
        for &(n, p) in &[(10u64, 0.3), (1000, 0.97), (100_000, 0.982), (7, 0.999_999)] {
            let r = binomial_row(n, p);
            assert!((r.mass() - 1.0).abs() < 1e-13, "n={n} p={p} mass={}", r.mass());
        }
        for &lam in &[0.1, 3.0, 1e3, 1e5] {
            let r = poisson_row(lam);
            assert!((r.mass() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn modes_parse() {
        assert_eq!("inf".parse::<Modes>().unwrap(), Modes::Infinite);
        assert_eq!("12".parse::<Modes>().unwrap(), Modes::finite(12).unwrap());
        assert!("0".parse::<Modes>().is_err());
        assert!("-3".parse::<Modes>().is_err());
        assert!("x".parse::<Modes>().is_err());
    }

    #[test]
    fn perfect_correlation_without_loss() {
        let params = ProbeParams::ideal(20.0, Modes::Infinite).unwrap();
        let j = joint_tmsv_counts(&params, 1.0).unwrap();
        for (s, i, p) in j.cells() {
            if s != i {
                assert_eq!(p, 0.0);
            }
        }
        assert!((j.mass() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn vacuum_probe() {
        let params = ProbeParams::new(0.0, Modes::Infinite, 0.9).unwrap();
        let j = joint_tmsv_counts(&params, 0.5).unwrap();
        assert_eq!(j.prob(0, 0), 1.0);
        assert_eq!(j.cells().count(), 1);
    }

    #[test]
    fn joint_moments_and_marginal() {
        let (mu, tau, eta) = (40.0, 0.8, 0.7);
        for modes in [Modes::Infinite, Modes::finite(3).unwrap()] {
            let params = ProbeParams::new(mu, modes, eta).unwrap();
            let j = joint_tmsv_counts(&params, tau).unwrap();
            assert!((j.signal_mean() - eta * tau * mu).abs() < 1e-6 * eta * tau * mu);
            assert!((j.idler_mean() - eta * mu).abs() < 1e-6 * eta * mu);
            assert!(j.covariance() > 0.0);

            // idler marginal = source thinned by eta
            let source = CountDistribution::multimode_thermal(mu, modes).unwrap();
            for (n_i, q) in j.idler_marginal() {
                let direct: f64 = source
                    .iter()
                    .filter(|(n, _)| *n >= n_i)
                    .map(|(n, pn)| pn * binomial_thin_log_pmf(n_i, n, eta).unwrap().exp())
                    .sum();
                assert!((q - direct).abs() < 1e-12, "n_i={n_i}");
            }
        }
    }

    #[test]
    fn rejects_bad_probe_params() {
        assert!(ProbeParams::new(-1.0, Modes::Infinite, 1.0).is_err());
        assert!(ProbeParams::new(1.0, Modes::Infinite, 0.0).is_err());
        assert!(ProbeParams::new(1.0, Modes::Infinite, 1.1).is_err());
        assert!(ProbeParams::new(f64::INFINITY, Modes::Infinite, 1.0).is_err());
        assert!(joint_tmsv_counts(&ProbeParams::ideal(1.0, Modes::Infinite).unwrap(), 1.5).is_err());
    }
}
