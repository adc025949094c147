//! Holevo capacity of the imperfect cell for classical transmitters, computed
//! with a single coherent mode of energy `mu`.
//!
//! Each level maps the coherent probe to a finite mixture of coherent states
//! `|sqrt(tau) alpha>`, so every entropy in the Holevo quantity is a Gram
//! mixture entropy. The continuous distributions are approached by refining
//! the discretization until the quantity stops moving.

use crate::dists::{CellModel, CellSpec, DiscreteDistribution};
use crate::error::{invalid, Result};
use crate::infotheory::{mixture_entropy, GramMixture};

/// Second differences above this (in bits) count as a concavity violation.
pub const CONCAVITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiOptions {
    /// Stop refining once successive values differ by less than this (bits).
    pub tol: f64,
    pub k_start: usize,
    pub k_cap: usize,
}

impl Default for ChiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            k_start: 25,
            k_cap: 1600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    pub chi_bits: f64,
    pub k_used: usize,
    /// `|chi(k_used) - chi(ceil(k_used / 2))|`.
    pub convergence_gap: f64,
    pub converged: bool,
    /// Set when the value came out of a μ-grid concavity check.
    pub concave_on_grid: Option<bool>,
}

fn level_entropy(dist: &DiscreteDistribution, mu: f64) -> Result<f64> {
    if dist.len() == 1 {
        return Ok(0.0);
    }
    let pts: Vec<(f64, f64)> = dist.points().collect();
    mixture_entropy(&GramMixture::coherent(&pts, mu)?)
}

/// Holevo quantity `S(p0 rho0 + p1 rho1) - p0 S(rho0) - p1 S(rho1)` of the
/// discretized cell probed by a coherent state with `|alpha|^2 = mu`.
pub fn chi_coherent(model: &CellModel, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return invalid(format!("mean photon number {mu} must be finite and >= 0"));
    }
    if mu == 0.0 {
        // every level maps the vacuum to the vacuum
        return Ok(0.0);
    }
    let merged = model.merged_support();
    let total = mixture_entropy(&GramMixture::coherent(&merged, mu)?)?;
    let parts = model.p0() * level_entropy(&model.g0, mu)? + model.p1() * level_entropy(&model.g1, mu)?;
    Ok((total - parts).max(0.0))
}

/// Refines the discretization `k -> 2k - 1` (nested grids) from
/// `opts.k_start` until two successive values agree within `opts.tol`, or
/// the next refinement would pass `opts.k_cap`. The last value is returned
/// either way; `converged` tells which.
pub fn chi_classical(spec: &CellSpec, mu: f64, opts: &ChiOptions) -> Result<CapacityResult> {
    if !(opts.tol > 0.0) {
        return invalid("capacity tolerance must be positive");
    }
    if opts.k_start < 2 || opts.k_cap < opts.k_start {
        return invalid("need 2 <= k_start <= k_cap");
    }
    let mut k = opts.k_start;
    let mut prev = chi_coherent(&spec.discretize(k)?, mu)?;
    loop {
        let next_k = 2 * k - 1;
        if next_k > opts.k_cap {
            return Ok(CapacityResult {
                chi_bits: prev,
                k_used: k,
                convergence_gap: f64::INFINITY,
                converged: false,
                concave_on_grid: None,
            });
        }
        let next = chi_coherent(&spec.discretize(next_k)?, mu)?;
        let gap = (next - prev).abs();
        if gap < opts.tol {
            return Ok(CapacityResult {
                chi_bits: next,
                k_used: next_k,
                convergence_gap: gap,
                converged: true,
                concave_on_grid: None,
            });
        }
        prev = next;
        k = next_k;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityViolation {
    /// Index of the middle point of the offending triple.
    pub index: usize,
    /// How far the chord lies above the middle value, in bits.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub concave: bool,
    pub chi_values: Vec<f64>,
    pub violations: Vec<ConcavityViolation>,
}

/// Checks concavity of `mu -> chi_coherent(model, mu)` on an increasing grid:
/// for every consecutive triple the value at the middle point must not fall
/// below the chord through its neighbours by more than [`CONCAVITY_TOL`].
/// On an evenly spaced grid this is the usual second difference (halved).
pub fn check_concavity(model: &CellModel, mu_grid: &[f64]) -> Result<ConcavityReport> {
    if mu_grid.len() < 3 {
        return invalid("concavity check needs at least three grid points");
    }
    if mu_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("μ grid must be strictly increasing");
    }
    let chi_values = mu_grid
        .iter()
        .map(|&mu| chi_coherent(model, mu))
        .collect::<Result<Vec<f64>>>()?;
    let violations: Vec<ConcavityViolation> = (1..mu_grid.len() - 1)
        .filter_map(|i| {
            let (x0, x1, x2) = (mu_grid[i - 1], mu_grid[i], mu_grid[i + 1]);
            let t = (x1 - x0) / (x2 - x0);
            let chord = (1.0 - t) * chi_values[i - 1] + t * chi_values[i + 1];
            let excess = chord - chi_values[i];
            (excess > CONCAVITY_TOL).then_some(ConcavityViolation { index: i, excess })
        })
        .collect();
    Ok(ConcavityReport {
        concave: violations.is_empty(),
        chi_values,
        violations,
    })
}
