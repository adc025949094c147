//! Transmittance distributions of the two encoding levels and their finite
//! discretizations.

use crate::error::{invalid, Result};

/// Default number of grid points per level.
pub const DEFAULT_K: usize = 101;
/// Default half-width of the discretization window, in standard deviations.
pub const DEFAULT_N_SIGMA: f64 = 5.0;
/// Two support points closer than this are treated as the same transmittance.
pub const TAU_MERGE_TOL: f64 = 1e-12;

/// Gaussian description of one encoding level: mean transmittance and spread.
///
/// A zero `sigma` is a perfectly written level (a point mass at `mean`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmittanceSpec {
    mean: f64,
    sigma: f64,
}

impl TransmittanceSpec {
    pub fn new(mean: f64, sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mean) {
            return invalid(format!("mean transmittance {mean} outside [0, 1]"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return invalid(format!("sigma {sigma} must be finite and >= 0"));
        }
        Ok(Self { mean, sigma })
    }

    /// A perfectly characterized level.
    pub fn delta(mean: f64) -> Result<Self> {
        Self::new(mean, 0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Unnormalized Gaussian density at `tau`.
    fn density(&self, tau: f64) -> f64 {
        let z = (tau - self.mean) / self.sigma;
        (-0.5 * z * z).exp()
    }

    /// The window `[mean - n_sigma sigma, mean + n_sigma sigma]` clipped to [0, 1].
    pub fn window(&self, n_sigma: f64) -> (f64, f64) {
        (
            (self.mean - n_sigma * self.sigma).max(0.0),
            (self.mean + n_sigma * self.sigma).min(1.0),
        )
    }
}

/// Finite weighted support approximating a transmittance distribution.
///
/// Points are strictly increasing in `tau`, lie in [0, 1], and carry positive
/// weights that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    taus: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from raw points, normalizing the weights.
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (taus, weights): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if taus.is_empty() {
            return invalid("distribution needs at least one point");
        }
        for (&t, &w) in taus.iter().zip(&weights) {
            if !(0.0..=1.0).contains(&t) {
                return invalid(format!("support point {t} outside [0, 1]"));
            }
            if !(w > 0.0) || !w.is_finite() {
                return invalid(format!("weight {w} must be positive and finite"));
            }
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("support points must be strictly increasing");
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { taus, weights })
    }

    /// A single point mass.
    pub fn point(tau: f64) -> Result<Self> {
        Self::new([(tau, 1.0)])
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.taus.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn min_tau(&self) -> f64 {
        self.taus[0]
    }

    pub fn max_tau(&self) -> f64 {
        self.taus[self.taus.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        expect(self, |t| t)
    }
}

/// Discretizes a level on `k` evenly spaced points over its clipped window,
/// weighting each point by the Gaussian density there.
pub fn discretize(spec: &TransmittanceSpec, k: usize, n_sigma: f64) -> Result<DiscreteDistribution> {
    if k == 0 {
        return invalid("discretization needs k >= 1");
    }
    if !(n_sigma > 0.0) || !n_sigma.is_finite() {
        return invalid(format!("n_sigma {n_sigma} must be positive and finite"));
    }
    if spec.sigma == 0.0 || k == 1 {
        return DiscreteDistribution::point(spec.mean);
    }
    let (lo, hi) = spec.window(n_sigma);
    if !(hi > lo) {
        return invalid(format!("empty discretization window [{lo}, {hi}]"));
    }
    let step = (hi - lo) / (k - 1) as f64;
    let points = (0..k)
        .map(|i| if i == k - 1 { hi } else { lo + step * i as f64 })
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| (t, spec.density(t)))
        // far tails can underflow when n_sigma is huge
        .filter(|&(_, w)| w > 0.0);
    DiscreteDistribution::new(points)
}

/// Expectation `sum_j w_j f(tau_j)`.
pub fn expect(dist: &DiscreteDistribution, f: impl Fn(f64) -> f64) -> f64 {
    dist.points().map(|(t, w)| w * f(t)).sum()
}

/// A memory cell: the two level distributions and their priors.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    pub g0: DiscreteDistribution,
    pub g1: DiscreteDistribution,
    p0: f64,
}

impl CellModel {
    /// Equiprobable cell.
    pub fn new(g0: DiscreteDistribution, g1: DiscreteDistribution) -> Self {
        Self { g0, g1, p0: 0.5 }
    }

    pub fn with_priors(g0: DiscreteDistribution, g1: DiscreteDistribution, p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return invalid(format!("prior {p0} outside [0, 1]"));
        }
        Ok(Self { g0, g1, p0 })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        1.0 - self.p0
    }

    pub fn is_equiprobable(&self) -> bool {
        self.p0 == 0.5
    }

    /// Union support with weights `p_i w^i_j`; coincident points are merged.
    pub fn merged_support(&self) -> Vec<(f64, f64)> {
        let tagged = self
            .g0
            .points()
            .map(|(t, w)| (t, self.p0() * w))
            .chain(self.g1.points().map(|(t, w)| (t, self.p1() * w)));
        merge_points(tagged)
    }

    /// Same model with the levels (and priors) exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            g0: self.g1.clone(),
            g1: self.g0.clone(),
            p0: self.p1(),
        }
    }
}

/// Sorts points by `tau` and adds the weights of points closer than
/// [`TAU_MERGE_TOL`]. Zero-weight points are dropped.
pub(crate) fn merge_points(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.into_iter().filter(|p| p.1 > 0.0).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (t, w) in pts {
        match out.last_mut() {
            Some(last) if t - last.0 <= TAU_MERGE_TOL => last.1 += w,
            _ => out.push((t, w)),
        }
    }
    out
}

/// Gaussian description of a whole cell, from which discretized
/// [`CellModel`]s of any resolution can be produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub level0: TransmittanceSpec,
    pub level1: TransmittanceSpec,
    pub n_sigma: f64,
    p0: f64,
}

impl CellSpec {
    pub fn new(level0: TransmittanceSpec, level1: TransmittanceSpec) -> Self {
        Self {
            level0,
            level1,
            n_sigma: DEFAULT_N_SIGMA,
            p0: 0.5,
        }
    }

    pub fn gaussian(tau0: f64, sigma0: f64, tau1: f64, sigma1: f64) -> Result<Self> {
        Ok(Self::new(
            TransmittanceSpec::new(tau0, sigma0)?,
            TransmittanceSpec::new(tau1, sigma1)?,
        ))
    }

    pub fn with_n_sigma(mut self, n_sigma: f64) -> Result<Self> {
        if !(n_sigma > 0.0) || !n_sigma.is_finite() {
            return invalid(format!("n_sigma {n_sigma} must be positive and finite"));
        }
        self.n_sigma = n_sigma;
        Ok(self)
    }

    pub fn with_p0(mut self, p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return invalid(format!("prior {p0} outside [0, 1]"));
        }
        self.p0 = p0;
        Ok(self)
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn discretize(&self, k: usize) -> Result<CellModel> {
        CellModel::with_priors(
            discretize(&self.level0, k, self.n_sigma)?,
            discretize(&self.level1, k, self.n_sigma)?,
            self.p0,
        )
    }

    /// Irreducible error with a perfect transmittance measurement, computed on
    /// a common grid of `resolution` points spanning both windows. Each level
    /// is normalized over the grid points inside its own window.
    pub fn bayes_error_floor(&self, resolution: usize) -> Result<f64> {
        if resolution < 2 {
            return invalid("floor grid needs at least two points");
        }
        let p1 = 1.0 - self.p0;
        let (a, b) = (&self.level0, &self.level1);
        match (a.sigma == 0.0, b.sigma == 0.0) {
            (true, true) => {
                return Ok(if (a.mean - b.mean).abs() <= TAU_MERGE_TOL {
                    self.p0.min(p1)
                } else {
                    0.0
                })
            }
            // a point mass against a density has zero overlap
            (true, false) | (false, true) => return Ok(0.0),
            _ => {}
        }
        let (lo0, hi0) = a.window(self.n_sigma);
        let (lo1, hi1) = b.window(self.n_sigma);
        let (lo, hi) = (lo0.min(lo1), hi0.max(hi1));
        let step = (hi - lo) / (resolution - 1) as f64;
        let grid: Vec<f64> = (0..resolution).map(|i| lo + step * i as f64).collect();
        let weigh = |s: &TransmittanceSpec, lo: f64, hi: f64| -> Vec<f64> {
            let raw: Vec<f64> = grid
                .iter()
                .map(|&t| if t >= lo && t <= hi { s.density(t) } else { 0.0 })
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / total).collect()
        };
        let w0 = weigh(a, lo0, hi0);
        let w1 = weigh(b, lo1, hi1);
        Ok(w0
            .iter()
            .zip(&w1)
            .map(|(x, y)| (self.p0 * x).min(p1 * y))
            .sum())
    }
}

/// Irreducible discrimination error of a discrete cell model given exact
/// knowledge of the transmittance: `sum_tau min(p0 g0(tau), p1 g1(tau))`
/// over the merged support.
pub fn bayes_error_floor(model: &CellModel) -> f64 {
    let mut pts: Vec<(f64, f64, f64)> = model
        .g0
        .points()
        .map(|(t, w)| (t, model.p0() * w, 0.0))
        .chain(model.g1.points().map(|(t, w)| (t, 0.0, model.p1() * w)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(pts.len());
    for (t, a, b) in pts {
        match merged.last_mut() {
            Some(last) if t - last.0 <= TAU_MERGE_TOL => {
                last.1 += a;
                last.2 += b;
            }
            _ => merged.push((t, a, b)),
        }
    }
    merged.iter().map(|&(_, a, b)| a.min(b)).sum()
}
