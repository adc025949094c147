//! Entropy primitives: binary Shannon entropy and the von Neumann entropy of
//! finite mixtures of coherent states, computed from their Gram matrix.
//!
//! For `rho = sum_i q_i |a_i><a_i|` the nonzero spectrum of `rho` equals the
//! spectrum of `Q G`, with `Q = diag(q)` and `G` the Gram matrix of the
//! states. `Q G` is similar to the symmetric `sqrt(Q) G sqrt(Q)`, so a
//! symmetric eigensolver gives the entropy without orthogonalizing the
//! (non-orthogonal) state set.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, ReadoutError, Result};

/// Eigenvalues within this distance outside [0, 1] are rounding noise.
pub const EIGEN_CLIP_TOL: f64 = 1e-10;
/// Eigenvalues below this are taken as evidence the input is not a Gram matrix.
pub const EIGEN_REJECT_TOL: f64 = 1e-8;

/// `-x log2 x` with `0 log 0 = 0`.
fn neg_x_log2_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("probability {p} outside [0, 1]"));
    }
    let q = 1.0 - p;
    // evaluate on the smaller argument so H(p) == H(1 - p) bit for bit
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    Ok(neg_x_log2_x(a) + neg_x_log2_x(b))
}

/// Information in bits recovered from a binary cell read with error `p_err`.
pub fn info_from_perr(p_err: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&p_err) {
        return invalid(format!("error probability {p_err} outside [0, 1/2]"));
    }
    Ok((1.0 - binary_entropy(p_err)?).clamp(0.0, 1.0))
}

/// Gram matrix of the coherent states `|sqrt(tau_i) alpha>` with `|alpha|^2 = mu`
/// and real `alpha`: `G(i, j) = exp(-mu (sqrt(tau_i) - sqrt(tau_j))^2 / 2)`.
pub fn coherent_gram(taus: &[f64], mu: f64) -> Result<DMatrix<f64>> {
    if taus.is_empty() {
        return invalid("need at least one transmittance");
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return invalid(format!("mean photon number {mu} must be finite and >= 0"));
    }
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return invalid(format!("transmittance {t} outside [0, 1]"));
    }
    let amp: Vec<f64> = taus.iter().map(|t| t.sqrt()).collect();
    let k = taus.len();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            let d = amp[i] - amp[j];
            (-0.5 * mu * d * d).exp()
        }
    }))
}

/// A finite mixture of pure states described by its weights and Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMixture {
    weights: Vec<f64>,
    gram: DMatrix<f64>,
}

impl GramMixture {
    pub fn new(weights: Vec<f64>, gram: DMatrix<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return invalid("mixture needs at least one component");
        }
        if gram.nrows() != k || gram.ncols() != k {
            return invalid(format!(
                "Gram matrix is {}x{}, expected {k}x{k}",
                gram.nrows(),
                gram.ncols()
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return invalid("mixture weights must be positive");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("mixture weights sum to {total}, not 1"));
        }
        for i in 0..k {
            if gram[(i, i)] != 1.0 {
                return invalid("Gram matrix diagonal must be exactly 1");
            }
            for j in 0..i {
                let g = gram[(i, j)];
                // far-apart coherent states underflow to exactly 0
                if !(0.0..=1.0).contains(&g) {
                    return invalid(format!("Gram entry {g} outside [0, 1]"));
                }
                if g != gram[(j, i)] {
                    return invalid("Gram matrix must be symmetric");
                }
            }
        }
        Ok(Self { weights, gram })
    }

    /// Mixture `sum_i q_i |sqrt(tau_i) alpha><sqrt(tau_i) alpha|` with `|alpha|^2 = mu`.
    pub fn coherent(points: &[(f64, f64)], mu: f64) -> Result<Self> {
        let taus: Vec<f64> = points.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = points.iter().map(|p| p.1).collect();
        Self::new(weights, coherent_gram(&taus, mu)?)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `sqrt(Q) G sqrt(Q)`, symmetric and similar to `Q G`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let s = DVector::from_iterator(self.dim(), self.weights.iter().map(|w| w.sqrt()));
        let mut m = self.gram.clone();
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                m[(i, j)] *= s[i] * s[j];
            }
        }
        m
    }

    /// `Q G`, the (non-symmetric) product whose spectrum is that of the state.
    pub fn qg(&self) -> DMatrix<f64> {
        let mut m = self.gram.clone();
        for (i, w) in self.weights.iter().enumerate() {
            m.row_mut(i).scale_mut(*w);
        }
        m
    }
}

/// Raw eigenvalues of the mixture density operator, ascending.
pub fn mixture_spectrum(mix: &GramMixture) -> Vec<f64> {
    if mix.dim() == 1 {
        return vec![1.0];
    }
    let mut ev: Vec<f64> = mix.symmetrized().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Von Neumann entropy of the mixture, in bits.
pub fn mixture_entropy(mix: &GramMixture) -> Result<f64> {
    let spectrum = mixture_spectrum(mix);
    if let Some(&lowest) = spectrum.first() {
        if lowest < -EIGEN_REJECT_TOL {
            return Err(ReadoutError::NotPositiveSemidefinite { eigenvalue: lowest });
        }
    }
    Ok(spectrum
        .into_iter()
        .map(|l| {
            let l = if l < EIGEN_CLIP_TOL { l.max(0.0) } else { l };
            neg_x_log2_x(l.min(1.0))
        })
        .sum())
}
