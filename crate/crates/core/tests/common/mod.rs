//! Independent oracles: naive pmfs, explicit-argmax decoders, and the
//! density operator of a coherent-state mixture in a truncated Fock basis.
#![allow(dead_code)]

use std::sync::OnceLock;

use nalgebra::DMatrix;
use readout_core::CellModel;

pub fn ln_factorial(n: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; 2001];
        for i in 1..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    match table.get(n as usize) {
        Some(&v) => v,
        None => (1..=n).map(|i| (i as f64).ln()).sum(),
    }
}

pub fn poisson(n: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * lambda.ln() - lambda - ln_factorial(n)).exp()
}

pub fn binomial(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let c = (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp();
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Photons generated by `modes` thermal pairs of total mean `mu`, from the
/// multinomial convolution of geometric laws, built by repeated convolution.
pub fn thermal_total(mu: f64, modes: usize, n_max: usize) -> Vec<f64> {
    let m = mu / modes as f64;
    let q = m / (1.0 + m);
    let single: Vec<f64> = (0..=n_max).map(|n| q.powi(n as i32) / (1.0 + m)).collect();
    let mut total = vec![0.0; n_max + 1];
    total[0] = 1.0;
    for _ in 0..modes {
        let mut next = vec![0.0; n_max + 1];
        for (a, &x) in total.iter().enumerate() {
            for (b, &y) in single.iter().enumerate().take(n_max + 1 - a) {
                next[a + b] += x * y;
            }
        }
        total = next;
    }
    total
}

/// Source law: `None` modes means Poisson.
pub fn source(mu: f64, modes: Option<usize>, n_max: usize) -> Vec<f64> {
    match modes {
        None => (0..=n_max as u64).map(|n| poisson(n, mu)).collect(),
        Some(m) => thermal_total(mu, m, n_max),
    }
}

/// Smallest `n_max` leaving less than `tail` of the source law above it.
pub fn source_cutoff(mu: f64, modes: Option<usize>, tail: f64) -> usize {
    let law = source(mu, modes, 1500);
    let mut acc = 0.0;
    for (n, p) in law.iter().enumerate() {
        acc += p;
        if 1.0 - acc < tail {
            return n;
        }
    }
    law.len() - 1
}

/// `1/2 sum_outcomes p_{wrong}(outcome)` with an explicit argmax per
/// outcome, ties deciding 0.
pub fn argmax_error(p0: &[f64], p1: &[f64]) -> f64 {
    let mut err = 0.0;
    for (&a, &b) in p0.iter().zip(p1) {
        let decide = if b > a { 1 } else { 0 };
        err += if decide == 1 { a } else { b };
    }
    0.5 * err
}

/// Classical counting law of one level, enumerated up to `n_max`.
pub fn classical_law(model_level: &readout_core::DiscreteDistribution, eff: f64, n_max: u64) -> Vec<f64> {
    (0..=n_max)
        .map(|n| model_level.points().map(|(t, w)| w * poisson(n, eff * t)).sum())
        .collect()
}

pub fn brute_classical_pc(model: &CellModel, mu: f64, eta: f64, n_max: u64) -> f64 {
    let p0 = classical_law(&model.g0, eta * mu, n_max);
    let p1 = classical_law(&model.g1, eta * mu, n_max);
    argmax_error(&p0, &p1)
}

/// Full `(n_S, n_I)` table of one level by triple enumeration.
pub fn quantum_law(
    level: &readout_core::DiscreteDistribution,
    mu: f64,
    modes: Option<usize>,
    eta: f64,
    n_max: usize,
) -> Vec<f64> {
    let src = source(mu, modes, n_max);
    let w = n_max + 1;
    let mut table = vec![0.0; w * w];
    for (tau, wt) in level.points() {
        for (n, &pn) in src.iter().enumerate() {
            for ni in 0..=n {
                let pi = binomial(ni as u64, n as u64, eta);
                for ns in 0..=n {
                    table[ni * w + ns] += wt * pn * pi * binomial(ns as u64, n as u64, eta * tau);
                }
            }
        }
    }
    table
}

pub fn brute_quantum_pc(model: &CellModel, mu: f64, modes: Option<usize>, eta: f64, n_max: usize) -> f64 {
    let p0 = quantum_law(&model.g0, mu, modes, eta, n_max);
    let p1 = quantum_law(&model.g1, mu, modes, eta, n_max);
    argmax_error(&p0, &p1)
}

/// `sum_i q_i |b_i><b_i|` with `b_i = sqrt(tau_i mu)` in a Fock basis of `dim` states.
pub fn fock_density(points: &[(f64, f64)], mu: f64, dim: usize) -> DMatrix<f64> {
    let mut rho = DMatrix::zeros(dim, dim);
    for &(tau, q) in points {
        let b = (tau * mu).sqrt();
        let amp: Vec<f64> = (0..dim)
            .map(|n| {
                let ln = -0.5 * b * b - 0.5 * ln_factorial(n as u64);
                if b == 0.0 {
                    if n == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (ln + n as f64 * b.ln()).exp()
                }
            })
            .collect();
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += q * amp[i] * amp[j];
            }
        }
    }
    rho
}

pub fn von_neumann_bits(rho: &DMatrix<f64>) -> f64 {
    rho.clone()
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}
