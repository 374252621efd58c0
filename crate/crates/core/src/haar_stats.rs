//! Eigenphase statistics of Haar and Cayley-deformed gates.
//!
//! A Haar gate `H = f(h)` with eigenphases `r` becomes `f(theta h)`, whose
//! eigenphases are `nu = 2 atan(theta tan(r / 2))`. The deformed phase density
//! is the pushforward of the Weyl density under that map, and its distance
//! from Haar is what the estimators here measure.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cayley::{cayley_inverse_unitary, DEFAULT_BRANCH_GUARD};
use crate::error::{Error, Result};
use crate::linalg::haar_unitary;

/// Default side of the `N = 2` quadrature grid.
pub const DEFAULT_GRID: usize = 400;

/// Smallest sample budget `estimate_tvd` accepts.
pub const MIN_SAMPLES: usize = 1000;

/// `nu = 2 atan(theta tan(r / 2))`
pub fn phase_map(r: f64, theta: f64) -> f64 {
    2.0 * (theta * (r / 2.0).tan()).atan()
}

/// Inverse of [`phase_map`] at fixed `theta > 0`.
pub fn inverse_phase_map(nu: f64, theta: f64) -> f64 {
    phase_map(nu, 1.0 / theta)
}

/// `|dr / dnu| = (1 + theta^2 + cos r (1 - theta^2)) / (2 theta)`
pub fn jacobian_factor(r: f64, theta: f64) -> f64 {
    (1.0 + theta * theta + r.cos() * (1.0 - theta * theta)) / (2.0 * theta)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Joint eigenphase density of a Haar unitary,
/// `(N!)^-1 (2 pi)^-N prod_{a<b} |e^{i r_a} - e^{i r_b}|^2`.
pub fn weyl_density(phases: &[f64]) -> f64 {
    let n = phases.len();
    let mut repulsion = 1.0;
    for a in 0..n {
        for b in (a + 1)..n {
            // |e^{ix} - e^{iy}|^2 = 4 sin^2((x - y) / 2)
            let s = ((phases[a] - phases[b]) / 2.0).sin();
            repulsion *= 4.0 * s * s;
        }
    }
    repulsion / (factorial(n) * (2.0 * PI).powi(n as i32))
}

/// Density of the eigenphases of `f(theta h)` when `f(h)` is Haar.
pub fn deformed_density(nus: &[f64], theta: f64) -> f64 {
    let rs: Vec<f64> = nus.iter().map(|&nu| inverse_phase_map(nu, theta)).collect();
    let jacobian: f64 = rs.iter().map(|&r| jacobian_factor(r, theta)).product();
    weyl_density(&rs) * jacobian
}

/// Total variation distance estimate; `std_error` is zero for deterministic
/// quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvdEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Midpoint rule on the `[-pi, pi)^2` torus; rows are summed in parallel and
/// combined in a fixed order.
pub fn integrate_torus2(side: usize, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let h = 2.0 * PI / side as f64;
    let rows: Vec<f64> = (0..side)
        .into_par_iter()
        .map(|i| {
            let x = -PI + (i as f64 + 0.5) * h;
            (0..side).map(|j| f(x, -PI + (j as f64 + 0.5) * h)).sum::<f64>()
        })
        .collect();
    rows.iter().sum::<f64>() * h * h
}

/// `1/2 int |weyl - deformed|` over the 2-torus by grid quadrature.
pub fn tvd_grid_n2(theta: f64, side: usize) -> f64 {
    0.5 * integrate_torus2(side, |x, y| (weyl_density(&[x, y]) - deformed_density(&[x, y], theta)).abs())
}

/// Eigenphases in `(-pi, pi)` of a Haar unitary, ascending.
pub fn haar_eigenphases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let u = haar_unitary::<f64, R>(n, rng);
        if let Ok(e) = cayley_inverse_unitary(&u, &DEFAULT_BRANCH_GUARD) {
            return e.eigenvalues.iter().map(|h| 2.0 * h.atan()).collect();
        }
    }
}

/// Distance between Haar and the `theta`-deformed eigenphase distribution.
///
/// `N = 2` integrates on a `side x side` grid with
/// `side = max(400, ceil(sqrt(samples)))`; `N = 4` averages
/// `1/2 |1 - rho / mu|` over Haar eigenphase draws.
pub fn estimate_tvd<R: Rng + ?Sized>(n: usize, theta: f64, samples: usize, rng: &mut R) -> Result<TvdEstimate> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidConfig(format!("theta must be positive, got {theta}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    match n {
        2 => {
            let side = DEFAULT_GRID.max((samples as f64).sqrt().ceil() as usize);
            Ok(TvdEstimate { value: tvd_grid_n2(theta, side), std_error: 0.0, samples: side * side })
        }
        4 => {
            let terms: Vec<f64> = (0..samples)
                .map(|_| {
                    let x = haar_eigenphases(4, rng);
                    let mu = weyl_density(&x);
                    if mu > 0.0 {
                        0.5 * (1.0 - deformed_density(&x, theta) / mu).abs()
                    } else {
                        0.0
                    }
                })
                .collect();
            let mean = terms.iter().sum::<f64>() / samples as f64;
            let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
            Ok(TvdEstimate { value: mean, std_error: (var / samples as f64).sqrt(), samples })
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// Additive proxy `m * TVD(theta = 1 - delta)` for the whole circuit.
pub fn circuit_tvd_proxy<R: Rng + ?Sized>(m: usize, n: usize, delta: f64, samples: usize, rng: &mut R) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(m as f64 * estimate_tvd(n, 1.0 - delta, samples, rng)?.value)
}

/// Result of a goodness-of-fit test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square against expected counts. Cells are pooled in order
/// until each pooled cell expects at least 5 counts.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> GofResult {
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let statistic: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pooled.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic);
    GofResult { statistic, dof, p_value }
}

/// One-sample Kolmogorov-Smirnov test against uniform `[0, 1]` with the
/// asymptotic Kolmogorov distribution.
pub fn ks_uniform(samples: &[f64]) -> GofResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            f64::max((i as f64 + 1.0) / n - x, x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    GofResult { statistic: d, dof: xs.len(), p_value: kolmogorov_survival(lambda) }
}

/// `P(K > lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phase_map_examples() {
        for r in [-3.0, -1.0, 0.2, 2.9] {
            assert!((phase_map(r, 1.0) - r).abs() < 1e-15);
            assert_eq!(phase_map(r, 0.0), 0.0);
        }
        assert!((phase_map(PI / 2.0, 0.5) - 0.927295218).abs() < 1e-9);
    }

    #[test]
    fn jacobian_examples() {
        for r in [-2.0, 0.0, 1.5] {
            assert!((jacobian_factor(r, 1.0) - 1.0).abs() < 1e-15);
        }
        assert!((jacobian_factor(0.0, 0.8) - 1.0 / 0.8).abs() < 1e-15);
        let theta = 0.9;
        let h = 1e-6;
        for nu in [-2.5, -0.4, 0.0, 1.1, 3.0] {
            let fd = (inverse_phase_map(nu + h, theta) - inverse_phase_map(nu - h, theta)) / (2.0 * h);
            let r = inverse_phase_map(nu, theta);
            assert!((fd - jacobian_factor(r, theta)).abs() < 1e-6);
        }
    }

    #[test]
    fn weyl_examples() {
        assert_eq!(weyl_density(&[0.3, 0.3]), 0.0);
        assert!((weyl_density(&[0.0, PI]) - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((weyl_density(&[0.0, PI]) - 0.050660).abs() < 1e-6);
    }

    #[test]
    fn densities_normalize() {
        assert!((integrate_torus2(400, |x, y| weyl_density(&[x, y])) - 1.0).abs() < 1e-4);
        assert!((integrate_torus2(400, |x, y| deformed_density(&[x, y], 0.95)) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn deformed_equals_weyl_at_one() {
        for p in [[0.1, -2.0], [1.0, 3.0]] {
            assert!((deformed_density(&p, 1.0) - weyl_density(&p)).abs() < 1e-15);
        }
    }

    #[test]
    fn tvd_at_one_vanishes_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(estimate_tvd(2, 1.0, 1000, &mut rng).unwrap().value < 1e-10);
        let far = estimate_tvd(2, 0.5, 1000, &mut rng).unwrap().value;
        let near = estimate_tvd(2, 0.99, 1000, &mut rng).unwrap().value;
        assert!(far > near);
        assert!(matches!(estimate_tvd(3, 0.9, 1000, &mut rng), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn proxy_is_linear_in_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(circuit_tvd_proxy(5, 2, 0.0, 1000, &mut rng).unwrap(), 0.0);
        let a = circuit_tvd_proxy(4, 2, 0.01, 1000, &mut rng).unwrap();
        let b = circuit_tvd_proxy(8, 2, 0.01, 1000, &mut rng).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let r = chi_square(&[10.0, 1.0, 2.0, 3.0, 12.0], &[10.0, 1.5, 1.5, 3.0, 12.0]);
        assert_eq!(r.dof, 2);
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn kolmogorov_tail() {
        // Classical critical value: P(K > 1.628) ~ 0.01.
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 5e-4);
    }
}
