//! Worst-to-average reduction experiments.
//!
//! The oracle is sampled on a grid `theta_i = 1 + delta u_i` with `u_i` in
//! `[-1, 1]`, the samples are decoded as a low-degree function of `u`, and
//! the fit is extrapolated to `u* = -1 / delta`, the image of `theta = 0`
//! where the path sits on the worst-case circuit.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{cayley_real, CayleyGate, DEFAULT_BRANCH_GUARD};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::io::SampleRow;
use crate::interp::{bw_decode_with, fit_rational_with, DecodeOptions, Field, RationalFunction, SamplePoint};
use crate::linalg::{unitarity_residual, EigenDecomposition, Matrix};
use crate::scalar::{cis, Complex, Real};

/// Corruption and noise applied to exact `p0` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    /// `floor(fraction L)` grid indices, chosen up front, return a uniform
    /// `[0, 1]` value instead of `p0`.
    Corrupt { fraction: f64 },
    /// `p0 + U(-eps, eps)` at every node.
    AdditiveNoise { eps: f64 },
    CorruptAndNoise { fraction: f64, eps: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    #[serde(flatten)]
    pub kind: OracleKind,
    pub seed: u64,
}

impl OracleModel {
    pub fn exact() -> Self {
        OracleModel { kind: OracleKind::Exact, seed: 0 }
    }

    pub fn corrupt(fraction: f64, seed: u64) -> Self {
        OracleModel { kind: OracleKind::Corrupt { fraction }, seed }
    }

    pub fn additive_noise(eps: f64, seed: u64) -> Self {
        OracleModel { kind: OracleKind::AdditiveNoise { eps }, seed }
    }

    pub fn corrupt_and_noise(fraction: f64, eps: f64, seed: u64) -> Self {
        OracleModel { kind: OracleKind::CorruptAndNoise { fraction, eps }, seed }
    }

    pub fn fraction(&self) -> f64 {
        match self.kind {
            OracleKind::Corrupt { fraction } | OracleKind::CorruptAndNoise { fraction, .. } => fraction,
            _ => 0.0,
        }
    }

    pub fn eps(&self) -> f64 {
        match self.kind {
            OracleKind::AdditiveNoise { eps } | OracleKind::CorruptAndNoise { eps, .. } => eps,
            _ => 0.0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OracleModel { kind: self.kind.clone(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fraction();
        if !(0.0..1.0).contains(&f) {
            return Err(Error::InvalidConfig(format!("corruption fraction must lie in [0, 1), got {f}")));
        }
        let eps = self.eps();
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise eps must be finite and non-negative, got {eps}")));
        }
        Ok(())
    }
}

/// Oracle prepared for a grid of fixed size: corrupted indices, their
/// garbage values and the noise draws are all fixed by the model seed.
pub struct Oracle<'a, T: Real> {
    circuit: &'a Circuit<T>,
    corrupted: Vec<(usize, f64)>,
    noise: Vec<f64>,
    eps: T,
}

pub fn make_oracle<'a, T: Real>(circuit: &'a Circuit<T>, model: &OracleModel, points: usize) -> Result<Oracle<'a, T>> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let count = (model.fraction() * points as f64 + 1e-9).floor() as usize;
    let mut chosen = sample_indices(&mut rng, points, count.min(points)).into_vec();
    chosen.sort_unstable();
    let corrupted = chosen.into_iter().map(|i| (i, rng.gen::<f64>())).collect();
    let eps = model.eps();
    let noise = if eps > 0.0 { (0..points).map(|_| rng.gen_range(-1.0..1.0)).collect() } else { Vec::new() };
    Ok(Oracle { circuit, corrupted, noise, eps: T::from_f64(eps) })
}

impl<T: Real> Oracle<'_, T> {
    /// Value returned for grid index `index` at parameter `theta`.
    pub fn call(&self, index: usize, theta: &T) -> T {
        if let Ok(k) = self.corrupted.binary_search_by_key(&index, |c| c.0) {
            return T::from_f64(self.corrupted[k].1);
        }
        let exact = self.circuit.p0(theta);
        match self.noise.get(index) {
            Some(&x) => exact + self.eps.clone() * T::from_f64(x),
            None => exact,
        }
    }

    /// Calls the oracle at every node; nodes are evaluated in parallel.
    pub fn sample_grid(&self, thetas: &[T]) -> Vec<T> {
        thetas.par_iter().enumerate().map(|(i, th)| self.call(i, th)).collect()
    }

    pub fn corrupted_indices(&self) -> Vec<usize> {
        self.corrupted.iter().map(|c| c.0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    UniformSpaced,
    UniformRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Fit `|Q(theta)|^2 p0(theta)`, a polynomial of degree `2 sum_k N_k`.
    Polynomial,
    /// Fit `p0` itself as a `(2 sum_k N_k, 2 sum_k N_k)` rational function.
    Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub delta: f64,
    #[serde(rename = "L")]
    pub points: usize,
    pub t: usize,
    pub grid: GridKind,
    pub precision_bits: u32,
    pub degree_mode: DegreeMode,
    /// Seeds the random grid and companion redraws.
    pub seed: u64,
    /// Agreement tolerance relative to the largest sample.
    pub rel_tol: f64,
    /// Independent companion draws; the median estimate is reported.
    pub repetitions: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            delta: 0.5,
            points: 40,
            t: 0,
            grid: GridKind::UniformSpaced,
            precision_bits: 512,
            degree_mode: DegreeMode::Polynomial,
            seed: 0,
            rel_tol: 1e-6,
            repetitions: 1,
        }
    }
}

/// Every fifth clean node is held out for validation.
pub const HOLDOUT_STRIDE: usize = 5;

impl ReductionConfig {
    /// `(k1, k2)` for a circuit whose placements have dimensions `N_k`.
    pub fn degrees(&self, degree_sum: usize) -> (usize, usize) {
        let d = 2 * degree_sum;
        match self.degree_mode {
            DegreeMode::Polynomial => (d, 0),
            DegreeMode::Rational => (d, d),
        }
    }

    /// Checks the invariants and returns `(k1, k2)`.
    pub fn validate(&self, degree_sum: usize) -> Result<(usize, usize)> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        let (k1, k2) = self.degrees(degree_sum);
        let bound = k1 + k2 + 2 * self.t;
        if self.points <= bound {
            return Err(Error::InvalidConfig(format!(
                "L = {} is too small: decoding needs L > k1 + k2 + 2t = {k1} + {k2} + 2*{} = {bound}",
                self.points, self.t
            )));
        }
        let clean = self.points - self.t;
        let training = clean - clean / HOLDOUT_STRIDE;
        if training < k1 + k2 + 1 {
            return Err(Error::InvalidConfig(format!(
                "L = {} leaves {training} fitting nodes after removing t = {} suspects and every {HOLDOUT_STRIDE}th node for validation; need {}",
                self.points,
                self.t,
                k1 + k2 + 1
            )));
        }
        Ok((k1, k2))
    }

    /// Grid in the rescaled coordinate `u`, ascending.
    pub fn nodes<T: Real>(&self) -> Vec<T> {
        let l = self.points as i64;
        match self.grid {
            GridKind::UniformSpaced => (0..l).map(|i| T::from_ratio(2 * i - (l - 1), l - 1)).collect(),
            GridKind::UniformRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut u: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                u.sort_by(f64::total_cmp);
                u.into_iter().map(T::from_f64).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Decoded,
    DecodeFailed,
    PrecisionInsufficient,
}

impl DecodeStatus {
    /// Process exit code for the status.
    pub fn exit_code(self) -> i32 {
        match self {
            DecodeStatus::Decoded => 0,
            DecodeStatus::DecodeFailed => 2,
            DecodeStatus::PrecisionInsufficient => 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionDiagnostics {
    pub node_min: f64,
    pub node_max: f64,
    /// `u* = -1 / delta`
    pub target_u: f64,
    /// `T_d(|u*|)`, the growth of a degree-`k1` polynomial bounded by one on
    /// `[-1, 1]`.
    pub chebyshev_amplification: f64,
    /// Agreement tolerance in sample units.
    pub tolerance: f64,
    pub fit_max_residual: f64,
    pub holdout_count: usize,
    pub holdout_max_residual: Option<f64>,
    pub max_q_squared: f64,
    pub min_q_squared: f64,
    /// Sup of the oracle noise in the fitted quantity, used for the Paturi
    /// bound.
    pub paturi_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub estimated_p0_at_0: Option<f64>,
    pub true_p0_at_0: f64,
    pub abs_error: Option<f64>,
    pub decode_status: DecodeStatus,
    pub corrupted_indices: Vec<usize>,
    pub detected_indices: Vec<usize>,
    /// Nodes the final fit agrees with, `|Theta|`.
    pub agreement: usize,
    pub degrees: (usize, usize),
    pub condition_diagnostics: ConditionDiagnostics,
    pub log2_paturi_bound: Option<f64>,
    pub paturi_bound_at_minus_1: f64,
    /// Estimates from each repetition, when more than one was run.
    pub repetition_estimates: Vec<f64>,
    pub backend: String,
    pub config: ReductionConfig,
    pub model: OracleModel,
    pub decode_detail: String,
    /// Per-node samples, written separately as CSV.
    #[serde(skip)]
    pub samples: Vec<SampleRow>,
}

pub fn backend_name<T: Real>() -> String {
    if T::BITS == 53 {
        "f64".into()
    } else {
        format!("mpfr-{}", T::BITS)
    }
}

/// Runs the reduction, with median aggregation over `config.repetitions`
/// companion draws. Repetition `r > 0` redraws every companion from seed
/// `config.seed + r` and uses oracle seed `model.seed + r`.
///
/// Decoding failures are returned as [`Error::DecodeFailed`] or
/// [`Error::PrecisionInsufficient`] carrying the full report.
pub fn run_reduction<T: Real + Field>(circuit: &Circuit<T>, config: &ReductionConfig, model: &OracleModel) -> Result<ReductionReport> {
    if config.repetitions <= 1 {
        return run_once(circuit, config, model);
    }
    config.validate(circuit.architecture().degree_sum())?;
    let mut reports = Vec::with_capacity(config.repetitions);
    let mut failure = None;
    for r in 0..config.repetitions as u64 {
        let redrawn;
        let c = if r == 0 {
            circuit
        } else {
            redrawn = redraw_companions(circuit, config.seed.wrapping_add(r))?;
            &redrawn
        };
        match run_once(c, config, &model.with_seed(model.seed.wrapping_add(r))) {
            Ok(rep) => reports.push(rep),
            Err(e @ (Error::DecodeFailed(_) | Error::PrecisionInsufficient(_))) => {
                failure.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if 2 * reports.len() <= config.repetitions {
        return Err(failure.expect("a repetition failed"));
    }
    let estimates: Vec<f64> = reports.iter().map(|r| r.estimated_p0_at_0.expect("decoded")).collect();
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| estimates[a].total_cmp(&estimates[b]));
    let mut report = reports.swap_remove(order[(order.len() - 1) / 2]);
    report.repetition_estimates = estimates;
    Ok(report)
}

fn redraw_companions<T: Real>(circuit: &Circuit<T>, seed: u64) -> Result<Circuit<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guard = T::from_f64(DEFAULT_BRANCH_GUARD);
    let gates = circuit
        .gates()
        .iter()
        .map(|g| CayleyGate::with_haar_companion(g.worst_gate().clone(), &mut rng, &guard))
        .collect::<Result<Vec<_>>>()?;
    Circuit::new(circuit.architecture().clone(), gates)
}

fn chebyshev_growth(d: usize, x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        1.0
    } else {
        (d as f64 * x.acosh()).cosh()
    }
}

fn run_once<T: Real + Field>(circuit: &Circuit<T>, config: &ReductionConfig, model: &OracleModel) -> Result<ReductionReport> {
    let (k1, k2) = config.validate(circuit.architecture().degree_sum())?;
    if config.precision_bits != T::BITS {
        return Err(Error::InvalidConfig(format!(
            "precision_bits = {} but the backend carries {} bits",
            config.precision_bits,
            T::BITS
        )));
    }
    let delta = T::from_f64(config.delta);
    let nodes: Vec<T> = config.nodes();
    let thetas: Vec<T> = nodes.iter().map(|u| T::one() + delta.clone() * u.clone()).collect();
    let oracle = make_oracle(circuit, model, config.points)?;
    let mut values = oracle.sample_grid(&thetas);

    let q2: Vec<T> = thetas.par_iter().map(|th| circuit.q_product(th).norm_sqr()).collect();
    let max_q2 = q2.iter().map(Real::to_f64).fold(0.0, f64::max);
    let min_q2 = q2.iter().map(Real::to_f64).fold(f64::INFINITY, f64::min);
    let polynomial = config.degree_mode == DegreeMode::Polynomial;
    if polynomial {
        for (v, q) in values.iter_mut().zip(&q2) {
            *v = v.clone() * q.clone();
        }
    }
    let scale = values.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let paturi_eps = if polynomial { model.eps() * max_q2 } else { model.eps() };
    // Noise of size eps in the fitted quantity must not count as disagreement.
    let rel_tol = if scale > 0.0 { config.rel_tol + 2.0 * paturi_eps / scale } else { config.rel_tol };
    let opts = DecodeOptions { rel_tol };
    let tolerance = rel_tol * if scale > 0.0 { scale } else { 1.0 };
    let points: Vec<SamplePoint<T>> =
        nodes.iter().zip(&values).map(|(u, v)| SamplePoint::new(u.clone(), v.clone())).collect();

    let target = -(T::one() / delta);
    let paturi = paturi_bound(k1, config.delta, paturi_eps);
    let mut report = ReductionReport {
        estimated_p0_at_0: None,
        true_p0_at_0: circuit.worst_case_p0().to_f64(),
        abs_error: None,
        decode_status: DecodeStatus::DecodeFailed,
        corrupted_indices: oracle.corrupted_indices(),
        detected_indices: Vec::new(),
        agreement: 0,
        degrees: (k1, k2),
        condition_diagnostics: ConditionDiagnostics {
            node_min: nodes.first().map_or(0.0, Real::to_f64),
            node_max: nodes.last().map_or(0.0, Real::to_f64),
            target_u: target.to_f64(),
            chebyshev_amplification: chebyshev_growth(k1, target.to_f64()),
            tolerance,
            max_q_squared: max_q2,
            min_q_squared: min_q2,
            paturi_eps,
            ..Default::default()
        },
        log2_paturi_bound: paturi.log2.is_finite().then_some(paturi.log2),
        paturi_bound_at_minus_1: paturi.value,
        repetition_estimates: Vec::new(),
        backend: backend_name::<T>(),
        config: config.clone(),
        model: model.clone(),
        decode_detail: String::new(),
        samples: Vec::new(),
    };
    let corrupted = report.corrupted_indices.clone();
    let fill_samples = |report: &mut ReductionReport| {
        report.samples = (0..points.len())
            .map(|i| SampleRow {
                index: i,
                u: nodes[i].to_f64(),
                theta: thetas[i].to_f64(),
                value: values[i].to_f64(),
                corrupted: corrupted.binary_search(&i).is_ok(),
                detected: report.detected_indices.binary_search(&i).is_ok(),
            })
            .collect();
    };

    if config.t > 0 {
        match bw_decode_with(&points, k1, k2, config.t, &opts) {
            Ok(d) => report.detected_indices = d.error_positions,
            Err(Error::TooManyErrors(msg)) => {
                report.decode_detail = msg;
                fill_samples(&mut report);
                return Err(Error::DecodeFailed(Box::new(report)));
            }
            Err(e) => return Err(e),
        }
    }

    let clean: Vec<usize> = (0..points.len()).filter(|i| report.detected_indices.binary_search(i).is_err()).collect();
    let (holdout, training): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
        clean.iter().copied().enumerate().partition(|(j, _)| j % HOLDOUT_STRIDE == HOLDOUT_STRIDE - 1);
    let train_points: Vec<SamplePoint<T>> = training.iter().map(|&(_, i)| points[i].clone()).collect();
    report.condition_diagnostics.holdout_count = holdout.len();

    let fit = match fit_rational_with(&train_points, k1, k2, &opts) {
        Ok(fit) => fit,
        Err(Error::DegenerateSystem(msg)) => {
            report.decode_status = DecodeStatus::PrecisionInsufficient;
            report.decode_detail = format!("fit on the clean nodes failed: {msg}");
            fill_samples(&mut report);
            return Err(Error::PrecisionInsufficient(Box::new(report)));
        }
        Err(e) => return Err(e),
    };
    report.condition_diagnostics.fit_max_residual = fit.max_residual;
    let function = fit.function;

    let holdout_residual = holdout
        .iter()
        .map(|&(_, i)| match function.evaluate(&points[i].node) {
            Ok(v) => (v - points[i].value.clone()).to_f64().abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    report.condition_diagnostics.holdout_max_residual = (!holdout.is_empty()).then_some(holdout_residual);
    if !(holdout_residual <= tolerance) {
        report.decode_status = DecodeStatus::PrecisionInsufficient;
        report.decode_detail =
            format!("held-out residual {holdout_residual:e} exceeds tolerance {tolerance:e}");
        return Err(Error::PrecisionInsufficient(Box::new(report)));
    }
    report.agreement = clean.len();

    let estimate = match extrapolate(&function, &target, circuit, polynomial) {
        Ok(v) => v,
        Err(e) => {
            report.decode_status = DecodeStatus::PrecisionInsufficient;
            report.decode_detail = format!("extrapolation failed: {e}");
            fill_samples(&mut report);
            return Err(Error::PrecisionInsufficient(Box::new(report)));
        }
    };
    let truth = circuit.worst_case_p0();
    report.estimated_p0_at_0 = Some(estimate.to_f64());
    report.abs_error = Some((estimate - truth).abs().to_f64());
    report.decode_status = DecodeStatus::Decoded;
    report.decode_detail = format!("decoded with {} suspects removed", report.detected_indices.len());
    fill_samples(&mut report);
    Ok(report)
}

fn extrapolate<T: Real + Field>(function: &RationalFunction<T>, target: &T, circuit: &Circuit<T>, polynomial: bool) -> Result<T> {
    let value = function.evaluate(target)?;
    if polynomial {
        Ok(value / circuit.q_product(&T::zero()).norm_sqr())
    } else {
        Ok(value)
    }
}

/// A bound together with its base-2 logarithm; `value` saturates to
/// infinity where `log2` does not.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub log2: f64,
}

impl Bound {
    fn from_ln(eps: f64, ln_factor: f64) -> Self {
        if eps == 0.0 {
            return Bound { value: 0.0, log2: f64::NEG_INFINITY };
        }
        let ln = eps.ln() + ln_factor;
        let value = if ln_factor.abs() < 700.0 { eps * ln_factor.exp() } else { ln.exp() };
        Bound { value, log2: ln / std::f64::consts::LN_2 }
    }
}

/// `eps exp(2 d (1 + 1/delta))`: how far a degree-`d` polynomial bounded by
/// `eps` on `|z| <= delta` can reach at `z = -1`.
pub fn paturi_bound(d: usize, delta: f64, eps: f64) -> Bound {
    Bound::from_ln(eps, 2.0 * d as f64 * (1.0 + 1.0 / delta))
}

/// `eps exp(32 m (1 + 1/delta))`, with the `(1 + o(1))` factor taken as one.
pub fn robustness_bound(m: usize, delta: f64, eps: f64) -> Bound {
    Bound::from_ln(eps, 32.0 * m as f64 * (1.0 + 1.0 / delta))
}

/// Largest oracle error for which [`robustness_bound`] stays below `2^-n`:
/// `2^-n exp(-32 m (1 + 1/delta))`.
pub fn robustness_threshold(n: usize, m: usize, delta: f64) -> Bound {
    Bound::from_ln(2f64.powi(-(n as i32)), -32.0 * m as f64 * (1.0 + 1.0 / delta))
}

/// Note attached to robustness figures.
pub const ROBUSTNESS_NOTE: &str = "the (1 + o(1)) factor of the robustness bound is set to 1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    pub eps: f64,
    pub trials: usize,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub median_error: f64,
    pub degree: usize,
    /// Noise sup in the fitted quantity, `eps max |Q|^2` in polynomial mode.
    pub paturi_eps: f64,
    pub paturi_bound: f64,
    pub log2_paturi_bound: Option<f64>,
    /// `max_error / paturi_bound`; absent when the bound is zero.
    pub ratio: Option<f64>,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the reduction under `additive_noise(eps)` with oracle seeds
/// `config.seed + trial` and compares the extrapolation error with the
/// Paturi bound.
pub fn empirical_amplification<T: Real + Field>(
    circuit: &Circuit<T>,
    config: &ReductionConfig,
    eps: f64,
    trials: usize,
) -> Result<AmplificationReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let single = ReductionConfig { repetitions: 1, ..config.clone() };
    let mut errors = Vec::with_capacity(trials);
    let mut paturi_eps: f64 = 0.0;
    for trial in 0..trials as u64 {
        let model = OracleModel::additive_noise(eps, config.seed.wrapping_add(trial));
        let report = run_reduction(circuit, &single, &model)?;
        errors.push(report.abs_error.expect("decoded"));
        paturi_eps = paturi_eps.max(report.condition_diagnostics.paturi_eps);
    }
    let degree = config.degrees(circuit.architecture().degree_sum()).0;
    let bound = paturi_bound(degree, config.delta, paturi_eps);
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(AmplificationReport {
        eps,
        trials,
        median_error: median(&errors),
        max_error,
        errors,
        degree,
        paturi_eps,
        paturi_bound: bound.value,
        log2_paturi_bound: bound.log2.is_finite().then_some(bound.log2),
        ratio: (bound.value > 0.0).then(|| max_error / bound.value),
    })
}

/// Generator `r` of the geodesic `C H e^{-i r theta}`, which runs from `C H`
/// at `theta = 0` to `C` at `theta = 1`. `H = e^{i r}` on the principal
/// branch, read off the Cayley generator as `r = 2 atan(h)`.
pub fn geodesic_generator<T: Real>(gate: &CayleyGate<T>) -> EigenDecomposition<T> {
    let g = gate.generator();
    EigenDecomposition {
        eigenvalues: g.eigenvalues.iter().map(|h| T::two() * h.atan()).collect(),
        eigenvectors: g.eigenvectors.clone(),
    }
}

/// `sum_{k<=K} (-i r theta)^k / k!`
fn truncated_exp<T: Real>(r: &T, theta: &T, order: usize) -> Complex<T> {
    let x = Complex::new(T::zero(), -(r.clone() * theta.clone()));
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term.clone();
    for k in 1..=order {
        term = term * x.clone() / Complex::new(T::from_i64(k as i64), T::zero());
        sum += term.clone();
    }
    sum
}

/// `C H sum_{k<=K} (-i h theta)^k / k!` with `h` the geodesic generator.
pub fn truncated_gate<T: Real>(gate: &CayleyGate<T>, theta: &T, order: usize) -> Matrix<T> {
    let h = geodesic_generator(gate);
    let factor = h.apply_fn(|r| cis(r) * truncated_exp(r, theta, order));
    gate.worst_gate().matmul(&factor)
}

/// `C H e^{-i h theta}`, the untruncated geodesic.
pub fn geodesic_gate<T: Real>(gate: &CayleyGate<T>, theta: &T) -> Matrix<T> {
    let h = geodesic_generator(gate);
    let factor = h.apply_fn(|r| cis(&(r.clone() * (T::one() - theta.clone()))));
    gate.worst_gate().matmul(&factor)
}

/// Singular values of [`truncated_gate`], `|sum_{k<=K} (-i r_a theta)^k / k!|`.
pub fn truncated_singular_values<T: Real>(gate: &CayleyGate<T>, theta: &T, order: usize) -> Vec<T> {
    geodesic_generator(gate).eigenvalues.iter().map(|r| truncated_exp(r, theta, order).norm_sqr().sqrt()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub theta: f64,
    /// Operator-norm `|T^dagger T - I|` per gate, from the singular values.
    pub gate_residuals: Vec<f64>,
    /// Entrywise `|T^dagger T - I|` per gate, from the assembled matrices.
    pub gate_matrix_residuals: Vec<f64>,
    pub truncated_p0: f64,
    pub geodesic_p0: f64,
    pub amplitude_deviation: f64,
    /// `|p~0(theta) - p0(1 - theta)|` against the Cayley path, where the two
    /// paths share endpoints (`theta` in `{0, 1}`).
    pub endpoint_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub order: usize,
    /// `2 m K`
    pub truncated_degree: usize,
    /// `2 sum_k N_k`
    pub cayley_degree: usize,
    pub rows: Vec<TruncationRow>,
}

pub fn truncation_experiment<T: Real>(circuit: &Circuit<T>, thetas: &[f64], order: usize) -> Result<TruncationReport> {
    let mut rows = Vec::with_capacity(thetas.len());
    for &th in thetas {
        let theta = T::from_f64(th);
        let truncated: Vec<Matrix<T>> = circuit.gates().iter().map(|g| truncated_gate(g, &theta, order)).collect();
        let exact: Vec<Matrix<T>> = circuit.gates().iter().map(|g| geodesic_gate(g, &theta)).collect();
        let gate_residuals = circuit
            .gates()
            .iter()
            .map(|g| {
                truncated_singular_values(g, &theta, order)
                    .iter()
                    .map(|s| (s.clone() * s.clone() - T::one()).abs().to_f64())
                    .fold(0.0, f64::max)
            })
            .collect();
        let gate_matrix_residuals = truncated.iter().map(|m| unitarity_residual(m).to_f64()).collect();
        let truncated_p0 = circuit.run(&truncated)?.amplitudes()[0].norm_sqr();
        let geodesic_p0 = circuit.run(&exact)?.amplitudes()[0].norm_sqr();
        let endpoint_deviation = (th == 0.0 || th == 1.0)
            .then(|| (truncated_p0.clone() - circuit.p0(&(T::one() - theta.clone()))).abs().to_f64());
        rows.push(TruncationRow {
            theta: th,
            gate_residuals,
            gate_matrix_residuals,
            amplitude_deviation: (truncated_p0.clone() - geodesic_p0.clone()).abs().to_f64(),
            truncated_p0: truncated_p0.to_f64(),
            geodesic_p0: geodesic_p0.to_f64(),
            endpoint_deviation,
        });
    }
    Ok(TruncationReport {
        order,
        truncated_degree: 2 * circuit.m() * order,
        cayley_degree: 2 * circuit.architecture().degree_sum(),
        rows,
    })
}

/// Companion unitary of a gate as seen by the Cayley generator, `f(h)`.
pub fn generator_companion<T: Real>(gate: &CayleyGate<T>) -> Matrix<T> {
    gate.generator().apply_fn(cayley_real)
}
