use crate::error::{Error, Result};

use super::{Field, Polynomial, RationalFunction, SamplePoint};

/// Largest node modulus accepted by the floating-point fitters.
pub const MAX_FLOAT_NODE: f64 = 1.5;

/// Tuning for the floating-point fitters; exact fields ignore it.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOptions {
    /// A sample agrees with a candidate when `|F(x_i) - f_i| <= rel_tol *
    /// max_j |f_j|`.
    pub rel_tol: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions { rel_tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceMode {
    Exact,
    Approximate,
}

/// A decoded rational function and how it sits against the samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded<F> {
    pub function: RationalFunction<F>,
    /// Sample indices the function disagrees with, ascending.
    pub error_positions: Vec<usize>,
    /// Number of samples the function agrees with.
    pub agreement: usize,
    /// Largest `|F(x_i) - f_i|` over the agreeing samples.
    pub max_residual: f64,
}

fn validate_nodes<F: Field>(points: &[SamplePoint<F>]) -> Result<()> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].node == points[j].node {
                return Err(Error::DuplicateNodes { first: i, second: j });
            }
        }
    }
    if !F::EXACT {
        let max_abs = points.iter().map(|p| p.node.magnitude()).fold(0.0, f64::max);
        if max_abs > MAX_FLOAT_NODE {
            return Err(Error::NodesNotPreconditioned { max_abs });
        }
    }
    Ok(())
}

/// Solves `Num(x_i) - v_i Den(x_i) = 0` with `deg Num <= d1`, `deg Den <= d2`.
fn kernel<F: Field>(points: &[SamplePoint<F>], values: &[F], d1: usize, d2: usize) -> Option<(Polynomial<F>, Polynomial<F>)> {
    let cols = d1 + d2 + 2;
    let mut a = Vec::with_capacity(points.len() * cols);
    for (p, v) in points.iter().zip(values) {
        let mut power = F::one();
        let mut powers = Vec::with_capacity(d1.max(d2) + 1);
        for _ in 0..=d1.max(d2) {
            powers.push(power.clone());
            power = power * p.node.clone();
        }
        a.extend(powers[..=d1].iter().cloned());
        a.extend(powers[..=d2].iter().map(|x| -(v.clone() * x.clone())));
    }
    let v = F::null_vector(&a, points.len(), cols)?;
    Some((Polynomial::new(v[..=d1].to_vec()), Polynomial::new(v[d1 + 1..].to_vec())))
}

fn data_scale<F: Field>(points: &[SamplePoint<F>]) -> f64 {
    let s = points.iter().map(|p| p.value.magnitude()).fold(0.0, f64::max);
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Scale as a field element: the power of two nearest `s`, so dividing by it
/// is exact.
fn scale_element<F: Field>(s: f64) -> F {
    let e = s.log2().round() as i32;
    let two = F::from_i64(2);
    let mut x = F::one();
    for _ in 0..e.unsigned_abs() {
        x = if e > 0 { x * two.clone() } else { x / two.clone() };
    }
    x
}

fn residual<F: Field>(f: &RationalFunction<F>, p: &SamplePoint<F>) -> f64 {
    match f.evaluate(&p.node) {
        Ok(v) => (v - p.value.clone()).magnitude(),
        Err(_) => f64::INFINITY,
    }
}

/// `(Num / g, Den / g)` with `g = gcd(Num, Den)` in exact mode; unchanged in
/// approximate mode, where callers validate the quotient by its agreement
/// with held-out samples instead.
pub fn reduce_common_factor<F: Field>(num: &Polynomial<F>, den: &Polynomial<F>, mode: ReduceMode) -> RationalFunction<F> {
    assert!(!den.is_zero(), "denominator is identically zero");
    match mode {
        ReduceMode::Exact => {
            let g = num.gcd(den);
            let (n, _) = num.div_rem(&g);
            let (d, _) = den.div_rem(&g);
            RationalFunction::new(n, d).expect("nonzero denominator").normalized()
        }
        ReduceMode::Approximate => RationalFunction::new(num.clone(), den.clone()).expect("nonzero denominator"),
    }
}

/// Exact-field decoding of a `(k1, k2)` function with up to `t` errors.
fn exact_decode<F: Field>(points: &[SamplePoint<F>], k1: usize, k2: usize, t: usize) -> std::result::Result<Decoded<F>, String> {
    let values: Vec<F> = points.iter().map(|p| p.value.clone()).collect();
    let (num, den) = kernel(points, &values, k1 + t, k2 + t).ok_or("the linear system has only the trivial solution")?;
    if den.is_zero() {
        return Err("the solution has a zero denominator".into());
    }
    let reduced = reduce_common_factor(&num, &den, ReduceMode::Exact);
    let (dn, dd) = (reduced.numerator().degree().unwrap_or(0), reduced.denominator().degree().unwrap_or(0));
    if dn > k1 || dd > k2 {
        return Err(format!("reduced function has degree ({dn}, {dd}), exceeding ({k1}, {k2})"));
    }
    let function = RationalFunction::new(
        reduced.numerator().trimmed().with_declared_degree(k1),
        reduced.denominator().trimmed().with_declared_degree(k2),
    )
    .expect("nonzero denominator")
    .normalized();
    let error_positions: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| match function.evaluate(&p.node) {
            Ok(v) => v != p.value,
            Err(_) => true,
        })
        .map(|(i, _)| i)
        .collect();
    if error_positions.len() > t {
        return Err(format!("function disagrees with {} samples, more than t = {t}", error_positions.len()));
    }
    Ok(Decoded { agreement: points.len() - error_positions.len(), error_positions, function, max_residual: 0.0 })
}

/// Least-squares kernel fit on `points`, values divided by `scale` before
/// solving and the numerator rescaled afterwards.
fn float_fit<F: Field>(points: &[SamplePoint<F>], k1: usize, k2: usize, scale: &F) -> Option<RationalFunction<F>> {
    let values: Vec<F> = points.iter().map(|p| p.value.clone() / scale.clone()).collect();
    let (num, den) = kernel(points, &values, k1, k2)?;
    RationalFunction::new(num.scale(scale), den).ok().map(|f| f.normalized())
}

fn assess<F: Field>(function: RationalFunction<F>, points: &[SamplePoint<F>], tol: f64) -> Decoded<F> {
    let residuals: Vec<f64> = points.iter().map(|p| residual(&function, p)).collect();
    let error_positions: Vec<usize> = (0..points.len()).filter(|&i| !(residuals[i] <= tol)).collect();
    let max_residual = residuals.iter().copied().filter(|r| *r <= tol).fold(0.0, f64::max);
    Decoded { agreement: points.len() - error_positions.len(), error_positions, function, max_residual }
}

/// Floating-point decoding: solve the error-locator system, take the `t`
/// samples where the denominator is smallest as suspects, refit on the rest,
/// then refit once more on everything the candidate agrees with.
fn float_decode<F: Field>(
    points: &[SamplePoint<F>],
    k1: usize,
    k2: usize,
    t: usize,
    opts: &DecodeOptions,
) -> std::result::Result<Decoded<F>, String> {
    let s = data_scale(points);
    let scale: F = scale_element(s);
    let tol = opts.rel_tol * s;
    let first = if t == 0 {
        float_fit(points, k1, k2, &scale)
    } else {
        let values: Vec<F> = points.iter().map(|p| p.value.clone() / scale.clone()).collect();
        let (_, den) = kernel(points, &values, k1 + t, k2 + t).ok_or("empty kernel")?;
        let mut order: Vec<usize> = (0..points.len()).collect();
        let size: Vec<f64> = points.iter().map(|p| den.eval(&p.node).magnitude()).collect();
        order.sort_by(|&a, &b| size[a].total_cmp(&size[b]).then(a.cmp(&b)));
        let mut keep: Vec<usize> = order[t..].to_vec();
        keep.sort_unstable();
        let kept: Vec<SamplePoint<F>> = keep.iter().map(|&i| points[i].clone()).collect();
        float_fit(&kept, k1, k2, &scale)
    }
    .ok_or("empty kernel")?;
    let candidate = assess(first, points, tol);
    if candidate.error_positions.len() > t {
        return Err(format!(
            "candidate disagrees with {} samples (tolerance {tol:e}), more than t = {t}",
            candidate.error_positions.len()
        ));
    }
    if candidate.error_positions.is_empty() {
        return Ok(candidate);
    }
    let agreeing: Vec<SamplePoint<F>> = (0..points.len())
        .filter(|i| !candidate.error_positions.contains(i))
        .map(|i| points[i].clone())
        .collect();
    let refit = float_fit(&agreeing, k1, k2, &scale).ok_or("empty kernel")?;
    let decoded = assess(refit, points, tol);
    if decoded.error_positions != candidate.error_positions {
        return Err(format!(
            "refit on the agreement set disagrees with {} samples",
            decoded.error_positions.len()
        ));
    }
    Ok(decoded)
}

/// Interpolates a `(k1, k2)` rational function through `points` via the
/// linearized system `f_i B(x_i) - A(x_i) = 0`.
pub fn fit_rational<F: Field>(points: &[SamplePoint<F>], k1: usize, k2: usize) -> Result<RationalFunction<F>> {
    fit_rational_with(points, k1, k2, &DecodeOptions::default()).map(|d| d.function)
}

pub fn fit_rational_with<F: Field>(points: &[SamplePoint<F>], k1: usize, k2: usize, opts: &DecodeOptions) -> Result<Decoded<F>> {
    validate_nodes(points)?;
    if points.len() < k1 + k2 + 1 {
        return Err(Error::InsufficientPoints { points: points.len(), bound: k1 + k2 });
    }
    let outcome = if F::EXACT { exact_decode(points, k1, k2, 0) } else { float_decode(points, k1, k2, 0, opts) };
    outcome.map_err(Error::DegenerateSystem)
}

/// Generalized Berlekamp-Welch: recovers a `(k1, k2)` rational function from
/// samples of which at most `t` are wrong. Requires more than `k1 + k2 + 2t`
/// samples, the count that makes the answer unique.
pub fn bw_decode<F: Field>(points: &[SamplePoint<F>], k1: usize, k2: usize, t: usize) -> Result<Decoded<F>> {
    bw_decode_with(points, k1, k2, t, &DecodeOptions::default())
}

pub fn bw_decode_with<F: Field>(
    points: &[SamplePoint<F>],
    k1: usize,
    k2: usize,
    t: usize,
    opts: &DecodeOptions,
) -> Result<Decoded<F>> {
    validate_nodes(points)?;
    let bound = k1 + k2 + 2 * t;
    if points.len() <= bound {
        return Err(Error::InsufficientPoints { points: points.len(), bound });
    }
    let outcome = if F::EXACT { exact_decode(points, k1, k2, t) } else { float_decode(points, k1, k2, t, opts) };
    outcome.map_err(Error::TooManyErrors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn poly(c: &[i64]) -> Polynomial<BigRational> {
        Polynomial::new(c.iter().map(|&x| q(x, 1)).collect())
    }

    fn sample(f: &RationalFunction<BigRational>, nodes: &[BigRational]) -> Vec<SamplePoint<BigRational>> {
        nodes.iter().map(|x| SamplePoint::new(x.clone(), f.evaluate(x).unwrap())).collect()
    }

    #[test]
    fn constant_fit() {
        let f = fit_rational(&[SamplePoint::new(q(1, 2), q(5, 1))], 0, 0).unwrap();
        assert_eq!(f.evaluate(&q(9, 1)).unwrap(), q(5, 1));
    }

    #[test]
    fn reciprocal_from_two_points() {
        let pts = vec![SamplePoint::new(q(0, 1), q(1, 1)), SamplePoint::new(q(1, 1), q(1, 2))];
        let f = fit_rational(&pts, 0, 1).unwrap();
        assert_eq!(f.numerator(), &poly(&[1]));
        assert_eq!(f.denominator(), &poly(&[1, 1]));
    }

    #[test]
    fn degree_one_two_exact_recovery() {
        let truth = RationalFunction::new(poly(&[1, 2]), poly(&[1, 0, 1])).unwrap();
        let nodes: Vec<BigRational> = [-2, -1, 0, 1, 3].iter().map(|&x| q(x, 3)).collect();
        let f = fit_rational(&sample(&truth, &nodes), 1, 2).unwrap();
        assert!(f.same_function(&truth));
        for k in 0..10 {
            let x = q(7 * k + 1, 5);
            assert_eq!(f.evaluate(&x).unwrap(), truth.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let pts = vec![SamplePoint::new(q(1, 1), q(1, 1)), SamplePoint::new(q(1, 1), q(2, 1))];
        assert!(matches!(fit_rational(&pts, 0, 0), Err(Error::DuplicateNodes { first: 0, second: 1 })));
    }

    #[test]
    fn inconsistent_data_is_degenerate() {
        let pts: Vec<_> = [(0, 1), (1, 2), (2, 7)].iter().map(|&(x, y)| SamplePoint::new(q(x, 1), q(y, 1))).collect();
        assert!(matches!(fit_rational(&pts, 1, 0), Err(Error::DegenerateSystem(_))));
    }

    #[test]
    fn bw_with_zero_errors_matches_fit() {
        let truth = RationalFunction::new(poly(&[1, 1]), poly(&[2, -1])).unwrap();
        let nodes: Vec<BigRational> = [-1, 0, 1, 3].iter().map(|&x| q(x, 1)).collect();
        let pts = sample(&truth, &nodes);
        let a = bw_decode(&pts, 1, 1, 0).unwrap();
        let b = fit_rational(&pts, 1, 1).unwrap();
        assert_eq!(a.function, b);
        assert!(a.error_positions.is_empty());
    }

    #[test]
    fn bw_corrects_one_error() {
        let truth = RationalFunction::new(poly(&[1, 1]), poly(&[2, -1])).unwrap();
        let nodes: Vec<BigRational> = [-3, -2, -1, 0, 1, 3, 4].iter().map(|&x| q(x, 1)).collect();
        let mut pts = sample(&truth, &nodes);
        pts[4].value = q(1234, 7);
        let d = bw_decode(&pts, 1, 1, 1).unwrap();
        assert!(d.function.same_function(&truth));
        assert_eq!(d.error_positions, vec![4]);
        for k in 0..10 {
            let x = q(2 * k + 11, 3);
            assert_eq!(d.function.evaluate(&x).unwrap(), truth.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn bw_never_accepts_a_wrong_answer_with_three_errors() {
        let truth = RationalFunction::new(poly(&[1, 1]), poly(&[2, -1])).unwrap();
        let nodes: Vec<BigRational> = [-3, -2, -1, 0, 1, 3, 4].iter().map(|&x| q(x, 1)).collect();
        let mut pts = sample(&truth, &nodes);
        pts[0].value = q(5, 1);
        pts[3].value = q(-9, 2);
        pts[5].value = q(100, 3);
        match bw_decode(&pts, 1, 1, 1) {
            Err(Error::TooManyErrors(_)) => {}
            Ok(d) => assert!(d.function.same_function(&truth), "accepted a wrong function"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn too_few_points_refused() {
        let pts: Vec<_> = (0..6).map(|x| SamplePoint::new(q(x, 1), q(1, 1))).collect();
        assert!(matches!(bw_decode(&pts, 1, 1, 2), Err(Error::InsufficientPoints { points: 6, bound: 6 })));
    }

    #[test]
    fn reduce_examples() {
        let f = reduce_common_factor(&poly(&[1, 2, 1]), &poly(&[1, 1]), ReduceMode::Exact);
        assert_eq!(f.numerator(), &poly(&[1, 1]));
        assert_eq!(f.denominator(), &poly(&[1]));
        let g = reduce_common_factor(&poly(&[1, 1]), &poly(&[2, 1]), ReduceMode::Exact);
        assert_eq!(g.numerator(), &poly(&[1, 1]));
        assert_eq!(g.denominator(), &poly(&[2, 1]));
        let e = poly(&[3, -1, 2]);
        let a = poly(&[1, 4]);
        let b = poly(&[-2, 0, 1]);
        let h = reduce_common_factor(&e.mul(&a), &e.mul(&b), ReduceMode::Exact);
        assert!(h.same_function(&RationalFunction::new(a, b).unwrap()));
        let p = reduce_common_factor(&poly(&[1, 2, 1]), &poly(&[1, 1]), ReduceMode::Approximate);
        assert_eq!(p.numerator(), &poly(&[1, 2, 1]));
    }

    #[test]
    fn float_nodes_must_be_preconditioned() {
        let pts = vec![SamplePoint::new(0.0, 1.0), SamplePoint::new(2.0, 1.0)];
        assert!(matches!(fit_rational(&pts, 1, 0), Err(Error::NodesNotPreconditioned { .. })));
    }

    #[test]
    fn float_bw_locates_planted_errors() {
        let truth = |x: f64| (1.0 + 0.5 * x - x * x) / (2.0 + 0.3 * x);
        let nodes: Vec<f64> = (0..15).map(|i| -1.0 + 2.0 * i as f64 / 14.0).collect();
        let mut pts: Vec<_> = nodes.iter().map(|&x| SamplePoint::new(x, truth(x))).collect();
        pts[2].value = 9.0;
        pts[11].value = -4.0;
        let d = bw_decode(&pts, 2, 1, 2).unwrap();
        assert_eq!(d.error_positions, vec![2, 11]);
        let y = d.function.evaluate(&0.123).unwrap();
        assert!((y - truth(0.123)).abs() < 1e-9);
    }

    #[test]
    fn float_scale_invariance() {
        let nodes: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let pts: Vec<_> = nodes.iter().map(|&x| SamplePoint::new(x, 1.0 / (3.0 - x))).collect();
        let scaled: Vec<_> = pts.iter().map(|p| SamplePoint::new(p.node, 1e6 * p.value)).collect();
        let a = fit_rational(&pts, 0, 1).unwrap().evaluate(&0.3).unwrap();
        let b = fit_rational(&scaled, 0, 1).unwrap().evaluate(&0.3).unwrap();
        assert!((b / a - 1e6).abs() < 1e-3);
    }
}
