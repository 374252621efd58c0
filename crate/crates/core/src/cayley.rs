//! Cayley transform and the per-gate Cayley path `C(theta) = C f(theta h)`.

use num_traits::One;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    haar_unitary, hermitian_eig, inverse, unitarity_residual, EigenDecomposition, Matrix,
};
use crate::scalar::{carg, cis, creal, Complex, Real};

/// Default distance from `+/-pi` below which an eigenphase is rejected.
pub const DEFAULT_BRANCH_GUARD: f64 = 1e-8;

/// Argument of the Cayley transform: a real number or the point at
/// `-infinity`, where `f` is defined to be `-1`.
#[derive(Clone, Debug, PartialEq)]
pub enum CayleyArg<T> {
    Finite(T),
    NegInfinity,
}

/// `f(x) = (1 + ix) / (1 - ix)`, with `f(-inf) = -1`.
pub fn cayley<T: Real>(x: &CayleyArg<T>) -> Complex<T> {
    match x {
        CayleyArg::Finite(x) => cayley_real(x),
        CayleyArg::NegInfinity => -Complex::<T>::one(),
    }
}

pub fn cayley_real<T: Real>(x: &T) -> Complex<T> {
    let num = Complex::new(T::one(), x.clone());
    let den = Complex::new(T::one(), -x.clone());
    num / den
}

/// Unitarity tolerance for gate preconditions, matching the file-load check.
pub const UNITARY_TOL: f64 = 1e-8;

/// Hermitian generator `h` with `f(h) = H`, returned as its eigendecomposition.
///
/// Eigenvectors come from `h = i (I - H)(I + H)^-1`; each eigenvalue is then
/// recomputed from the Rayleigh quotient phase `r = arg <psi|H|psi>` as
/// `tan(r / 2)`, which is more accurate than the resolvent's diagonal when
/// `I + H` is poorly conditioned.
pub fn cayley_inverse_unitary<T: Real>(h: &Matrix<T>, guard: &T) -> Result<EigenDecomposition<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", h.rows(), h.cols())));
    }
    let tol = T::from_f64(UNITARY_TOL);
    let residual = unitarity_residual(h);
    if residual > tol {
        return Err(Error::NotUnitary { residual: residual.to_f64(), tol: tol.to_f64() });
    }
    let n = h.dim();
    let identity = Matrix::<T>::identity(n);
    let limit = T::pi() - guard.clone();
    let branch_error = |phase: f64| Error::PhaseAtBranchPoint { phase, guard: guard.to_f64() };
    let resolvent = inverse(&identity.add(h)).ok_or_else(|| branch_error(std::f64::consts::PI))?;
    let i = Complex::new(T::zero(), T::one());
    let generator = identity.sub(h).matmul(&resolvent).scale(&i);
    if !generator.is_finite() {
        return Err(branch_error(std::f64::consts::PI));
    }
    let half = creal(T::from_f64(0.5));
    let hermitized = generator.add(&generator.adjoint()).scale(&half);
    let mut decomposition = hermitian_eig(&hermitized, &T::zero())?;
    for (a, value) in decomposition.eigenvalues.iter_mut().enumerate() {
        let psi = &decomposition.eigenvectors[a];
        let h_psi = h.mul_vec(psi);
        let quotient = crate::linalg::inner(psi, &h_psi);
        let phase = carg(&quotient);
        if phase.abs() > limit {
            return Err(branch_error(phase.to_f64()));
        }
        *value = (phase / T::two()).tan();
    }
    Ok(decomposition)
}

/// Polar data of the generator eigenvalues for the shifted coordinate
/// `theta = 1 + z`: `r = sqrt(1 + h^2)` and `u = atan(h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZFormFactors<T: Real> {
    pub moduli: Vec<T>,
    pub angles: Vec<T>,
}

impl<T: Real> ZFormFactors<T> {
    fn new(eigenvalues: &[T]) -> Self {
        ZFormFactors {
            moduli: eigenvalues.iter().map(|h| (T::one() + h.clone() * h.clone()).sqrt()).collect(),
            angles: eigenvalues.iter().map(Real::atan).collect(),
        }
    }
}

/// Numerators `p_a(theta)` and denominator `q(theta)` of `f(theta h)` in the
/// eigenbasis of `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFactors<T: Real> {
    pub numerators: Vec<Complex<T>>,
    pub denominator: Complex<T>,
}

/// A worst-case gate `C` together with the Cayley generator of its Haar
/// companion `H`; frozen at construction so every `theta` sees the same
/// instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CayleyGate<T: Real> {
    worst: Matrix<T>,
    companion: Matrix<T>,
    generator: EigenDecomposition<T>,
    /// `C |psi_a><psi_a|`
    branches: Vec<Matrix<T>>,
    zform: ZFormFactors<T>,
}

impl<T: Real> CayleyGate<T> {
    /// Pairs a worst gate with a companion unitary `H`, inverting the Cayley
    /// transform of `H`.
    pub fn new(worst: Matrix<T>, companion: Matrix<T>, guard: &T) -> Result<Self> {
        let generator = cayley_inverse_unitary(&companion, guard)?;
        Self::assemble(worst, Some(companion), generator)
    }

    /// Builds the gate from an explicit generator eigendecomposition; the
    /// companion is then `f(h)`.
    pub fn from_generator(worst: Matrix<T>, generator: EigenDecomposition<T>) -> Result<Self> {
        Self::assemble(worst, None, generator)
    }

    fn assemble(worst: Matrix<T>, companion: Option<Matrix<T>>, generator: EigenDecomposition<T>) -> Result<Self> {
        if !worst.is_square() || worst.dim() != generator.dim() {
            return Err(Error::DimensionMismatch(format!(
                "worst gate is {}x{}, generator has dimension {}",
                worst.rows(),
                worst.cols(),
                generator.dim()
            )));
        }
        let tol = T::from_f64(UNITARY_TOL);
        let residual = unitarity_residual(&worst);
        if residual > tol {
            return Err(Error::NotUnitary { residual: residual.to_f64(), tol: tol.to_f64() });
        }
        if generator.eigenvalues.iter().any(|h| !h.is_finite()) {
            return Err(Error::PhaseAtBranchPoint { phase: std::f64::consts::PI, guard: 0.0 });
        }
        let branches = (0..generator.dim()).map(|a| worst.matmul(&generator.projector(a))).collect();
        let companion = companion.unwrap_or_else(|| generator.apply_fn(cayley_real));
        let zform = ZFormFactors::new(&generator.eigenvalues);
        Ok(CayleyGate { worst, companion, generator, branches, zform })
    }

    /// Companion drawn from Haar measure, redrawn until its eigenphases clear
    /// the branch guard.
    pub fn with_haar_companion<R: Rng + ?Sized>(worst: Matrix<T>, rng: &mut R, guard: &T) -> Result<Self> {
        let n = worst.dim();
        loop {
            let companion = haar_unitary::<T, R>(n, rng);
            match Self::new(worst.clone(), companion, guard) {
                Err(Error::PhaseAtBranchPoint { .. }) => continue,
                other => return other,
            }
        }
    }

    /// Haar worst gate and Haar companion.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R, guard: &T) -> Self {
        let worst = haar_unitary::<T, R>(n, rng);
        Self::with_haar_companion(worst, rng, guard).expect("Haar samples are unitary")
    }

    pub fn dim(&self) -> usize {
        self.worst.dim()
    }

    pub fn worst_gate(&self) -> &Matrix<T> {
        &self.worst
    }

    pub fn companion(&self) -> &Matrix<T> {
        &self.companion
    }

    pub fn generator(&self) -> &EigenDecomposition<T> {
        &self.generator
    }

    pub fn zform(&self) -> &ZFormFactors<T> {
        &self.zform
    }

    /// `C f(theta h) = sum_a f(theta h_a) C |psi_a><psi_a|`; `C` itself at 0.
    pub fn gate_at(&self, theta: &T) -> Matrix<T> {
        if theta.is_zero() {
            return self.worst.clone();
        }
        let weights: Vec<Complex<T>> =
            self.generator.eigenvalues.iter().map(|h| cayley_real(&(theta.clone() * h.clone()))).collect();
        self.combine(&weights)
    }

    /// `q(theta) = prod_a (1 - i theta h_a)` and
    /// `p_a(theta) = (1 + i theta h_a) prod_{b != a} (1 - i theta h_b)`.
    pub fn local_factors(&self, theta: &T) -> LocalFactors<T> {
        let minus: Vec<Complex<T>> =
            self.generator.eigenvalues.iter().map(|h| Complex::new(T::one(), -(theta.clone() * h.clone()))).collect();
        let denominator = minus.iter().fold(Complex::one(), |acc: Complex<T>, z| acc * z.clone());
        let numerators = self
            .generator
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(a, h)| {
                let plus = Complex::new(T::one(), theta.clone() * h.clone());
                minus
                    .iter()
                    .enumerate()
                    .filter(|&(b, _)| b != a)
                    .fold(plus, |acc, (_, z)| acc * z.clone())
            })
            .collect();
        LocalFactors { numerators, denominator }
    }

    /// `q^-1 sum_a p_a C |psi_a><psi_a|`
    pub fn from_factors(&self, factors: &LocalFactors<T>) -> Matrix<T> {
        let weights: Vec<Complex<T>> =
            factors.numerators.iter().map(|p| p.clone() / factors.denominator.clone()).collect();
        self.combine(&weights)
    }

    /// `q(theta)` only.
    pub fn q(&self, theta: &T) -> Complex<T> {
        self.generator
            .eigenvalues
            .iter()
            .fold(Complex::one(), |acc, h| acc * Complex::new(T::one(), -(theta.clone() * h.clone())))
    }

    /// Gate at `theta = 1 + z` through the polar factors, each branch weight
    /// being `(e^{iu} + i z h / r) / (e^{-iu} - i z h / r)`.
    pub fn gate_at_z(&self, z: &T) -> Matrix<T> {
        let weights: Vec<Complex<T>> = (0..self.dim()).map(|a| {
            let (num, den) = self.z_branch(a, z);
            num / den
        }).collect();
        self.combine(&weights)
    }

    /// `q(1 + z) / prod_a r_a = prod_a (e^{-iu_a} - i z h_a / r_a)`, whose
    /// modulus squared is `prod_a (1 + (2z + z^2) h_a^2 / r_a^2)`.
    pub fn q_z(&self, z: &T) -> Complex<T> {
        (0..self.dim()).fold(Complex::one(), |acc, a| acc * self.z_branch(a, z).1)
    }

    fn z_branch(&self, a: usize, z: &T) -> (Complex<T>, Complex<T>) {
        let h = &self.generator.eigenvalues[a];
        let u = &self.zform.angles[a];
        let shift = z.clone() * h.clone() / self.zform.moduli[a].clone();
        let e = cis(u);
        let num = Complex::new(e.re.clone(), e.im.clone() + shift.clone());
        let den = Complex::new(e.re, -e.im - shift);
        (num, den)
    }

    fn combine(&self, weights: &[Complex<T>]) -> Matrix<T> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (branch, w) in self.branches.iter().zip(weights) {
            out = out.add(&branch.scale(w));
        }
        out
    }

    /// Same worst gate with the generator negated (`h -> -h`).
    pub fn negated(&self) -> Self {
        let mut generator = self.generator.clone();
        for h in generator.eigenvalues.iter_mut() {
            *h = -h.clone();
        }
        Self::from_generator(self.worst.clone(), generator).expect("negation preserves validity")
    }

    /// Entrywise conjugate path: `conj(C f(theta h)) = conj(C) f(-theta conj(h))`.
    pub fn conjugated(&self) -> Self {
        let mut generator = self.generator.clone();
        for h in generator.eigenvalues.iter_mut() {
            *h = -h.clone();
        }
        for v in generator.eigenvectors.iter_mut() {
            for z in v.iter_mut() {
                *z = z.conj();
            }
        }
        let worst = Matrix::from_fn(self.dim(), self.dim(), |i, j| self.worst[(i, j)].conj());
        Self::from_generator(worst, generator).expect("conjugation preserves validity")
    }

    /// Re-expresses the gate at another precision. The worst gate is
    /// re-projected onto the unitary group and the generator eigenvectors are
    /// re-orthonormalized at the target precision; eigenvalues carry over, so
    /// the companion becomes `f(h)` of the converted generator.
    pub fn convert<U: Real>(&self) -> CayleyGate<U> {
        let worst = crate::linalg::reunitarize(&self.worst.convert::<U>());
        let mut generator = self.generator.convert::<U>();
        generator.reorthonormalize();
        CayleyGate::from_generator(worst, generator).expect("conversion preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_residual;
    use crate::scalar::F256;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn guard() -> f64 {
        DEFAULT_BRANCH_GUARD
    }

    #[test]
    fn cayley_special_values() {
        assert_eq!(cayley(&CayleyArg::Finite(0.0)), c(1.0, 0.0));
        let i = cayley(&CayleyArg::Finite(1.0));
        assert!((i - c(0.0, 1.0)).norm() < 1e-16);
        assert_eq!(cayley::<f64>(&CayleyArg::NegInfinity), c(-1.0, 0.0));
    }

    #[test]
    fn cayley_has_unit_modulus() {
        for x in [-1e6, -3.0, -0.2, 0.0, 0.7, 42.0] {
            assert!((cayley_real(&x).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_of_identity_is_zero() {
        let e = cayley_inverse_unitary(&Matrix::<f64>::identity(2), &guard()).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0, 0.0]);
    }

    #[test]
    fn inverse_of_diag_i_minus_i() {
        let h = Matrix::diagonal(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let e = cayley_inverse_unitary(&h, &guard()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_rejects_branch_point() {
        let h = Matrix::diagonal(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(cayley_inverse_unitary(&h, &guard()), Err(Error::PhaseAtBranchPoint { .. })));
        let near = Matrix::diagonal(&[cis(&(std::f64::consts::PI - 1e-10)), c(1.0, 0.0)]);
        assert!(matches!(cayley_inverse_unitary(&near, &guard()), Err(Error::PhaseAtBranchPoint { .. })));
    }

    #[test]
    fn inverse_roundtrips_haar() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 4] {
            for _ in 0..50 {
                let h = haar_unitary::<f64, _>(n, &mut rng);
                let e = cayley_inverse_unitary(&h, &guard()).unwrap();
                assert!(e.apply_fn(cayley_real).max_abs_diff(&h) < 1e-12);
            }
        }
    }

    #[test]
    fn endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = CayleyGate::<f64>::sample(4, &mut rng, &guard());
        assert_eq!(g.gate_at(&0.0), *g.worst_gate());
        let ch = g.worst_gate().matmul(g.companion());
        assert!(g.gate_at(&1.0).max_abs_diff(&ch) < 1e-12);
        assert!(unitarity_residual(&g.gate_at(&0.37)) < 1e-12);
    }

    #[test]
    fn local_factors_at_zero_and_known_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = CayleyGate::<f64>::sample(2, &mut rng, &guard());
        let f = g.local_factors(&0.0);
        assert_eq!(f.denominator, c(1.0, 0.0));
        assert!(f.numerators.iter().all(|p| *p == c(1.0, 0.0)));

        let generator = EigenDecomposition {
            eigenvalues: vec![-1.0, 1.0],
            eigenvectors: vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        };
        let g = CayleyGate::from_generator(Matrix::identity(2), generator).unwrap();
        let q = g.local_factors(&1.0).denominator;
        assert!((q - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn factored_form_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 4] {
            let g = CayleyGate::<f64>::sample(n, &mut rng, &guard());
            let theta = 0.5;
            let direct = g.gate_at(&theta);
            assert!(g.from_factors(&g.local_factors(&theta)).max_abs_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn z_form_endpoints_and_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CayleyGate::<f64>::sample(4, &mut rng, &guard());
        assert!(g.gate_at_z(&0.0).max_abs_diff(&g.gate_at(&1.0)) < 1e-12);
        assert!(g.gate_at_z(&-1.0).max_abs_diff(g.worst_gate()) < 1e-12);
        assert!(g.gate_at_z(&0.01).max_abs_diff(&g.gate_at(&1.01)) < 1e-12);
    }

    #[test]
    fn q_z_modulus_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = CayleyGate::<f64>::sample(4, &mut rng, &guard());
        let z = -0.3;
        let expected: f64 = g
            .generator()
            .eigenvalues
            .iter()
            .map(|h| 1.0 + (2.0 * z + z * z) * h * h / (1.0 + h * h))
            .product();
        assert!((g.q_z(&z).norm_sqr() - expected).abs() < 1e-12);
        let norm: f64 = g.zform().moduli.iter().product();
        assert!((g.q(&(1.0 + z)) / norm - g.q_z(&z)).norm() < 1e-12);
    }

    #[test]
    fn high_precision_gate_is_unitary_to_working_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = CayleyGate::<F256>::sample(4, &mut rng, &F256::from_f64(guard()));
        let res = unitarity_residual(&g.gate_at(&F256::from_f64(0.37)));
        assert!(res.to_f64() < 1e-70);
    }

    #[test]
    fn conversion_widens_without_losing_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = CayleyGate::<f64>::sample(2, &mut rng, &guard());
        let wide = g.convert::<F256>();
        assert!(unitarity_residual(&wide.gate_at(&F256::from_f64(0.8))).to_f64() < 1e-70);
        assert!(wide.gate_at(&F256::one()).to_f64().max_abs_diff(&g.gate_at(&1.0)) < 1e-12);
    }
}
