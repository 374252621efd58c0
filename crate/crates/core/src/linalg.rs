//! Small dense complex linear algebra: Hermitian eigendecomposition, QR,
//! Ginibre and Haar sampling.
//!
//! Matrices here are tiny (gates are 2x2 or 4x4, fitting systems are a few
//! dozen columns), so every routine favours plain dense loops over blocking.

use std::ops::{Index, IndexMut, Mul};

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{cabs, cis, total_cmp, Complex, Real};

/// Maximum number of cyclic Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: &Complex<T>) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.clone() * s.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i).iter().zip(v).fold(Complex::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(cabs).fold(T::zero(), T::max_of)
    }

    /// Entrywise max-norm distance `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| cabs(&(a.clone() - b.clone()))).fold(T::zero(), T::max_of)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Elementwise backend conversion through the entries' `f64` value is
    /// lossy; use [`Matrix::convert`] for widening conversions.
    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| Complex::new(z.re.to_f64(), z.im.to_f64())).collect(),
        }
    }

    /// Converts between backends by rounding each component through its
    /// decimal-free `f64` value when narrowing, exactly when widening from
    /// `f64`.
    pub fn convert<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| Complex::new(U::from_f64(z.re.to_f64()), U::from_f64(z.im.to_f64()))).collect(),
        }
    }

    /// Kronecker-free check that every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

/// `max |M^dagger M - I|`
pub fn unitarity_residual<T: Real>(m: &Matrix<T>) -> T {
    let gram = m.adjoint().matmul(m);
    gram.max_abs_diff(&Matrix::identity(m.cols()))
}

/// `max |H - H^dagger|`
pub fn hermiticity_residual<T: Real>(h: &Matrix<T>) -> T {
    h.max_abs_diff(&h.adjoint())
}

/// Spectral decomposition of a Hermitian matrix, `H = sum_a h_a |psi_a><psi_a|`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition<T: Real> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Unit-norm columns `psi_a`, in eigenvalue order.
    pub eigenvectors: Vec<Vec<Complex<T>>>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `|psi_a><psi_a|`
    pub fn projector(&self, a: usize) -> Matrix<T> {
        let v = &self.eigenvectors[a];
        Matrix::from_fn(v.len(), v.len(), |i, j| v[i].clone() * v[j].conj())
    }

    /// `sum_a g(h_a) |psi_a><psi_a|`
    pub fn apply_fn(&self, mut g: impl FnMut(&T) -> Complex<T>) -> Matrix<T> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (a, h) in self.eigenvalues.iter().enumerate() {
            out = out.add(&self.projector(a).scale(&g(h)));
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.apply_fn(|h| Complex::new(h.clone(), T::zero()))
    }

    /// Gram matrix of the eigenvectors; identity for an orthonormal basis.
    pub fn gram(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |a, b| inner(&self.eigenvectors[a], &self.eigenvectors[b]))
    }

    /// Re-orthonormalizes the eigenvectors (modified Gram-Schmidt, two
    /// passes) at the working precision. Used after widening a decomposition
    /// computed at lower precision.
    pub fn reorthonormalize(&mut self) {
        let n = self.dim();
        for _pass in 0..2 {
            for a in 0..n {
                for b in 0..a {
                    let proj = inner(&self.eigenvectors[b], &self.eigenvectors[a]);
                    let (head, tail) = self.eigenvectors.split_at_mut(a);
                    for (x, y) in tail[0].iter_mut().zip(&head[b]) {
                        *x -= y.clone() * proj.clone();
                    }
                }
                normalize(&mut self.eigenvectors[a]);
            }
        }
    }

    pub fn convert<U: Real>(&self) -> EigenDecomposition<U> {
        EigenDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|h| U::from_f64(h.to_f64())).collect(),
            eigenvectors: self
                .eigenvectors
                .iter()
                .map(|v| v.iter().map(|z| Complex::new(U::from_f64(z.re.to_f64()), U::from_f64(z.im.to_f64()))).collect())
                .collect(),
        }
    }

    /// Sorts ascending and fixes each eigenvector's phase so that its leading
    /// non-negligible component is real and positive.
    fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| total_cmp(&self.eigenvalues[a], &self.eigenvalues[b]));
        self.eigenvalues = order.iter().map(|&a| self.eigenvalues[a].clone()).collect();
        self.eigenvectors = order.iter().map(|&a| self.eigenvectors[a].clone()).collect();
        let cutoff = T::epsilon().sqrt();
        for v in &mut self.eigenvectors {
            if let Some(lead) = v.iter().find(|z| cabs(z) > cutoff).cloned() {
                let phase = lead.clone() / Complex::new(cabs(&lead), T::zero());
                let unphase = phase.conj();
                for z in v.iter_mut() {
                    *z = z.clone() * unphase.clone();
                }
            }
        }
    }
}

/// `<a|b>` (conjugate-linear in the first slot).
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y.clone())
}

pub fn vec_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

fn normalize<T: Real>(v: &mut [Complex<T>]) {
    let norm = vec_norm(v);
    if !norm.is_zero() {
        for z in v.iter_mut() {
            *z = z.clone() / Complex::new(norm.clone(), T::zero());
        }
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Dimension 2 uses the closed form from trace and determinant; larger
/// matrices use cyclic complex Jacobi rotations. The input must be Hermitian
/// to within `tol` in max-norm; it is symmetrized before diagonalizing.
pub fn hermitian_eig<T: Real>(h: &Matrix<T>, tol: &T) -> Result<EigenDecomposition<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", h.rows(), h.cols())));
    }
    let deviation = hermiticity_residual(h);
    if deviation > *tol {
        return Err(Error::NotHermitian { deviation: deviation.to_f64(), tol: tol.to_f64() });
    }
    let half = T::from_f64(0.5);
    let sym = h.add(&h.adjoint()).scale(&Complex::new(half, T::zero()));
    let mut decomposition = match sym.dim() {
        1 => EigenDecomposition { eigenvalues: vec![sym[(0, 0)].re.clone()], eigenvectors: vec![vec![Complex::one()]] },
        2 => eig2(&sym),
        _ => jacobi_eig(&sym)?,
    };
    decomposition.canonicalize();
    Ok(decomposition)
}

fn eig2<T: Real>(h: &Matrix<T>) -> EigenDecomposition<T> {
    let a = h[(0, 0)].re.clone();
    let d = h[(1, 1)].re.clone();
    let b = h[(0, 1)].clone();
    if b.is_zero() {
        return EigenDecomposition {
            eigenvalues: vec![a, d],
            eigenvectors: vec![
                vec![Complex::one(), Complex::zero()],
                vec![Complex::zero(), Complex::one()],
            ],
        };
    }
    let half = T::from_f64(0.5);
    let mean = (a.clone() + d.clone()) * half.clone();
    let diff = (a.clone() - d.clone()) * half;
    let radius = (diff.clone() * diff + b.norm_sqr()).sqrt();
    let lambdas = [mean.clone() - radius.clone(), mean + radius];
    let eigenvectors = lambdas
        .iter()
        .map(|lambda| {
            // Null vectors of the first and second rows of (H - lambda I);
            // keep the one with the larger norm.
            let from_first = vec![b.clone(), Complex::new(lambda.clone() - a.clone(), T::zero())];
            let from_second = vec![Complex::new(lambda.clone() - d.clone(), T::zero()), b.conj()];
            let mut v = if vec_norm(&from_first) >= vec_norm(&from_second) { from_first } else { from_second };
            normalize(&mut v);
            v
        })
        .collect();
    EigenDecomposition { eigenvalues: lambdas.to_vec(), eigenvectors }
}

fn jacobi_eig<T: Real>(h: &Matrix<T>) -> Result<EigenDecomposition<T>> {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = Matrix::<T>::identity(n);
    let scale = T::max_of(a.frobenius(), T::from_f64(f64::MIN_POSITIVE));
    let threshold = T::epsilon() * T::from_i64(4 * n as i64) * scale;

    let off_norm = |m: &Matrix<T>| {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= threshold {
            let eigenvalues = (0..n).map(|i| a[(i, i)].re.clone()).collect();
            let eigenvectors = (0..n).map(|j| v.column(j)).collect();
            return Ok(EigenDecomposition { eigenvalues, eigenvectors });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)].clone();
                let magnitude = cabs(&apq);
                if magnitude.is_zero() {
                    continue;
                }
                // Phase-rotate column q so the (p, q) entry is real, then
                // apply a real Jacobi rotation.
                let phase = apq.clone() / Complex::new(magnitude.clone(), T::zero());
                let app = a[(p, p)].re.clone();
                let aqq = a[(q, q)].re.clone();
                let tau = (aqq - app) / (T::two() * magnitude);
                let t = {
                    let denom = tau.abs() + (T::one() + tau.clone() * tau.clone()).sqrt();
                    if tau < T::zero() {
                        -(T::one() / denom)
                    } else {
                        T::one() / denom
                    }
                };
                let c = T::one() / (T::one() + t.clone() * t.clone()).sqrt();
                let s = t * c.clone();
                let mut g = Matrix::<T>::identity(n);
                let cc = Complex::new(c, T::zero());
                let sc = Complex::new(s, T::zero());
                g[(p, p)] = cc.clone();
                g[(p, q)] = sc.clone();
                g[(q, p)] = -(sc * phase.conj());
                g[(q, q)] = cc * phase.conj();
                a = g.adjoint().matmul(&a).matmul(&g);
                a[(p, q)] = Complex::zero();
                a[(q, p)] = Complex::zero();
                v = v.matmul(&g);
            }
        }
    }
    Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS })
}

/// Householder QR of an `m x p` matrix, `A = Q R` with `Q` unitary `m x m`
/// and `R` upper-trapezoidal `m x p`.
pub fn householder_qr<T: Real>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let m = a.rows();
    let p = a.cols();
    let mut r = a.clone();
    let mut q = Matrix::<T>::identity(m);
    for k in 0..p.min(m) {
        let x: Vec<Complex<T>> = (k..m).map(|i| r[(i, k)].clone()).collect();
        let norm_x = vec_norm(&x);
        if norm_x.is_zero() {
            continue;
        }
        let lead_abs = cabs(&x[0]);
        let lead_phase = if lead_abs.is_zero() { Complex::one() } else { x[0].clone() / Complex::new(lead_abs, T::zero()) };
        let alpha = -(lead_phase * Complex::new(norm_x, T::zero()));
        let mut v = x;
        v[0] = v[0].clone() - alpha;
        let v_norm = vec_norm(&v);
        if v_norm.is_zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = z.clone() / Complex::new(v_norm.clone(), T::zero());
        }
        let two = Complex::new(T::two(), T::zero());
        // R <- (I - 2 v v^H) R on rows k.., Q <- Q (I - 2 v v^H) on cols k..
        for j in 0..p {
            let dot = (k..m).fold(Complex::<T>::zero(), |acc, i| acc + v[i - k].conj() * r[(i, j)].clone());
            let dot = dot * two.clone();
            for i in k..m {
                let upd = v[i - k].clone() * dot.clone();
                r[(i, j)] -= upd;
            }
        }
        for i in 0..m {
            let dot = (k..m).fold(Complex::<T>::zero(), |acc, j| acc + q[(i, j)].clone() * v[j - k].clone());
            let dot = dot * two.clone();
            for j in k..m {
                let upd = dot.clone() * v[j - k].conj();
                q[(i, j)] -= upd;
            }
        }
        for i in (k + 1)..m {
            r[(i, k)] = Complex::zero();
        }
    }
    (q, r)
}

/// Right singular vector for the smallest singular value of `a` (`m >= p`
/// rows), by Householder QR followed by inverse iteration on `R^H R`.
pub fn smallest_right_singular_vector<T: Real>(a: &Matrix<T>) -> Vec<Complex<T>> {
    let p = a.cols();
    let (_, r_full) = householder_qr(a);
    let mut r = Matrix::<T>::from_fn(p, p, |i, j| if i < r_full.rows() { r_full[(i, j)].clone() } else { Complex::zero() });
    // Clamp vanishing pivots so the triangular solves stay finite; the
    // iteration then converges onto the corresponding null direction.
    let floor = T::max_of(r.max_abs() * T::epsilon(), T::from_f64(f64::MIN_POSITIVE));
    for i in 0..p {
        if cabs(&r[(i, i)]) < floor {
            r[(i, i)] = Complex::new(floor.clone(), T::zero());
        }
    }
    let mut x: Vec<Complex<T>> = (0..p).map(|i| Complex::new(T::one() + T::from_ratio(i as i64, 7 * p as i64), T::zero())).collect();
    normalize(&mut x);
    for _ in 0..12 {
        // Solve R^H y = x (forward), then R z = y (backward).
        let mut y = vec![Complex::<T>::zero(); p];
        for i in 0..p {
            let mut acc = x[i].clone();
            for k in 0..i {
                acc -= r[(k, i)].conj() * y[k].clone();
            }
            y[i] = acc / r[(i, i)].conj();
        }
        let mut z = vec![Complex::<T>::zero(); p];
        for i in (0..p).rev() {
            let mut acc = y[i].clone();
            for k in (i + 1)..p {
                acc -= r[(i, k)].clone() * z[k].clone();
            }
            z[i] = acc / r[(i, i)].clone();
        }
        normalize(&mut z);
        x = z;
    }
    x
}

/// Inverse by Gauss-Jordan elimination with partial pivoting. `None` when a
/// pivot vanishes exactly.
pub fn inverse<T: Real>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let n = m.dim();
    let mut a = m.clone();
    let mut inv = Matrix::<T>::identity(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| total_cmp(&a[(i, col)].norm_sqr(), &a[(j, col)].norm_sqr()))?;
        if a[(pivot, col)].is_zero() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)].clone();
                a[(col, j)] = a[(pivot, j)].clone();
                a[(pivot, j)] = tmp;
                let tmp = inv[(col, j)].clone();
                inv[(col, j)] = inv[(pivot, j)].clone();
                inv[(pivot, j)] = tmp;
            }
        }
        let p = a[(col, col)].clone();
        for j in 0..n {
            a[(col, j)] = a[(col, j)].clone() / p.clone();
            inv[(col, j)] = inv[(col, j)].clone() / p.clone();
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let factor = a[(i, col)].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..n {
                let da = factor.clone() * a[(col, j)].clone();
                a[(i, j)] -= da;
                let di = factor.clone() * inv[(col, j)].clone();
                inv[(i, j)] -= di;
            }
        }
    }
    Some(inv)
}

/// Standard normal pair by Box-Muller from two uniforms of `rng`.
pub fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// `n x n` Ginibre matrix: i.i.d. standard complex Gaussians, `E|z|^2 = 1`.
pub fn sample_ginibre<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_fn(n, n, |_, _| {
        let (x, y) = box_muller(rng);
        Complex::new(T::from_f64(x * scale), T::from_f64(y * scale))
    })
}

/// Haar-random unitary: QR of a Ginibre sample with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    let g = sample_ginibre::<T, R>(n, rng);
    let (q, r) = householder_qr(&g);
    let phases: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let d = r[(i, i)].clone();
            let mag = cabs(&d);
            if mag.is_zero() {
                Complex::one()
            } else {
                d / Complex::new(mag, T::zero())
            }
        })
        .collect();
    q.matmul(&Matrix::diagonal(&phases))
}

/// Unitary with prescribed eigenphases in a Haar-random eigenbasis.
pub fn unitary_with_phases<T: Real, R: Rng + ?Sized>(phases: &[T], rng: &mut R) -> Matrix<T> {
    let basis = haar_unitary::<T, R>(phases.len(), rng);
    let diag: Vec<Complex<T>> = phases.iter().map(cis).collect();
    basis.matmul(&Matrix::diagonal(&diag)).matmul(&basis.adjoint())
}

/// Projects a nearly unitary matrix onto the unitary group by QR with a
/// positive-diagonal `R`; used when widening gates to higher precision.
pub fn reunitarize<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    let (q, r) = householder_qr(m);
    let n = m.dim();
    let phases: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let d = r[(i, i)].clone();
            let mag = cabs(&d);
            if mag.is_zero() {
                Complex::one()
            } else {
                d / Complex::new(mag, T::zero())
            }
        })
        .collect();
    q.matmul(&Matrix::diagonal(&phases))
}
