//! Polynomials, rational functions, rational interpolation and the
//! Berlekamp-Welch decoder for rational functions.
//!
//! Everything is generic over [`Field`], implemented for the real and complex
//! floating backends and for exact `BigRational`.

mod decode;
mod poly;

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::{smallest_right_singular_vector, Matrix};
use crate::scalar::{cabs, Complex, MpFloat, Real};

pub use decode::{
    bw_decode, bw_decode_with, fit_rational, fit_rational_with, reduce_common_factor, DecodeOptions, Decoded,
    ReduceMode, MAX_FLOAT_NODE,
};
pub use poly::{Polynomial, RationalFunction};

/// Scalars the interpolation routines can work over.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Exact arithmetic: equality tests are meaningful and no tolerances apply.
    const EXACT: bool;

    fn from_i64(x: i64) -> Self;

    /// `|x|`, rounded to `f64`.
    fn magnitude(&self) -> f64;

    /// Unit roundoff of the backend; zero for exact fields.
    fn epsilon() -> f64;

    /// A nontrivial element of the (numerical) kernel of the `rows x cols`
    /// row-major matrix `a`. Exact fields return `None` when the kernel is
    /// trivial; floating fields return the smallest right singular vector.
    fn null_vector(a: &[Self], rows: usize, cols: usize) -> Option<Vec<Self>>;
}

/// An interpolation node and the value sampled there.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint<F> {
    pub node: F,
    pub value: F,
}

impl<F> SamplePoint<F> {
    pub fn new(node: F, value: F) -> Self {
        SamplePoint { node, value }
    }
}

impl Field for BigRational {
    const EXACT: bool = true;

    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }

    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn epsilon() -> f64 {
        0.0
    }

    fn null_vector(a: &[Self], rows: usize, cols: usize) -> Option<Vec<Self>> {
        exact_null_vector(a, rows, cols)
    }
}

/// Reduced row echelon form; the last free column is set to one and the
/// others to zero.
fn exact_null_vector(a: &[BigRational], rows: usize, cols: usize) -> Option<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = (0..rows).map(|i| a[i * cols..(i + 1) * cols].to_vec()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..cols {
                    let delta = &factor * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..cols).rev().find(|c| !pivots.contains(c))?;
    let mut v = vec![BigRational::zero(); cols];
    v[free] = BigRational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row][free].clone();
    }
    Some(v)
}

/// Column-equilibrated smallest singular vector of a complex system.
fn float_null_vector<T: Real>(a: Matrix<T>) -> Vec<Complex<T>> {
    let cols = a.cols();
    let norms: Vec<T> = (0..cols)
        .map(|j| {
            let n = crate::linalg::vec_norm(&a.column(j));
            if n.is_zero() {
                T::one()
            } else {
                n
            }
        })
        .collect();
    let scaled = Matrix::from_fn(a.rows(), cols, |i, j| a[(i, j)].clone() / Complex::new(norms[j].clone(), T::zero()));
    let w = smallest_right_singular_vector(&scaled);
    w.into_iter().zip(norms).map(|(x, n)| x / Complex::new(n, T::zero())).collect()
}

/// Rotates a complex kernel vector of a real system onto the real line.
fn realify<T: Real>(v: Vec<Complex<T>>) -> Vec<T> {
    let lead = v
        .iter()
        .max_by(|a, b| crate::scalar::total_cmp(&a.norm_sqr(), &b.norm_sqr()))
        .cloned()
        .unwrap_or_else(Complex::one);
    let mag = cabs(&lead);
    let unphase = if mag.is_zero() { Complex::one() } else { lead.conj() / Complex::new(mag, T::zero()) };
    v.into_iter().map(|z| (z * unphase.clone()).re).collect()
}

fn real_null_vector<T: Real>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let m = Matrix::from_fn(rows, cols, |i, j| Complex::new(a[i * cols + j].clone(), T::zero()));
    realify(float_null_vector(m))
}

fn complex_null_vector<T: Real>(a: &[Complex<T>], rows: usize, cols: usize) -> Vec<Complex<T>> {
    float_null_vector(Matrix::from_fn(rows, cols, |i, j| a[i * cols + j].clone()))
}

impl Field for f64 {
    const EXACT: bool = false;

    fn from_i64(x: i64) -> Self {
        x as f64
    }

    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }

    fn epsilon() -> f64 {
        f64::EPSILON
    }

    fn null_vector(a: &[Self], rows: usize, cols: usize) -> Option<Vec<Self>> {
        Some(real_null_vector(a, rows, cols))
    }
}

impl<const B: u32> Field for MpFloat<B> {
    const EXACT: bool = false;

    fn from_i64(x: i64) -> Self {
        <Self as Real>::from_i64(x)
    }

    fn magnitude(&self) -> f64 {
        Real::abs(self).to_f64()
    }

    fn epsilon() -> f64 {
        <Self as Real>::epsilon().to_f64()
    }

    fn null_vector(a: &[Self], rows: usize, cols: usize) -> Option<Vec<Self>> {
        Some(real_null_vector(a, rows, cols))
    }
}

impl Field for Complex<f64> {
    const EXACT: bool = false;

    fn from_i64(x: i64) -> Self {
        Complex::new(x as f64, 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn epsilon() -> f64 {
        f64::EPSILON
    }

    fn null_vector(a: &[Self], rows: usize, cols: usize) -> Option<Vec<Self>> {
        Some(complex_null_vector(a, rows, cols))
    }
}

impl<const B: u32> Field for Complex<MpFloat<B>> {
    const EXACT: bool = false;

    fn from_i64(x: i64) -> Self {
        Complex::new(<MpFloat<B> as Real>::from_i64(x), MpFloat::zero())
    }

    fn magnitude(&self) -> f64 {
        cabs(self).to_f64()
    }

    fn epsilon() -> f64 {
        <MpFloat<B> as Real>::epsilon().to_f64()
    }

    fn null_vector(a: &[Self], rows: usize, cols: usize) -> Option<Vec<Self>> {
        Some(complex_null_vector(a, rows, cols))
    }
}

/// Exact rational from a `p/q` or integer string.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(BigRational::new(p, q))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// `p/q` rendering (integers without the denominator).
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn exact_kernel_of_rank_deficient_matrix() {
        // [1 2 3; 2 4 6] has a two-dimensional kernel.
        let a: Vec<BigRational> = [1, 2, 3, 2, 4, 6].iter().map(|&x| q(x, 1)).collect();
        let v = BigRational::null_vector(&a, 2, 3).unwrap();
        assert_eq!(v, vec![q(-3, 1), q(0, 1), q(1, 1)]);
        let full: Vec<BigRational> = [1, 0, 0, 1].iter().map(|&x| q(x, 1)).collect();
        assert!(BigRational::null_vector(&full, 2, 2).is_none());
    }

    #[test]
    fn float_kernel_is_real_for_real_systems() {
        let a = [1.0, 2.0, 3.0, 2.0, 4.0, 6.1];
        let v = f64::null_vector(&a, 2, 3).unwrap();
        let r0 = v[0] + 2.0 * v[1] + 3.0 * v[2];
        let r1 = 2.0 * v[0] + 4.0 * v[1] + 6.1 * v[2];
        assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
        assert!(v.iter().map(|x| x * x).sum::<f64>() > 0.1);
    }

    #[test]
    fn rational_strings_roundtrip() {
        for s in ["3/4", "-7/2", "5", "0"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("6/8").unwrap(), q(3, 4));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
    }
}
