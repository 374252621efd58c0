use crate::error::{Error, Result};

use super::Field;

/// Polynomial with ascending coefficients; `coeffs.len() - 1` is the declared
/// degree and trailing zeros are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<F> {
    coeffs: Vec<F>,
}

impl<F: Field> Polynomial<F> {
    pub fn new(coeffs: Vec<F>) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![F::zero()] }
    }

    pub fn constant(c: F) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    /// `prod (x - r)`
    pub fn from_roots(roots: &[F]) -> Self {
        roots.iter().fold(Self::constant(F::one()), |acc, r| acc.mul(&Polynomial::new(vec![-r.clone(), F::one()])))
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn declared_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Index of the last nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Drops trailing zero coefficients (keeps at least one).
    pub fn trimmed(&self) -> Self {
        let len = self.degree().map_or(1, |d| d + 1);
        Polynomial { coeffs: self.coeffs[..len].to_vec() }
    }

    /// Pads with zeros to the given declared degree.
    pub fn with_declared_degree(mut self, degree: usize) -> Self {
        if self.coeffs.len() < degree + 1 {
            self.coeffs.resize(degree + 1, F::zero());
        }
        self
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &F) -> F {
        self.coeffs.iter().rev().fold(F::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// `sum |c_j| |x|^j`, the scale against which a cancelling value is judged.
    pub fn abs_scale(&self, x: &F) -> f64 {
        let ax = x.magnitude();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * ax + c.magnitude())
    }

    pub fn scale(&self, s: &F) -> Self {
        Polynomial { coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).cloned().unwrap_or_else(F::zero);
        Polynomial { coeffs: (0..len).map(|i| get(self, i) + get(other, i)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-F::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![F::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial { coeffs: out }
    }

    /// Long division by a nonzero divisor, `self = q * d + r` with
    /// `deg r < deg d`.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let d = divisor.trimmed();
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut rem = self.trimmed().coeffs;
        if rem.len() <= dd {
            return (Self::zero(), Polynomial::new(rem));
        }
        let mut quot = vec![F::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone() / lead.clone();
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - c.clone() * dc.clone();
            }
            rem[k + dd] = F::zero();
            quot[k] = c;
        }
        rem.truncate(dd.max(1));
        (Polynomial::new(quot), Polynomial::new(rem).trimmed())
    }

    /// Scales so the highest nonzero coefficient is one.
    pub fn monic(&self) -> Self {
        match self.degree() {
            Some(d) => self.scale(&(F::one() / self.coeffs[d].clone())),
            None => self.clone(),
        }
    }

    /// Monic greatest common divisor by Euclid's algorithm; meaningful over
    /// exact fields only.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.trimmed();
        let mut b = other.trimmed();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

/// `numerator / denominator` with declared degree bounds `(k1, k2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<F> {
    numerator: Polynomial<F>,
    denominator: Polynomial<F>,
}

impl<F: Field> RationalFunction<F> {
    pub fn new(numerator: Polynomial<F>, denominator: Polynomial<F>) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::DegenerateSystem("denominator is identically zero".into()));
        }
        Ok(RationalFunction { numerator, denominator })
    }

    pub fn polynomial(numerator: Polynomial<F>) -> Self {
        RationalFunction { numerator, denominator: Polynomial::constant(F::one()) }
    }

    pub fn numerator(&self) -> &Polynomial<F> {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial<F> {
        &self.denominator
    }

    /// Declared `(k1, k2)`.
    pub fn degrees(&self) -> (usize, usize) {
        (self.numerator.declared_degree(), self.denominator.declared_degree())
    }

    /// `num(x) / den(x)`; refuses points where the denominator is zero or
    /// (floating backends) within rounding of zero.
    pub fn evaluate(&self, x: &F) -> Result<F> {
        let den = self.denominator.eval(x);
        let scale = self.denominator.abs_scale(x);
        let tiny = if F::EXACT { den.is_zero() } else { den.magnitude() <= F::epsilon() * scale };
        if tiny {
            return Err(Error::PoleProximity { node: x.magnitude(), denominator: den.magnitude() });
        }
        Ok(self.numerator.eval(x) / den)
    }

    /// Fixes the normalization: the denominator coefficient of declared
    /// degree becomes one when it is nonzero, else the highest nonzero one.
    /// Floating backends treat coefficients below `sqrt(eps)` of the largest
    /// as zero for this choice.
    pub fn normalized(&self) -> Self {
        let coeffs = self.denominator.coeffs();
        let largest = coeffs.iter().map(Field::magnitude).fold(0.0, f64::max);
        let cutoff = if F::EXACT { 0.0 } else { F::epsilon().sqrt() * largest };
        let Some(pivot) = coeffs.iter().rposition(|c| if F::EXACT { !c.is_zero() } else { c.magnitude() > cutoff }) else {
            return self.clone();
        };
        let inv = F::one() / coeffs[pivot].clone();
        RationalFunction { numerator: self.numerator.scale(&inv), denominator: self.denominator.scale(&inv) }
    }

    /// Equality as functions (`a d == b c` coefficientwise), exact fields only.
    pub fn same_function(&self, other: &Self) -> bool {
        let lhs = self.numerator.mul(&other.denominator);
        let rhs = other.numerator.mul(&self.denominator);
        lhs.sub(&rhs).is_zero()
    }
}
