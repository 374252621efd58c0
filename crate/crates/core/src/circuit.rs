//! Circuits of Cayley gates over a fixed architecture, statevector
//! simulation and the path-sum oracle.
//!
//! Bit convention: qubit 0 is the most significant bit of a basis index, and
//! bitstring character `j` is qubit `j`. A gate on qubits `(a, b)` sees the
//! local index `2 * bit_a + bit_b`.

use num_traits::{One, Zero};
use rand::Rng;

use crate::cayley::CayleyGate;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Complex, Real};

/// Largest `n` and `m` accepted by [`Circuit::feynman_amplitude`].
pub const FEYNMAN_MAX: usize = 6;

/// Qubit count and ordered gate placements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    n: usize,
    placements: Vec<Vec<usize>>,
}

impl Architecture {
    pub fn new(n: usize, placements: Vec<Vec<usize>>) -> Result<Self> {
        for (k, p) in placements.iter().enumerate() {
            if p.is_empty() || p.len() > 2 {
                return Err(Error::DimensionMismatch(format!("gate {k}: placement must name 1 or 2 qubits")));
            }
            if let Some(q) = p.iter().find(|&&q| q >= n) {
                return Err(Error::DimensionMismatch(format!("gate {k}: qubit {q} out of range for n = {n}")));
            }
            if p.len() == 2 && p[0] == p[1] {
                return Err(Error::DimensionMismatch(format!("gate {k}: repeated qubit {}", p[0])));
            }
        }
        Ok(Architecture { n, placements })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.placements.len()
    }

    pub fn placements(&self) -> &[Vec<usize>] {
        &self.placements
    }

    /// Local gate dimensions `N_k = 2^arity`.
    pub fn gate_dims(&self) -> Vec<usize> {
        self.placements.iter().map(|p| 1 << p.len()).collect()
    }

    /// `sum_k N_k`, the degree of the polynomial amplitude (`Nm` for uniform
    /// gate size).
    pub fn degree_sum(&self) -> usize {
        self.gate_dims().iter().sum()
    }
}

/// `2^n` amplitudes indexed with qubit 0 as the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    n: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// `|0^n>`
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex::zero(); 1 << n];
        amplitudes[index] = Complex::one();
        StateVector { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }
}

/// Parses a bitstring of length `n` into a basis index.
pub fn bitstring_index(bits: &str, n: usize) -> Result<usize> {
    if bits.len() != n {
        return Err(Error::DimensionMismatch(format!("bitstring {bits:?} has length {}, expected {n}", bits.len())));
    }
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::DimensionMismatch(format!("invalid bit {other:?} in {bits:?}"))),
    })
}

fn bit_position(n: usize, qubit: usize) -> usize {
    n - 1 - qubit
}

fn local_index(n: usize, qubits: &[usize], index: usize) -> usize {
    qubits.iter().fold(0, |acc, &q| (acc << 1) | ((index >> bit_position(n, q)) & 1))
}

fn outside_mask(n: usize, qubits: &[usize]) -> usize {
    let all = (1usize << n) - 1;
    qubits.iter().fold(all, |mask, &q| mask & !(1 << bit_position(n, q)))
}

/// `(gate (x) identity) |state>`, the gate acting on `qubits`.
pub fn apply_gate<T: Real>(state: &StateVector<T>, gate: &Matrix<T>, qubits: &[usize]) -> Result<StateVector<T>> {
    let n = state.n;
    let local = 1usize << qubits.len();
    if !gate.is_square() || gate.dim() != local {
        return Err(Error::DimensionMismatch(format!(
            "gate of size {}x{} on {} qubit(s)",
            gate.rows(),
            gate.cols(),
            qubits.len()
        )));
    }
    if qubits.iter().any(|&q| q >= n) || (qubits.len() == 2 && qubits[0] == qubits[1]) {
        return Err(Error::DimensionMismatch(format!("invalid qubits {qubits:?} for n = {n}")));
    }
    let mask = outside_mask(n, qubits);
    // Offsets of the 2^k local basis states from a base index with the
    // gate's bits cleared.
    let offsets: Vec<usize> = (0..local)
        .map(|l| {
            qubits.iter().enumerate().fold(0, |acc, (pos, &q)| {
                let bit = (l >> (qubits.len() - 1 - pos)) & 1;
                acc | (bit << bit_position(n, q))
            })
        })
        .collect();
    let mut out = state.amplitudes.clone();
    for base in 0..(1usize << n) {
        if base & !mask != 0 {
            continue;
        }
        let input: Vec<Complex<T>> = offsets.iter().map(|&o| state.amplitudes[base | o].clone()).collect();
        for (row, &o) in offsets.iter().enumerate() {
            out[base | o] = gate
                .row(row)
                .iter()
                .zip(&input)
                .fold(Complex::zero(), |acc, (g, x)| acc + g.clone() * x.clone());
        }
    }
    Ok(StateVector { n, amplitudes: out })
}

/// A sequence of Cayley gates placed on an architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T: Real> {
    architecture: Architecture,
    gates: Vec<CayleyGate<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(architecture: Architecture, gates: Vec<CayleyGate<T>>) -> Result<Self> {
        if gates.len() != architecture.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} gates for {} placements",
                gates.len(),
                architecture.m()
            )));
        }
        for (k, (g, dim)) in gates.iter().zip(architecture.gate_dims()).enumerate() {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch(format!("gate {k}: dimension {} for placement of size {dim}", g.dim())));
            }
        }
        Ok(Circuit { architecture, gates })
    }

    /// Haar worst gates and Haar companions for every placement.
    pub fn sample<R: Rng + ?Sized>(architecture: Architecture, rng: &mut R, guard: &T) -> Self {
        let gates = architecture.gate_dims().into_iter().map(|d| CayleyGate::sample(d, rng, guard)).collect();
        Circuit { architecture, gates }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn gates(&self) -> &[CayleyGate<T>] {
        &self.gates
    }

    pub fn n(&self) -> usize {
        self.architecture.n
    }

    pub fn m(&self) -> usize {
        self.gates.len()
    }

    /// Applies one matrix per placement, in order, to `|0^n>`.
    pub fn run(&self, matrices: &[Matrix<T>]) -> Result<StateVector<T>> {
        let mut state = StateVector::zero(self.n());
        for (gate, qubits) in matrices.iter().zip(self.architecture.placements()) {
            state = apply_gate(&state, gate, qubits)?;
        }
        Ok(state)
    }

    pub fn gates_at(&self, theta: &T) -> Vec<Matrix<T>> {
        self.gates.iter().map(|g| g.gate_at(theta)).collect()
    }

    /// `C(theta) |0^n>`
    pub fn state_at(&self, theta: &T) -> StateVector<T> {
        self.run(&self.gates_at(theta)).expect("circuit is validated at construction")
    }

    /// `<y|C(theta)|0^n>` for a basis index `y`.
    pub fn amplitude(&self, theta: &T, y: usize) -> Complex<T> {
        self.state_at(theta).amplitudes[y].clone()
    }

    pub fn amplitude_bits(&self, theta: &T, y: &str) -> Result<Complex<T>> {
        Ok(self.amplitude(theta, bitstring_index(y, self.n())?))
    }

    /// `|<0^n|C(theta)|0^n>|^2`
    pub fn p0(&self, theta: &T) -> T {
        self.amplitude(theta, 0).norm_sqr()
    }

    /// `p0` of the worst-case circuit, simulated from the `C_k` alone.
    pub fn worst_case_p0(&self) -> T {
        let worst: Vec<Matrix<T>> = self.gates.iter().map(|g| g.worst_gate().clone()).collect();
        self.run(&worst).expect("circuit is validated at construction").amplitudes[0].norm_sqr()
    }

    /// `Q(theta) = prod_k q_k(theta)`
    pub fn q_product(&self, theta: &T) -> Complex<T> {
        self.gates.iter().fold(Complex::one(), |acc, g| acc * g.q(theta))
    }

    /// `Q(1 + z)` normalized by `prod_{k,a} r_{k,a}`; equals 1 at `z = 0` in
    /// modulus.
    pub fn q_product_z(&self, z: &T) -> Complex<T> {
        self.gates.iter().fold(Complex::one(), |acc, g| acc * g.q_z(z))
    }

    /// `<0^n|P(theta)|0^n> = Q(theta) <0^n|C(theta)|0^n>`, a polynomial of
    /// degree `sum_k N_k` in `theta`.
    pub fn polynomial_amplitude(&self, theta: &T) -> Complex<T> {
        self.q_product(theta) * self.amplitude(theta, 0)
    }

    /// Path sum `sum_{y_1..y_{m-1}} prod_k <y_k|C_k(theta)|y_{k-1}>` between
    /// basis indices `y0` and `ym`, enumerating every intermediate bitstring.
    pub fn feynman_amplitude(&self, theta: &T, y0: usize, ym: usize) -> Result<Complex<T>> {
        let n = self.n();
        let m = self.m();
        if n > FEYNMAN_MAX || m > FEYNMAN_MAX {
            return Err(Error::TooLarge { paths: 2f64.powi((n * m.saturating_sub(1)) as i32) });
        }
        if m == 0 {
            return Ok(if y0 == ym { Complex::one() } else { Complex::zero() });
        }
        let layers = self.gates_at(theta);
        let element = |k: usize, to: usize, from: usize| -> Option<Complex<T>> {
            let qubits = &self.architecture.placements[k];
            let mask = outside_mask(n, qubits);
            if to & mask != from & mask {
                return None;
            }
            Some(layers[k][(local_index(n, qubits, to), local_index(n, qubits, from))].clone())
        };
        fn walk<T: Real>(
            k: usize,
            from: usize,
            weight: Complex<T>,
            m: usize,
            dim: usize,
            ym: usize,
            element: &dyn Fn(usize, usize, usize) -> Option<Complex<T>>,
        ) -> Complex<T> {
            if k == m - 1 {
                return element(k, ym, from).map_or(Complex::zero(), |e| weight * e);
            }
            let mut total = Complex::zero();
            for to in 0..dim {
                if let Some(e) = element(k, to, from) {
                    total += walk(k + 1, to, weight.clone() * e, m, dim, ym, element);
                }
            }
            total
        }
        Ok(walk(0, y0, Complex::one(), m, 1 << n, ym, &element))
    }

    /// Same circuit with every generator negated.
    pub fn negated(&self) -> Self {
        Circuit { architecture: self.architecture.clone(), gates: self.gates.iter().map(CayleyGate::negated).collect() }
    }

    /// Entrywise complex conjugate of the whole path: `C_k -> conj(C_k)` and
    /// `h_k -> conj(h_k)`, realized as eigenvectors conjugated and
    /// eigenvalues negated so that `f(theta h)` is conjugated.
    pub fn conjugated(&self) -> Self {
        Circuit { architecture: self.architecture.clone(), gates: self.gates.iter().map(CayleyGate::conjugated).collect() }
    }

    pub fn convert<U: Real>(&self) -> Circuit<U> {
        Circuit { architecture: self.architecture.clone(), gates: self.gates.iter().map(CayleyGate::convert).collect() }
    }
}
