//! File formats: circuit JSON, sample and series CSV, run manifests.
//!
//! Matrices are nested arrays of `[re, im]` pairs, row-major.

use std::io::{Read, Write};
use std::path::Path;

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{CayleyGate, UNITARY_TOL};
use crate::circuit::{Architecture, Circuit};
use crate::error::{Error, Result};
use crate::interp::format_rational;
use crate::linalg::{haar_unitary, reunitarize, unitarity_residual, Matrix};
use crate::scalar::{Complex, Real};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub haar_seed: Option<u64>,
}

/// Worst-case circuit: qubit count and ordered gates. Companions are not
/// stored; they are drawn when the file is turned into a [`Circuit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub n: usize,
    pub gates: Vec<GateSpec>,
}

pub fn matrix_to_json(m: &Matrix<f64>) -> JsonMatrix {
    m.to_rows().into_iter().map(|row| row.into_iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<Matrix<f64>> {
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&[re, im]| Complex::new(re, im)).collect()).collect())
}

fn schema(gate: usize, msg: impl std::fmt::Display) -> Error {
    Error::Schema(format!("gate {gate}: {msg}"))
}

impl CircuitFile {
    /// Parses and validates. Syntax errors carry line and column; gate-level
    /// problems name the gate index.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("line {} column {}: {e}", e.line(), e.column())))?;
        let obj = value.as_object().ok_or_else(|| Error::Schema("top level must be an object".into()))?;
        if let Some(key) = obj.keys().find(|k| *k != "n" && *k != "gates") {
            return Err(Error::Schema(format!("unknown field `{key}`")));
        }
        let n = obj
            .get("n")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Schema("`n` must be a non-negative integer".into()))? as usize;
        let gates_json = obj
            .get("gates")
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| Error::Schema("`gates` must be an array".into()))?;
        let gates = gates_json
            .iter()
            .enumerate()
            .map(|(k, g)| GateSpec::deserialize(g).map_err(|e| schema(k, e)))
            .collect::<Result<Vec<_>>>()?;
        let file = CircuitFile { n, gates };
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)?.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::new(self.n, self.gates.iter().map(|g| g.qubits.clone()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Schema("`n` must be at least 1".into()));
        }
        for (k, g) in self.gates.iter().enumerate() {
            if g.qubits.is_empty() || g.qubits.len() > 2 {
                return Err(schema(k, format!("acts on {} qubits; gates act on one or two", g.qubits.len())));
            }
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= self.n) {
                return Err(schema(k, format!("qubit {q} out of range for n = {}", self.n)));
            }
            if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                return Err(schema(k, "repeated qubit"));
            }
            match (&g.unitary, g.haar_seed) {
                (Some(_), Some(_)) => return Err(schema(k, "give either `unitary` or `haar_seed`, not both")),
                (None, None) => return Err(schema(k, "needs `unitary` or `haar_seed`")),
                (Some(u), None) => {
                    let dim = 1usize << g.qubits.len();
                    if u.len() != dim || u.iter().any(|r| r.len() != dim) {
                        return Err(schema(k, format!("unitary must be {dim}x{dim}")));
                    }
                    let m = matrix_from_json(u).map_err(|e| schema(k, e))?;
                    if !m.is_finite() {
                        return Err(schema(k, "non-finite entry"));
                    }
                    let r = unitarity_residual(&m);
                    if !(r < UNITARY_TOL) {
                        return Err(schema(k, format!("unitarity residual {r:e} exceeds {UNITARY_TOL:e}")));
                    }
                }
                (None, Some(_)) => {}
            }
        }
        Ok(())
    }

    /// Worst gates in `f64`; seeded gates are regenerated from their seed.
    pub fn worst_gates(&self) -> Result<Vec<Matrix<f64>>> {
        self.gates
            .iter()
            .enumerate()
            .map(|(k, g)| match (&g.unitary, g.haar_seed) {
                (Some(u), _) => matrix_from_json(u).map_err(|e| schema(k, e)),
                (None, Some(seed)) => {
                    Ok(haar_unitary::<f64, _>(1 << g.qubits.len(), &mut ChaCha8Rng::seed_from_u64(seed)))
                }
                (None, None) => Err(schema(k, "needs `unitary` or `haar_seed`")),
            })
            .collect()
    }

    /// Builds the Cayley circuit at precision `T`. Worst gates are
    /// re-projected onto the unitary group at `T`; companions are Haar draws
    /// from one stream seeded with `companion_seed`, in gate order.
    pub fn build_circuit<T: Real>(&self, companion_seed: u64, guard: f64) -> Result<Circuit<T>> {
        let arch = self.architecture()?;
        let mut rng = ChaCha8Rng::seed_from_u64(companion_seed);
        let guard = T::from_f64(guard);
        let gates = self
            .worst_gates()?
            .into_iter()
            .map(|w| CayleyGate::with_haar_companion(reunitarize(&w.convert::<T>()), &mut rng, &guard))
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(arch, gates)
    }
}

/// Circuit file holding `count` Haar unitaries of dimension `dim` (2 or 4),
/// all on the leading qubits, drawn from one stream seeded with `seed`.
pub fn haar_sample_file(dim: usize, count: usize, seed: u64) -> Result<CircuitFile> {
    let qubits: Vec<usize> = match dim {
        2 => vec![0],
        4 => vec![0, 1],
        other => return Err(Error::UnsupportedDimension(other)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = (0..count)
        .map(|_| GateSpec {
            qubits: qubits.clone(),
            unitary: Some(matrix_to_json(&haar_unitary::<f64, _>(dim, &mut rng))),
            haar_seed: None,
        })
        .collect();
    Ok(CircuitFile { n: qubits.len(), gates })
}

/// One grid node of a reduction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub index: usize,
    pub u: f64,
    pub theta: f64,
    pub value: f64,
    pub corrupted: bool,
    pub detected: bool,
}

/// A distance-to-Haar estimate at one `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvdRow {
    pub delta: f64,
    pub theta: f64,
    pub tvd: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<W: Write, S: Serialize>(writer: W, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, S: for<'de> Deserialize<'de>>(reader: R) -> Result<Vec<S>> {
    csv::Reader::from_reader(reader).deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// `node,value` rows of exact samples, each rendered as `p/q`.
pub fn write_exact_samples<W: Write>(writer: W, samples: &[(BigRational, BigRational)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node", "value"])?;
    for (x, y) in samples {
        w.write_record([format_rational(x), format_rational(y)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_exact_samples<R: Read>(reader: R) -> Result<Vec<(BigRational, BigRational)>> {
    let mut out = Vec::new();
    for (line, rec) in csv::Reader::from_reader(reader).records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(crate::interp::parse_rational)
                .ok_or_else(|| Error::Schema(format!("row {}: column {i} is not a rational", line + 1)))
        };
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}

/// Provenance emitted next to every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub backend: String,
    pub precision_bits: u32,
    pub tool_version: String,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>, backend: String, precision_bits: u32) -> Self {
        RunManifest {
            command: command.into(),
            config,
            seeds,
            backend,
            precision_bits,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_secs: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_stable() {
        let f = haar_sample_file(4, 3, 11).unwrap();
        let a = f.to_json().unwrap();
        let b = CircuitFile::from_json(&a).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_gate_is_named() {
        let text = r#"{"n": 2, "gates": [{"qubits": [0], "haar_seed": 1}, {"qubits": [0, 5], "haar_seed": 2}]}"#;
        let err = CircuitFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("gate 1"), "{err}");
        let text = r#"{"n": 1, "gates": [{"qubits": [0], "unitary": [[[1,0],[0,0]],[[0,0],[2,0]]]}]}"#;
        let err = CircuitFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("gate 0") && err.contains("unitarity"), "{err}");
        let err = CircuitFile::from_json("{\"n\": 1,\n \"gates\": [}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn seeded_gates_are_reproducible() {
        let text = r#"{"n": 2, "gates": [{"qubits": [0, 1], "haar_seed": 9}]}"#;
        let f = CircuitFile::from_json(text).unwrap();
        assert_eq!(f.worst_gates().unwrap(), f.worst_gates().unwrap());
        let a: Circuit<f64> = f.build_circuit(1, 1e-8).unwrap();
        let b: Circuit<f64> = f.build_circuit(1, 1e-8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_samples_round_trip() {
        let s = vec![(BigRational::new(1.into(), 3.into()), BigRational::new((-7).into(), 2.into()))];
        let mut buf = Vec::new();
        write_exact_samples(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "node,value\n1/3,-7/2\n");
        assert_eq!(read_exact_samples(buf.as_slice()).unwrap(), s);
    }
}
