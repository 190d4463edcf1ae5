//! Backend-tagged scalars and matrices.
//!
//! A [`Matrix`] holds either exact entries in ℚ(√2, √3) or binary floats.
//! Builders produce the exact form whenever every entry is representable and
//! fall back to floats otherwise.

use std::fmt;

use nalgebra::DMatrix;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{EpnError, Result};
use crate::exact::{parse_rational, ExactMatrix, ExactScalar, Rational};

/// A real number that is either exact or a float.
#[derive(Clone, PartialEq)]
pub enum Number {
    Exact(ExactScalar),
    Float(f64),
}

impl Number {
    pub fn ratio(p: i64, q: i64) -> Self {
        Number::Exact(ExactScalar::ratio(p, q))
    }

    pub fn int(n: i64) -> Self {
        Number::Exact(ExactScalar::from_int(n))
    }

    pub fn rational(q: Rational) -> Self {
        Number::Exact(ExactScalar::from_rational(q))
    }

    /// Parses `"3/4"` or a decimal literal exactly; anything else is an error.
    pub fn parse_exact(text: &str) -> Result<Self> {
        parse_rational(text).map(Number::rational)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(x) => x.to_f64(),
            Number::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&ExactScalar> {
        match self {
            Number::Exact(x) => Some(x),
            Number::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn to_float(&self) -> Self {
        Number::Float(self.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(x) => x.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    /// Sign, decided exactly for exact values.
    pub fn signum(&self) -> i32 {
        match self {
            Number::Exact(x) => x.signum(),
            Number::Float(x) if *x > 0.0 => 1,
            Number::Float(x) if *x < 0.0 => -1,
            Number::Float(_) => 0,
        }
    }

    /// `self − other`, staying exact when both are.
    pub fn minus(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a - b),
            _ => Number::Float(self.to_f64() - other.to_f64()),
        }
    }

    /// `self · other`, staying exact when both are.
    pub fn times(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a * b),
            _ => Number::Float(self.to_f64() * other.to_f64()),
        }
    }
}

impl fmt::Debug for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(x) => write!(f, "{x}"),
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl From<i64> for Number {
    fn from(n: i64) -> Self {
        Number::int(n)
    }
}

impl From<Rational> for Number {
    fn from(q: Rational) -> Self {
        Number::rational(q)
    }
}

impl From<ExactScalar> for Number {
    fn from(x: ExactScalar) -> Self {
        Number::Exact(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    Exact(ExactMatrix),
    Float(DMatrix<f64>),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Exact(m) => m.nrows(),
            Matrix::Float(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Exact(m) => m.ncols(),
            Matrix::Float(m) => m.ncols(),
        }
    }

    /// Dimension of a square matrix.
    pub fn dim(&self) -> usize {
        self.nrows()
    }

    pub fn backend(&self) -> Backend {
        match self {
            Matrix::Exact(_) => Backend::Exact,
            Matrix::Float(_) => Backend::Float,
        }
    }

    pub fn as_exact(&self) -> Option<&ExactMatrix> {
        match self {
            Matrix::Exact(m) => Some(m),
            Matrix::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        match self {
            Matrix::Exact(m) => m.to_f64(),
            Matrix::Float(m) => m.clone(),
        }
    }

    pub fn to_float(&self) -> Matrix {
        Matrix::Float(self.to_f64())
    }

    pub fn entry(&self, i: usize, j: usize) -> Number {
        match self {
            Matrix::Exact(m) => Number::Exact(m[(i, j)].clone()),
            Matrix::Float(m) => Number::Float(m[(i, j)]),
        }
    }

    pub fn entry_f64(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Exact(m) => m[(i, j)].to_f64(),
            Matrix::Float(m) => m[(i, j)],
        }
    }

    pub fn is_entry_zero(&self, i: usize, j: usize) -> bool {
        match self {
            Matrix::Exact(m) => m[(i, j)].is_zero(),
            Matrix::Float(m) => m[(i, j)] == 0.0,
        }
    }

    pub fn transpose(&self) -> Matrix {
        match self {
            Matrix::Exact(m) => Matrix::Exact(m.transpose()),
            Matrix::Float(m) => Matrix::Float(m.transpose()),
        }
    }

    /// Principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> Matrix {
        match self {
            Matrix::Exact(m) => Matrix::Exact(m.submatrix(indices)),
            Matrix::Float(m) => Matrix::Float(DMatrix::from_fn(indices.len(), indices.len(), |i, j| {
                m[(indices[i], indices[j])]
            })),
        }
    }

    /// `H + Hᵀ = 2·diag(H)`: the off-diagonal part is antisymmetric.
    /// Exact for the exact backend, bitwise for floats.
    pub fn has_antisymmetric_offdiagonal(&self) -> bool {
        if self.nrows() != self.ncols() {
            return false;
        }
        let n = self.dim();
        (0..n).all(|i| {
            (i + 1..n).all(|j| match self {
                Matrix::Exact(m) => (&m[(i, j)] + &m[(j, i)]).is_zero(),
                Matrix::Float(m) => m[(i, j)] == -m[(j, i)],
            })
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        match self {
            Matrix::Exact(m) => m.max_abs(),
            Matrix::Float(m) => m.amax(),
        }
    }

    /// `{"n": N, "backend": …, "entries": [row-major]}`.
    pub fn to_json(&self) -> Value {
        let n = self.nrows();
        let entries: Vec<Value> = match self {
            Matrix::Exact(m) => m.entries().iter().map(|x| json!(x.to_strings())).collect(),
            Matrix::Float(m) => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        out.push(json!(m[(i, j)]));
                    }
                }
                out
            }
        };
        json!({ "n": n, "backend": self.backend().as_str(), "entries": entries })
    }

    pub fn from_json(value: &Value) -> Result<Matrix> {
        let bad = |msg: &str| EpnError::Parse(format!("matrix JSON: {msg}"));
        let n = value.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing integer \"n\""))? as usize;
        let backend = value.get("backend").and_then(Value::as_str).ok_or_else(|| bad("missing \"backend\""))?;
        let entries = value.get("entries").and_then(Value::as_array).ok_or_else(|| bad("missing \"entries\""))?;
        if entries.len() != n * n {
            return Err(bad(&format!("expected {} entries, found {}", n * n, entries.len())));
        }
        match backend {
            "float" => {
                let vals = entries
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| bad("float entry is not a number")))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Matrix::Float(DMatrix::from_row_slice(n, n, &vals)))
            }
            "exact" => {
                let vals = entries
                    .iter()
                    .map(|v| {
                        let parts = v.as_array().ok_or_else(|| bad("exact entry is not an array"))?;
                        let strs = parts
                            .iter()
                            .map(|p| p.as_str().ok_or_else(|| bad("exact coefficient is not a string")))
                            .collect::<Result<Vec<&str>>>()?;
                        ExactScalar::from_strings(&strs)
                    })
                    .collect::<Result<Vec<ExactScalar>>>()?;
                Ok(Matrix::Exact(ExactMatrix::from_fn(n, n, |i, j| vals[i * n + j].clone())))
            }
            other => Err(bad(&format!("unknown backend {other:?}"))),
        }
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.nrows();
        let cells: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..self.ncols())
                    .map(|j| match self {
                        Matrix::Exact(m) => m[(i, j)].to_string(),
                        Matrix::Float(m) => format!("{:.10}", m[(i, j)]),
                    })
                    .collect()
            })
            .collect();
        let width = cells.iter().flatten().map(|c| c.chars().count()).max().unwrap_or(1);
        for row in &cells {
            let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "{}", line.join("  "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_exact_and_float() {
        let s2 = ExactScalar::sqrt_int(2).unwrap();
        let exact = Matrix::Exact(ExactMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                ExactScalar::ratio(1, 3)
            } else {
                s2.clone()
            }
        }));
        assert_eq!(Matrix::from_json(&exact.to_json()).unwrap(), exact);
        let float = Matrix::Float(DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5e-300, 7.0]));
        let text = serde_json::to_string(&float.to_json()).unwrap();
        let back = Matrix::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, float);
    }

    #[test]
    fn json_shape_errors() {
        assert!(Matrix::from_json(&json!({"n": 2, "backend": "float", "entries": [1.0]})).is_err());
        assert!(Matrix::from_json(&json!({"n": 1, "backend": "quad", "entries": [1.0]})).is_err());
        assert!(Matrix::from_json(&json!({"n": 1, "backend": "exact", "entries": [["1/2", "0"]]})).is_err());
    }
}
