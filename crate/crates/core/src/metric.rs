//! Metric operators: symmetric solutions of `HᵀΘ = ΘH`, their positivity,
//! the amended inner product, and coupling sweeps toward the exceptional
//! point.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{EpnError, Result};
use crate::hamiltonians::ModelFamily;
use crate::matrix::Matrix;
use crate::spectral::{eigen, DEFAULT_TOL};

/// `HᵀΘ − ΘH`.
fn commutator(h: &DMatrix<f64>, theta: &DMatrix<f64>) -> DMatrix<f64> {
    h.transpose() * theta - theta * h
}

/// Index pairs `(i, j)`, `i ≤ j`, of the symmetric coordinates.
fn symmetric_coordinates(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn symmetric_from_coordinates(n: usize, coords: &[(usize, usize)], x: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), &v) in coords.iter().zip(x) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// A basis of all symmetric `Θ` with `HᵀΘ = ΘH`, from the null space of the
/// linear map restricted to the `N(N+1)/2` symmetric coordinates. Singular
/// values at or below `tol · σ_max` count as zero.
pub fn metric_basis(h: &Matrix, tol: f64) -> Result<Vec<DMatrix<f64>>> {
    let n = h.dim();
    if n == 0 || h.nrows() != h.ncols() {
        return Err(EpnError::Structural("metric equation needs a non-empty square matrix".into()));
    }
    let hf = h.to_f64();
    let coords = symmetric_coordinates(n);
    let mut op = DMatrix::zeros(n * n, coords.len());
    for c in 0..coords.len() {
        let mut unit = vec![0.0; coords.len()];
        unit[c] = 1.0;
        let image = commutator(&hf, &symmetric_from_coordinates(n, &coords, &unit));
        for (r, v) in image.iter().enumerate() {
            op[(r, c)] = *v;
        }
    }
    let svd = SVD::new(op, false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let threshold = tol * smax.max(f64::MIN_POSITIVE);
    let mut basis = Vec::new();
    for r in 0..vt.nrows() {
        if svd.singular_values[r] <= threshold {
            let x: Vec<f64> = vt.row(r).iter().copied().collect();
            basis.push(symmetric_from_coordinates(n, &coords, &x));
        }
    }
    Ok(basis)
}

#[derive(Clone, Debug)]
pub struct MetricOperator {
    pub theta: DMatrix<f64>,
    pub weights: Vec<f64>,
    /// `‖HᵀΘ − ΘH‖` (max-abs).
    pub residual: f64,
    /// Unit-norm left eigenvectors, in ascending eigenvalue order.
    pub left_eigenvectors: Vec<DVector<f64>>,
}

impl MetricOperator {
    /// Smallest eigenvalue of `Θ`, computed as `σ_min(L·√κ)²` from the
    /// factor rather than from `Θ` itself, which keeps it resolvable well
    /// below `ε·‖Θ‖` as the left eigenvectors coalesce near the EP.
    pub fn min_eigenvalue(&self) -> f64 {
        let cols: Vec<DVector<f64>> =
            self.left_eigenvectors.iter().zip(&self.weights).map(|(l, k)| l * k.sqrt()).collect();
        let s = SVD::new(DMatrix::from_columns(&cols), false, false).singular_values.min();
        s * s
    }
}

/// Fixes the sign of a real vector so that its largest entry is positive.
fn orient(v: DVector<f64>) -> DVector<f64> {
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

/// Unit-norm real left eigenvectors, in ascending eigenvalue order. The
/// spectrum must be real and simple.
pub fn left_eigenvectors(h: &Matrix) -> Result<Vec<DVector<f64>>> {
    let report = eigen(&h.transpose(), DEFAULT_TOL)?;
    if !report.is_real {
        return Err(EpnError::Spectral("spectrum is not real".into()));
    }
    if report.min_gap <= DEFAULT_TOL * (1.0 + report.spectral_radius) {
        return Err(EpnError::Spectral(format!("spectrum is not simple (min gap {:e})", report.min_gap)));
    }
    Ok(report
        .eigenvectors
        .column_iter()
        .map(|c| {
            // a real eigenvector up to a global phase: rotate the largest entry onto the real axis
            let k = c.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
            let phase = c[k].conj() / c[k].norm();
            let v = DVector::from_iterator(c.len(), c.iter().map(|z: &Complex64| (z * phase).re));
            orient(v.normalize())
        })
        .collect())
}

/// `Θ = Σ κ_n l_n l_nᵀ` over unit-norm left eigenvectors `l_n`.
pub fn metric_from_left_eigenvectors(h: &Matrix, kappa: &[f64]) -> Result<MetricOperator> {
    let n = h.dim();
    if kappa.len() != n {
        return Err(EpnError::Structural(format!("expected {n} weights, got {}", kappa.len())));
    }
    if let Some(k) = kappa.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
        return Err(EpnError::Domain(format!("weights must be positive, got {k}")));
    }
    let lefts = left_eigenvectors(h)?;
    let mut theta = DMatrix::zeros(n, n);
    for (l, k) in lefts.iter().zip(kappa) {
        theta += l * l.transpose() * *k;
    }
    let residual = commutator(&h.to_f64(), &theta).amax();
    Ok(MetricOperator { theta, weights: kappa.to_vec(), residual, left_eigenvectors: lefts })
}

/// Smallest eigenvalue of a symmetric matrix and whether it exceeds
/// `tol · ‖Θ‖`.
pub fn is_positive_definite(theta: &DMatrix<f64>, tol: f64) -> Result<(bool, f64)> {
    if theta.nrows() != theta.ncols() || theta.is_empty() {
        return Err(EpnError::Structural("metric must be a non-empty square matrix".into()));
    }
    let scale = theta.amax();
    if (theta - theta.transpose()).amax() > 1e-14 * scale {
        return Err(EpnError::Structural("metric is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(theta.clone()).eigenvalues;
    let min = eig.min();
    let norm = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    Ok((min > tol * norm, min))
}

/// `ψ₁ᵀ Θ ψ₂`.
pub fn inner_product(psi1: &DVector<f64>, psi2: &DVector<f64>, theta: &DMatrix<f64>) -> Result<f64> {
    let n = theta.nrows();
    if theta.ncols() != n || psi1.len() != n || psi2.len() != n {
        return Err(EpnError::Structural(format!(
            "dimension mismatch: {}x{} metric with vectors of length {} and {}",
            theta.nrows(),
            theta.ncols(),
            psi1.len(),
            psi2.len()
        )));
    }
    Ok(psi1.dot(&(theta * psi2)))
}

/// Weights used when assembling `Θ` along a sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum KappaPolicy {
    /// `κ_n = 1` for all levels.
    Unit,
    /// Fixed per-level weights, in ascending eigenvalue order.
    Fixed(Vec<f64>),
}

impl KappaPolicy {
    fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            KappaPolicy::Unit => vec![1.0; n],
            KappaPolicy::Fixed(w) => w.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub t: f64,
    pub native: f64,
    pub eigenvalues: Vec<Complex64>,
    pub min_gap: f64,
    /// Smallest eigenvalue of `Θ`; `NaN` when `Θ` could not be assembled.
    pub theta_min_eig: f64,
    pub is_real: bool,
    /// Why the row is incomplete, if it is.
    pub error: Option<String>,
}

/// Spectrum and metric indicators along a strictly increasing grid of
/// couplings `t ≥ 0`. Failures are recorded per row.
pub fn corridor_sweep(family: &ModelFamily, grid: &[f64], policy: &KappaPolicy) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(EpnError::Domain("sweep grid is empty".into()));
    }
    if grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(EpnError::Domain("sweep couplings must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EpnError::Domain("sweep grid must be strictly increasing".into()));
    }
    let n = family.dimension();
    let kappa = policy.weights(n);
    grid.iter()
        .map(|&t| {
            let h = family.continued(t)?;
            let native = family.to_native(t);
            match eigen(&h, DEFAULT_TOL) {
                Ok(report) => {
                    let (theta_min_eig, error) = match metric_from_left_eigenvectors(&h, &kappa) {
                        Ok(m) => (m.min_eigenvalue(), None),
                        Err(e) => (f64::NAN, Some(e.to_string())),
                    };
                    Ok(SweepRow {
                        t,
                        native,
                        eigenvalues: report.eigenvalues,
                        min_gap: report.min_gap,
                        theta_min_eig,
                        is_real: report.is_real,
                        error,
                    })
                }
                Err(e) => Ok(SweepRow {
                    t,
                    native,
                    eigenvalues: vec![Complex64::new(f64::NAN, f64::NAN); n],
                    min_gap: f64::NAN,
                    theta_min_eig: f64::NAN,
                    is_real: false,
                    error: Some(e.to_string()),
                }),
            }
        })
        .collect()
}

fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV with header `t,native_coupling,re_E_1..,im_E_1..,min_gap,theta_min_eig,is_real`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String> {
    let n = rows.first().map_or(0, |r| r.eigenvalues.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "native_coupling".to_string()];
    header.extend((1..=n).map(|i| format!("re_E_{i}")));
    header.extend((1..=n).map(|i| format!("im_E_{i}")));
    header.extend(["min_gap", "theta_min_eig", "is_real"].map(String::from));
    let io = |e: csv::Error| EpnError::Structural(format!("CSV output failed: {e}"));
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![fmt17(r.t), fmt17(r.native)];
        rec.extend(r.eigenvalues.iter().map(|e| fmt17(e.re)));
        rec.extend(r.eigenvalues.iter().map(|e| fmt17(e.im)));
        rec.push(fmt17(r.min_gap));
        rec.push(fmt17(r.theta_min_eig));
        rec.push(if r.is_real { "1" } else { "0" }.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| EpnError::Structural(format!("CSV output failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_positive() {
        let (pos, min) = is_positive_definite(&DMatrix::identity(3, 3), DEFAULT_TOL).unwrap();
        assert!(pos);
        assert!((min - 1.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(is_positive_definite(&m, DEFAULT_TOL), Err(EpnError::Structural(_))));
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let w = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(inner_product(&v, &w, &DMatrix::identity(2, 2)).is_err());
        assert_eq!(inner_product(&v, &v, &DMatrix::identity(2, 2)).unwrap(), 5.0);
    }

    #[test]
    fn sweep_grid_validation() {
        let fam = ModelFamily::toy7();
        assert!(corridor_sweep(&fam, &[], &KappaPolicy::Unit).is_err());
        assert!(corridor_sweep(&fam, &[0.5, 0.4], &KappaPolicy::Unit).is_err());
    }
}
