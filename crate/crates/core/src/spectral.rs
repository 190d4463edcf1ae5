//! Spectra, exceptional-point location, Jordan structure and transition
//! matrices.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{EpnError, Result};
use crate::exact::{ExactMatrix, ExactScalar};
use crate::hamiltonians::{build_jordan, split_by_coupling_graph, ModelFamily};
use crate::matrix::{Matrix, Number};
use crate::sturm::family_spectrum_is_real;

/// Default relative tolerance for ranks and the reality test.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm eigenvectors, column `i` belonging to `eigenvalues[i]`.
    pub eigenvectors: DMatrix<Complex64>,
    pub is_real: bool,
    pub min_gap: f64,
    /// Largest `‖Hv − Ev‖` over all pairs.
    pub max_residual: f64,
    pub spectral_radius: f64,
}

impl SpectralReport {
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }

    /// `{"n", "eigenvalues": [[re, im], …], "is_real", "min_gap", "max_residual"}`.
    pub fn to_json(&self) -> Value {
        let eig: Vec<Value> = self.eigenvalues.iter().map(|e| json!([e.re, e.im])).collect();
        json!({
            "n": self.eigenvalues.len(),
            "eigenvalues": eig,
            "is_real": self.is_real,
            "min_gap": self.min_gap,
            "max_residual": self.max_residual,
        })
    }
}

fn eigenvalues_of(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![Complex64::new(m[(0, 0)], 0.0)]);
    }
    let iterations = 10_000 * n;
    let schur = Schur::try_new(m.clone(), f64::EPSILON, iterations)
        .ok_or(EpnError::Solver { iterations, dimension: n })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Right singular vectors of `m` ordered by ascending singular value.
fn ascending_right_singular(m: &DMatrix<Complex64>) -> Vec<(f64, DVector<Complex64>)> {
    let svd = SVD::new(m.clone(), false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut out: Vec<(f64, DVector<Complex64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, vt.row(i).transpose().map(|z| z.conj())))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Eigen-decomposition on the float backend. The matrix is first split into
/// the connected components of its coupling graph, which keeps the
/// direct-sum models well conditioned.
pub fn eigen(h: &Matrix, tol: f64) -> Result<SpectralReport> {
    let n = h.dim();
    if n == 0 || h.nrows() != h.ncols() {
        return Err(EpnError::Structural("eigen needs a non-empty square matrix".into()));
    }
    let full = h.to_f64();
    if full.iter().any(|x| !x.is_finite()) {
        return Err(EpnError::Domain("matrix has non-finite entries".into()));
    }
    let scale = full.amax().max(1.0);
    let mut pairs: Vec<(Complex64, DVector<Complex64>)> = Vec::with_capacity(n);
    for (idx, sub) in split_by_coupling_graph(h) {
        let m = sub.to_f64();
        let mut vals = eigenvalues_of(&m)?;
        vals.sort_by(cmp_complex);
        let mc = m.map(|x| Complex64::new(x, 0.0));
        let k = idx.len();
        let mut i = 0;
        while i < vals.len() {
            // a run of numerically equal eigenvalues takes successive null vectors
            let mut j = i + 1;
            while j < vals.len() && (vals[j] - vals[i]).norm() <= tol * scale {
                j += 1;
            }
            let shifted = &mc - DMatrix::<Complex64>::identity(k, k) * vals[i];
            let svs = ascending_right_singular(&shifted);
            for (r, e) in vals[i..j].iter().enumerate() {
                let pick = if r < svs.len() && svs[r].0 <= tol * scale { r } else { 0 };
                let local = &svs[pick].1;
                let mut v = DVector::<Complex64>::zeros(n);
                for (a, &row) in idx.iter().enumerate() {
                    v[row] = local[a];
                }
                pairs.push((*e, v));
            }
            i = j;
        }
    }
    pairs.sort_by(|a, b| cmp_complex(&a.0, &b.0));
    let eigenvalues: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    let spectral_radius = eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let is_real = eigenvalues.iter().all(|e| e.im.abs() <= tol * (1.0 + spectral_radius));
    let mut min_gap = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            min_gap = min_gap.min((eigenvalues[a] - eigenvalues[b]).norm());
        }
    }
    let hc = full.map(|x| Complex64::new(x, 0.0));
    let max_residual = pairs
        .iter()
        .map(|(e, v)| (&hc * v - v * *e).norm())
        .fold(0.0, f64::max);
    Ok(SpectralReport { eigenvalues, eigenvectors, is_real, min_gap, max_residual, spectral_radius })
}

fn is_real_spectrum(m: &Matrix, tol: f64) -> Result<bool> {
    let mut radius: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for (_, sub) in split_by_coupling_graph(m) {
        for e in eigenvalues_of(&sub.to_f64())? {
            radius = radius.max(e.norm());
            max_im = max_im.max(e.im.abs());
        }
    }
    Ok(max_im <= tol * (1.0 + radius))
}

/// Number of probes used to check that the reality predicate switches once.
const BRACKET_PROBES: usize = 32;

/// Bisects the boundary between real and complex spectrum of a family, in
/// the family's native coupling. Beyond `t = 1` the family is continued
/// analytically, so brackets may extend past the exceptional point.
/// Reality is decided exactly from the family's chain data, falling back to
/// float eigenvalues only if that is unavailable.
pub fn find_ep(family: &ModelFamily, bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || lo < 0.0 {
        return Err(EpnError::Bracket(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(EpnError::Domain(format!("bisection tolerance must be positive, got {tol}")));
    }
    let real_at = |x: f64| -> Result<bool> {
        match family_spectrum_is_real(family, family.from_native(x)) {
            Some(real) => Ok(real),
            None => is_real_spectrum(&family.at_native(x)?, DEFAULT_TOL),
        }
    };
    if !real_at(lo)? {
        return Err(EpnError::Bracket(format!("spectrum is not real at the lower end {lo}")));
    }
    if real_at(hi)? {
        return Err(EpnError::Bracket(format!("spectrum is real on the whole bracket [{lo}, {hi}]")));
    }
    let mut seen_complex = false;
    for i in 1..BRACKET_PROBES {
        let x = lo + (hi - lo) * i as f64 / BRACKET_PROBES as f64;
        let real = real_at(x)?;
        if real && seen_complex {
            return Err(EpnError::Bracket(format!(
                "reality is not monotone on [{lo}, {hi}]: real again at {x}"
            )));
        }
        seen_complex |= !real;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if real_at(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn float_rank_with_threshold(m: &DMatrix<f64>, threshold: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    SVD::new(m.clone(), false, false).singular_values.iter().filter(|&&s| s > threshold).count()
}

/// Rank: exact elimination on the exact backend, otherwise the number of
/// singular values above `tol · σ_max`.
pub fn numerical_rank(m: &Matrix, tol: f64) -> usize {
    match m {
        Matrix::Exact(e) => e.rank(),
        Matrix::Float(f) => {
            if f.nrows() == 0 || f.ncols() == 0 {
                return 0;
            }
            let s = SVD::new(f.clone(), false, false).singular_values;
            let max = s.max();
            if max == 0.0 {
                0
            } else {
                s.iter().filter(|&&x| x > tol * max).count()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JordanStructure {
    pub eta: Number,
    /// Sizes of the Jordan blocks at `η`, descending.
    pub block_sizes: Vec<usize>,
    /// `rank((H − ηI)^p)` for `p = 0, 1, …` until it stabilizes.
    pub rank_filtration: Vec<usize>,
}

impl JordanStructure {
    /// Geometric multiplicity: the number of blocks.
    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn algebraic_multiplicity(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn to_json(&self) -> Value {
        let eta = match &self.eta {
            Number::Exact(x) if x.is_rational() => json!(x.to_string()),
            other => json!(other.to_f64()),
        };
        json!({ "eta": eta, "blocks": self.block_sizes })
    }
}

/// `H − ηI` on the backend both operands share.
fn shifted(h: &Matrix, eta: &Number) -> Matrix {
    match (h, eta) {
        (Matrix::Exact(m), Number::Exact(e)) => Matrix::Exact(m.shifted(e)),
        _ => {
            let n = h.dim();
            Matrix::Float(h.to_f64() - DMatrix::identity(n, n) * eta.to_f64())
        }
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Threshold for `A^p` on the float backend, scaled with `‖A‖^p` so that a
/// numerically vanishing power is recognised as zero.
fn power_threshold(norm: f64, p: usize, tol: f64) -> f64 {
    tol * norm.max(1.0).powi(p as i32)
}

fn rank_filtration(a: &Matrix, tol: f64) -> Vec<usize> {
    let n = a.dim();
    let mut ranks = vec![n];
    match a {
        Matrix::Exact(a) => {
            let mut power = ExactMatrix::identity(n);
            loop {
                power = &power * a;
                let r = power.rank();
                let done = r == *ranks.last().unwrap();
                ranks.push(r);
                if done || r == 0 {
                    break;
                }
            }
        }
        Matrix::Float(a) => {
            let norm = spectral_norm(a);
            let mut power = DMatrix::identity(n, n);
            for p in 1..=n {
                power = &power * a;
                let r = float_rank_with_threshold(&power, power_threshold(norm, p, tol));
                let done = r == *ranks.last().unwrap();
                ranks.push(r);
                if done || r == 0 {
                    break;
                }
            }
        }
    }
    // drop the repeated rank that signalled stabilization
    if ranks.len() > 2 && ranks[ranks.len() - 1] == ranks[ranks.len() - 2] {
        ranks.pop();
    }
    ranks
}

/// Block sizes from a rank filtration by the Weyr differences.
fn blocks_from_ranks(ranks: &[usize]) -> Option<Vec<usize>> {
    let d: Vec<usize> = ranks.windows(2).map(|w| w[0].checked_sub(w[1])).collect::<Option<_>>()?;
    let mut blocks = Vec::new();
    for p in 0..d.len() {
        let next = d.get(p + 1).copied().unwrap_or(0);
        let exactly = d[p].checked_sub(next)?;
        blocks.extend(std::iter::repeat(p + 1).take(exactly));
    }
    blocks.sort_unstable_by(|a, b| b.cmp(a));
    Some(blocks)
}

/// Jordan blocks belonging to `η`, which need not be the only eigenvalue.
pub fn local_jordan_structure(h: &Matrix, eta: &Number, tol: f64) -> Result<JordanStructure> {
    if h.nrows() != h.ncols() {
        return Err(EpnError::Structural("Jordan analysis needs a square matrix".into()));
    }
    let ranks = rank_filtration(&shifted(h, eta), tol);
    let blocks = blocks_from_ranks(&ranks)
        .ok_or_else(|| EpnError::Degeneracy(format!("rank sequence {ranks:?} is not a valid Weyr filtration")))?;
    if blocks.is_empty() {
        return Err(EpnError::Degeneracy(format!("{eta} is not an eigenvalue")));
    }
    Ok(JordanStructure { eta: eta.clone(), block_sizes: blocks, rank_filtration: ranks })
}

/// Jordan structure of a matrix whose whole spectrum is the single value `η`.
pub fn jordan_structure(h: &Matrix, eta: &Number, tol: f64) -> Result<JordanStructure> {
    let js = local_jordan_structure(h, eta, tol)?;
    if js.algebraic_multiplicity() != h.dim() {
        return Err(EpnError::Degeneracy(format!(
            "{eta} accounts for {} of {} eigenvalues; the spectrum is not fully degenerate there",
            js.algebraic_multiplicity(),
            h.dim()
        )));
    }
    Ok(js)
}

#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub q: Matrix,
    pub jordan: JordanStructure,
    /// `‖HQ − Q𝒥‖` (max-abs).
    pub residual: f64,
    pub det_abs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntertwinerCheck {
    /// `‖HQ − QJ‖` (max-abs); exactly 0 when verified in exact arithmetic.
    pub residual: f64,
    /// True when the residual was decided in exact arithmetic.
    pub exact: bool,
    pub det_abs: f64,
}

impl IntertwinerCheck {
    pub fn invertible(&self) -> bool {
        self.det_abs > 1e-12
    }
}

/// Returns `‖HQ − QJ‖` and `|det Q|`.
pub fn verify_intertwiner(h: &Matrix, q: &Matrix, j: &Matrix) -> Result<IntertwinerCheck> {
    let n = h.dim();
    for m in [h, q, j] {
        if m.nrows() != n || m.ncols() != n {
            return Err(EpnError::Structural(format!(
                "dimension mismatch: expected {n}x{n}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    if let (Matrix::Exact(h), Matrix::Exact(q), Matrix::Exact(j)) = (h, q, j) {
        let diff = &(h * q) - &(q * j);
        return Ok(IntertwinerCheck {
            residual: diff.max_abs(),
            exact: true,
            det_abs: q.determinant().to_f64().abs(),
        });
    }
    let (hf, qf, jf) = (h.to_f64(), q.to_f64(), j.to_f64());
    let diff = &hf * &qf - &qf * &jf;
    Ok(IntertwinerCheck { residual: diff.amax(), exact: false, det_abs: qf.determinant().abs() })
}

fn exact_chains(a: &ExactMatrix, blocks: &[usize]) -> Result<Vec<Vec<ExactScalar>>> {
    let n = a.nrows();
    let mut columns: Vec<Vec<ExactScalar>> = Vec::with_capacity(n);
    // generators chosen so far with their block sizes
    let mut gens: Vec<(usize, Vec<ExactScalar>)> = Vec::new();
    let mut level = blocks.first().copied().unwrap_or(0);
    while level > 0 {
        let wanted = blocks.iter().filter(|&&b| b == level).count();
        if wanted > 0 {
            let mut spanning: Vec<Vec<ExactScalar>> = a.pow(level - 1).null_space();
            for (size, g) in &gens {
                spanning.push(a.pow(size - level).mul_vec(g));
            }
            let mut rank = if spanning.is_empty() { 0 } else { ExactMatrix::from_columns(&spanning).rank() };
            let mut found = 0;
            for cand in a.pow(level).null_space() {
                if found == wanted {
                    break;
                }
                spanning.push(cand.clone());
                let r = ExactMatrix::from_columns(&spanning).rank();
                if r > rank {
                    rank = r;
                    gens.push((level, normalize_exact(cand)));
                    found += 1;
                } else {
                    spanning.pop();
                }
            }
            if found < wanted {
                return Err(EpnError::Structural(format!(
                    "could only find {found} of {wanted} Jordan chains of length {level}"
                )));
            }
        }
        level -= 1;
    }
    for (size, g) in &gens {
        let mut chain = vec![g.clone()];
        for _ in 1..*size {
            let next = a.mul_vec(chain.last().unwrap());
            chain.push(next);
        }
        columns.extend(chain.into_iter().rev());
    }
    Ok(columns)
}

fn normalize_exact(v: Vec<ExactScalar>) -> Vec<ExactScalar> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.to_f64().abs() > v[best].to_f64().abs() {
            best = i;
        }
    }
    let inv = v[best].inv().expect("non-zero vector");
    v.iter().map(|x| x * &inv).collect()
}

fn normalize_float(v: DVector<f64>) -> DVector<f64> {
    let best = v.iamax();
    let s = v[best];
    v / s
}

/// Orthonormal null-space basis from the SVD, with singular values at or
/// below `threshold` counted as zero.
pub(crate) fn float_null_space(m: &DMatrix<f64>, threshold: f64) -> Vec<DVector<f64>> {
    let svd = SVD::new(m.clone(), false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut out = Vec::new();
    for i in 0..vt.nrows() {
        let s = svd.singular_values.get(i).copied().unwrap_or(0.0);
        if s <= threshold {
            out.push(vt.row(i).transpose());
        }
    }
    out
}

fn column_rank(cols: &[DVector<f64>], tol: f64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let unit: Vec<DVector<f64>> = cols.iter().map(|c| c.normalize()).collect();
    numerical_rank(&Matrix::Float(DMatrix::from_columns(&unit)), tol)
}

fn float_chains(a: &DMatrix<f64>, blocks: &[usize], tol: f64) -> Result<Vec<DVector<f64>>> {
    let n = a.nrows();
    let norm = spectral_norm(a);
    let pow = |p: usize| -> DMatrix<f64> {
        let mut m = DMatrix::identity(n, n);
        for _ in 0..p {
            m = &m * a;
        }
        m
    };
    let null_of_power = |p: usize| -> Vec<DVector<f64>> {
        if p == 0 {
            return Vec::new();
        }
        float_null_space(&pow(p), power_threshold(norm, p, tol))
    };
    let mut gens: Vec<(usize, DVector<f64>)> = Vec::new();
    let mut level = blocks.first().copied().unwrap_or(0);
    while level > 0 {
        let wanted = blocks.iter().filter(|&&b| b == level).count();
        if wanted > 0 {
            let mut spanning = null_of_power(level - 1);
            for (size, g) in &gens {
                spanning.push(pow(size - level) * g);
            }
            let mut rank = column_rank(&spanning, tol);
            let mut found = 0;
            for cand in null_of_power(level) {
                if found == wanted {
                    break;
                }
                spanning.push(cand.clone());
                let r = column_rank(&spanning, tol);
                if r > rank {
                    rank = r;
                    gens.push((level, normalize_float(cand)));
                    found += 1;
                } else {
                    spanning.pop();
                }
            }
            if found < wanted {
                return Err(EpnError::Structural(format!(
                    "could only find {found} of {wanted} Jordan chains of length {level}"
                )));
            }
        }
        level -= 1;
    }
    let mut columns = Vec::with_capacity(n);
    for (size, g) in &gens {
        // q_s = g, q_{j−1} = A q_j
        let mut chain = vec![g.clone()];
        for _ in 1..*size {
            let next = a * chain.last().unwrap();
            chain.push(next);
        }
        columns.extend(chain.into_iter().rev());
    }
    Ok(columns)
}

/// Builds `Q` with Jordan chains as columns, so that `HQ = Q𝒥` where `𝒥` is
/// the direct sum of upper Jordan blocks in the order of `jordan.block_sizes`.
/// Each chain generator is scaled so that its largest entry is `+1`.
pub fn transition_matrix(h: &Matrix, jordan: &JordanStructure, tol: f64) -> Result<TransitionMatrix> {
    let n = h.dim();
    if jordan.algebraic_multiplicity() != n {
        return Err(EpnError::Structural(format!(
            "Jordan blocks {:?} do not cover dimension {n}",
            jordan.block_sizes
        )));
    }
    let a = shifted(h, &jordan.eta);
    let q = match &a {
        Matrix::Exact(a) => {
            let cols = exact_chains(a, &jordan.block_sizes)?;
            Matrix::Exact(ExactMatrix::from_columns(&cols))
        }
        Matrix::Float(a) => {
            let cols = float_chains(a, &jordan.block_sizes, tol)?;
            Matrix::Float(DMatrix::from_columns(&cols))
        }
    };
    let j = build_jordan(&jordan.block_sizes, &jordan.eta)?;
    let h_same = match (&q, h) {
        (Matrix::Float(_), Matrix::Exact(_)) => h.to_float(),
        _ => h.clone(),
    };
    let check = verify_intertwiner(&h_same, &q, &j)?;
    if !check.invertible() {
        return Err(EpnError::Structural(format!(
            "Jordan chains are not independent (|det Q| = {:e}); the block structure does not match H",
            check.det_abs
        )));
    }
    Ok(TransitionMatrix { q, jordan: jordan.clone(), residual: check.residual, det_abs: check.det_abs })
}

#[derive(Clone, Debug)]
pub struct ClusterAssignment {
    /// Level indices (positions in the sorted spectrum, 0-based) per cluster.
    pub subsets: Vec<Vec<usize>>,
    /// The limiting eigenvector `χ_k` of each cluster, unit norm.
    pub limit_vectors: Vec<DVector<f64>>,
    /// Eigenvalues at the probe coupling, in the sorted order used by `subsets`.
    pub energies: Vec<f64>,
}

/// Groups the eigenvectors at coupling `t_near < 1` by the limiting
/// eigenvector at `t = 1` they overlap with most. The limiting eigenvectors
/// are taken per connected component of the coupling graph.
pub fn cluster_levels(family: &ModelFamily, t_near: f64, tol: f64) -> Result<ClusterAssignment> {
    if !(0.0..1.0).contains(&t_near) {
        return Err(EpnError::Domain(format!("probe coupling must lie in [0, 1), got {t_near}")));
    }
    let limit = family.at(&Number::int(1))?.into_matrix();
    let eta = Number::rational(family.shift().clone());
    let n = limit.dim();
    let mut chis: Vec<DVector<f64>> = Vec::new();
    for (idx, sub) in split_by_coupling_graph(&limit) {
        let a = shifted(&sub, &eta);
        let local: Vec<DVector<f64>> = match &a {
            Matrix::Exact(e) => e
                .null_space()
                .into_iter()
                .map(|v| DVector::from_iterator(v.len(), v.iter().map(ExactScalar::to_f64)))
                .collect(),
            Matrix::Float(f) => float_null_space(f, DEFAULT_TOL * spectral_norm(f).max(1.0)),
        };
        for v in local {
            let mut full = DVector::zeros(n);
            for (a, &row) in idx.iter().enumerate() {
                full[row] = v[a];
            }
            chis.push(full.normalize());
        }
    }
    let report = eigen(&family.continued(t_near)?, DEFAULT_TOL)?;
    if !report.is_real {
        return Err(EpnError::Spectral(format!("spectrum is not real at t = {t_near}")));
    }
    if report.min_gap <= DEFAULT_TOL * (1.0 + report.spectral_radius) {
        return Err(EpnError::Spectral(format!("spectrum is not simple at t = {t_near}")));
    }
    let mut subsets = vec![Vec::new(); chis.len()];
    for level in 0..n {
        let v = report.eigenvectors.column(level);
        let vn = v.norm();
        let mut overlaps: Vec<(usize, f64)> = chis
            .iter()
            .enumerate()
            .map(|(k, chi)| {
                let dot: Complex64 = chi.iter().zip(v.iter()).map(|(c, z)| z * *c).sum();
                (k, dot.norm() / vn)
            })
            .collect();
        overlaps.sort_by(|a, b| b.1.total_cmp(&a.1));
        if overlaps.len() > 1 && overlaps[0].1 - overlaps[1].1 <= tol {
            return Err(EpnError::Clusterization {
                level,
                first: overlaps[0].0,
                second: overlaps[1].0,
                overlap_first: overlaps[0].1,
                overlap_second: overlaps[1].1,
            });
        }
        subsets[overlaps[0].0].push(level);
    }
    // larger clusters first; equal sizes keep coupling-graph order
    let mut order: Vec<usize> = (0..chis.len()).collect();
    order.sort_by(|&a, &b| subsets[b].len().cmp(&subsets[a].len()));
    Ok(ClusterAssignment {
        subsets: order.iter().map(|&k| subsets[k].clone()).collect(),
        limit_vectors: order.iter().map(|&k| chis[k].clone()).collect(),
        energies: report.real_parts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational_from_i64;
    use crate::hamiltonians::{build_tao_ep, build_toy7};

    #[test]
    fn diagonal_spectrum() {
        let m = Matrix::Float(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0])));
        let r = eigen(&m, DEFAULT_TOL).unwrap();
        assert_eq!(r.real_parts(), vec![-1.0, 2.0, 3.0]);
        assert!(r.is_real);
        assert_eq!(r.min_gap, 1.0);
        assert!(r.max_residual < 1e-14);
    }

    #[test]
    fn weyr_differences() {
        assert_eq!(blocks_from_ranks(&[7, 5, 3, 1, 0]).unwrap(), vec![4, 3]);
        assert_eq!(blocks_from_ranks(&[6, 3, 0]).unwrap(), vec![2, 2, 2]);
        assert_eq!(blocks_from_ranks(&[3, 3]).unwrap(), Vec::<usize>::new());
        assert!(blocks_from_ranks(&[4, 3, 1, 0]).is_none());
    }

    #[test]
    fn ep2_rank_and_blocks() {
        let h = build_tao_ep(2, &rational_from_i64(1), &rational_from_i64(0)).unwrap();
        assert_eq!(numerical_rank(h.matrix(), DEFAULT_TOL), 1);
        let js = jordan_structure(h.matrix(), &Number::int(0), DEFAULT_TOL).unwrap();
        assert_eq!(js.block_sizes, vec![2]);
        assert_eq!(js.to_json(), json!({"eta": "0", "blocks": [2]}));
    }

    #[test]
    fn wrong_eta_is_a_degeneracy_error() {
        let h = build_toy7(&Number::int(2)).unwrap();
        assert!(matches!(jordan_structure(h.matrix(), &Number::int(6), DEFAULT_TOL), Err(EpnError::Degeneracy(_))));
    }

    #[test]
    fn float_and_exact_toy_jordan_agree() {
        let h = build_toy7(&Number::int(2)).unwrap();
        let exact = jordan_structure(h.matrix(), &Number::int(7), DEFAULT_TOL).unwrap();
        let float = jordan_structure(&h.matrix().to_float(), &Number::Float(7.0), DEFAULT_TOL).unwrap();
        assert_eq!(exact.block_sizes, vec![4, 3]);
        assert_eq!(float.block_sizes, vec![4, 3]);
    }
}
