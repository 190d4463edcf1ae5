//! Matrix families with exceptional-point limits.
//!
//! The building block is the tridiagonal oscillator `n × n` matrix with
//! diagonal `η + c·(2i−1−n)` and off-diagonal couplings `±c·t·√(k(n−k))`.
//! Its spectrum is `η + c·(2m−1−n)·√(1−t²)`, so every level merges at
//! `t = 1`, where the matrix is similar to a single Jordan block.
//! Larger models are direct sums of such blocks, embedded so that the
//! `t = 0` diagonal is the equidistant set `η + D(N)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EpnError, Result};
use crate::exact::{rational_from_i64, ExactMatrix, ExactScalar, Rational};
use crate::matrix::{Matrix, Number};
use crate::symbols::Decomposition;

/// How a matrix was produced, when it came from a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub decomposition: Decomposition,
    pub shift: Rational,
    pub coupling: Number,
}

/// A real matrix with real diagonal and antisymmetric off-diagonal part.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    matrix: Matrix,
    provenance: Option<Provenance>,
}

impl HamiltonianMatrix {
    /// Wraps a matrix after checking the antisymmetry invariant.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(EpnError::Structural(format!(
                "Hamiltonian must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.has_antisymmetric_offdiagonal() {
            return Err(EpnError::Structural("off-diagonal part is not antisymmetric".into()));
        }
        Ok(Self { matrix, provenance: None })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.matrix.to_f64()
    }

    /// Same matrix on the float backend.
    pub fn to_float(&self) -> Self {
        Self { matrix: self.matrix.to_float(), provenance: self.provenance.clone() }
    }

    fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }
}

/// Sparse description of an antisymmetric-off-diagonal matrix.
struct Assembly {
    diagonal: Vec<Rational>,
    /// `(i, j, v)` with `i < j`: `H[i][j] = v`, `H[j][i] = −v`.
    upper: Vec<(usize, usize, Number)>,
}

impl Assembly {
    fn new(diagonal: Vec<Rational>) -> Self {
        Self { diagonal, upper: Vec::new() }
    }

    fn couple(&mut self, i: usize, j: usize, v: Number) {
        debug_assert!(i < j);
        self.upper.push((i, j, v));
    }

    fn build(self) -> Matrix {
        let n = self.diagonal.len();
        if self.upper.iter().all(|(_, _, v)| v.is_exact()) {
            let mut m = ExactMatrix::zeros(n, n);
            for (i, d) in self.diagonal.into_iter().enumerate() {
                m[(i, i)] = ExactScalar::from_rational(d);
            }
            for (i, j, v) in self.upper {
                let v = v.as_exact().expect("exact coupling").clone();
                m[(j, i)] = -v.clone();
                m[(i, j)] = v;
            }
            Matrix::Exact(m)
        } else {
            let mut m = DMatrix::zeros(n, n);
            for (i, d) in self.diagonal.iter().enumerate() {
                m[(i, i)] = ExactScalar::from_rational(d.clone()).to_f64();
            }
            for &(i, j, ref v) in &self.upper {
                let x = v.to_f64();
                m[(i, j)] = x;
                m[(j, i)] = -x;
            }
            Matrix::Float(m)
        }
    }
}

fn check_coupling(t: &Number) -> Result<()> {
    let too_big = t.minus(&Number::int(1)).signum() > 0;
    if t.signum() < 0 || too_big || t.to_f64().is_nan() {
        return Err(EpnError::Domain(format!("coupling t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

fn check_component(n: usize, c: &Rational) -> Result<()> {
    if n < 2 {
        return Err(EpnError::Domain(format!("component size must be at least 2, got {n}")));
    }
    if !c.is_positive() {
        return Err(EpnError::Domain(format!("component scale must be positive, got {c}")));
    }
    Ok(())
}

/// `c·t·√(k(n−k))`, exact when `t` is exact and the root lies in ℚ(√2, √3).
fn tao_coupling(n: usize, k: usize, c: &Rational, t: &Number) -> Number {
    let m = (k * (n - k)) as u64;
    if t.is_exact() && t.is_zero() {
        return Number::int(0);
    }
    match (t, ExactScalar::sqrt_int(m)) {
        (Number::Exact(t), Some(root)) => {
            let ct = t * &ExactScalar::from_rational(c.clone());
            Number::Exact(&ct * &root)
        }
        _ => {
            let c = ExactScalar::from_rational(c.clone()).to_f64();
            Number::Float(c * t.to_f64() * (m as f64).sqrt())
        }
    }
}

fn tao_assembly(n: usize, c: &Rational, eta: &Rational, t: &Number) -> Assembly {
    let ni = n as i64;
    let diagonal = (1..=ni).map(|i| eta + c * rational_from_i64(2 * i - 1 - ni)).collect();
    let mut a = Assembly::new(diagonal);
    for k in 1..n {
        a.couple(k - 1, k, tao_coupling(n, k, c, t));
    }
    a
}

/// Tridiagonal oscillator block at coupling `t ∈ [0, 1]`.
pub fn build_tao(n: usize, c: &Rational, eta: &Rational, t: &Number) -> Result<HamiltonianMatrix> {
    check_component(n, c)?;
    check_coupling(t)?;
    HamiltonianMatrix::new(tao_assembly(n, c, eta, t).build())
}

/// The exceptional-point limit `t = 1` of [`build_tao`].
pub fn build_tao_ep(n: usize, c: &Rational, eta: &Rational) -> Result<HamiltonianMatrix> {
    build_tao(n, c, eta, &Number::int(1))
}

fn toy7_decomposition() -> Decomposition {
    Decomposition::parse_for("4x2,3x2", 7).expect("valid toy decomposition")
}

/// The seven-level pentadiagonal toy with diagonal `1, 3, …, 13` and
/// second-diagonal couplings `(√3, √2, 2, √2, √3)·g`.
///
/// `g > 2` is accepted so the complex-spectrum regime can be explored.
pub fn build_toy7(g: &Number) -> Result<HamiltonianMatrix> {
    if g.signum() < 0 || g.to_f64().is_nan() {
        return Err(EpnError::Domain(format!("toy coupling g must be non-negative, got {g}")));
    }
    let half = Number::ratio(1, 2);
    let t = g.times(&half);
    let shift = rational_from_i64(7);
    let m = direct_sum_assembly(&toy7_decomposition(), &shift, &t).build();
    Ok(HamiltonianMatrix::new(m)?.with_provenance(Provenance {
        decomposition: toy7_decomposition(),
        shift,
        coupling: t,
    }))
}

/// Closed-form toy energies `7 + m·√(4 − g²)`, `m = −3..3`, in the order
/// `E_{−3}, …, E_{3}`. Complex for `g > 2`.
pub fn toy7_energies(g: f64) -> [Complex64; 7] {
    let root = Complex64::new(4.0 - g * g, 0.0).sqrt();
    std::array::from_fn(|i| Complex64::new(7.0, 0.0) + root * (i as f64 - 3.0))
}

/// The same energies written through `g = 2(1 − κ²)`:
/// `7 + 2m·√(2κ² − κ⁴)`.
pub fn toy7_energies_kappa(kappa: f64) -> [f64; 7] {
    let root = (2.0 * kappa * kappa - kappa.powi(4)).sqrt();
    std::array::from_fn(|i| 7.0 + 2.0 * (i as f64 - 3.0) * root)
}

/// Toy coupling for a given `κ`.
pub fn toy7_g_from_kappa(kappa: f64) -> f64 {
    2.0 * (1.0 - kappa * kappa)
}

/// Row of value `v` in the sorted diagonal `η + D(N)`.
fn embed_position(v: i64, n: usize) -> usize {
    ((v + n as i64 - 1) / 2) as usize
}

fn direct_sum_assembly(dec: &Decomposition, eta: &Rational, t: &Number) -> Assembly {
    let n = dec.total_dimension();
    let diagonal = crate::symbols::central_diagonal(n)
        .into_iter()
        .map(|v| eta + rational_from_i64(v))
        .collect();
    let mut a = Assembly::new(diagonal);
    for comp in dec.components() {
        let rows: Vec<usize> = comp
            .integer_diagonal()
            .expect("decomposition components are centred")
            .into_iter()
            .map(|v| embed_position(v, n))
            .collect();
        for k in 1..comp.length() {
            a.couple(rows[k - 1], rows[k], tao_coupling(comp.length(), k, comp.scale(), t));
        }
    }
    a
}

/// Direct sum of scaled oscillator blocks, one per component, with each
/// component row placed where its diagonal value sits in `η + D(N)`.
pub fn build_from_decomposition(dec: &Decomposition, eta: &Rational, t: &Number) -> Result<HamiltonianMatrix> {
    check_coupling(t)?;
    let m = direct_sum_assembly(dec, eta, t).build();
    Ok(HamiltonianMatrix::new(m)?.with_provenance(Provenance {
        decomposition: dec.clone(),
        shift: eta.clone(),
        coupling: t.clone(),
    }))
}

/// Pentadiagonal model with diagonal `1−N, …, N−1` and only the second
/// off-diagonals populated: `H[i][i+2] = couplings[i] = −H[i+2][i]`.
pub fn build_pentadiagonal_special(n: usize, couplings: &[Number]) -> Result<HamiltonianMatrix> {
    if n < 4 {
        return Err(EpnError::Domain(format!("pentadiagonal model needs N >= 4, got {n}")));
    }
    if couplings.len() != n - 2 {
        return Err(EpnError::Structural(format!(
            "pentadiagonal model with N = {n} needs {} couplings, got {}",
            n - 2,
            couplings.len()
        )));
    }
    let diagonal = crate::symbols::central_diagonal(n).into_iter().map(rational_from_i64).collect();
    let mut a = Assembly::new(diagonal);
    for (i, c) in couplings.iter().enumerate() {
        a.couple(i, i + 2, c.clone());
    }
    HamiltonianMatrix::new(a.build())
}

/// Couplings that put both parity components of the pentadiagonal model at
/// their own exceptional points (scale-2 oscillator blocks), multiplied by `t`.
pub fn pentadiagonal_couplings(n: usize, t: &Number) -> Result<Vec<Number>> {
    if n < 4 {
        return Err(EpnError::Domain(format!("pentadiagonal model needs N >= 4, got {n}")));
    }
    check_coupling(t)?;
    let sizes = [n.div_ceil(2), n / 2];
    let two = rational_from_i64(2);
    Ok((0..n - 2)
        .map(|i| tao_coupling(sizes[i % 2], i / 2 + 1, &two, t))
        .collect())
}

/// Block-diagonal direct sum of upper Jordan blocks `J^(n_j)(η)`.
pub fn build_jordan(block_sizes: &[usize], eta: &Number) -> Result<Matrix> {
    if block_sizes.contains(&0) {
        return Err(EpnError::Domain("Jordan block sizes must be positive".into()));
    }
    let n: usize = block_sizes.iter().sum();
    let mut superdiag = vec![false; n.saturating_sub(1)];
    let mut start = 0;
    for &s in block_sizes {
        for i in start..start + s - 1 {
            superdiag[i] = true;
        }
        start += s;
    }
    Ok(match eta {
        Number::Exact(e) => Matrix::Exact(ExactMatrix::from_fn(n, n, |i, j| {
            if i == j {
                e.clone()
            } else if j == i + 1 && superdiag[i] {
                ExactScalar::one()
            } else {
                ExactScalar::zero()
            }
        })),
        Number::Float(e) => Matrix::Float(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                *e
            } else if j == i + 1 && superdiag[i] {
                1.0
            } else {
                0.0
            }
        })),
    })
}

/// Connected components of the graph whose edges are the nonzero
/// off-diagonal entries, each with its principal submatrix. Components are
/// ordered by their smallest index; indices are 0-based.
pub fn split_by_coupling_graph(h: &Matrix) -> Vec<(Vec<usize>, Matrix)> {
    let n = h.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && !h.is_entry_zero(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<(Vec<usize>, Matrix)> =
        groups.into_values().map(|idx| { let sub = h.submatrix(&idx); (idx, sub) }).collect();
    out.sort_by_key(|(idx, _)| idx[0]);
    out
}

/// Adds a reproducible random antisymmetric matrix with entries in `[−ε, ε]`.
pub fn add_antisymmetric_perturbation(h: &HamiltonianMatrix, epsilon: f64, seed: u64) -> Result<HamiltonianMatrix> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(EpnError::Domain(format!("perturbation magnitude must be a non-negative number, got {epsilon}")));
    }
    let Matrix::Float(m) = h.matrix() else {
        return Err(EpnError::Backend("perturbations are only defined on the float backend".into()));
    };
    let mut out = m.clone();
    if epsilon > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-epsilon, epsilon);
        let n = out.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let d = dist.sample(&mut rng);
                out[(i, j)] += d;
                out[(j, i)] = -out[(i, j)];
            }
        }
    }
    Ok(HamiltonianMatrix { matrix: Matrix::Float(out), provenance: h.provenance.clone() })
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// A single oscillator block of size `length` and scale `scale`.
    Tao { length: usize, scale: Rational },
    /// A direct sum over a decomposition of `D(N)`.
    DirectSum(Decomposition),
}

/// A one-parameter family `t ↦ H(t)`, exceptional at `t = 1`, together with
/// the map to the family's own coupling (`g = 2t` for the toy).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFamily {
    kind: FamilyKind,
    shift: Rational,
    native_per_t: f64,
    native_name: &'static str,
}

impl ModelFamily {
    pub fn tao(length: usize, scale: Rational, shift: Rational) -> Result<Self> {
        check_component(length, &scale)?;
        Ok(Self { kind: FamilyKind::Tao { length, scale }, shift, native_per_t: 1.0, native_name: "t" })
    }

    pub fn direct_sum(dec: Decomposition, shift: Rational) -> Self {
        Self { kind: FamilyKind::DirectSum(dec), shift, native_per_t: 1.0, native_name: "t" }
    }

    /// The seven-level toy, natively parametrized by `g = 2t`.
    pub fn toy7() -> Self {
        Self {
            kind: FamilyKind::DirectSum(toy7_decomposition()),
            shift: rational_from_i64(7),
            native_per_t: 2.0,
            native_name: "g",
        }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn shift(&self) -> &Rational {
        &self.shift
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            FamilyKind::Tao { length, .. } => *length,
            FamilyKind::DirectSum(dec) => dec.total_dimension(),
        }
    }

    /// Jordan block sizes of the `t = 1` limit.
    pub fn block_sizes(&self) -> Vec<usize> {
        match &self.kind {
            FamilyKind::Tao { length, .. } => vec![*length],
            FamilyKind::DirectSum(dec) => dec.partition(),
        }
    }

    pub fn native_name(&self) -> &'static str {
        self.native_name
    }

    pub fn to_native(&self, t: f64) -> f64 {
        t * self.native_per_t
    }

    pub fn from_native(&self, native: f64) -> f64 {
        native / self.native_per_t
    }

    /// The member at `t ∈ [0, 1]`.
    pub fn at(&self, t: &Number) -> Result<HamiltonianMatrix> {
        match &self.kind {
            FamilyKind::Tao { length, scale } => build_tao(*length, scale, &self.shift, t),
            FamilyKind::DirectSum(dec) => build_from_decomposition(dec, &self.shift, t),
        }
    }

    /// The same formula continued to any `t ≥ 0` on the float backend; beyond
    /// `t = 1` the spectrum is complex.
    pub fn continued(&self, t: f64) -> Result<Matrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(EpnError::Domain(format!("coupling must be a non-negative number, got {t}")));
        }
        let t = Number::Float(t);
        Ok(match &self.kind {
            FamilyKind::Tao { length, scale } => tao_assembly(*length, scale, &self.shift, &t).build(),
            FamilyKind::DirectSum(dec) => direct_sum_assembly(dec, &self.shift, &t).build(),
        })
    }

    /// The member at native coupling (`g` for the toy), continued past the
    /// exceptional point when needed.
    pub fn at_native(&self, native: f64) -> Result<Matrix> {
        self.continued(self.from_native(native))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        rational_from_i64(n)
    }

    fn sqrt(n: u64) -> ExactScalar {
        ExactScalar::sqrt_int(n).unwrap()
    }

    fn exact(h: &HamiltonianMatrix) -> &ExactMatrix {
        h.matrix().as_exact().expect("exact backend")
    }

    #[test]
    fn ep2_block() {
        let h = build_tao_ep(2, &q(1), &q(0)).unwrap();
        assert_eq!(exact(&h), &ExactMatrix::from_int_rows(&[&[-1, 1], &[-1, 1]]));
        let h5 = build_tao_ep(2, &q(5), &q(0)).unwrap();
        assert_eq!(exact(&h5), &ExactMatrix::from_int_rows(&[&[-5, 5], &[-5, 5]]));
    }

    #[test]
    fn ep3_scaled_block() {
        let h = build_tao_ep(3, &q(2), &q(0)).unwrap();
        let m = exact(&h);
        let two_s2 = ExactScalar::from_int(2) * sqrt(2);
        assert_eq!(m[(0, 0)], ExactScalar::from_int(-4));
        assert_eq!(m[(0, 1)], two_s2);
        assert_eq!(m[(1, 0)], -two_s2.clone());
        assert_eq!(m[(1, 2)], two_s2);
        assert_eq!(m[(2, 2)], ExactScalar::from_int(4));
        assert!(m[(0, 2)].is_zero());
    }

    #[test]
    fn ep4_block_entries() {
        let h = build_tao_ep(4, &q(1), &q(0)).unwrap();
        let m = exact(&h);
        assert_eq!(m[(0, 1)], sqrt(3));
        assert_eq!(m[(1, 2)], ExactScalar::from_int(2));
        assert_eq!(m[(2, 3)], sqrt(3));
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let h = build_tao(3, &q(1), &q(0), &Number::int(0)).unwrap();
        assert_eq!(exact(&h), &ExactMatrix::from_int_rows(&[&[-2, 0, 0], &[0, 0, 0], &[0, 0, 2]]));
    }

    #[test]
    fn builder_domain_errors() {
        assert!(matches!(build_tao(1, &q(1), &q(0), &Number::int(0)), Err(EpnError::Domain(_))));
        assert!(matches!(build_tao(3, &q(0), &q(0), &Number::int(0)), Err(EpnError::Domain(_))));
        assert!(matches!(build_tao(3, &q(1), &q(0), &Number::ratio(11, 10)), Err(EpnError::Domain(_))));
        assert!(matches!(build_tao(3, &q(1), &q(0), &Number::Float(-0.1)), Err(EpnError::Domain(_))));
        assert!(matches!(build_toy7(&Number::Float(-1.0)), Err(EpnError::Domain(_))));
        assert!(build_toy7(&Number::Float(2.5)).is_ok());
    }

    #[test]
    fn non_field_radicals_fall_back_to_float() {
        // √(1·5) is outside ℚ(√2, √3)
        let h = build_tao_ep(6, &q(1), &q(0)).unwrap();
        assert!(matches!(h.matrix(), Matrix::Float(_)));
        assert!((h.matrix().entry_f64(0, 1) - 5f64.sqrt()).abs() < 1e-15);
        let h = build_tao(4, &q(1), &q(0), &Number::Float(0.5)).unwrap();
        assert!(matches!(h.matrix(), Matrix::Float(_)));
    }

    #[test]
    fn toy_matrix_entries() {
        let h = build_toy7(&Number::int(1)).unwrap();
        let m = exact(&h);
        for i in 0..7 {
            assert_eq!(m[(i, i)], ExactScalar::from_int(2 * i as i64 + 1));
        }
        let expected = [sqrt(3), sqrt(2), ExactScalar::from_int(2), sqrt(2), sqrt(3)];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(&m[(i, i + 2)], e);
            assert_eq!(m[(i + 2, i)], -e.clone());
            if i + 1 < 7 {
                assert!(m[(i, i + 1)].is_zero());
            }
        }
    }

    #[test]
    fn jordan_blocks() {
        let j = build_jordan(&[4, 3], &Number::int(7)).unwrap();
        let m = j.as_exact().unwrap();
        assert_eq!(m[(3, 4)], ExactScalar::zero());
        assert_eq!(m[(2, 3)], ExactScalar::one());
        assert_eq!(m[(4, 5)], ExactScalar::one());
        assert_eq!(m[(6, 6)], ExactScalar::from_int(7));
        let one = build_jordan(&[1], &Number::Float(2.5)).unwrap();
        assert_eq!(one.to_f64()[(0, 0)], 2.5);
        assert!(build_jordan(&[2, 0], &Number::int(0)).is_err());
    }

    #[test]
    fn perturbation_contract() {
        let h = build_toy7(&Number::Float(1.0)).unwrap();
        assert_eq!(add_antisymmetric_perturbation(&h, 0.0, 1).unwrap(), h);
        let a = add_antisymmetric_perturbation(&h, 1e-3, 42).unwrap();
        let b = add_antisymmetric_perturbation(&h, 1e-3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.matrix().has_antisymmetric_offdiagonal());
        let diff = a.to_f64() - h.to_f64();
        assert!(diff.amax() <= 1e-3);
        assert!(diff.amax() > 0.0);
        let exact_h = build_toy7(&Number::int(1)).unwrap();
        assert!(matches!(add_antisymmetric_perturbation(&exact_h, 1e-3, 1), Err(EpnError::Backend(_))));
    }

    #[test]
    fn pentadiagonal_validation() {
        assert!(matches!(
            build_pentadiagonal_special(6, &vec![Number::int(0); 3]),
            Err(EpnError::Structural(_))
        ));
        let zero = build_pentadiagonal_special(5, &vec![Number::int(0); 3]).unwrap();
        let m = exact(&zero);
        assert_eq!(m, &ExactMatrix::from_fn(5, 5, |i, j| if i == j {
            ExactScalar::from_int(2 * i as i64 - 4)
        } else {
            ExactScalar::zero()
        }));
    }
}
