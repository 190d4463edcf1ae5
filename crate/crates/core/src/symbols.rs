//! Boxed diagonal labels and the combinatorics of their direct-sum splits.
//!
//! The unperturbed diagonal of an `N`-dimensional model is the equidistant,
//! centrally antisymmetric set `D(N) = {1−N, 3−N, …, N−1}`. An admissible
//! direct-sum decomposition partitions `D(N)` into blocks of the same shape,
//! `c·{1−n, 3−n, …, n−1}` with `n ≥ 2`. Each block becomes one tridiagonal
//! component of scale `c` in [`crate::hamiltonians`].
//!
//! Three counting routes are kept deliberately separate:
//!
//! * [`enumerate_decompositions`] works on `D(N)` itself, always peeling off
//!   the block that contains the largest remaining element;
//! * [`count_even`] works on the positive half `{1, 3, …, 2J−1}` of `D(2J)`
//!   with the odd-multiple blocks `B(j, k) = {(2i−1)(2k−1) : i ≤ j}`;
//! * [`count_odd`] works on the half `{0, 1, …, J}` of `D(2J+1)/2` with the
//!   zero-containing blocks `C(j, k) = {0, k, …, jk}` and the zero-free
//!   blocks `G(q, r) = {(2p−1)r : p ≤ q}`.

use std::cmp::{Ordering, Reverse};
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{EpnError, Result};
use crate::exact::{rational_from_i64, rational_to_i64, Rational};

/// An equidistant, centrally antisymmetric diagonal `η + c·{1−n, 3−n, …, n−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxedSymbol {
    length: usize,
    scale: Rational,
    shift: Rational,
}

impl BoxedSymbol {
    pub fn new(length: usize, scale: Rational, shift: Rational) -> Result<Self> {
        if length < 2 {
            return Err(EpnError::Domain(format!("component length must be at least 2, got {length}")));
        }
        if !scale.is_positive() {
            return Err(EpnError::Domain(format!("component scale must be positive, got {scale}")));
        }
        Ok(Self { length, scale, shift })
    }

    /// A centred component with integral scale.
    pub fn centered(length: usize, scale: i64) -> Result<Self> {
        Self::new(length, rational_from_i64(scale), Rational::zero())
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn shift(&self) -> &Rational {
        &self.shift
    }

    /// Integral scale; decompositions of `D(N)` always have one.
    pub fn integer_scale(&self) -> Option<i64> {
        rational_to_i64(&self.scale)
    }

    /// Diagonal entries in ascending order.
    pub fn diagonal(&self) -> Vec<Rational> {
        let n = self.length as i64;
        (1..=n)
            .map(|i| &self.shift + &self.scale * rational_from_i64(2 * i - 1 - n))
            .collect()
    }

    /// Integral diagonal of a centred component with integral scale.
    pub fn integer_diagonal(&self) -> Option<Vec<i64>> {
        if !self.shift.is_zero() {
            return None;
        }
        let c = self.integer_scale()?;
        let n = self.length as i64;
        Some((1..=n).map(|i| c * (2 * i - 1 - n)).collect())
    }

    /// Boxed notation, e.g. `[-3,-1,1,3]`.
    pub fn boxed_label(&self) -> String {
        let entries: Vec<String> = self.diagonal().iter().map(ToString::to_string).collect();
        format!("[{}]", entries.join(","))
    }

    fn sort_key(&self) -> (Reverse<usize>, &Rational) {
        (Reverse(self.length), &self.scale)
    }
}

/// Canonical `NxC` token, e.g. `4x2`.
impl fmt::Display for BoxedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.length, self.scale)
    }
}

/// The central set `D(N) = {1−N, 3−N, …, N−1}`.
pub fn central_diagonal(n: usize) -> Vec<i64> {
    let n = n as i64;
    (1..=n).map(|i| 2 * i - 1 - n).collect()
}

/// A partition of `D(N)` into centred boxed symbols, stored in canonical
/// order (descending length, then ascending scale).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decomposition {
    total_dimension: usize,
    components: Vec<BoxedSymbol>,
}

impl Decomposition {
    /// Validates and canonicalizes. The first violated invariant is reported.
    pub fn new(total_dimension: usize, mut components: Vec<BoxedSymbol>) -> Result<Self> {
        if total_dimension < 2 {
            return Err(EpnError::Domain(format!("dimension must be at least 2, got {total_dimension}")));
        }
        if components.is_empty() {
            return Err(EpnError::Structural("decomposition has no components".into()));
        }
        let mut seen = BTreeSet::new();
        for comp in &components {
            let diag = comp.integer_diagonal().ok_or_else(|| {
                EpnError::Structural(format!("component {comp} is not centred with integral scale"))
            })?;
            for v in diag {
                if !seen.insert(v) {
                    return Err(EpnError::Structural(format!(
                        "components overlap at diagonal value {v}"
                    )));
                }
            }
        }
        let target: BTreeSet<i64> = central_diagonal(total_dimension).into_iter().collect();
        if seen != target {
            let missing: Vec<i64> = target.difference(&seen).copied().collect();
            let extra: Vec<i64> = seen.difference(&target).copied().collect();
            return Err(EpnError::Structural(format!(
                "union of component diagonals is not D({total_dimension}): missing {missing:?}, extra {extra:?}"
            )));
        }
        components.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(Self { total_dimension, components })
    }

    /// The trivial single-component split `N x 1`.
    pub fn trivial(n: usize) -> Result<Self> {
        Self::new(n, vec![BoxedSymbol::centered(n, 1)?])
    }

    /// Parses `n1xc1,n2xc2,…`; the dimension is the sum of the lengths.
    pub fn parse(label: &str) -> Result<Self> {
        let comps = parse_components(label)?;
        let n = comps.iter().map(BoxedSymbol::length).sum();
        Self::new(n, comps)
    }

    /// Parses a label and checks it decomposes `D(n)`.
    pub fn parse_for(label: &str, n: usize) -> Result<Self> {
        let comps = parse_components(label)?;
        let total: usize = comps.iter().map(BoxedSymbol::length).sum();
        if total != n {
            return Err(EpnError::Structural(format!(
                "component lengths sum to {total}, expected N = {n}"
            )));
        }
        Self::new(n, comps)
    }

    pub fn total_dimension(&self) -> usize {
        self.total_dimension
    }

    pub fn components(&self) -> &[BoxedSymbol] {
        &self.components
    }

    /// Number of components, the geometric multiplicity of the limit.
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Component lengths, the partition `R(N)`.
    pub fn partition(&self) -> Vec<usize> {
        self.components.iter().map(BoxedSymbol::length).collect()
    }

    pub fn partition_label(&self) -> String {
        let parts: Vec<String> = self.partition().iter().map(ToString::to_string).collect();
        parts.join("+")
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(ToString::to_string).collect();
        parts.join(",")
    }

    pub fn is_anomalous(&self) -> bool {
        self.k() > 1
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PartialOrd for Decomposition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decomposition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_dimension.cmp(&other.total_dimension).then_with(|| {
            let a = self.components.iter().map(BoxedSymbol::sort_key);
            let b = other.components.iter().map(BoxedSymbol::sort_key);
            a.cmp(b)
        })
    }
}

fn parse_components(label: &str) -> Result<Vec<BoxedSymbol>> {
    let trimmed = label.trim();
    if trimmed.is_empty() {
        return Err(EpnError::Parse("empty decomposition label".into()));
    }
    trimmed
        .split(',')
        .map(|token| {
            let token = token.trim();
            let bad = || EpnError::Parse(format!("malformed component token {token:?}, expected NxC"));
            let (n, c) = token.split_once(['x', 'X']).ok_or_else(bad)?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            let c: i64 = c.trim().parse().map_err(|_| bad())?;
            if c <= 0 {
                return Err(bad());
            }
            BoxedSymbol::centered(n, c)
        })
        .collect()
}

fn require_dimension(n: usize) -> Result<()> {
    if n < 2 {
        Err(EpnError::Domain(format!("N must be at least 2, got {n}")))
    } else {
        Ok(())
    }
}

/// Every admissible decomposition of `D(N)` in canonical order.
pub fn enumerate_decompositions(n: usize, anomalous_only: bool) -> Result<Vec<Decomposition>> {
    require_dimension(n)?;
    let remaining: BTreeSet<i64> = central_diagonal(n).into_iter().collect();
    let mut found = Vec::new();
    let mut stack = Vec::new();
    peel_largest(&remaining, &mut stack, &mut |blocks| {
        let comps = blocks
            .iter()
            .map(|&(len, c)| BoxedSymbol::centered(len, c))
            .collect::<Result<Vec<_>>>()?;
        found.push(Decomposition::new(n, comps)?);
        Ok(())
    })?;
    found.sort();
    if anomalous_only {
        found.retain(Decomposition::is_anomalous);
    }
    Ok(found)
}

/// Removes the block holding the largest remaining value, for every
/// `(n, c)` with `c·(n−1) = M` whose block still fits, then recurses.
fn peel_largest(
    remaining: &BTreeSet<i64>,
    stack: &mut Vec<(usize, i64)>,
    emit: &mut dyn FnMut(&[(usize, i64)]) -> Result<()>,
) -> Result<()> {
    let Some(&largest) = remaining.last() else {
        return emit(stack);
    };
    if largest <= 0 {
        // only the central zero can be left, and it needs a partner
        return Ok(());
    }
    for len in 2..=remaining.len() {
        let span = len as i64 - 1;
        if largest % span != 0 {
            continue;
        }
        let c = largest / span;
        let block: Vec<i64> = (1..=len as i64).map(|i| c * (2 * i - 1 - len as i64)).collect();
        if !block.iter().all(|v| remaining.contains(v)) {
            continue;
        }
        let mut rest = remaining.clone();
        for v in &block {
            rest.remove(v);
        }
        stack.push((len, c));
        peel_largest(&rest, stack, emit)?;
        stack.pop();
    }
    Ok(())
}

/// `a(N)`: the number of admissible decompositions, trivial one included.
pub fn count_scenarios(n: usize) -> Result<usize> {
    Ok(enumerate_decompositions(n, false)?.len())
}

/// `b(J) = a(2J)`, counted on `{1, 3, …, 2J−1}` with blocks `B(j, k)`.
pub fn count_even(j: usize) -> Result<usize> {
    if j < 1 {
        return Err(EpnError::Domain(format!("J must be at least 1, got {j}")));
    }
    let set: BTreeSet<u64> = (1..=j as u64).map(|i| 2 * i - 1).collect();
    Ok(count_b_blocks(&set))
}

fn count_b_blocks(remaining: &BTreeSet<u64>) -> usize {
    let Some(&m) = remaining.last() else {
        return 1;
    };
    let mut total = 0;
    // m = (2j−1)(2k−1): every odd divisor d = 2k−1 fixes the block.
    for d in (1..=m).step_by(2) {
        if m % d != 0 {
            continue;
        }
        let top = m / d; // 2j − 1
        let block: Vec<u64> = (1..=top).step_by(2).map(|odd| odd * d).collect();
        if block.iter().all(|v| remaining.contains(v)) {
            let mut rest = remaining.clone();
            for v in &block {
                rest.remove(v);
            }
            total += count_b_blocks(&rest);
        }
    }
    total
}

/// `c(J) = a(2J+1)`, counted on `{0, 1, …, J}` with one `C(j, k)` block and
/// any number of `G(q, r)` blocks.
pub fn count_odd(j: usize) -> Result<usize> {
    if j < 1 {
        return Err(EpnError::Domain(format!("J must be at least 1, got {j}")));
    }
    let set: BTreeSet<u64> = (0..=j as u64).collect();
    Ok(count_cg_blocks(&set, false))
}

fn count_cg_blocks(remaining: &BTreeSet<u64>, zero_block_used: bool) -> usize {
    let Some(&m) = remaining.last() else {
        return usize::from(zero_block_used);
    };
    if m == 0 {
        return 0;
    }
    let take = |block: &[u64]| -> Option<BTreeSet<u64>> {
        if !block.iter().all(|v| remaining.contains(v)) {
            return None;
        }
        let mut rest = remaining.clone();
        for v in block {
            rest.remove(v);
        }
        Some(rest)
    };
    let mut total = 0;
    if !zero_block_used {
        // C(j, k) with j·k = m
        for k in 1..=m {
            if m % k != 0 {
                continue;
            }
            let block: Vec<u64> = (0..=m / k).map(|i| i * k).collect();
            if let Some(rest) = take(&block) {
                total += count_cg_blocks(&rest, true);
            }
        }
    }
    // G(q, r) with (2q−1)·r = m
    for d in (1..=m).step_by(2) {
        if m % d != 0 {
            continue;
        }
        let r = m / d;
        let block: Vec<u64> = (1..=d).step_by(2).map(|odd| odd * r).collect();
        if let Some(rest) = take(&block) {
            total += count_cg_blocks(&rest, zero_block_used);
        }
    }
    total
}

/// Which of the three sequences a report holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceVariant {
    /// `a(N)` indexed by `N`.
    A,
    /// `b(J) = a(2J)`.
    B,
    /// `c(J) = a(2J+1)`.
    C,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceReport {
    pub variant: SequenceVariant,
    pub values: Vec<(usize, usize)>,
}

impl SequenceReport {
    /// `a(N)` for `N = 2..=max_n`, `b(J)`/`c(J)` for `J = 1..=max_index`.
    pub fn compute(variant: SequenceVariant, max_index: usize) -> Result<Self> {
        if max_index < 1 {
            return Err(EpnError::Domain("sequence index must be at least 1".into()));
        }
        let values = match variant {
            SequenceVariant::A => {
                require_dimension(max_index)?;
                (2..=max_index).map(|n| Ok((n, count_scenarios(n)?))).collect::<Result<_>>()?
            }
            SequenceVariant::B => (1..=max_index).map(|j| Ok((j, count_even(j)?))).collect::<Result<_>>()?,
            SequenceVariant::C => (1..=max_index).map(|j| Ok((j, count_odd(j)?))).collect::<Result<_>>()?,
        };
        Ok(Self { variant, values })
    }
}

/// One row of the classification table: a single component of one
/// anomalous decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub partition: String,
    pub j: usize,
    pub n_j: usize,
    pub c_j: i64,
    pub label: String,
}

/// Rows for every anomalous (`K > 1`) decomposition with `N ≤ n_max`,
/// grouped by `N`, then by `K`, then in canonical order.
pub fn classification_table(n_max: usize) -> Result<Vec<TableRow>> {
    require_dimension(n_max)?;
    let mut rows = Vec::new();
    for n in 2..=n_max {
        let mut decs = enumerate_decompositions(n, true)?;
        decs.sort_by(|a, b| a.k().cmp(&b.k()).then_with(|| a.cmp(b)));
        for dec in decs {
            for (idx, comp) in dec.components().iter().enumerate() {
                rows.push(TableRow {
                    n,
                    k: dec.k(),
                    partition: dec.partition_label(),
                    j: idx + 1,
                    n_j: comp.length(),
                    c_j: comp.integer_scale().expect("integral scale"),
                    label: comp.boxed_label(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn table_to_csv(rows: &[TableRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row).map_err(|e| EpnError::Structural(e.to_string()))?;
    }
    if rows.is_empty() {
        wtr.write_record(["N", "K", "partition", "j", "n_j", "c_j", "label"])
            .map_err(|e| EpnError::Structural(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| EpnError::Structural(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Aligned plain-text rendering; the `N`, `K` and partition columns are only
/// printed on the first row of each decomposition.
pub fn table_to_text(rows: &[TableRow]) -> String {
    let header = ["N", "K", "R(N)", "j", "N_j", "c_j", "label"];
    let mut cells: Vec<[String; 7]> = Vec::with_capacity(rows.len());
    for row in rows {
        let first = row.j == 1;
        let lead = |s: String| if first { s } else { String::new() };
        cells.push([
            lead(row.n.to_string()),
            lead(row.k.to_string()),
            lead(row.partition.clone()),
            row.j.to_string(),
            row.n_j.to_string(),
            row.c_j.to_string(),
            row.label.clone(),
        ]);
    }
    let mut widths = header.map(str::len);
    for r in &cells {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let render = |r: &[String]| {
        let parts: Vec<String> = r.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = render(&header.map(String::from));
    out.push('\n');
    for r in &cells {
        out.push_str(&render(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(decs: &[Decomposition]) -> Vec<String> {
        decs.iter().map(Decomposition::label).collect()
    }

    #[test]
    fn n4_has_trivial_and_two_by_two() {
        let decs = enumerate_decompositions(4, false).unwrap();
        assert_eq!(labels(&decs), ["4x1", "2x1,2x3"]);
    }

    #[test]
    fn n2_is_unique() {
        assert_eq!(labels(&enumerate_decompositions(2, false).unwrap()), ["2x1"]);
        assert!(enumerate_decompositions(3, true).unwrap().is_empty());
    }

    #[test]
    fn n6_anomalous_matches_table() {
        let decs = enumerate_decompositions(6, true).unwrap();
        assert_eq!(labels(&decs), ["4x1,2x5", "2x1,2x3,2x5"]);
    }

    #[test]
    fn dimension_below_two_rejected() {
        assert!(matches!(enumerate_decompositions(1, false), Err(EpnError::Domain(_))));
        assert!(matches!(count_scenarios(0), Err(EpnError::Domain(_))));
        assert!(matches!(count_even(0), Err(EpnError::Domain(_))));
        assert!(matches!(count_odd(0), Err(EpnError::Domain(_))));
    }

    #[test]
    fn half_representation_examples() {
        assert_eq!(count_even(1).unwrap(), 1);
        assert_eq!(count_even(2).unwrap(), 2);
        assert_eq!(count_even(5).unwrap(), 6);
        assert_eq!(count_odd(2).unwrap(), 3);
        assert_eq!(count_odd(3).unwrap(), 6);
    }

    #[test]
    fn label_parsing_validates_union() {
        let toy = Decomposition::parse_for("4x2,3x2", 7).unwrap();
        assert_eq!(toy.partition(), [4, 3]);
        let k3 = Decomposition::parse_for("2x1,2x3,2x5", 6).unwrap();
        assert_eq!(k3.k(), 3);
        let err = Decomposition::parse_for("2x1,2x2", 4).unwrap_err();
        assert!(matches!(err, EpnError::Structural(_)), "{err}");
        assert!(matches!(Decomposition::parse("2x1,2y3"), Err(EpnError::Parse(_))));
        assert!(matches!(Decomposition::parse("2x1,2x1"), Err(EpnError::Structural(_))));
        assert!(matches!(Decomposition::parse("1x1"), Err(EpnError::Domain(_))));
        assert!(matches!(Decomposition::parse("2x0"), Err(EpnError::Parse(_))));
    }

    #[test]
    fn parse_canonicalizes_order() {
        let d = Decomposition::parse("2x5,4x1").unwrap();
        assert_eq!(d.label(), "4x1,2x5");
    }

    #[test]
    fn boxed_label_formatting() {
        let b = BoxedSymbol::centered(4, 1).unwrap();
        assert_eq!(b.boxed_label(), "[-3,-1,1,3]");
        assert_eq!(BoxedSymbol::centered(2, 5).unwrap().boxed_label(), "[-5,5]");
    }

    #[test]
    fn small_table_is_empty_until_four() {
        assert!(classification_table(3).unwrap().is_empty());
        let rows = classification_table(4).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].label, "[-3,3]");
    }
}
