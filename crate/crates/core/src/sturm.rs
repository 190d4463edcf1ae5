//! Exact reality test for chain-coupled blocks.
//!
//! A block whose coupling graph is a path has a characteristic polynomial
//! given by the three-term recurrence
//! `P_k = (x − d_k) P_{k−1} − a_{k−1,k} a_{k,k−1} P_{k−2}`, which only needs
//! the diagonal and the coupling *products*. For the oscillator families
//! those products are `−c²t²k(n−k)`, rational whenever `t` is (and every
//! float is), so reality can be decided with Sturm sequences and no rounding
//! at all. Near a high-order EP this is the only reliable option: once the
//! distance to the EP drops below roughly ε^(2/n), rounding the couplings
//! individually is enough to split the nearly coalesced real levels into
//! complex pairs.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::exact::Rational;
use crate::hamiltonians::{FamilyKind, ModelFamily};
use crate::symbols::BoxedSymbol;

type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn degree(p: &Poly) -> usize {
    p.len().saturating_sub(1)
}

fn derivative(p: &Poly) -> Poly {
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * Rational::from_integer((i as i64).into())).collect())
}

/// Remainder and quotient of `a / b`, `b` nonzero.
fn div_rem(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    let db = degree(b);
    let lead = b.last().unwrap().clone();
    let mut q = vec![Rational::zero(); r.len().saturating_sub(db).max(1)];
    while !r.is_empty() && r.len() > db {
        let shift = r.len() - 1 - db;
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] -= &f * c;
        }
        q[shift] = f;
        r.pop();
        r = trim(r);
    }
    (trim(q), r)
}

/// Positive rescaling so the leading coefficient is ±1; signs are preserved.
fn normalize(p: Poly) -> Poly {
    match p.last() {
        Some(l) => {
            let s = l.abs();
            p.iter().map(|c| c / &s).collect()
        }
        None => p,
    }
}

fn sign_changes(signs: impl Iterator<Item = i32>) -> usize {
    let mut last = 0;
    let mut count = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Number of distinct real roots and the gcd of `p` and `p'`.
fn sturm(p: &Poly) -> (usize, Poly) {
    let mut seq = vec![normalize(p.clone()), normalize(derivative(p))];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let (_, r) = div_rem(&seq[n - 2], &seq[n - 1]);
        seq.push(normalize(r.into_iter().map(|c| -c).collect()));
    }
    let lead_sign = |q: &Poly| if q.last().unwrap().is_positive() { 1 } else { -1 };
    let at_plus = sign_changes(seq.iter().map(lead_sign));
    let at_minus = sign_changes(seq.iter().map(|q| if degree(q) % 2 == 0 { lead_sign(q) } else { -lead_sign(q) }));
    (at_minus - at_plus, seq.pop().unwrap())
}

fn all_roots_real(p: &Poly) -> bool {
    if degree(p) <= 1 {
        return true;
    }
    let (distinct, g) = sturm(p);
    let (square_free, _) = div_rem(p, &g);
    distinct == degree(&square_free) && all_roots_real(&g)
}

fn chain_polynomial(diagonal: &[Rational], products: &[Rational]) -> Poly {
    let mut prev: Poly = vec![Rational::one()];
    let mut cur: Poly = prev.clone();
    for (k, d) in diagonal.iter().enumerate() {
        // (x − d) · cur − p · prev
        let mut next = vec![Rational::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= d * c;
        }
        if k > 0 {
            for (i, c) in prev.iter().enumerate() {
                next[i] -= &products[k - 1] * c;
            }
        }
        prev = cur;
        cur = next;
    }
    trim(cur)
}

/// Whether every eigenvalue of the family member at `t ≥ 0` (continued past
/// `t = 1`) is real, decided exactly from the family's definition.
pub(crate) fn family_spectrum_is_real(family: &ModelFamily, t: f64) -> Option<bool> {
    let t = BigRational::from_float(t)?;
    let t2 = &t * &t;
    let chains: Vec<BoxedSymbol> = match family.kind() {
        FamilyKind::Tao { length, scale } => vec![BoxedSymbol::new(*length, scale.clone(), family.shift().clone()).ok()?],
        FamilyKind::DirectSum(dec) => dec
            .components()
            .iter()
            .map(|c| BoxedSymbol::new(c.length(), c.scale().clone(), c.shift() + family.shift()))
            .collect::<Result<_>>()
            .ok()?,
    };
    Some(chains.iter().all(|chain| {
        let n = chain.length();
        let c2 = chain.scale() * chain.scale();
        let products: Vec<Rational> =
            (1..n).map(|k| -(&c2 * &t2 * Rational::from_integer(((k * (n - k)) as i64).into()))).collect();
        all_roots_real(&chain_polynomial(&chain.diagonal(), &products))
    }))
}
