//! Elements of the biquadratic field ℚ(√2, √3).
//!
//! Every entry of the closed-form exceptional-point matrices up to N = 8
//! (√2, √3, √6, 2√2, 2√3, …) lives here, so rank and Jordan decisions on
//! those matrices can be made without rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{EpnError, Result};

pub type Rational = BigRational;

/// Radicands of the basis `1, √2, √3, √6`.
const RADICANDS: [i64; 4] = [1, 2, 3, 6];

/// `q0 + q2·√2 + q3·√3 + q6·√6` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    coeffs: [Rational; 4],
}

impl ExactScalar {
    pub fn new(q0: Rational, q2: Rational, q3: Rational, q6: Rational) -> Self {
        Self { coeffs: [q0, q2, q3, q6] }
    }

    pub fn from_rational(q: Rational) -> Self {
        Self::new(q, Rational::zero(), Rational::zero(), Rational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Self::from_rational(Rational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// `r·√s` for `s ∈ {1, 2, 3, 6}`.
    fn radical(r: Rational, s: i64) -> Self {
        let mut out = Self::zero();
        let slot = RADICANDS.iter().position(|&x| x == s).expect("radicand in basis");
        out.coeffs[slot] = r;
        out
    }

    /// Exact square root of a non-negative integer, when it lies in the field.
    ///
    /// `m = r²·s` with `s` squarefree; representable iff `s ∈ {1, 2, 3, 6}`.
    pub fn sqrt_int(m: u64) -> Option<Self> {
        if m == 0 {
            return Some(Self::zero());
        }
        let mut rest = m;
        let mut root: u64 = 1;
        let mut p = 2u64;
        while p * p <= rest {
            while rest % (p * p) == 0 {
                rest /= p * p;
                root *= p;
            }
            p += 1;
        }
        let s = rest as i64;
        if RADICANDS.contains(&s) {
            Some(Self::radical(Rational::from_integer(BigInt::from(root)), s))
        } else {
            None
        }
    }

    pub fn coeffs(&self) -> &[Rational; 4] {
        &self.coeffs
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then(|| &self.coeffs[0])
    }

    pub fn to_f64(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(RADICANDS)
            .map(|(q, s)| q.to_f64().unwrap_or(f64::NAN) * (s as f64).sqrt())
            .sum()
    }

    /// Conjugate `√3 ↦ −√3` (fixes ℚ(√2)).
    fn conj3(&self) -> Self {
        let [a, b, c, d] = &self.coeffs;
        Self::new(a.clone(), b.clone(), -c.clone(), -d.clone())
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // x·conj3(x) lies in ℚ(√2): n0 + n2·√2.
        let c3 = self.conj3();
        let norm = self * &c3;
        let n0 = norm.coeffs[0].clone();
        let n2 = norm.coeffs[1].clone();
        let two = Rational::from_integer(BigInt::from(2));
        let rational_norm = &n0 * &n0 - &two * &n2 * &n2;
        debug_assert!(!rational_norm.is_zero());
        let conj2 = Self::new(n0, -n2, Rational::zero(), Rational::zero());
        let scale = Self::from_rational(rational_norm.recip());
        Some(&(&c3 * &conj2) * &scale)
    }

    /// Sign of the real number represented, decided exactly.
    ///
    /// Uses repeated squaring: `a + b√3` with `a, b ∈ ℚ(√2)` has the sign of
    /// `a` when `a² > 3b²` and the sign of `b` otherwise.
    pub fn signum(&self) -> i32 {
        fn sign_q2(a: &Rational, b: &Rational) -> i32 {
            // sign of a + b√2
            let sa = sign_q(a);
            let sb = sign_q(b);
            if sa == 0 {
                return sb;
            }
            if sb == 0 || sa == sb {
                return sa;
            }
            let two = Rational::from_integer(BigInt::from(2));
            let lhs = a * a;
            let rhs = &two * b * b;
            match lhs.cmp(&rhs) {
                std::cmp::Ordering::Greater => sa,
                std::cmp::Ordering::Less => sb,
                std::cmp::Ordering::Equal => 0,
            }
        }
        fn sign_q(a: &Rational) -> i32 {
            if a.is_zero() {
                0
            } else if a.is_positive() {
                1
            } else {
                -1
            }
        }
        let [q0, q2, q3, q6] = &self.coeffs;
        let sa = sign_q2(q0, q2);
        let sb = sign_q2(q3, q6);
        if sa == 0 {
            return sb;
        }
        if sb == 0 || sa == sb {
            return sa;
        }
        // Compare a² with 3b² inside ℚ(√2).
        let a = Self::new(q0.clone(), q2.clone(), Rational::zero(), Rational::zero());
        let b = Self::new(q3.clone(), q6.clone(), Rational::zero(), Rational::zero());
        let diff = &(&a * &a) - &(&Self::from_int(3) * &(&b * &b));
        match sign_q2(&diff.coeffs[0], &diff.coeffs[1]) {
            1 => sa,
            -1 => sb,
            _ => 0,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Coefficients as `"p/q"` strings, in basis order `1, √2, √3, √6`.
    pub fn to_strings(&self) -> [String; 4] {
        self.coeffs.clone().map(|q| format_rational(&q))
    }

    pub fn from_strings<S: AsRef<str>>(parts: &[S]) -> Result<Self> {
        if parts.len() != 4 {
            return Err(EpnError::Parse(format!(
                "exact entry needs 4 coefficients, got {}",
                parts.len()
            )));
        }
        let mut coeffs: [Rational; 4] = Default::default();
        for (slot, part) in coeffs.iter_mut().zip(parts) {
            *slot = parse_rational(part.as_ref())?;
        }
        Ok(Self { coeffs })
    }
}

pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"-0.125"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || EpnError::Parse(format!("not a rational number: {text:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" || digits.is_empty() { format!("{digits}0") } else { digits };
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Integer value of `q` when it is integral.
pub fn rational_to_i64(q: &Rational) -> Option<i64> {
    q.is_integer().then(|| q.to_integer().to_i64()).flatten()
}

pub fn rational_from_i64(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (q, s) in self.coeffs.iter().zip(RADICANDS) {
            if q.is_zero() {
                continue;
            }
            let sign = if q.is_negative() { "-" } else if wrote { "+" } else { "" };
            let mag = q.abs();
            let sep = if wrote { " " } else { "" };
            let body = match (s, mag.is_one()) {
                (1, _) => format!("{mag}"),
                (_, true) => format!("√{s}"),
                (_, false) => format!("{mag}√{s}"),
            };
            if wrote {
                write!(f, "{sep}{sign} {body}")?;
            } else {
                write!(f, "{sign}{body}")?;
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Zero for ExactScalar {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

impl One for ExactScalar {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        let [a0, a2, a3, a6] = &self.coeffs;
        let [b0, b2, b3, b6] = &rhs.coeffs;
        let two = rational_from_i64(2);
        let three = rational_from_i64(3);
        let six = rational_from_i64(6);
        ExactScalar::new(
            a0 * b0 + &two * a2 * b2 + &three * a3 * b3 + &six * a6 * b6,
            a0 * b2 + a2 * b0 + &three * (a3 * b6 + a6 * b3),
            a0 * b3 + a3 * b0 + &two * (a2 * b6 + a6 * b2),
            a0 * b6 + a6 * b0 + a2 * b3 + a3 * b2,
        )
    }
}

impl<'a> Div<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &ExactScalar) -> ExactScalar {
        self * &rhs.inv().expect("division by zero in ExactScalar")
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &ExactScalar) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&ExactScalar> for ExactScalar {
    fn sub_assign(&mut self, rhs: &ExactScalar) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl MulAssign<&ExactScalar> for ExactScalar {
    fn mul_assign(&mut self, rhs: &ExactScalar) {
        *self = &*self * rhs;
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar { coeffs: self.coeffs.map(|q| -q) }
    }
}

impl From<Rational> for ExactScalar {
    fn from(q: Rational) -> Self {
        Self::from_rational(q)
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: u64) -> ExactScalar {
        ExactScalar::sqrt_int(n).unwrap()
    }

    #[test]
    fn radical_products_close() {
        assert_eq!(&s(2) * &s(3), s(6));
        assert_eq!(&s(6) * &s(2), ExactScalar::from_int(2) * s(3));
        assert_eq!(&s(6) * &s(3), ExactScalar::from_int(3) * s(2));
        assert_eq!(&s(6) * &s(6), ExactScalar::from_int(6));
    }

    #[test]
    fn sqrt_int_squarefree_split() {
        assert_eq!(s(12), ExactScalar::from_int(2) * s(3));
        assert_eq!(s(8), ExactScalar::from_int(2) * s(2));
        assert_eq!(s(16), ExactScalar::from_int(4));
        assert_eq!(s(24), ExactScalar::from_int(2) * s(6));
        assert!(ExactScalar::sqrt_int(5).is_none());
        assert!(ExactScalar::sqrt_int(7).is_none());
        assert!(ExactScalar::sqrt_int(15).is_none());
    }

    #[test]
    fn inverse_of_mixed_element() {
        let x = ExactScalar::new(
            rational_from_i64(1),
            rational_from_i64(2),
            rational_from_i64(-1),
            Rational::new(1.into(), 3.into()),
        );
        let y = x.inv().unwrap();
        assert_eq!(&x * &y, ExactScalar::one());
        assert!(ExactScalar::zero().inv().is_none());
    }

    #[test]
    fn signum_decides_near_cancellation() {
        // √2 + √3 − √6 − 0.14... : 1.4142 + 1.7320 − 2.4495 = 0.6968
        let x = &(&s(2) + &s(3)) - &s(6);
        assert_eq!(x.signum(), 1);
        // 5 − 2√6 = (√3 − √2)² > 0, tiny
        let y = &ExactScalar::from_int(5) - &(ExactScalar::from_int(2) * s(6));
        assert_eq!(y.signum(), 1);
        assert_eq!((-y).signum(), -1);
        // 3√2 − 2√3·... : 3√2 vs √18 exactly equal
        let z = &(ExactScalar::from_int(3) * s(2)) - &s(18);
        assert_eq!(z.signum(), 0);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/4").unwrap(), Rational::new(3.into(), 4.into()));
        assert_eq!(parse_rational("0.6").unwrap(), Rational::new(3.into(), 5.into()));
        assert_eq!(parse_rational("-1.25").unwrap(), Rational::new((-5).into(), 4.into()));
        assert_eq!(parse_rational("7").unwrap(), rational_from_i64(7));
        assert_eq!(parse_rational("1e-2").unwrap(), Rational::new(1.into(), 100.into()));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn display_reads_naturally() {
        let x = &ExactScalar::from_int(-2) + &(ExactScalar::from_int(2) * s(2));
        assert_eq!(x.to_string(), "-2 + 2√2");
        assert_eq!(ExactScalar::zero().to_string(), "0");
        assert_eq!((-s(3)).to_string(), "-√3");
    }
}
