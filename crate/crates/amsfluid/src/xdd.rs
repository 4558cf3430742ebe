//! Double-double mantissa with a separate binary exponent.
//!
//! Products of binomials and eigenvalue ratios easily leave the f64
//! exponent range for larger N, and the spectral sums cancel by up to a
//! dozen digits at N=20.  `Xdd` keeps ~31 digits and an i64 exponent, so
//! neither problem arises and no transcendental calls are needed for
//! products or sums.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub};

use twofloat::TwoFloat;

use crate::signed::SignedLogReal;

/// Value `m * 2^e` with `0.5 <= |m| < 1` unless zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xdd {
    m: TwoFloat,
    e: i64,
}

/// Bits beyond which the smaller addend cannot affect a double-double.
const ALIGN_LIMIT: i64 = 120;

fn scale2(t: TwoFloat, mut k: i64) -> TwoFloat {
    let mut t = t;
    while k != 0 {
        let step = k.clamp(-1000, 1000);
        t *= libm::ldexp(1.0, step as i32);
        k -= step;
    }
    t
}

pub fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// Double-double quotient by long division.
///
/// twofloat's own `TwoFloat / TwoFloat` forms the residual `1 - hi*(1/hi)`
/// without an FMA and so only reaches ~1e-17 relative accuracy.
pub fn div_dd(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// Square root with one extra Newton step on top of twofloat's.
pub fn sqrt_dd(x: TwoFloat) -> TwoFloat {
    let s = x.sqrt();
    if s.hi() == 0.0 || !s.hi().is_finite() {
        return s;
    }
    s + div_dd(x - s * s, 2.0 * s)
}

/// e^r - 1 for |r| <= ~0.35, accurate to full double-double.
fn expm1_small(r: TwoFloat) -> TwoFloat {
    const HALVINGS: i32 = 10;
    let t = r / 1024.0;
    // Taylor series; |t| < 4e-4 so 12 terms reach 1e-45.
    let mut term = t;
    let mut s = t;
    for i in 2..=12 {
        term = term * t / i as f64;
        s += term;
    }
    for _ in 0..HALVINGS {
        s = s * (s + 2.0);
    }
    s
}

/// e^x in double-double; plain f64 range only.
pub fn exp_dd(x: TwoFloat) -> TwoFloat {
    Xdd::exp_tf(x).to_tf()
}

impl Xdd {
    pub const ZERO: Xdd = Xdd { m: TwoFloat::from_f64(0.0), e: 0 };

    pub fn from_tf(t: TwoFloat) -> Self {
        Xdd { m: t, e: 0 }.norm()
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_tf(TwoFloat::from(x))
    }

    pub fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn norm(self) -> Self {
        let hi = self.m.hi();
        if hi == 0.0 || !hi.is_finite() {
            return Xdd { m: self.m, e: 0 };
        }
        let (_, ex) = libm::frexp(hi);
        if ex == 0 {
            return self;
        }
        Xdd { m: scale2(self.m, -(ex as i64)), e: self.e + ex as i64 }
    }

    pub fn is_zero(&self) -> bool {
        self.m.hi() == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.m.hi().is_finite() && self.m.lo().is_finite()
    }

    pub fn signum(&self) -> i8 {
        if self.m.hi() > 0.0 {
            1
        } else if self.m.hi() < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn abs(self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self
        }
    }

    /// Nearest f64, flushing to 0 or infinity outside the f64 range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.e > 1100 {
            return f64::INFINITY * self.m.hi().signum();
        }
        if self.e < -1200 {
            return 0.0;
        }
        let k = self.e as i32;
        libm::ldexp(self.m.hi(), k) + libm::ldexp(self.m.lo(), k)
    }

    /// The value as a plain double-double; only safe inside f64 range.
    pub fn to_tf(&self) -> TwoFloat {
        scale2(self.m, self.e)
    }

    /// Natural log of the magnitude in double-double precision.
    pub fn ln_abs_tf(&self) -> TwoFloat {
        let m = if self.m.hi() < 0.0 { -self.m } else { self.m };
        // One Newton step on y = ln m using the accurate exponential.
        let y = dd(m.hi().ln());
        let y = y + m * Xdd::exp_tf(-y).to_tf() - 1.0;
        y + twofloat::consts::LN_2 * (self.e as f64)
    }

    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.m.hi().abs().ln() + self.m.lo() / self.m.hi() + (self.e as f64) * std::f64::consts::LN_2
    }

    /// Decimal exponent of the magnitude, for cancellation accounting.
    pub fn log10_abs(&self) -> f64 {
        self.ln_abs() / std::f64::consts::LN_10
    }

    /// `e^t` for a double-double argument of any size.
    pub fn exp_tf(t: TwoFloat) -> Self {
        let k = (t.hi() / std::f64::consts::LN_2).round();
        let r = t - twofloat::consts::LN_2 * k;
        Xdd { m: expm1_small(r) + 1.0, e: k as i64 }.norm()
    }

    pub fn powi(self, n: u32) -> Self {
        let mut base = self;
        let mut acc = Xdd::one();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    pub fn recip(self) -> Self {
        Xdd::one() / self
    }

    pub fn to_signed_log(&self) -> SignedLogReal {
        if self.is_zero() {
            SignedLogReal::ZERO
        } else {
            SignedLogReal::new(self.signum(), self.ln_abs())
        }
    }

    pub fn cmp_abs(&self, other: &Xdd) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.e.cmp(&other.e) {
            Ordering::Equal => self.m.hi().abs().partial_cmp(&other.m.hi().abs()).unwrap_or(Ordering::Equal),
            o => o,
        }
    }
}

impl From<f64> for Xdd {
    fn from(x: f64) -> Self {
        Xdd::from_f64(x)
    }
}

impl From<TwoFloat> for Xdd {
    fn from(t: TwoFloat) -> Self {
        Xdd::from_tf(t)
    }
}

impl Neg for Xdd {
    type Output = Xdd;
    fn neg(self) -> Xdd {
        Xdd { m: -self.m, e: self.e }
    }
}

impl Mul for Xdd {
    type Output = Xdd;
    fn mul(self, rhs: Xdd) -> Xdd {
        if self.is_zero() || rhs.is_zero() {
            return Xdd::ZERO;
        }
        Xdd { m: self.m * rhs.m, e: self.e + rhs.e }.norm()
    }
}

impl MulAssign for Xdd {
    fn mul_assign(&mut self, rhs: Xdd) {
        *self = *self * rhs;
    }
}

impl Div for Xdd {
    type Output = Xdd;
    fn div(self, rhs: Xdd) -> Xdd {
        if self.is_zero() {
            return Xdd::ZERO;
        }
        Xdd { m: div_dd(self.m, rhs.m), e: self.e - rhs.e }.norm()
    }
}

impl Add for Xdd {
    type Output = Xdd;
    fn add(self, rhs: Xdd) -> Xdd {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return rhs;
        }
        let (big, small) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let d = small.e - big.e;
        if d < -ALIGN_LIMIT {
            return big;
        }
        let m = big.m + scale2(small.m, d);
        if m.hi() == 0.0 {
            return Xdd::ZERO;
        }
        Xdd { m, e: big.e }.norm()
    }
}

impl AddAssign for Xdd {
    fn add_assign(&mut self, rhs: Xdd) {
        *self = *self + rhs;
    }
}

impl Sub for Xdd {
    type Output = Xdd;
    fn sub(self, rhs: Xdd) -> Xdd {
        self + (-rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survives_huge_range() {
        let big = Xdd::from_f64(1e300).powi(5);
        let small = Xdd::from_f64(1e-300).powi(5);
        let one = big * small;
        assert!((one.to_f64() - 1.0).abs() < 1e-14);
        assert!((big.log10_abs() - 1500.0).abs() < 1e-9);
        assert_eq!(big.to_f64(), f64::INFINITY);
    }

    #[test]
    fn keeps_double_double_digits() {
        // (1 + 2^-80) - 1 is lost in f64 but not here.
        let tiny = libm::ldexp(1.0, -80);
        let a = Xdd::one() + Xdd::from_f64(tiny);
        let d = a - Xdd::one();
        assert_eq!(d.to_f64(), tiny);
    }

    #[test]
    fn exp_round_trip() {
        for &x in &[-700.5, -3.25, 0.125, 2.0, 40.0, 2500.0] {
            let t = dd(x);
            let p = Xdd::exp_tf(t) * Xdd::exp_tf(-t);
            let err = (p - Xdd::one()).abs().to_f64();
            assert!(err < 1e-28, "x={x} err={err}");
            assert!((Xdd::exp_tf(t).ln_abs() - x).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn division_is_full_precision() {
        let a = dd(3.7);
        let b = dd(1.3) + dd(1e-20);
        let q = div_dd(a, b);
        assert!((q * b - a).hi().abs() < 1e-30);
        let r = Xdd::one() / Xdd::from_tf(b);
        assert!(((r * Xdd::from_tf(b)) - Xdd::one()).abs().to_f64() < 1e-31);
    }

    #[test]
    fn ordering_by_magnitude() {
        let a = Xdd::from_f64(-3.0);
        let b = Xdd::from_f64(2.0);
        assert_eq!(a.cmp_abs(&b), Ordering::Greater);
        assert_eq!(Xdd::ZERO.cmp_abs(&b), Ordering::Less);
    }
}
