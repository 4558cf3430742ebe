//! Reals stored as a sign and the log of the magnitude.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SignedLogReal {
    /// -1, 0 or +1.
    pub sign: i8,
    /// ln|value|; `-inf` exactly when `sign == 0`.
    pub log_magnitude: f64,
}

impl SignedLogReal {
    pub const ZERO: SignedLogReal = SignedLogReal { sign: 0, log_magnitude: f64::NEG_INFINITY };
    pub const ONE: SignedLogReal = SignedLogReal { sign: 1, log_magnitude: 0.0 };

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            SignedLogReal::ZERO
        } else {
            SignedLogReal { sign: sign.signum(), log_magnitude }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            SignedLogReal::ZERO
        } else {
            SignedLogReal { sign: if x > 0.0 { 1 } else { -1 }, log_magnitude: x.abs().ln() }
        }
    }

    /// From a log-magnitude with positive sign.
    pub fn from_ln(log_magnitude: f64) -> Self {
        SignedLogReal::new(1, log_magnitude)
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.log_magnitude.exp()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn abs(&self) -> Self {
        SignedLogReal::new(self.sign.abs(), self.log_magnitude)
    }

    pub fn log10_abs(&self) -> f64 {
        self.log_magnitude / std::f64::consts::LN_10
    }

    pub fn neg(&self) -> Self {
        SignedLogReal { sign: -self.sign, log_magnitude: self.log_magnitude }
    }

    pub fn mul(&self, o: &Self) -> Self {
        SignedLogReal::new(self.sign * o.sign, self.log_magnitude + o.log_magnitude)
    }

    pub fn div(&self, o: &Self) -> Self {
        assert!(o.sign != 0, "division by zero SignedLogReal");
        SignedLogReal::new(self.sign * o.sign, self.log_magnitude - o.log_magnitude)
    }

    pub fn scale(&self, x: f64) -> Self {
        self.mul(&SignedLogReal::from_f64(x))
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.sign == 0 {
            return *o;
        }
        if o.sign == 0 {
            return *self;
        }
        let (a, b) = if self.log_magnitude >= o.log_magnitude { (self, o) } else { (o, self) };
        let r = (b.log_magnitude - a.log_magnitude).exp();
        let s = if a.sign == b.sign { r.ln_1p() } else { (-r).ln_1p() };
        SignedLogReal::new(a.sign, a.log_magnitude + s)
    }

    /// Ratio `self / other` as an f64, safe when both are tiny.
    pub fn ratio(&self, o: &Self) -> f64 {
        (self.sign * o.sign) as f64 * (self.log_magnitude - o.log_magnitude).exp()
    }
}

impl fmt::Display for SignedLogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == 0 {
            return write!(f, "0");
        }
        let l10 = self.log10_abs();
        let ex = l10.floor();
        let mant = 10f64.powf(l10 - ex);
        write!(f, "{}{:.16}e{}", if self.sign < 0 { "-" } else { "" }, mant, ex as i64)
    }
}
