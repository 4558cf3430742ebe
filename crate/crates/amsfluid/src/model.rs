//! Model parameters and the constants derived from them.

use crate::error::{fail, Reason, Result};

/// Raw inputs: `n` sources, off->on rate `lambda`, drain rate `c`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    pub n: usize,
    pub lambda: f64,
    pub c: f64,
}

/// Relative distance to the nearest integer below which `c` is rejected.
pub const INTEGER_C_TOL: f64 = 1e-12;

impl ModelParams {
    pub fn new(n: usize, lambda: f64, c: f64) -> Self {
        ModelParams { n, lambda, c }
    }

    pub fn from_gamma(n: usize, lambda: f64, gamma: f64) -> Self {
        ModelParams { n, lambda, c: gamma * n as f64 }
    }

    /// Checks every invariant; the error carries the reason code.
    pub fn validate(&self) -> Result<()> {
        let n = self.n as f64;
        if self.n == 0 || !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return fail(Reason::OutOfRange, format!("need n >= 1 and lambda > 0, got n={} lambda={}", self.n, self.lambda));
        }
        if !(self.c > 0.0) || !(self.c < n) {
            // c outside (0, n) is also a stability violation, but the range check is more specific.
            if self.c.is_finite() && self.c >= n {
                return fail(Reason::Unstable, format!("c={} must be below n={}", self.c, self.n));
            }
            return fail(Reason::OutOfRange, format!("c={} must lie in (0, n)", self.c));
        }
        let gamma = self.c / n;
        if !(self.lambda / (self.lambda + 1.0) < gamma) {
            return fail(
                Reason::Unstable,
                format!("lambda/(lambda+1)={} must be below gamma={}", self.lambda / (self.lambda + 1.0), gamma),
            );
        }
        let frac = (self.c - self.c.round()).abs();
        if frac <= INTEGER_C_TOL * self.c.abs().max(1.0) {
            return fail(Reason::IntegerC, format!("c={} is an integer", self.c));
        }
        Ok(())
    }

    pub fn derive(&self) -> DerivedParams {
        DerivedParams::from_raw(self)
    }

    pub fn validated(self) -> Result<DerivedParams> {
        self.validate()?;
        Ok(self.derive())
    }
}

/// Constants every formula consumes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DerivedParams {
    pub n: usize,
    pub lambda: f64,
    pub c: f64,
    pub gamma: f64,
    pub rho: f64,
    pub phi: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta0: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub c_floor: usize,
}

impl DerivedParams {
    pub fn from_raw(raw: &ModelParams) -> Self {
        let l = raw.lambda;
        let n = raw.n as f64;
        let g = raw.c / n;
        let rho = g - l + l * g;
        let c_floor = raw.c.floor();
        DerivedParams {
            n: raw.n,
            lambda: l,
            c: raw.c,
            gamma: g,
            rho,
            phi: g + l - g * l,
            delta: (1.0 - g) * (1.0 - g) * l + g * g,
            alpha: raw.c - c_floor,
            beta: 2.0 * (l * g * (1.0 - g)).sqrt(),
            theta0: -rho / (g * (1.0 - g)),
            epsilon: 1.0 / n,
            zeta: l * l * (g - 1.0) + 2.0 * l - g,
            c_floor: c_floor as usize,
        }
    }

    pub fn raw(&self) -> ModelParams {
        ModelParams { n: self.n, lambda: self.lambda, c: self.c }
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Number of negative eigenvalues, N - floor(c).
    pub fn n_eigen(&self) -> usize {
        self.n - self.c_floor
    }

    /// Same model with a different source count, keeping lambda and gamma.
    pub fn with_n(&self, n: usize) -> Result<DerivedParams> {
        ModelParams::from_gamma(n, self.lambda, self.gamma).validated()
    }
}

/// N=20 reference parameter set used by the comparison tables.
pub fn reference_params() -> DerivedParams {
    ModelParams::from_gamma(20, 0.0122448, 0.37987897).derive()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_parameters() {
        let d = reference_params();
        assert!((d.gamma - 0.37987897).abs() < 1e-15);
        assert!((d.c - 7.598).abs() < 5e-4);
        assert!((d.alpha - 0.5976).abs() < 1e-4);
        assert_eq!(d.c_floor, 7);
        assert_eq!(d.n_eigen(), 13);
        assert!(d.theta0 < 0.0 && d.delta > 0.0);
        assert!(d.rho > 0.0 && d.rho < 1.0);
        assert!((d.theta0 + d.rho / (d.gamma * (1.0 - d.gamma))).abs() < 1e-15);
    }

    #[test]
    fn validation_reasons() {
        assert!(ModelParams::from_gamma(20, 0.0122448, 0.37987897).validate().is_ok());
        assert_eq!(ModelParams::new(10, 1.0, 5.0).validate().unwrap_err().reason, Reason::Unstable);
        assert!(ModelParams::new(10, 1.0, 5.0 + 1e-9).validate().is_ok());
        assert_eq!(ModelParams::new(10, 1.0, 4.5).validate().unwrap_err().reason, Reason::Unstable);
        assert_eq!(ModelParams::new(10, 0.1, 3.0).validate().unwrap_err().reason, Reason::IntegerC);
        assert_eq!(ModelParams::new(0, 0.1, 3.5).validate().unwrap_err().reason, Reason::OutOfRange);
        assert_eq!(ModelParams::new(10, -0.1, 3.5).validate().unwrap_err().reason, Reason::OutOfRange);
        assert_eq!(ModelParams::new(10, 0.1, 10.5).validate().unwrap_err().reason, Reason::Unstable);
        assert_eq!(ModelParams::new(10, 0.1, 3.0 + 1e-13).validate().unwrap_err().reason, Reason::IntegerC);
    }

    #[test]
    fn derive_is_pure() {
        let raw = ModelParams::new(13, 0.3, 6.7);
        assert_eq!(raw.derive(), raw.derive());
    }
}
