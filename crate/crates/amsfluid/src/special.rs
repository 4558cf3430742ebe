//! Log-gamma, integer-order Bessel J and the normal distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{fail, Reason, Result};

pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return fail(Reason::Domain, format!("log_gamma needs x > 0, got {x}"));
    }
    Ok(libm::lgamma_r(x).0)
}

/// J_n(x) for any integer order and real argument.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    libm::jn(n, x)
}

pub fn normal_cdf(v: f64) -> f64 {
    0.5 * libm::erfc(-v * FRAC_1_SQRT_2)
}

pub fn normal_pdf(v: f64) -> f64 {
    (-0.5 * v * v).exp() / (2.0 * PI).sqrt()
}

/// ln Phi(v), accurate far into the lower tail.
pub fn ln_normal_cdf(v: f64) -> f64 {
    if v > -30.0 {
        normal_cdf(v).ln()
    } else {
        // Mills ratio series.
        let v2 = v * v;
        let s = 1.0 - 1.0 / v2 + 3.0 / (v2 * v2) - 15.0 / (v2 * v2 * v2);
        -0.5 * v2 - (-v).ln() - 0.5 * (2.0 * PI).ln() + s.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert!((log_gamma(0.5).unwrap() - 0.5 * PI.ln()).abs() < 1e-14);
        assert_eq!(log_gamma(0.0).unwrap_err().reason, Reason::Domain);
    }

    #[test]
    fn bessel_at_origin_and_reflection() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        for n in 1..6 {
            assert_eq!(bessel_j(n, 0.0), 0.0);
        }
        for i in 0..40 {
            let x = -20.0 + i as f64;
            for n in 1..8 {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((bessel_j(-n, x) - s * bessel_j(n, x)).abs() < 1e-14);
                assert!((bessel_j(n, -x) - s * bessel_j(n, x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bessel_recurrence() {
        // J_{n-1} + J_{n+1} = (2n/x) J_n
        for &x in &[0.3, 2.5, 11.0, 37.0, 49.5] {
            for n in 1..12 {
                let lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
                let rhs = 2.0 * n as f64 / x * bessel_j(n, x);
                assert!((lhs - rhs).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn normal_distribution() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-14);
        assert!((ln_normal_cdf(-40.0) - normal_cdf(-40.0).ln()).abs() < 1e-6 || normal_cdf(-40.0) == 0.0);
        assert!((ln_normal_cdf(-29.0) - normal_cdf(-29.0).ln()).abs() < 1e-10);
        let a = ln_normal_cdf(-30.0 - 1e-9);
        let b = ln_normal_cdf(-30.0 + 1e-9);
        assert!((a - b).abs() < 1e-4);
    }
}
