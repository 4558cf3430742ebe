//! Finite-difference derivatives and bracketed root finding.

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{fail, Error, Reason, Result};

const CON: f64 = 1.4;
const CON2: f64 = CON * CON;
const NTAB: usize = 10;
const SAFE: f64 = 2.0;

/// Ridders' polynomial extrapolation of a difference quotient `est(h)`
/// whose error is even in h.  Returns (value, error estimate).
fn extrapolate<F: FnMut(f64) -> Result<f64>>(mut est: F, h: f64) -> Result<(f64, f64)> {
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h;
    a[0][0] = est(h)?;
    let mut ans = a[0][0];
    let mut err = f64::MAX;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = est(h)?;
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok((ans, err))
}

/// Retries with smaller initial steps when the function fails near x.
fn with_shrinking<F: FnMut(f64) -> Result<(f64, f64)>>(mut run: F, h0: f64) -> Result<(f64, f64)> {
    let mut h = h0;
    let mut last: Option<Error> = None;
    for _ in 0..12 {
        match run(h) {
            Ok(v) if v.0.is_finite() => return Ok(v),
            Ok(_) => last = Some(Error::new(Reason::NoConvergence, "non-finite difference quotient")),
            Err(e) => last = Some(e),
        }
        h /= 4.0;
    }
    Err(last.unwrap_or_else(|| Error::new(Reason::NoConvergence, "derivative failed")))
}

/// First derivative by central differences with Richardson extrapolation.
pub fn derivative<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h0: f64) -> Result<f64> {
    with_shrinking(|h| extrapolate(|s| Ok((f(x + s)? - f(x - s)?) / (2.0 * s)), h), h0).map(|v| v.0)
}

/// Second derivative by central differences with Richardson extrapolation.
pub fn second_derivative<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h0: f64) -> Result<f64> {
    with_shrinking(
        |h| {
            let f0 = f(x)?;
            extrapolate(|s| Ok((f(x + s)? - 2.0 * f0 + f(x - s)?) / (s * s)), h)
        },
        h0,
    )
    .map(|v| v.0)
}

/// Brent's method on a sign-changing bracket.  Errors raised inside `f`
/// abort the search and are returned unchanged.
pub fn brent<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut first_err: Option<Error> = None;
    let mut conv = SimpleConvergency { eps: tol, max_iter: 300 };
    let res = find_root_brent(
        a,
        b,
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NAN
            }
        },
        &mut conv,
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    res.map_err(|e| Error::new(Reason::NoConvergence, format!("brent on [{a}, {b}]: {e:?}")))
}

/// Walks from `start` in steps of `step` (growing by `growth`) until the
/// sign of `f` differs from its sign at `start`; returns the bracket.
pub fn scan_bracket<F: Fn(f64) -> Result<f64>>(
    f: &F,
    start: f64,
    step: f64,
    growth: f64,
    limit: f64,
) -> Result<(f64, f64)> {
    let f0 = f(start)?;
    if f0 == 0.0 {
        return Ok((start, start));
    }
    let mut a = start;
    let mut d = step;
    loop {
        let b = a + d;
        if (step > 0.0 && b > limit) || (step < 0.0 && b < limit) {
            return fail(Reason::NoConvergence, format!("no sign change between {start} and {limit}"));
        }
        let fb = f(b)?;
        if fb.signum() != f0.signum() {
            return Ok(if a < b { (a, b) } else { (b, a) });
        }
        a = b;
        d *= growth;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_known_functions() {
        let d = derivative(|x| Ok(x.sin()), 0.7, 0.1).unwrap();
        assert!((d - 0.7f64.cos()).abs() < 1e-12);
        let d2 = second_derivative(|x| Ok(x.exp()), 1.3, 0.1).unwrap();
        assert!((d2 - 1.3f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn derivative_shrinks_step_near_domain_edge() {
        let f = |x: f64| if x <= 0.0 { fail(Reason::Domain, "log") } else { Ok(x.ln()) };
        let d = derivative(f, 0.01, 0.5).unwrap();
        assert!((d - 100.0).abs() < 1e-6);
    }

    #[test]
    fn brent_and_bracket() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let (a, b) = scan_bracket(&f, 0.0, 0.1, 1.5, 100.0).unwrap();
        let r = brent(f, a, b, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(scan_bracket(&|x: f64| Ok(x * x + 1.0), 0.0, 0.1, 2.0, 10.0).is_err());
    }
}
