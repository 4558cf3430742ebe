//! Pointwise ingredients of the saddle-point asymptotics.
//!
//! Logarithms whose arguments change sign on the real axis (ln|q| in mu,
//! ln|1 - R1 w| in eta) are evaluated on their absolute values, which is the
//! real part of the principal branch.  This lets the plus-branch saddles and
//! the z=0 boundary layer, which sit below theta0, use the same functions.

use std::f64::consts::PI;

use crate::error::{fail, Reason, Result};
use crate::model::DerivedParams;
use crate::numeric;
use crate::signed::SignedLogReal;
use crate::special::log_gamma;
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelBundle {
    pub theta: f64,
    pub delta: f64,
    pub v: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WSaddles {
    pub w_minus: f64,
    pub w_plus: f64,
    pub disc: f64,
}

impl WSaddles {
    pub fn get(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.w_plus,
            Branch::Minus => self.w_minus,
        }
    }
}

pub fn delta(p: &DerivedParams, theta: f64) -> f64 {
    let u = theta + 1.0 - p.lambda;
    (u * u + 4.0 * p.lambda).sqrt()
}

pub fn v(p: &DerivedParams, theta: f64) -> f64 {
    0.5 * (1.0 + ((2.0 * p.gamma - 1.0) * theta - p.lambda - 1.0) / delta(p, theta))
}

/// (R1, R2); the smaller one comes from R1 R2 = 1/lambda.
pub fn r12(p: &DerivedParams, theta: f64) -> (f64, f64) {
    let l = p.lambda;
    let d = delta(p, theta);
    let b = l - 1.0 - theta;
    if b >= 0.0 {
        let r1 = (d + b) / (2.0 * l);
        (r1, 1.0 / (l * r1))
    } else {
        let r2 = (d - b) / (2.0 * l);
        (1.0 / (l * r2), r2)
    }
}

pub fn branch_kernel(p: &DerivedParams, theta: f64) -> KernelBundle {
    let (r1, r2) = r12(p, theta);
    KernelBundle { theta, delta: delta(p, theta), v: v(p, theta), r1, r2 }
}

/// Discriminant D(theta, z) of the saddle equation.
pub fn disc(p: &DerivedParams, theta: f64, z: f64) -> f64 {
    let (l, g, rho, phi) = (p.lambda, p.gamma, p.rho, p.phi);
    let dz = z - g;
    rho * rho + (2.0 * (l + 1.0) * rho + 2.0 * phi * theta) * dz
        + ((l + 1.0) * (l + 1.0) + 2.0 * (1.0 - l) * theta + theta * theta) * dz * dz
}

/// Roots of z W^2 + b W + (1-z) lambda = 0 with b = (gamma-z) theta + z lambda - z - lambda.
pub fn saddle_w(p: &DerivedParams, theta: f64, z: f64) -> Result<WSaddles> {
    if z == 0.0 {
        return fail(Reason::Domain, "saddle_w needs z != 0");
    }
    let l = p.lambda;
    let b = (p.gamma - z) * theta + z * l - z - l;
    let d = disc(p, theta, z);
    let scale = b * b + (4.0 * z * l * (1.0 - z)).abs();
    if d < -1e-13 * scale {
        return fail(Reason::Complex, format!("D({theta}, {z}) = {d} < 0"));
    }
    let s = d.max(0.0).sqrt();
    let prod = (1.0 - z) * l / z;
    let (wm, wp) = if -b >= 0.0 {
        let wp = (-b + s) / (2.0 * z);
        (if wp != 0.0 { prod / wp } else { (-b - s) / (2.0 * z) }, wp)
    } else {
        let wm = (-b - s) / (2.0 * z);
        (wm, if wm != 0.0 { prod / wm } else { (-b + s) / (2.0 * z) })
    };
    Ok(WSaddles { w_minus: wm, w_plus: wp, disc: d })
}

pub fn w_branch(p: &DerivedParams, b: Branch, theta: f64, z: f64) -> Result<f64> {
    Ok(saddle_w(p, theta, z)?.get(b))
}

/// Residual of the saddle equation, relative to its largest term.
pub fn saddle_residual(p: &DerivedParams, w: f64, theta: f64, z: f64) -> f64 {
    let l = p.lambda;
    let b = (p.gamma - z) * theta + z * l - z - l;
    let t = [z * w * w, b * w, (1.0 - z) * l];
    let scale = t.iter().map(|x| x.abs()).fold(0.0, f64::max);
    (t[0] + t[1] + t[2]).abs() / scale
}

pub fn eta(p: &DerivedParams, w: f64, theta: f64, z: f64) -> Result<f64> {
    if !(w > 0.0) {
        return fail(Reason::Branch, format!("eta needs w > 0, got {w}"));
    }
    let (r1, r2) = r12(p, theta);
    let vv = v(p, theta);
    let a1 = 1.0 - r1 * w;
    let a2 = 1.0 + r2 * w;
    if a1 == 0.0 {
        return fail(Reason::Branch, format!("1 - R1 w vanishes at w={w}, theta={theta}"));
    }
    let tail = if z == 1.0 { 0.0 } else { (1.0 - z) * w.ln() };
    Ok(vv * a1.abs().ln() + (1.0 - vv) * a2.ln() - tail)
}

/// d eta / dw.
pub fn eta_w(p: &DerivedParams, w: f64, theta: f64, z: f64) -> f64 {
    let (r1, r2) = r12(p, theta);
    let vv = v(p, theta);
    -vv * r1 / (1.0 - r1 * w) + (1.0 - vv) * r2 / (1.0 + r2 * w) - (1.0 - z) / w
}

/// Closed-form d^2 eta / dw^2, valid at a root of the saddle equation.
pub fn eta_ww_at(p: &DerivedParams, w: f64, theta: f64, z: f64) -> f64 {
    let (l, g, t) = (p.lambda, p.gamma, theta);
    let m = z * l + z - l;
    let a = l * l * (z - 1.0) * m
        + ((-2.0 * l * l + l - g * l * l - g) * z * z + l * (4.0 * g * l + 2.0 * l - g) * z - 3.0 * g * l * l) * t
        + (z - g) * ((2.0 * g * l + l - 2.0 * g) * z - 3.0 * g * l) * t * t
        - g * (z - g) * (z - g) * t * t * t;
    let b = l * (1.0 - z) * (m * l + (2.0 * g * l + (g - l - g * l) * z) * t + g * (z - g) * t * t);
    let den = (t * g - l) * w + l;
    (a * w + b) / (w * w * den * den)
}

pub fn eta_ww(p: &DerivedParams, b: Branch, theta: f64, z: f64) -> Result<f64> {
    let ws = saddle_w(p, theta, z)?;
    if ws.disc.abs() <= 1e-14 * (1.0 + p.rho * p.rho) {
        return fail(Reason::Singular, format!("saddles coalesce at theta={theta}, z={z}"));
    }
    Ok(eta_ww_at(p, ws.get(b), theta, z))
}

/// The exponent of the fixed-theta product approximation.
pub fn mu(p: &DerivedParams, theta: f64) -> Result<f64> {
    let (l, g, rho) = (p.lambda, p.gamma, p.rho);
    let d = delta(p, theta);
    let q = g * (1.0 - g) * theta + rho;
    let coef = (theta * (1.0 - 2.0 * g) + l + 1.0) / (2.0 * d);
    let (r1, _) = r12(p, theta);
    // lambda - 1 - theta + Delta = 2 lambda R1, free of cancellation.
    let top = 2.0 * l * r1;
    let den = (l - 1.0 - theta) * rho + (l + 1.0) * (l + 1.0) * g * (1.0 - g) + (1.0 - l) * g * (1.0 - g) * theta + d * p.delta;
    if den == 0.0 || top == 0.0 {
        return fail(Reason::Domain, format!("mu has a logarithmic singularity at theta={theta}"));
    }
    let head = if q == 0.0 { 0.0 } else { (coef - 0.5) * q.abs().ln() };
    Ok(head + coef * (top / den).abs().ln())
}

fn step_for(p: &DerivedParams, theta: f64) -> f64 {
    let base = 0.05 * theta.abs().max(1.0);
    let gap = (theta - p.theta0).abs();
    if gap > 0.0 {
        base.min(0.4 * gap)
    } else {
        base
    }
}

pub fn mu_prime(p: &DerivedParams, theta: f64) -> Result<f64> {
    numeric::derivative(|t| mu(p, t), theta, step_for(p, theta))
}

pub fn mu_second(p: &DerivedParams, theta: f64) -> Result<f64> {
    numeric::second_derivative(|t| mu(p, t), theta, step_for(p, theta))
}

/// Partial d eta / d theta at fixed (w, z).
pub fn eta_theta(p: &DerivedParams, w: f64, theta: f64, z: f64) -> Result<f64> {
    numeric::derivative(|t| eta(p, w, t, z), theta, step_for(p, theta))
}

/// mu(theta) + eta(W_b(theta, z), theta, z); Psi is y theta plus this.
pub fn g_branch(p: &DerivedParams, b: Branch, theta: f64, z: f64) -> Result<f64> {
    let w = w_branch(p, b, theta, z)?;
    Ok(mu(p, theta)? + eta(p, w, theta, z)?)
}

/// Total theta-derivative of g; equals mu' + eta_theta since eta_w = 0 on the saddle.
pub fn g_prime(p: &DerivedParams, b: Branch, theta: f64, z: f64) -> Result<f64> {
    numeric::derivative(|t| g_branch(p, b, t, z), theta, step_for(p, theta))
}

/// Psi_theta_theta along the saddle, i.e. the total second derivative of g.
pub fn g_second(p: &DerivedParams, b: Branch, theta: f64, z: f64) -> Result<f64> {
    numeric::second_derivative(|t| g_branch(p, b, t, z), theta, step_for(p, theta))
}

pub fn psi(p: &DerivedParams, y: f64, w: f64, theta: f64, z: f64) -> Result<f64> {
    Ok(y * theta + mu(p, theta)? + eta(p, w, theta, z)?)
}

/// Exponent of the z=0 boundary layer, with ln|R1| for the real part.
pub fn psi0(p: &DerivedParams, y: f64, theta: f64) -> Result<f64> {
    let (r1, r2) = r12(p, theta);
    let vv = v(p, theta);
    Ok(y * theta + mu(p, theta)? + vv * r1.ln() + (1.0 - vv) * r2.ln())
}

pub fn phi_entropy(p: &DerivedParams, z: f64) -> f64 {
    let xlx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    -xlx(z) - xlx(1.0 - z) + z * p.lambda.ln() - (p.lambda + 1.0).ln()
}

/// prod_j theta_j / (theta_j - theta) over the spectrum.
pub fn product_exact(spectrum: &Spectrum, theta: f64) -> Result<SignedLogReal> {
    let mut acc = SignedLogReal::ONE;
    for &tj in &spectrum.thetas {
        if (tj - theta).abs() <= 1e-12 * tj.abs() {
            return fail(Reason::Pole, format!("theta={theta} hits eigenvalue {tj}"));
        }
        acc = acc.mul(&SignedLogReal::from_f64(tj / (tj - theta)));
    }
    Ok(acc)
}

/// sqrt(-theta0/(theta-theta0)) exp(N mu(theta)) for theta > theta0.
pub fn product_fixed(p: &DerivedParams, theta: f64) -> Result<SignedLogReal> {
    if !(theta > p.theta0) {
        return fail(Reason::Domain, format!("product_fixed needs theta > theta0={}, got {theta}", p.theta0));
    }
    let lnp = 0.5 * (-p.theta0 / (theta - p.theta0)).ln() + p.nf() * mu(p, theta)?;
    Ok(SignedLogReal::from_ln(lnp))
}

/// Large-theta form of the product at theta = S N.
pub fn product_scaled(p: &DerivedParams, s: f64) -> Result<SignedLogReal> {
    if !(s > 0.0) {
        return fail(Reason::Domain, format!("product_scaled needs S > 0, got {s}"));
    }
    let (g, rho, phi, a) = (p.gamma, p.rho, p.phi, p.alpha);
    let n = p.nf();
    let lnp = -0.5 * (2.0 * PI * n).ln() + 0.5 * (rho / (phi * g * (1.0 - g))).ln() + a * (phi / s).ln()
        - n * (1.0 - g) * ((1.0 - g) * s * n).ln()
        - n * g * g.ln()
        + log_gamma(phi / s + 1.0 - a)?
        + phi / s * (g / (phi * (1.0 - g) * n)).ln()
        + (2.0 * phi - rho - 1.0) / s;
    Ok(SignedLogReal::from_ln(lnp))
}

/// Upper end of the interval where the saddles can coalesce.
pub fn z_coalesce_max(p: &DerivedParams) -> f64 {
    p.gamma * p.gamma / p.delta
}

/// The theta at which D(theta, z) has a double zero.
pub fn theta_star(p: &DerivedParams, z: f64) -> Result<f64> {
    let zmax = z_coalesce_max(p);
    if !(z > p.gamma && z < zmax) {
        return fail(Reason::Domain, format!("theta_star needs gamma < z < {zmax}, got {z}"));
    }
    let l = p.lambda;
    Ok((l * (z - 1.0) - z + 2.0 * (z * l * (1.0 - z)).sqrt()) / (z - p.gamma))
}

/// Everything the `kernel-dump` table shows at one (theta, z).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KernelPoint {
    pub theta: f64,
    pub z: f64,
    pub delta: f64,
    pub v: f64,
    pub r1: f64,
    pub r2: f64,
    pub disc: f64,
    pub w_minus: Option<f64>,
    pub w_plus: Option<f64>,
    pub eta_minus: Option<f64>,
    pub eta_ww_minus: Option<f64>,
    pub mu: Option<f64>,
}

pub fn kernel_point(p: &DerivedParams, theta: f64, z: f64) -> KernelPoint {
    let kb = branch_kernel(p, theta);
    let ws = saddle_w(p, theta, z).ok();
    KernelPoint {
        theta,
        z,
        delta: kb.delta,
        v: kb.v,
        r1: kb.r1,
        r2: kb.r2,
        disc: disc(p, theta, z),
        w_minus: ws.map(|w| w.w_minus),
        w_plus: ws.map(|w| w.w_plus),
        eta_minus: ws.and_then(|w| eta(p, w.w_minus, theta, z).ok()),
        eta_ww_minus: eta_ww(p, Branch::Minus, theta, z).ok(),
        mu: mu(p, theta).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_params;
    use crate::spectral::{eigenvalues, sigma};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn branch_values_at_zero() {
        let p = reference_params();
        let k = branch_kernel(&p, 0.0);
        assert!(rel(k.delta, 1.0 + p.lambda) < 1e-15);
        assert!(k.v.abs() < 1e-15);
        assert!(rel(k.r1, 1.0) < 1e-14);
        assert!(rel(k.r2, 1.0 / p.lambda) < 1e-14);
    }

    #[test]
    fn branch_values_at_eigenvalues_and_theta0() {
        let p = reference_params();
        for (j, &t) in eigenvalues(&p).thetas.iter().enumerate() {
            assert!((v(&p, t) - j as f64 / 20.0).abs() < 1e-12);
        }
        let (r1, _) = r12(&p, p.theta0);
        assert!(rel(1.0 / r1, p.lambda * (1.0 - p.gamma) / p.gamma) < 1e-13);
    }

    #[test]
    fn r_positive_and_reciprocal() {
        let p = reference_params();
        for i in -400..400 {
            let t = i as f64 * 0.05;
            let (r1, r2) = r12(&p, t);
            assert!(r1 > 0.0 && r2 > 0.0);
            assert!((r1 * r2 * p.lambda - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_consistency_grid() {
        let p = reference_params();
        for i in 1..100 {
            let x = (1.0 - p.gamma) * i as f64 / 100.0;
            if (x - p.gamma).abs() < 1e-9 {
                continue;
            }
            let s = sigma(&p, x).unwrap();
            assert!((v(&p, -s) - x).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn saddles_at_special_thetas() {
        let p = reference_params();
        for &z in &[0.2, 0.5, 0.7, 0.9] {
            let w = saddle_w(&p, 0.0, z).unwrap();
            assert!(rel(w.w_plus, 1.0) < 1e-14);
            assert!(rel(w.w_minus, p.lambda * (1.0 - z) / z) < 1e-13);
        }
        for &z in &[0.45, 0.6, 0.9] {
            let w = saddle_w(&p, p.theta0, z).unwrap();
            let wm = p.lambda * (1.0 - p.gamma) / p.gamma;
            assert!(rel(w.w_minus, wm) < 1e-12, "z={z}");
            assert!(rel(w.w_plus, p.gamma * (1.0 - z) / ((1.0 - p.gamma) * z)) < 1e-12);
        }
    }

    #[test]
    fn saddle_roots_satisfy_equation() {
        let p = reference_params();
        for &z in &[0.1, 0.38, 0.6, 0.99] {
            for i in -30..30 {
                let t = i as f64 * 0.37;
                if t == 0.0 {
                    // W+ = 1/R1 there, where eta_w is 0/0.
                    continue;
                }
                if let Ok(w) = saddle_w(&p, t, z) {
                    assert!(saddle_residual(&p, w.w_minus, t, z) < 1e-10);
                    assert!(saddle_residual(&p, w.w_plus, t, z) < 1e-10);
                    let ew = eta_w(&p, w.w_plus, t, z);
                    assert!(ew.abs() < 1e-8 * (1.0 + 1.0 / w.w_plus.abs()), "z={z} t={t} w={w:?} eta_w={ew}");
                }
            }
        }
    }

    #[test]
    fn coalescence_at_theta_star() {
        let p = reference_params();
        for i in 1..20 {
            let z = p.gamma + (z_coalesce_max(&p) - p.gamma) * i as f64 / 20.0;
            let ts = theta_star(&p, z).unwrap();
            assert!(ts < p.theta0);
            assert!(disc(&p, ts, z).abs() < 1e-9);
            let w = saddle_w(&p, ts, z).unwrap();
            let wc = (p.lambda * (1.0 - z) / z).sqrt();
            assert!(rel(w.w_minus, wc) < 1e-6 && rel(w.w_plus, wc) < 1e-6);
            let dz = numeric::derivative(|zz| Ok(disc(&p, theta_star(&p, zz)?, zz)), z, 1e-4).unwrap();
            assert!(dz.abs() < 1e-6, "z={z} dD/dz={dz}");
        }
        assert!(theta_star(&p, 0.3).is_err());
    }

    #[test]
    fn eta_ww_special_forms() {
        let p = reference_params();
        for &t in &[-3.0, -1.0, 0.5, 2.0] {
            let w = saddle_w(&p, t, p.gamma).unwrap();
            assert!(rel(w.w_plus, 1.0) < 1e-12);
            assert!(rel(eta_ww_at(&p, 1.0, t, p.gamma), -p.rho / t) < 1e-10);
        }
        // Near theta0 on the minus branch.
        let z = 0.6;
        let e = 1e-6;
        let g = p.gamma;
        let lim = (g * g - p.delta * z).powi(2) / (p.lambda * p.lambda * (1.0 - g).powi(4) * p.rho * e);
        assert!(rel(eta_ww(&p, Branch::Minus, p.theta0 + e, z).unwrap(), lim) < 1e-4);
        // z -> 1 on the minus branch.
        let t = 0.7;
        let zz = 1.0 - 1e-7;
        let lim = (1.0 + (1.0 - g) * t).powi(2) / (p.lambda * p.lambda * (1.0 - zz));
        assert!(rel(eta_ww(&p, Branch::Minus, t, zz).unwrap(), lim) < 1e-4);
    }

    #[test]
    fn eta_ww_matches_finite_differences() {
        let p = reference_params();
        for &(t, z) in &[(-0.2, 0.6), (1.5, 0.8), (-4.0, 0.15), (5.9, 0.85)] {
            for b in [Branch::Minus, Branch::Plus] {
                let w = w_branch(&p, b, t, z).unwrap();
                let h = 1e-3 * w;
                let fd = numeric::second_derivative(|u| eta(&p, u, t, z), w, h).unwrap();
                let an = eta_ww(&p, b, t, z).unwrap();
                assert!(rel(fd, an) < 1e-6, "t={t} z={z} {b:?} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn eta_drops_log_w_at_z_one() {
        let p = reference_params();
        let (r1, r2) = r12(&p, 0.3);
        let vv = v(&p, 0.3);
        let w = 0.2;
        let want = vv * (1.0 - r1 * w).abs().ln() + (1.0 - vv) * (1.0 + r2 * w).ln();
        assert!((eta(&p, w, 0.3, 1.0).unwrap() - want).abs() < 1e-15);
        assert_eq!(eta(&p, -1.0, 0.3, 0.5).unwrap_err().reason, Reason::Branch);
    }

    #[test]
    fn mu_values() {
        let p = reference_params();
        assert!(mu(&p, 0.0).unwrap().abs() < 1e-14);
        let lim = (p.gamma / p.delta).ln();
        assert!((mu(&p, p.theta0 + 1e-10).unwrap() - lim).abs() < 1e-6);
        assert!((mu(&p, p.theta0).unwrap() - lim).abs() < 1e-12);
    }

    #[test]
    fn mu_quadratic_near_zero() {
        use crate::saddle::{y0, y2};
        let p = reference_params();
        let (a, b) = (y0(&p, 1.0), y2(&p, 1.0));
        for &t in &[1e-3, -1e-3, 5e-4] {
            let approx = -a * t + 0.5 * b * t * t;
            assert!((mu(&p, t).unwrap() - approx).abs() < 1e-6 * t.abs(), "t={t}");
        }
        assert!(rel(mu_prime(&p, 0.0).unwrap(), -a) < 1e-9);
        assert!(rel(mu_second(&p, 0.0).unwrap(), b) < 1e-6);
    }

    #[test]
    fn psi_on_transition_curve_is_entropy() {
        use crate::saddle::y0;
        let p = reference_params();
        for i in 1..10 {
            let z = p.gamma + (1.0 - p.gamma) * i as f64 / 10.0;
            let w = w_branch(&p, Branch::Minus, 0.0, z).unwrap();
            let v = psi(&p, y0(&p, z), w, 0.0, z).unwrap();
            let want = phi_entropy(&p, z) - (p.lambda / (1.0 + p.lambda)).ln();
            assert!((v - want).abs() < 1e-12, "z={z} psi={v} want={want}");
        }
    }

    #[test]
    fn entropy_properties() {
        let p = reference_params();
        let zm = p.lambda / (1.0 + p.lambda);
        assert!(phi_entropy(&p, zm).abs() < 1e-15);
        for i in 1..100 {
            let z = i as f64 / 100.0;
            if (z - zm).abs() > 1e-3 {
                assert!(phi_entropy(&p, z) < 0.0);
            }
        }
    }

    #[test]
    fn stirling_matches_binomial() {
        let p = reference_params().with_n(200).unwrap();
        let z = 0.3;
        let k = 60;
        let approx = (-0.5 * (2.0 * PI * 200.0 * z * (1.0 - z)).ln() + 200.0 * phi_entropy(&p, z)).exp();
        let exact = crate::spectral::stationary(&p, k);
        assert!(rel(approx, exact) < 0.02, "{approx} {exact}");
    }

    #[test]
    fn products_at_zero() {
        let p = reference_params();
        let s = eigenvalues(&p);
        assert!((product_exact(&s, 0.0).unwrap().to_f64() - 1.0).abs() < 1e-15);
        assert!((product_fixed(&p, 0.0).unwrap().to_f64() - 1.0).abs() < 1e-12);
        assert_eq!(product_exact(&s, s.thetas[2]).unwrap_err().reason, Reason::Pole);
        assert_eq!(product_fixed(&p, p.theta0 - 0.1).unwrap_err().reason, Reason::Domain);
    }

    #[test]
    fn product_approximations_improve_with_n() {
        let base = reference_params();
        let mut e_fixed = vec![];
        let mut e_scaled = vec![];
        for n in [50usize, 100, 200] {
            let p = base.with_n(n).unwrap();
            let s = eigenvalues(&p);
            let ex = product_exact(&s, 0.5).unwrap();
            e_fixed.push((ex.ratio(&product_fixed(&p, 0.5).unwrap()) - 1.0).abs());
            let ex = product_exact(&s, n as f64).unwrap();
            e_scaled.push((ex.ratio(&product_scaled(&p, 1.0).unwrap()) - 1.0).abs());
        }
        assert!(e_fixed[0] > e_fixed[1] && e_fixed[1] > e_fixed[2], "{e_fixed:?}");
        assert!(e_scaled[0] > e_scaled[1] && e_scaled[1] > e_scaled[2], "{e_scaled:?}");
    }
}
