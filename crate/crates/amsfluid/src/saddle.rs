//! Saddle-point equations in theta, the region boundary curves and the
//! region map of the scaled (y, z) plane.

use serde::Serialize;

use crate::error::{fail, Reason, Result};
use crate::kernel::{self, Branch};
use crate::model::DerivedParams;
use crate::numeric;

/// Distance in y from Y* inside which the solvers return theta*.
pub const COALESCENCE_GUARD: f64 = 1e-4;
const ROOT_TOL: f64 = 1e-13;

pub fn y0(p: &DerivedParams, z: f64) -> f64 {
    let l = p.lambda;
    (z - p.gamma) / (l + 1.0) - p.rho / ((l + 1.0) * (l + 1.0)) * ((z * l + z - l) / p.rho).ln()
}

pub fn y2(p: &DerivedParams, z: f64) -> f64 {
    let (l, g, rho, zeta) = (p.lambda, p.gamma, p.rho, p.zeta);
    let m = z * l + z - l;
    let dz = z - g;
    2.0 * zeta / (l + 1.0).powi(4) * (m / rho).ln()
        - dz * (2.0 * rho * zeta + 3.0 * (l + 1.0) * zeta * dz + (l - 1.0) * (l + 1.0).powi(2) * dz * dz)
            / (m * m * (l + 1.0).powi(3))
}

/// The curve on which Theta = theta0; defined for gamma <= z < gamma^2/delta.
pub fn y1(p: &DerivedParams, z: f64) -> Option<f64> {
    let (g, rho, d) = (p.gamma, p.rho, p.delta);
    if !(z >= g && z < kernel::z_coalesce_max(p)) {
        return None;
    }
    let gg = g * (1.0 - g);
    let u = (g * g - d * z) / (gg * rho);
    Some(gg * gg * rho / (d * d) * (u - u.ln() - 1.0))
}

/// The curve on which the two w-saddles coalesce; defined for gamma < z < gamma^2/delta.
pub fn ystar(p: &DerivedParams, z: f64) -> Result<f64> {
    let ts = kernel::theta_star(p, z)?;
    let w = (p.lambda * (1.0 - z) / z).sqrt();
    Ok(-kernel::mu_prime(p, ts)? - kernel::eta_theta(p, w, ts, z)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveValues {
    pub z: f64,
    pub y0: f64,
    pub y1: Option<f64>,
    pub ystar: Option<f64>,
    pub y2: f64,
}

pub fn curves(p: &DerivedParams, z: f64) -> CurveValues {
    CurveValues { z, y0: y0(p, z), y1: y1(p, z), ystar: ystar(p, z).ok(), y2: y2(p, z) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saddle {
    pub theta: f64,
    pub near_coalescence: bool,
}

impl Saddle {
    fn plain(theta: f64) -> Self {
        Saddle { theta, near_coalescence: false }
    }
}

fn g_prime_floor(p: &DerivedParams, b: Branch, theta: f64, z: f64, floor: Option<f64>) -> Result<f64> {
    let mut h = 0.05 * theta.abs().max(1.0);
    let gap0 = (theta - p.theta0).abs();
    if gap0 > 0.0 {
        h = h.min(0.4 * gap0);
    }
    if let Some(f) = floor {
        h = h.min(0.4 * (theta - f));
    }
    numeric::derivative(|t| kernel::g_branch(p, b, t, z), theta, h)
}

/// Residual y + d/dtheta [mu + eta(W_b)] of the interior saddle equation.
pub fn theta_residual(p: &DerivedParams, b: Branch, y: f64, theta: f64, z: f64) -> Result<f64> {
    let floor = kernel::theta_star(p, z).ok().filter(|&ts| theta > ts);
    Ok(y + g_prime_floor(p, b, theta, z, floor)?)
}

fn tiny(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

/// Theta on the minus branch, for gamma < z < 1 and y below Y*(z).
pub fn solve_theta(p: &DerivedParams, y: f64, z: f64) -> Result<Saddle> {
    solve_theta_guarded(p, y, z, COALESCENCE_GUARD)
}

/// `solve_theta` with an explicit coalescence guard width.
pub fn solve_theta_guarded(p: &DerivedParams, y: f64, z: f64, guard: f64) -> Result<Saddle> {
    if !(z > p.gamma && z < 1.0) || !(y > 0.0) {
        return fail(Reason::OutOfRegion, format!("Theta needs gamma < z < 1 and y > 0, got y={y}, z={z}"));
    }
    let ts = kernel::theta_star(p, z).ok();
    if let Some(ts) = ts {
        let ys = ystar(p, z)?;
        if (y - ys).abs() <= guard {
            return Ok(Saddle { theta: ts, near_coalescence: true });
        }
        if y > ys {
            return fail(Reason::OutOfRegion, format!("y={y} lies above Y*({z})={ys}"));
        }
    }
    let f = |t: f64| theta_residual(p, Branch::Minus, y, t, z);
    let f0 = y - y0(p, z);
    if f0 == 0.0 {
        return Ok(Saddle::plain(0.0));
    }
    let (a, b) = if f0 < 0.0 {
        numeric::scan_bracket(&f, 0.0, 0.25, 1.6, 1e4)?
    } else if let Some(ts) = ts {
        let mut lo = None;
        for e in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
            let t = ts + e * ts.abs().max(1.0);
            if t < 0.0 && f(t)? < 0.0 {
                lo = Some(t);
                break;
            }
        }
        match lo {
            Some(t) => (t, 0.0),
            None => return fail(Reason::NoConvergence, format!("no bracket for Theta between theta* and 0 at y={y}, z={z}")),
        }
    } else {
        numeric::scan_bracket(&f, 0.0, -0.25, 1.6, -1e4)?
    };
    Ok(Saddle::plain(numeric::brent(f, a, b, ROOT_TOL)?))
}

/// Theta-plus on the plus branch.  Lies in (theta*, theta0) when
/// gamma < z < gamma^2/delta and below theta0 for z <= gamma.
pub fn solve_theta_plus(p: &DerivedParams, y: f64, z: f64) -> Result<Saddle> {
    solve_theta_plus_guarded(p, y, z, COALESCENCE_GUARD)
}

/// `solve_theta_plus` with an explicit coalescence guard width.
pub fn solve_theta_plus_guarded(p: &DerivedParams, y: f64, z: f64, guard: f64) -> Result<Saddle> {
    if !(z > 0.0 && z < kernel::z_coalesce_max(p)) || y < 0.0 {
        return fail(Reason::OutOfRegion, format!("Theta+ needs 0 < z < gamma^2/delta and y >= 0, got y={y}, z={z}"));
    }
    let f = |t: f64| theta_residual(p, Branch::Plus, y, t, z);
    let hi = p.theta0 - tiny(p.theta0);
    if z > p.gamma {
        let ts = kernel::theta_star(p, z)?;
        let ys = ystar(p, z)?;
        if (y - ys).abs() <= guard {
            return Ok(Saddle { theta: ts, near_coalescence: true });
        }
        if y < ys {
            return fail(Reason::OutOfRegion, format!("y={y} lies below Y*({z})={ys}"));
        }
        let mut lo = None;
        for e in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
            let t = ts + e * ts.abs().max(1.0);
            if t < hi && f(t)? > 0.0 {
                lo = Some(t);
                break;
            }
        }
        let lo = lo.ok_or_else(|| crate::error::Error::new(Reason::NoConvergence, "no bracket for Theta+ above theta*"))?;
        return Ok(Saddle::plain(numeric::brent(f, lo, hi, ROOT_TOL)?));
    }
    let (a, b) = numeric::scan_bracket(&f, hi, -0.25, 1.5, -1e4)?;
    Ok(Saddle::plain(numeric::brent(f, a, b, ROOT_TOL)?))
}

fn boundary_exponent(p: &DerivedParams, theta: f64) -> Result<f64> {
    kernel::psi0(p, 0.0, theta)
}

fn psi0_prime(p: &DerivedParams, y: f64, theta: f64) -> Result<f64> {
    let h = (0.05 * theta.abs().max(1.0)).min(0.4 * (theta - p.theta0).abs());
    Ok(y + numeric::derivative(|t| boundary_exponent(p, t), theta, h)?)
}

/// d^2 Psi0 / dtheta^2.
pub fn psi0_second(p: &DerivedParams, theta: f64) -> Result<f64> {
    let h = (0.05 * theta.abs().max(1.0)).min(0.4 * (theta - p.theta0).abs());
    numeric::second_derivative(|t| boundary_exponent(p, t), theta, h)
}

/// Theta-plus(0, 0): the stationary point of Psi0 at y = 0, below theta0.
pub fn theta_plus_corner(p: &DerivedParams) -> Result<f64> {
    let f = |t: f64| psi0_prime(p, 0.0, t);
    let hi = p.theta0 - tiny(p.theta0);
    let (a, b) = numeric::scan_bracket(&f, hi, -0.25, 1.5, -1e4)?;
    numeric::brent(f, a, b, ROOT_TOL)
}

/// Theta0(y) in (Theta+(0,0), theta0).
pub fn solve_theta0(p: &DerivedParams, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return fail(Reason::OutOfRegion, format!("Theta0 needs y > 0, got {y}"));
    }
    let lo = theta_plus_corner(p)?;
    let f = |t: f64| psi0_prime(p, y, t);
    let mut hi = p.theta0 - tiny(p.theta0);
    // For huge y the root hugs theta0; step closer until the sign flips.
    for _ in 0..6 {
        if f(hi)? < 0.0 {
            return numeric::brent(f, lo, hi, ROOT_TOL);
        }
        hi = p.theta0 - (p.theta0 - hi) * 1e-2;
    }
    fail(Reason::NoConvergence, format!("Theta0({y}) too close to theta0"))
}

/// Theta1(y) in (theta0, infinity), the root of y + mu'(theta) = 0.
pub fn solve_theta1(p: &DerivedParams, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return fail(Reason::OutOfRegion, format!("Theta1 needs y > 0, got {y}"));
    }
    let f = |t: f64| Ok(y + kernel::mu_prime(p, t)?);
    let f0 = y - y0(p, 1.0);
    if f0 == 0.0 {
        return Ok(0.0);
    }
    if f0 < 0.0 {
        let (a, b) = numeric::scan_bracket(&f, 0.0, 0.5, 1.6, 1e5)?;
        return numeric::brent(f, a, b, ROOT_TOL);
    }
    let mut lo = p.theta0 + tiny(p.theta0);
    for _ in 0..6 {
        if f(lo)? < 0.0 {
            return numeric::brent(f, lo, 0.0, ROOT_TOL);
        }
        lo = p.theta0 + (lo - p.theta0) * 1e-2;
    }
    fail(Reason::NoConvergence, format!("Theta1({y}) too close to theta0"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub enum RegionTag {
    R1,
    R2,
    R3,
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl RegionTag {
    pub const ALL: [RegionTag; 11] = [
        RegionTag::R1,
        RegionTag::R2,
        RegionTag::R3,
        RegionTag::I,
        RegionTag::II,
        RegionTag::III,
        RegionTag::IV,
        RegionTag::V,
        RegionTag::VI,
        RegionTag::VII,
        RegionTag::VIII,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegionTag::R1 => "R1",
            RegionTag::R2 => "R2",
            RegionTag::R3 => "R3",
            RegionTag::I => "I",
            RegionTag::II => "II",
            RegionTag::III => "III",
            RegionTag::IV => "IV",
            RegionTag::V => "V",
            RegionTag::VI => "VI",
            RegionTag::VII => "VII",
            RegionTag::VIII => "VIII",
        }
    }
}

impl std::fmt::Display for RegionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RegionTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown region '{s}'"))
    }
}

/// Layer widths used by `classify`.  The transition and top-corner widths
/// are in standard deviations sqrt(Y2/N); `strip` is in units of 1/N;
/// `corner_chi` bounds chi = x N in the corner at (x, k) = (0, c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerWidths {
    pub transition: f64,
    pub strip: f64,
    pub corner_chi: f64,
}

impl Default for LayerWidths {
    fn default() -> Self {
        LayerWidths { transition: 3.0, strip: 1.0, corner_chi: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub tag: RegionTag,
    pub saddle_value: Option<f64>,
    pub distance_to_boundary: f64,
}

/// Locates (y, z) on the region map at the system size `p.n`.
pub fn classify(p: &DerivedParams, y: f64, z: f64, w: &LayerWidths) -> Region {
    let tag_dist = classify_tag(p, y, z, w);
    Region { tag: tag_dist.0, saddle_value: region_saddle(p, tag_dist.0, y, z), distance_to_boundary: tag_dist.1 }
}

fn classify_tag(p: &DerivedParams, y: f64, z: f64, w: &LayerWidths) -> (RegionTag, f64) {
    let n = p.nf();
    let strip = w.strip / n;
    let chi = y * n * n;
    if (z - p.gamma).abs() <= strip && chi <= w.corner_chi {
        return (RegionTag::I, (strip - (z - p.gamma).abs()).min((w.corner_chi - chi) / (n * n)));
    }
    if z >= 1.0 - strip {
        let (a, s) = (y0(p, 1.0), (y2(p, 1.0) / n).sqrt());
        let d = (y - a).abs();
        if d <= w.transition * s {
            return (RegionTag::V, w.transition * s - d);
        }
        if y < strip {
            return (RegionTag::VIII, strip - y);
        }
        return if y < a { (RegionTag::IV, d - w.transition * s) } else { (RegionTag::VI, d - w.transition * s) };
    }
    if z <= strip {
        return (RegionTag::III, strip - z);
    }
    if z > p.gamma && y < strip {
        return (RegionTag::VII, strip - y);
    }
    if z > p.gamma {
        let (a, s) = (y0(p, z), (y2(p, z) / n).sqrt());
        let d = (y - a).abs();
        if d <= w.transition * s {
            return (RegionTag::II, w.transition * s - d);
        }
        if y < a {
            return (RegionTag::R1, d - w.transition * s);
        }
        if let Ok(ys) = ystar(p, z) {
            if y > ys {
                return (RegionTag::R3, y - ys);
            }
            return (RegionTag::R2, (ys - y).min(d - w.transition * s));
        }
        return (RegionTag::R2, d - w.transition * s);
    }
    let dz = p.gamma - z;
    (RegionTag::R3, dz)
}

/// The saddle that governs `tag` at (y, z), when the region has one.
pub fn region_saddle(p: &DerivedParams, tag: RegionTag, y: f64, z: f64) -> Option<f64> {
    match tag {
        RegionTag::R1 | RegionTag::R2 => solve_theta(p, y, z).ok().map(|s| s.theta),
        RegionTag::R3 => solve_theta_plus(p, y, z).ok().map(|s| s.theta),
        RegionTag::III => solve_theta0(p, y).ok(),
        RegionTag::IV | RegionTag::VI => solve_theta1(p, y).ok(),
        RegionTag::VII if y > 0.0 => Some((z - p.gamma) / y),
        RegionTag::VIII if y > 0.0 => Some((1.0 - p.gamma) / y),
        _ => None,
    }
}
