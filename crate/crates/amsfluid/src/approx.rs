//! Leading-order approximations to F_k(x) and f_k(x) in each region of the
//! (y, z) map, and the dispatcher that picks one.
//!
//! Densities are the CDF approximations multiplied by the governing saddle,
//! except in the two Gaussian layers (II, V) where the normal CDF is
//! differentiated directly, and the corner I where the residue series is
//! summed term by term.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{fail, Reason, Result};
use crate::kernel::{self, Branch};
use crate::model::DerivedParams;
use crate::saddle::{self, LayerWidths, RegionTag};
use crate::signed::SignedLogReal;
use crate::special::{bessel_j, ln_normal_cdf, log_gamma};
use crate::spectral::stationary_signed;

/// Coordinates of the point (k, x) in every scaling the layers use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledPoint {
    pub k: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub chi: f64,
    pub l: i64,
    pub j: usize,
    pub s_star: Option<f64>,
}

impl ScaledPoint {
    pub fn new(p: &DerivedParams, k: usize, x: f64) -> Self {
        let n = p.nf();
        let z = k as f64 / n;
        ScaledPoint {
            k,
            x,
            y: x / n,
            z,
            chi: x * n,
            l: k as i64 - p.c_floor as i64,
            j: p.n.saturating_sub(k),
            s_star: if x > 0.0 { Some((z - p.gamma) / x) } else { None },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxResult {
    /// F_k(x), or F_k(x) - F_k(inf) when `is_deviation`.
    pub value: SignedLogReal,
    pub density: SignedLogReal,
    pub region: RegionTag,
    pub saddle: Option<f64>,
    pub is_deviation: bool,
    pub near_coalescence: bool,
}

impl ApproxResult {
    fn from_saddle(value: SignedLogReal, region: RegionTag, saddle: f64, is_deviation: bool) -> Self {
        ApproxResult {
            value,
            density: value.scale(saddle),
            region,
            saddle: Some(saddle),
            is_deviation,
            near_coalescence: false,
        }
    }
}

fn ln_pref(p: &DerivedParams) -> f64 {
    p.nf() * (p.lambda / (p.lambda + 1.0)).ln()
}

/// ln sqrt(a/b), for a pair of reals of equal sign.
fn ln_sqrt_ratio(a: f64, b: f64, what: &str) -> Result<f64> {
    let r = a / b;
    if !(r > 0.0) || !r.is_finite() {
        return fail(Reason::Complex, format!("{what}: sqrt of {a}/{b} is not real"));
    }
    Ok(0.5 * r.ln())
}

fn sqrt_branch_factor(p: &DerivedParams, theta: f64) -> f64 {
    -p.theta0 / (theta - p.theta0)
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn interior(p: &DerivedParams, b: Branch, y: f64, z: f64, theta: f64, tag: RegionTag) -> Result<ApproxResult> {
    if theta.abs() < 1e-10 {
        return fail(Reason::Singular, format!("Theta vanishes at y={y}, z={z}; use the transition layer"));
    }
    let n = p.nf();
    let w = kernel::w_branch(p, b, theta, z)?;
    let ew = kernel::eta_ww(p, b, theta, z)?;
    let ptt = kernel::g_second(p, b, theta, z)?;
    let g = kernel::g_branch(p, b, theta, z)?;
    let q = sqrt_branch_factor(p, theta);
    let ln = ln_pref(p) - (2.0 * PI * n).ln() - theta.abs().ln() - w.abs().ln()
        + ln_sqrt_ratio(q, ew * ptt, "G")?
        + n * (y * theta + g);
    let value = SignedLogReal::new(sign_of(theta) * sign_of(w), ln);
    Ok(ApproxResult::from_saddle(value, tag, theta, theta < 0.0))
}

/// The minus-branch saddle approximation on either side of the transition curve.
pub fn interior_g1(p: &DerivedParams, y: f64, z: f64) -> Result<ApproxResult> {
    interior_g1_guarded(p, y, z, saddle::COALESCENCE_GUARD)
}

pub fn interior_g1_guarded(p: &DerivedParams, y: f64, z: f64, guard: f64) -> Result<ApproxResult> {
    let s = saddle::solve_theta_guarded(p, y, z, guard)?;
    let tag = if s.theta > 0.0 { RegionTag::R1 } else { RegionTag::R2 };
    let mut r = interior(p, Branch::Minus, y, z, s.theta, tag)?;
    r.near_coalescence = s.near_coalescence;
    Ok(r)
}

/// The plus-branch saddle approximation above the coalescence curve and below z = gamma.
pub fn interior_g2(p: &DerivedParams, y: f64, z: f64) -> Result<ApproxResult> {
    interior_g2_guarded(p, y, z, saddle::COALESCENCE_GUARD)
}

pub fn interior_g2_guarded(p: &DerivedParams, y: f64, z: f64, guard: f64) -> Result<ApproxResult> {
    let s = saddle::solve_theta_plus_guarded(p, y, z, guard)?;
    let mut r = interior(p, Branch::Plus, y, z, s.theta, RegionTag::R3)?;
    r.near_coalescence = s.near_coalescence;
    Ok(r)
}

/// Gaussian transition across y = Y0(z).
pub fn transition_ii(p: &DerivedParams, y: f64, z: f64) -> Result<ApproxResult> {
    if !(z > p.gamma && z < 1.0) {
        return fail(Reason::Domain, format!("transition layer needs gamma < z < 1, got {z}"));
    }
    let n = p.nf();
    let y2 = saddle::y2(p, z);
    let v = (y - saddle::y0(p, z)) * (n / y2).sqrt();
    let base = -0.5 * (2.0 * PI * n * z * (1.0 - z)).ln() + n * kernel::phi_entropy(p, z);
    let value = SignedLogReal::from_ln(base + ln_normal_cdf(v));
    let density = SignedLogReal::from_ln(base - 0.5 * v * v - 0.5 * (2.0 * PI).ln() - 0.5 * (n * y2).ln());
    Ok(ApproxResult { value, density, region: RegionTag::II, saddle: None, is_deviation: false, near_coalescence: false })
}

/// Boundary layer at z = 0 for k = O(1): the deviation F_k(x) - F_k(inf).
pub fn boundary_iii(p: &DerivedParams, k: usize, y: f64) -> Result<ApproxResult> {
    let n = p.nf();
    let t0 = saddle::solve_theta0(p, y)?;
    let p2 = saddle::psi0_second(p, t0)?;
    let q = sqrt_branch_factor(p, t0);
    let kf = k as f64;
    let ln = kf * n.ln() - log_gamma(kf + 1.0)? + ln_pref(p) - 0.5 * (2.0 * PI * n).ln() - t0.abs().ln()
        + ln_sqrt_ratio(q, p2, "F3")?
        + kf * (p.lambda - p.gamma * t0).ln()
        + n * kernel::psi0(p, y, t0)?;
    Ok(ApproxResult::from_saddle(SignedLogReal::new(sign_of(t0), ln), RegionTag::III, t0, true))
}

/// Boundary layer at z = 1 with k = N - j.  Below Y0(1) this is F_k itself
/// (region IV); above it the same expression is the deviation (region VI).
pub fn boundary_iv(p: &DerivedParams, j: usize, y: f64) -> Result<ApproxResult> {
    let n = p.nf();
    let t1 = saddle::solve_theta1(p, y)?;
    if t1.abs() < 1e-10 {
        return fail(Reason::Singular, format!("Theta1 vanishes at y={y}; use the corner layer at (Y0(1), 1)"));
    }
    let m2 = kernel::mu_second(p, t1)?;
    let q = sqrt_branch_factor(p, t1);
    let jf = j as f64;
    let ln = jf * n.ln() - log_gamma(jf + 1.0)? - 0.5 * (2.0 * PI * n).ln() + ln_pref(p) - t1.abs().ln()
        + ln_sqrt_ratio(q, m2, "F4")?
        + jf * ((1.0 + (1.0 - p.gamma) * t1) / p.lambda).ln()
        + n * (y * t1 + kernel::mu(p, t1)?);
    let tag = if t1 > 0.0 { RegionTag::IV } else { RegionTag::VI };
    Ok(ApproxResult::from_saddle(SignedLogReal::new(sign_of(t1), ln), tag, t1, t1 < 0.0))
}

/// The deviation above Y0(1) near z = 1.
pub fn boundary_vi(p: &DerivedParams, j: usize, y: f64) -> Result<ApproxResult> {
    if !(y > saddle::y0(p, 1.0)) {
        return fail(Reason::OutOfRegion, format!("region VI needs y > Y0(1), got {y}"));
    }
    boundary_iv(p, j, y)
}

/// Gaussian corner at (Y0(1), 1).
pub fn corner_v(p: &DerivedParams, j: usize, y: f64) -> Result<ApproxResult> {
    let n = p.nf();
    let y2 = saddle::y2(p, 1.0);
    let v = (y - saddle::y0(p, 1.0)) * (n / y2).sqrt();
    let jf = j as f64;
    let lead = jf * (n / p.lambda).ln() - log_gamma(jf + 1.0)? + ln_pref(p);
    let value = SignedLogReal::from_ln(lead + ln_normal_cdf(v));
    let density = SignedLogReal::from_ln(lead - 0.5 * v * v - 0.5 * (2.0 * PI).ln() - 0.5 * (n * y2).ln());
    Ok(ApproxResult { value, density, region: RegionTag::V, saddle: None, is_deviation: false, near_coalescence: false })
}

/// Boundary layer at x = O(1) for gamma < z < 1.
pub fn boundary_vii(p: &DerivedParams, x: f64, z: f64) -> Result<ApproxResult> {
    if !(z > p.gamma && z < 1.0) {
        return fail(Reason::Singular, format!("region VII needs gamma < z < 1, got {z}"));
    }
    if !(x > 0.0) {
        return fail(Reason::Domain, format!("region VII needs x > 0, got {x}"));
    }
    let (n, g, rho, phi, a, l) = (p.nf(), p.gamma, p.rho, p.phi, p.alpha, p.lambda);
    let dz = z - g;
    let u = x * phi / dz;
    let ln = -1.5 * (2.0 * PI * n).ln() + 0.5 * (rho / (phi * g * (1.0 - z))).ln() - dz.ln()
        + log_gamma(u + 1.0 - a)?
        + a * u.ln()
        + n * (dz * (x * std::f64::consts::E / (dz * dz * n)).ln() + z * l.ln() - (1.0 - z) * (1.0 - z).ln()
            - (l + 1.0).ln()
            - g * g.ln())
        + u * (g / (phi * dz * n)).ln()
        + (2.0 * l * (1.0 - g) / dz + (l - 1.0)) * x;
    let s = n * dz / x;
    Ok(ApproxResult::from_saddle(SignedLogReal::from_ln(ln), RegionTag::VII, s, false))
}

/// Corner at (x, k) = (O(1), N - j).
pub fn corner_viii(p: &DerivedParams, j: usize, x: f64) -> Result<ApproxResult> {
    if !(x > 0.0) {
        return fail(Reason::Domain, format!("region VIII needs x > 0, got {x}"));
    }
    let (n, g, rho, phi, a, l) = (p.nf(), p.gamma, p.rho, p.phi, p.alpha, p.lambda);
    let jf = j as f64;
    let u = x * phi / (1.0 - g);
    let ln = 2.0 * jf * n.ln() - log_gamma(jf + 1.0)? + ln_pref(p) - (2.0 * PI * n).ln()
        + 0.5 * (rho / (phi * g)).ln()
        - (1.0 - g).ln()
        + n * ((1.0 - g) * (std::f64::consts::E * x / ((1.0 - g) * (1.0 - g) * n)).ln() - g * g.ln())
        + a * u.ln()
        + log_gamma(u + 1.0 - a)?
        + jf * ((1.0 - g) * (1.0 - g) / (l * x)).ln()
        + u * (g / (phi * (1.0 - g) * n)).ln()
        + (3.0 * l - 1.0) * x;
    let s = n * (1.0 - g) / x;
    Ok(ApproxResult::from_saddle(SignedLogReal::from_ln(ln), RegionTag::VIII, s, false))
}

const CORNER_MAX_TERMS: usize = 200;
const CORNER_TOL: f64 = 1e-14;

/// Terms of the corner residue series, each times the common prefactor,
/// as (density term, CDF-deviation term).
fn corner_terms(p: &DerivedParams, l: i64, chi: f64) -> Result<(f64, f64)> {
    let (n, g, rho, phi, a, b, lam) = (p.nf(), p.gamma, p.rho, p.phi, p.alpha, p.beta, p.lambda);
    let ln_head = 0.5 * n.ln() - 0.5 * (2.0 * PI).ln() + 0.5 * (rho * phi / (g * (1.0 - g))).ln()
        + (l as f64 - a) * (b / (2.0 * g)).ln()
        + n * kernel::phi_entropy(p, g);
    let ratio = (2.0 * lam * (1.0 - g) / b).ln();
    let (mut sf, mut sd) = (0.0f64, 0.0f64);
    let mut quiet = 0;
    for j in 0..CORNER_MAX_TERMS {
        let jf = j as f64;
        let q = jf + 1.0 - a;
        let ln_t = -phi * chi / q + q * (rho - phi) / phi + (jf - 1.0) * q.ln() - log_gamma(jf + 1.0)? + q * ratio;
        let order = l - j as i64 - 1;
        let bj = if order.abs() > i32::MAX as i64 { 0.0 } else { bessel_j(order as i32, -q * b / phi) };
        let t = (ln_t + ln_head).exp() * bj;
        let td = t * q / (phi * n);
        sf += t;
        sd += td;
        if t.abs() <= CORNER_TOL * sf.abs() && td.abs() <= CORNER_TOL * sd.abs() {
            quiet += 1;
            if quiet >= 3 {
                return Ok((sf, sd));
            }
        } else {
            quiet = 0;
        }
    }
    fail(Reason::SlowConvergence, format!("corner series at l={l}, chi={chi} did not settle in {CORNER_MAX_TERMS} terms"))
}

/// Corner layer at (x, k) = (chi/N, floor(c) + l), summed as a residue series.
/// The CDF is F_k(inf) minus the integrated series.
pub fn corner_i(p: &DerivedParams, l: i64, chi: f64) -> Result<ApproxResult> {
    let k = p.c_floor as i64 + l;
    if k < 0 || k > p.n as i64 {
        return fail(Reason::Domain, format!("corner offset l={l} puts k outside 0..=N"));
    }
    if chi < 0.0 {
        return fail(Reason::Domain, format!("corner needs chi >= 0, got {chi}"));
    }
    let (sf, sd) = corner_terms(p, l, chi)?;
    let value = stationary_signed(p, k as usize).add(&SignedLogReal::from_f64(-sd));
    Ok(ApproxResult {
        value,
        density: SignedLogReal::from_f64(sf),
        region: RegionTag::I,
        saddle: None,
        is_deviation: false,
        near_coalescence: false,
    })
}

/// Evaluates the approximation for the region containing (k, x), or for
/// `region` when given.
pub fn density_approx(
    p: &DerivedParams,
    k: usize,
    x: f64,
    region: Option<RegionTag>,
    widths: &LayerWidths,
) -> Result<ApproxResult> {
    if k > p.n {
        return fail(Reason::OutOfRange, format!("k={k} exceeds N={}", p.n));
    }
    if !(x >= 0.0) {
        return fail(Reason::OutOfRange, format!("x must be non-negative, got {x}"));
    }
    let sp = ScaledPoint::new(p, k, x);
    let tag = region.unwrap_or_else(|| saddle::classify(p, sp.y, sp.z, widths).tag);
    let mut r = match tag {
        RegionTag::R1 | RegionTag::R2 => interior_g1(p, sp.y, sp.z)?,
        RegionTag::R3 => interior_g2(p, sp.y, sp.z)?,
        RegionTag::I => corner_i(p, sp.l, sp.chi)?,
        RegionTag::II => transition_ii(p, sp.y, sp.z)?,
        RegionTag::III => boundary_iii(p, k, sp.y)?,
        RegionTag::IV | RegionTag::VI => boundary_iv(p, sp.j, sp.y)?,
        RegionTag::V => corner_v(p, sp.j, sp.y)?,
        RegionTag::VII => boundary_vii(p, x, sp.z)?,
        RegionTag::VIII => corner_viii(p, sp.j, x)?,
    };
    r.region = tag;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_params;
    use crate::spectral::SpectralSolution;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Values from an independent 40-digit evaluation of the same formulas.
    #[test]
    fn interior_matches_high_precision_oracle() {
        let p = reference_params();
        for &(k, want) in &[(12, 8.69815e-19), (13, 5.07654e-21), (15, 3.15354e-26), (17, 2.66649e-32), (19, 2.73258e-39)] {
            let r = interior_g1(&p, 0.05, k as f64 / 20.0).unwrap();
            assert!(rel(r.density.to_f64(), want) < 2e-5, "k={k} {} vs {want}", r.density);
        }
        for &(k, want) in &[(1, 1.33365e-18), (3, 1.43134e-16), (9, 1.62279e-14)] {
            let r = interior_g2(&p, 0.05, k as f64 / 20.0).unwrap();
            assert!(rel(r.density.to_f64(), want) < 2e-5, "k={k} {} vs {want}", r.density);
            assert!(r.is_deviation && r.value.sign < 0);
        }
    }

    #[test]
    fn boundaries_match_high_precision_oracle() {
        let p = reference_params();
        for &(k, want) in &[(0, 4.35774e-20), (6, 1.96219e-14)] {
            let r = boundary_iii(&p, k, 0.05).unwrap();
            assert!(rel(r.density.to_f64(), want) < 2e-5, "k={k} {}", r.density);
        }
        for &(k, want) in &[(16, 1.46821e-28), (20, 2.38816e-43)] {
            let r = boundary_iv(&p, 20 - k, 0.05).unwrap();
            assert!(rel(r.density.to_f64(), want) < 2e-5, "k={k} {}", r.density);
            assert_eq!(r.region, RegionTag::IV);
        }
    }

    #[test]
    fn deviation_flags() {
        let p = reference_params();
        assert!(!interior_g1(&p, 0.05, 0.8).unwrap().is_deviation);
        assert!(interior_g1(&p, 0.05, 0.55).unwrap().is_deviation);
        assert!(boundary_iii(&p, 0, 0.05).unwrap().is_deviation);
        let vi = boundary_vi(&p, 0, 1.0).unwrap();
        assert!(vi.is_deviation && vi.region == RegionTag::VI && vi.value.sign < 0);
        assert!(boundary_vi(&p, 0, 0.1).is_err());
    }

    #[test]
    fn transition_limits() {
        let p = reference_params();
        let z = 0.6;
        let n = 20.0;
        let full = (-0.5 * (2.0 * PI * n * z * (1.0 - z)).ln() + n * kernel::phi_entropy(&p, z)).exp();
        let far = transition_ii(&p, 10.0, z).unwrap().value.to_f64();
        assert!(rel(far, full) < 1e-12);
        let mid = transition_ii(&p, saddle::y0(&p, z), z).unwrap().value.to_f64();
        assert!(rel(mid, 0.5 * full) < 1e-12);
    }

    #[test]
    fn transition_density_is_derivative() {
        let p = reference_params();
        let (z, x, h) = (0.6, 1.1, 1e-4);
        let f = |x: f64| transition_ii(&p, x / 20.0, z).unwrap().value.to_f64();
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        assert!(rel(transition_ii(&p, x / 20.0, z).unwrap().density.to_f64(), fd) < 1e-6);
        let g = |x: f64| corner_v(&p, 2, x / 20.0).unwrap().value.to_f64();
        let fd = (g(x + h) - g(x - h)) / (2.0 * h);
        assert!(rel(corner_v(&p, 2, x / 20.0).unwrap().density.to_f64(), fd) < 1e-6);
    }

    #[test]
    fn corner_v_limits() {
        let p = reference_params();
        let top = stationary_signed(&p, 20).to_f64();
        assert!(rel(corner_v(&p, 0, 100.0).unwrap().value.to_f64(), top) < 1e-10);
        let half = corner_v(&p, 3, saddle::y0(&p, 1.0)).unwrap().value.to_f64();
        let lead = (3.0 * (20.0 / p.lambda).ln() - 6f64.ln()).exp() * top;
        assert!(rel(half, 0.5 * lead) < 1e-10);
    }

    #[test]
    fn boundary_vii_small_x_order() {
        let p = reference_params();
        let z = 0.7;
        let a = boundary_vii(&p, 1e-4, z).unwrap().value.log_magnitude;
        let b = boundary_vii(&p, 1e-3, z).unwrap().value.log_magnitude;
        let slope = (b - a) / 10f64.ln();
        let want = 14.0 - p.c_floor as f64;
        assert!((slope - want).abs() < 0.01, "{slope} {want}");
        let r = boundary_vii(&p, 0.5, z).unwrap();
        assert!(rel(r.saddle.unwrap(), 20.0 * (z - p.gamma) / 0.5) < 1e-15);
    }

    #[test]
    fn corner_viii_order_and_j_ratio() {
        let p = reference_params();
        let a = corner_viii(&p, 0, 1e-4).unwrap().value.log_magnitude;
        let b = corner_viii(&p, 0, 1e-3).unwrap().value.log_magnitude;
        let slope = (b - a) / 10f64.ln();
        assert!((slope - (20.0 - p.c_floor as f64)).abs() < 0.01, "{slope}");
        let x = 0.3;
        let r0 = corner_viii(&p, 1, x).unwrap().value;
        let r1 = corner_viii(&p, 2, x).unwrap().value;
        let want = 2.0 / (400.0 * (1.0 - p.gamma).powi(2) / (p.lambda * x));
        assert!(rel(r0.ratio(&r1).recip(), want.recip()) < 1e-12);
    }

    #[test]
    fn corner_generating_function() {
        let p = reference_params();
        let (g, rho, phi, a, b) = (p.gamma, p.rho, p.phi, p.alpha, p.beta);
        for j in 0..4 {
            let q = j as f64 + 1.0 - a;
            let mut s = 0.0;
            for l in -60i32..=60 {
                let m = l - j - 1;
                s += (b / (2.0 * g)).powi(m) * bessel_j(m, -q * b / phi);
            }
            assert!(rel(s, (rho * q / phi).exp()) < 1e-10, "j={j}");
        }
    }

    #[test]
    fn corner_density_tracks_exact() {
        let p = reference_params();
        let sol = SpectralSolution::new(&p).unwrap();
        let k = p.c_floor;
        let x = 0.05;
        let exact = sol.density(k, x).unwrap().value;
        let r = corner_i(&p, 0, x * 20.0).unwrap();
        assert!(rel(r.density.to_f64(), exact) < 0.1, "{} vs {exact}", r.density);
    }

    #[test]
    fn corner_cdf_tends_to_stationary() {
        let p = reference_params();
        let r = corner_i(&p, 1, 200.0).unwrap();
        assert!(rel(r.value.to_f64(), stationary_signed(&p, p.c_floor + 1).to_f64()) < 1e-10);
    }

    #[test]
    fn dispatcher_uses_override_and_region_saddles() {
        let p = reference_params();
        let w = LayerWidths::default();
        let r = density_approx(&p, 3, 1.0, Some(RegionTag::R3), &w).unwrap();
        assert_eq!(r.region, RegionTag::R3);
        assert!(rel(r.saddle.unwrap(), -3.99413) < 1e-5);
        let r = density_approx(&p, 20, 1.0, Some(RegionTag::IV), &w).unwrap();
        assert!(rel(r.saddle.unwrap(), 9.26867) < 1e-5);
        let r = density_approx(&p, 12, 1.0, None, &w).unwrap();
        assert_eq!(r.region, RegionTag::II);
        assert!(density_approx(&p, 21, 1.0, None, &w).is_err());
    }

    #[test]
    fn density_argmax_at_zero_for_small_k() {
        let p = reference_params();
        let w = LayerWidths::default();
        let d = |x: f64| density_approx(&p, 3, x, Some(RegionTag::R3), &w).unwrap().density.to_f64();
        let d0 = d(0.01);
        for i in 1..40 {
            assert!(d(0.01 + 0.1 * i as f64) < d0);
        }
    }
}
