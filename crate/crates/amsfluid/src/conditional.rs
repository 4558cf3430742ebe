//! Limit laws for the number of on sources given the buffer level, and for
//! the buffer level given the number of on sources.

use std::f64::consts::PI;

use serde::Serialize;

use crate::approx::interior_g2;
use crate::error::{fail, Reason, Result};
use crate::model::DerivedParams;
use crate::saddle::{self, LayerWidths};
use crate::signed::SignedLogReal;
use crate::special::{bessel_j, log_gamma, normal_pdf};
use crate::spectral::SpectralSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LawKind {
    Gaussian,
    Exponential,
    DiscreteBesselMixture,
    ExpMixture,
}

/// The variable a law is a distribution of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    /// Number of on sources.
    K,
    /// Buffer content.
    X,
    /// Buffer content times N.
    Chi,
}

/// One mixture component: `param` is a rate (exponential mixtures) or the
/// offset l of k = floor(c) + l (Bessel mixtures).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureTerm {
    pub weight: f64,
    pub param: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalLaw {
    pub kind: LawKind,
    pub coordinate: Coordinate,
    pub location: f64,
    /// Standard deviation (Gaussian) or mean (exponential laws).
    pub scale: f64,
    pub mixture_terms: Option<Vec<MixtureTerm>>,
    /// Mass lost by truncating a discrete mixture to a finite window.
    pub truncation_mass: f64,
}

impl ConditionalLaw {
    fn gaussian(coordinate: Coordinate, location: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) || !var.is_finite() {
            return fail(Reason::Domain, format!("Gaussian law needs a positive variance, got {var}"));
        }
        Ok(ConditionalLaw {
            kind: LawKind::Gaussian,
            coordinate,
            location,
            scale: var.sqrt(),
            mixture_terms: None,
            truncation_mass: 0.0,
        })
    }

    /// Density (or probability for the discrete law) at v.
    pub fn density(&self, v: f64) -> f64 {
        match self.kind {
            LawKind::Gaussian => normal_pdf((v - self.location) / self.scale) / self.scale,
            LawKind::Exponential => {
                if v < 0.0 {
                    0.0
                } else {
                    (-v / self.scale).exp() / self.scale
                }
            }
            LawKind::ExpMixture => {
                if v < 0.0 {
                    return 0.0;
                }
                self.terms().iter().map(|t| t.weight * t.param * (-t.param * v).exp()).sum()
            }
            LawKind::DiscreteBesselMixture => {
                let l = v - self.location;
                self.terms().iter().find(|t| t.param == l).map_or(0.0, |t| t.weight)
            }
        }
    }

    fn terms(&self) -> &[MixtureTerm] {
        self.mixture_terms.as_deref().unwrap_or(&[])
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            LawKind::Gaussian => self.location,
            LawKind::Exponential | LawKind::ExpMixture => self.scale,
            LawKind::DiscreteBesselMixture => {
                self.terms().iter().map(|t| t.weight * (self.location + t.param)).sum::<f64>() / self.total_mass()
            }
        }
    }

    /// Support window holding all but a negligible part of the mass.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            LawKind::Gaussian => (self.location - 40.0 * self.scale, self.location + 40.0 * self.scale),
            LawKind::Exponential => (0.0, 60.0 * self.scale),
            LawKind::ExpMixture => {
                let slowest = self.terms().iter().map(|t| t.param).fold(f64::INFINITY, f64::min);
                (0.0, 60.0 / slowest)
            }
            LawKind::DiscreteBesselMixture => {
                let (lo, hi) = self
                    .terms()
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t.param), b.max(t.param)));
                (self.location + lo, self.location + hi)
            }
        }
    }

    /// Integral (or sum) of the density over its support, by adaptive
    /// quadrature for the continuous laws.
    pub fn total_mass(&self) -> f64 {
        match self.kind {
            LawKind::DiscreteBesselMixture => self.terms().iter().map(|t| t.weight).sum(),
            LawKind::ExpMixture => {
                // Each component separately, so fast and slow rates both resolve.
                self.terms()
                    .iter()
                    .map(|t| {
                        let f = |v: f64| t.weight * t.param * (-t.param * v).exp();
                        quadrature::integrate(f, 0.0, 60.0 / t.param, 1e-14).integral
                    })
                    .sum()
            }
            _ => {
                let (a, b) = self.support();
                let mid = if self.kind == LawKind::Gaussian { self.location } else { 10.0 * self.scale };
                let f = |v: f64| self.density(v);
                quadrature::integrate(f, a, mid, 1e-14).integral + quadrature::integrate(f, mid, b, 1e-14).integral
            }
        }
    }

    /// (v, density) pairs for plotting.
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        if self.kind == LawKind::DiscreteBesselMixture {
            return self.terms().iter().map(|t| (self.location + t.param, t.weight)).collect();
        }
        let (a, b) = match self.kind {
            LawKind::Gaussian => (self.location - 5.0 * self.scale, self.location + 5.0 * self.scale),
            _ => (0.0, 8.0 * self.scale),
        };
        let m = points.max(2);
        (0..m)
            .map(|i| {
                let v = a + (b - a) * i as f64 / (m - 1) as f64;
                (v, self.density(v))
            })
            .collect()
    }
}

/// M1(x) = sum_k f_k(x), summed exactly.
pub fn mass_m1(sol: &SpectralSolution, x: f64) -> Result<SignedLogReal> {
    let mut acc = SignedLogReal::ZERO;
    for k in 0..=sol.params.n {
        acc = acc.add(&sol.density(k, x)?.signed);
    }
    Ok(acc)
}

/// Laplace approximation of M1(x) about k = c, for x = O(N).
pub fn mass_m1_laplace(p: &DerivedParams, x: f64) -> Result<SignedLogReal> {
    if !(x > 0.0) {
        return fail(Reason::Domain, format!("M1 needs x > 0, got {x}"));
    }
    let n = p.nf();
    let g = interior_g2(p, x / n, p.gamma)?;
    let theta = g.saddle.unwrap_or(f64::NAN);
    if !(theta < 0.0) {
        return fail(Reason::Domain, format!("Theta+ at z=gamma must be negative, got {theta}"));
    }
    let width = 0.5 * (2.0 * PI * n * p.rho / -theta).ln();
    Ok(SignedLogReal::from_ln(g.density.log_magnitude + width))
}

/// M2(k) = P[Z=k, X>0], from the exact solution.
pub fn mass_m2(sol: &SpectralSolution, k: usize) -> Result<SignedLogReal> {
    Ok(sol.survival(k, 0.0)?.signed)
}

/// Mixture components are dropped once below this fraction of the running sum.
const SERIES_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 200;
/// Offsets l kept in the small-buffer law for the sources.
pub const BESSEL_WINDOW: i64 = 60;

/// ln of the j-independent part of the residue-series term, without the
/// Bessel factor: -phi chi/q + q(rho-phi)/phi + (j-1) ln q - ln j! + q ln(2 lambda(1-gamma)/beta).
fn ln_residue_term(p: &DerivedParams, j: usize, chi: f64) -> Result<(f64, f64)> {
    let q = j as f64 + 1.0 - p.alpha;
    let ln = -p.phi * chi / q + q * (p.rho - p.phi) / p.phi + (j as f64 - 1.0) * q.ln() - log_gamma(j as f64 + 1.0)?
        + q * (2.0 * p.lambda * (1.0 - p.gamma) / p.beta).ln();
    Ok((q, ln))
}

/// Sums `term(j)` until it stays below the tolerance of the running sum.
fn sum_series<F: FnMut(usize) -> Result<f64>>(mut term: F, what: &str) -> Result<f64> {
    let mut s = 0.0f64;
    let mut quiet = 0;
    for j in 0..SERIES_MAX_TERMS {
        let t = term(j)?;
        s += t;
        if t.abs() <= SERIES_TOL * s.abs() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(s);
            }
        } else {
            quiet = 0;
        }
    }
    fail(Reason::SlowConvergence, format!("{what}: no convergence in {SERIES_MAX_TERMS} terms"))
}

fn bessel_factor(p: &DerivedParams, l: i64, j: usize, q: f64) -> f64 {
    bessel_j((l - j as i64 - 1) as i32, -q * p.beta / p.phi)
}

/// Law of the number of on sources given X = x > 0.  Uses the Gaussian
/// about c unless x N is inside the corner width, where the discrete
/// Bessel mixture over k = floor(c) + l applies.
pub fn sources_given_buffer(p: &DerivedParams, x: f64, widths: &LayerWidths) -> Result<ConditionalLaw> {
    if !(x > 0.0) {
        return fail(Reason::Domain, format!("conditioning buffer level must be > 0, got {x}"));
    }
    let n = p.nf();
    let chi = x * n;
    if chi <= widths.corner_chi {
        return sources_small_buffer(p, chi);
    }
    let th = saddle::solve_theta_plus(p, x / n, p.gamma)?.theta;
    ConditionalLaw::gaussian(Coordinate::K, p.c, n * p.rho / -th)
}

fn sources_small_buffer(p: &DerivedParams, chi: f64) -> Result<ConditionalLaw> {
    let (g, a) = (p.gamma, p.alpha);
    let shift = (2.0 * p.rho - p.phi) / p.phi + (p.lambda * (1.0 - g) / g).ln()
        - (2.0 * p.lambda * (1.0 - g) / p.beta).ln()
        - (p.rho - p.phi) / p.phi;
    let denom = sum_series(
        |j| {
            let (q, ln) = ln_residue_term(p, j, chi)?;
            Ok((ln + q * shift).exp())
        },
        "small-buffer normalizer",
    )?;
    let ratio = (p.beta / (2.0 * g)).ln();
    let mut terms = Vec::with_capacity(2 * BESSEL_WINDOW as usize + 1);
    for l in -BESSEL_WINDOW..=BESSEL_WINDOW {
        let num = sum_series(
            |j| {
                let (q, ln) = ln_residue_term(p, j, chi)?;
                Ok((ln + (l as f64 - a) * ratio).exp() * bessel_factor(p, l, j, q))
            },
            "small-buffer weight",
        )?;
        terms.push(MixtureTerm { weight: num / denom, param: l as f64 });
    }
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    Ok(ConditionalLaw {
        kind: LawKind::DiscreteBesselMixture,
        coordinate: Coordinate::K,
        location: p.c_floor as f64,
        scale: 1.0,
        mixture_terms: Some(terms),
        truncation_mass: 1.0 - total,
    })
}

/// Law of the buffer content given Z = k and X > 0: Gaussian about N Y0(z)
/// above c, exponential below c, and a mixture of exponentials in chi = Nx
/// for k within the corner width of c.
pub fn buffer_given_sources(p: &DerivedParams, k: usize, widths: &LayerWidths) -> Result<ConditionalLaw> {
    if k > p.n {
        return fail(Reason::OutOfRange, format!("k={k} exceeds N={}", p.n));
    }
    let n = p.nf();
    let z = k as f64 / n;
    let kf = k as f64;
    if (kf - p.c).abs() <= 1.0 && widths.corner_chi > 0.0 {
        return buffer_near_c(p, k as i64 - p.c_floor as i64);
    }
    if z > p.gamma {
        return ConditionalLaw::gaussian(Coordinate::X, n * saddle::y0(p, z), n * saddle::y2(p, z));
    }
    let th = if k == 0 { saddle::theta_plus_corner(p)? } else { saddle::solve_theta_plus(p, 0.0, z)?.theta };
    if !(th < 0.0) {
        return fail(Reason::Domain, format!("Theta+(0, {z}) must be negative, got {th}"));
    }
    Ok(ConditionalLaw {
        kind: LawKind::Exponential,
        coordinate: Coordinate::X,
        location: 0.0,
        scale: 1.0 / -th,
        mixture_terms: None,
        truncation_mass: 0.0,
    })
}

fn buffer_near_c(p: &DerivedParams, l: i64) -> Result<ConditionalLaw> {
    // Component j has density (phi/q) e^{-phi chi/q} and weight q C_j / sum q C_j.
    let mut raw = Vec::new();
    let mut total = 0.0f64;
    let mut quiet = 0;
    for j in 0..SERIES_MAX_TERMS {
        let (q, ln) = ln_residue_term(p, j, 0.0)?;
        let w = q * ln.exp() * bessel_factor(p, l, j, q);
        raw.push((w, p.phi / q));
        total += w;
        if w.abs() <= SERIES_TOL * total.abs() {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        if j + 1 == SERIES_MAX_TERMS {
            return fail(Reason::SlowConvergence, format!("buffer law near c, l={l}: no convergence"));
        }
    }
    if total == 0.0 {
        return fail(Reason::Singular, format!("buffer law near c, l={l}: zero normalizer"));
    }
    let terms: Vec<MixtureTerm> = raw.into_iter().map(|(w, r)| MixtureTerm { weight: w / total, param: r }).collect();
    let mean = terms.iter().map(|t| t.weight / t.param).sum();
    Ok(ConditionalLaw {
        kind: LawKind::ExpMixture,
        coordinate: Coordinate::Chi,
        location: 0.0,
        scale: mean,
        mixture_terms: Some(terms),
        truncation_mass: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_params;

    #[test]
    fn gaussian_sources_law() {
        let p = reference_params();
        let law = sources_given_buffer(&p, 5.0, &LayerWidths::default()).unwrap();
        assert_eq!(law.kind, LawKind::Gaussian);
        assert_eq!(law.location, p.c);
        let th = saddle::solve_theta_plus(&p, 0.25, p.gamma).unwrap().theta;
        assert!((law.scale * law.scale - 20.0 * p.rho / -th).abs() < 1e-12 * law.scale * law.scale);
        assert!((law.total_mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bessel_mixture_normalizes() {
        let p = reference_params();
        for &chi in &[0.05, 0.5, 2.0] {
            let law = sources_given_buffer(&p, chi / 20.0, &LayerWidths::default()).unwrap();
            assert_eq!(law.kind, LawKind::DiscreteBesselMixture);
            assert!((law.total_mass() - 1.0).abs() < 1e-8, "chi={chi}: {}", law.total_mass());
            assert!(law.truncation_mass.abs() < 1e-8);
        }
    }

    #[test]
    fn buffer_laws_by_range() {
        let p = reference_params();
        let w = LayerWidths::default();
        let g = buffer_given_sources(&p, 15, &w).unwrap();
        assert_eq!(g.kind, LawKind::Gaussian);
        assert!((g.location - 20.0 * saddle::y0(&p, 0.75)).abs() < 1e-12);
        assert!((g.scale - (20.0 * saddle::y2(&p, 0.75)).sqrt()).abs() < 1e-12);
        assert!((g.total_mass() - 1.0).abs() < 1e-8);

        let e = buffer_given_sources(&p, 3, &w).unwrap();
        assert_eq!(e.kind, LawKind::Exponential);
        let th = saddle::solve_theta_plus(&p, 0.0, 0.15).unwrap().theta;
        assert!((e.scale - 1.0 / -th).abs() < 1e-12 && e.scale > 0.0);
        assert!((e.total_mass() - 1.0).abs() < 1e-8);
        assert_eq!(buffer_given_sources(&p, 0, &w).unwrap().kind, LawKind::Exponential);

        for k in [7, 8] {
            let m = buffer_given_sources(&p, k, &w).unwrap();
            assert_eq!(m.kind, LawKind::ExpMixture);
            assert_eq!(m.coordinate, Coordinate::Chi);
            assert!((m.total_mass() - 1.0).abs() < 1e-8, "k={k}: {}", m.total_mass());
        }
        assert!(buffer_given_sources(&p, 21, &w).is_err());
    }

    #[test]
    fn exp_mixture_rates() {
        let p = reference_params();
        let m = buffer_given_sources(&p, 7, &LayerWidths::default()).unwrap();
        for (j, t) in m.mixture_terms.unwrap().iter().enumerate() {
            assert!((t.param - p.phi / (j as f64 + 1.0 - p.alpha)).abs() < 1e-15);
        }
    }

    #[test]
    fn m2_above_c_is_stationary_mass() {
        let p = reference_params();
        let sol = SpectralSolution::new(&p).unwrap();
        let mut total = SignedLogReal::ZERO;
        for k in 0..=20 {
            let m2 = mass_m2(&sol, k).unwrap();
            assert!(m2.sign > 0, "k={k}");
            if k > 7 {
                assert!((m2.to_f64() / sol.stationary(k) - 1.0).abs() < 1e-12, "k={k}");
            }
            total = total.add(&m2);
        }
        let t = total.to_f64();
        assert!(t > 0.0 && t < 1.0);
    }

    #[test]
    fn m1_laplace_tracks_exact_sum() {
        let p = reference_params().with_n(200).unwrap();
        let sol = SpectralSolution::new(&p).unwrap();
        let x = 100.0;
        let exact = mass_m1(&sol, x).unwrap();
        let lap = mass_m1_laplace(&p, x).unwrap();
        assert!((lap.log_magnitude - exact.log_magnitude).abs() < 0.1, "{lap} vs {exact}");
    }
}
