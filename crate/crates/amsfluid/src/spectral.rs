//! Exact steady state via the spectral representation.
//!
//! Everything here runs in extended-exponent double-double (`Xdd`).  The
//! alternating sums over eigenvalues cancel by up to ~12 digits already at
//! N=20, x=1, so the extra precision is used for every N.

use twofloat::TwoFloat;

use crate::error::{fail, Error, Reason, Result};
use crate::model::DerivedParams;
use crate::signed::SignedLogReal;
use crate::xdd::{dd, div_dd, sqrt_dd, Xdd};

/// Decimal digits carried by the working precision.
pub const WORKING_DIGITS: f64 = 31.0;
/// Default minimum number of surviving significant digits.
pub const DEFAULT_DIGIT_BUDGET: f64 = 6.0;

/// Model constants in double-double.
#[derive(Debug, Clone, Copy)]
struct DdConsts {
    lambda: TwoFloat,
    gamma: TwoFloat,
    rho: TwoFloat,
}

impl DdConsts {
    fn new(p: &DerivedParams) -> Self {
        let lambda = dd(p.lambda);
        let gamma = dd(p.c) / p.nf();
        let rho = gamma - lambda + lambda * gamma;
        DdConsts { lambda, gamma, rho }
    }

    fn sigma(&self, x: TwoFloat) -> TwoFloat {
        let (l, g, rho) = (self.lambda, self.gamma, self.rho);
        let one = dd(1.0);
        let s = sqrt_dd(rho * rho + 4.0 * l * (one - x) * x);
        let num = rho + 2.0 * (l - 1.0) * (one - x) * x + (one - 2.0 * x) * s;
        div_dd(num, 2.0 * (g - x) * (one - g - x))
    }

    fn delta(&self, t: TwoFloat) -> TwoFloat {
        let u = t + 1.0 - self.lambda;
        sqrt_dd(u * u + 4.0 * self.lambda)
    }

    /// (R1, R2), each computed without cancellation using R1 R2 = 1/lambda.
    fn r12(&self, t: TwoFloat) -> (TwoFloat, TwoFloat) {
        let l = self.lambda;
        let d = self.delta(t);
        let b = l - 1.0 - t;
        if b.hi() >= 0.0 {
            let r1 = div_dd(d + b, 2.0 * l);
            (r1, div_dd(one(), l * r1))
        } else {
            let r2 = div_dd(d - b, 2.0 * l);
            (div_dd(one(), l * r2), r2)
        }
    }

    fn v(&self, t: TwoFloat) -> TwoFloat {
        let g = self.gamma;
        (1.0 + div_dd((2.0 * g - 1.0) * t - self.lambda - 1.0, self.delta(t))) / 2.0
    }
}

fn one() -> TwoFloat {
    dd(1.0)
}

/// Eigenvalue function; theta_j = -sigma(j/N).
pub fn sigma(p: &DerivedParams, x: f64) -> Result<f64> {
    let g = p.gamma;
    if !(x >= 0.0) || x >= 1.0 - g {
        return fail(Reason::Domain, format!("sigma needs x in [0, 1-gamma), got {x}"));
    }
    if (x - g).abs() < 1e-14 || (1.0 - g - x).abs() < 1e-14 {
        return fail(Reason::Domain, format!("sigma has a pole at x={x}"));
    }
    Ok(DdConsts::new(p).sigma(dd(x)).hi())
}

/// The negative eigenvalues of D^-1 M, ordered by index j.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Spectrum {
    pub thetas: Vec<f64>,
    #[serde(skip)]
    thetas_dd: Vec<TwoFloat>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

pub fn eigenvalues(p: &DerivedParams) -> Spectrum {
    let k = DdConsts::new(p);
    let n = p.nf();
    let thetas_dd: Vec<TwoFloat> = (0..p.n_eigen()).map(|j| -k.sigma(dd(j as f64) / n)).collect();
    Spectrum { thetas: thetas_dd.iter().map(|t| t.hi() + t.lo()).collect(), thetas_dd }
}

/// binom(N,k) lambda^k / (1+lambda)^N.
pub fn stationary(p: &DerivedParams, k: usize) -> f64 {
    stationary_x(p, k).to_f64()
}

/// The same mass without underflow.
pub fn stationary_signed(p: &DerivedParams, k: usize) -> SignedLogReal {
    stationary_x(p, k).to_signed_log()
}

fn stationary_x(p: &DerivedParams, k: usize) -> Xdd {
    if k > p.n {
        return Xdd::ZERO;
    }
    let l = dd(p.lambda);
    let b = binomial_x(p.n, k);
    b * Xdd::from_tf(l).powi(k as u32) / Xdd::from_tf(l + 1.0).powi(p.n as u32)
}

fn binomial_x(n: usize, k: usize) -> Xdd {
    if k > n {
        return Xdd::ZERO;
    }
    let k = k.min(n - k);
    let mut b = Xdd::one();
    for i in 0..k {
        b = b * Xdd::from_f64((n - i) as f64) / Xdd::from_f64((i + 1) as f64);
    }
    b
}

/// The generator pair (D, M) with D F' = M F; test oracle only.
#[derive(Debug, Clone)]
pub struct Generator {
    pub d: Vec<f64>,
    pub m: Vec<Vec<f64>>,
}

pub fn generator_oracle(p: &DerivedParams) -> Generator {
    let n = p.n;
    let l = p.lambda;
    let d = (0..=n).map(|j| j as f64 - p.c).collect();
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        m[i][i] = -(l * (n - i) as f64 + i as f64);
        if i < n {
            m[i][i + 1] = (i + 1) as f64;
        }
        if i > 0 {
            m[i][i - 1] = l * (n - i + 1) as f64;
        }
    }
    Generator { d, m }
}

/// An evaluated spectral sum together with its precision bookkeeping.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Evaluated {
    pub value: f64,
    pub signed: SignedLogReal,
    /// Decimal digits lost to cancellation: log10(max |term| / |sum|).
    pub digits_lost: f64,
    /// Significant digits left after cancellation.
    pub digits: f64,
    pub cancelled: bool,
}

impl Evaluated {
    fn from_sum(sum: Xdd, max_term: Xdd, budget: f64) -> Self {
        let lost = if sum.is_zero() {
            WORKING_DIGITS
        } else if max_term.is_zero() {
            0.0
        } else {
            (max_term.log10_abs() - sum.log10_abs()).max(0.0)
        };
        let digits = (WORKING_DIGITS - lost).max(0.0);
        Evaluated { value: sum.to_f64(), signed: sum.to_signed_log(), digits_lost: lost, digits, cancelled: digits < budget }
    }

    /// Err(CANCELLATION) when too few digits survived.
    pub fn checked(self) -> Result<Self> {
        if self.cancelled {
            Err(Error::new(
                Reason::Cancellation,
                format!("only {:.1} significant digits survive (lost {:.1})", self.digits, self.digits_lost),
            ))
        } else {
            Ok(self)
        }
    }
}

/// Exact solver state: spectrum, coefficients a_j and h_k(theta_j).
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub params: DerivedParams,
    pub spectrum: Spectrum,
    coeffs: Vec<Xdd>,
    /// hmat[k][j] = h_k(theta_j).
    hmat: Vec<Vec<Xdd>>,
    stat: Vec<Xdd>,
    pub digit_budget: f64,
}

impl SpectralSolution {
    pub fn new(p: &DerivedParams) -> Result<Self> {
        p.raw().validate()?;
        let spectrum = eigenvalues(p);
        let coeffs = coefficients_x(p, &spectrum)?;
        let hmat = h_matrix(p, &spectrum);
        let stat = (0..=p.n).map(|k| stationary_x(p, k)).collect();
        Ok(SpectralSolution { params: *p, spectrum, coeffs, hmat, stat, digit_budget: DEFAULT_DIGIT_BUDGET })
    }

    pub fn coefficients(&self) -> Vec<SignedLogReal> {
        self.coeffs.iter().map(|a| a.to_signed_log()).collect()
    }

    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|a| a.to_f64()).collect()
    }

    /// h_k(theta_j) in signed-log form.
    pub fn h(&self, k: usize, j: usize) -> SignedLogReal {
        self.hmat[k][j].to_signed_log()
    }

    pub fn stationary(&self, k: usize) -> f64 {
        self.stat[k].to_f64()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.params.n {
            return fail(Reason::OutOfRange, format!("k={k} exceeds N={}", self.params.n));
        }
        Ok(())
    }

    fn sum(&self, k: usize, x: f64, derivative: bool) -> (Xdd, Xdd) {
        let xd = dd(x);
        let mut sum = if derivative { Xdd::ZERO } else { self.stat[k] };
        let mut max = sum.abs();
        for (j, t) in self.spectrum.thetas_dd.iter().enumerate() {
            let mut term = self.coeffs[j] * self.hmat[k][j] * Xdd::exp_tf(*t * xd);
            if derivative {
                term = term * Xdd::from_tf(*t);
            }
            if term.cmp_abs(&max) == std::cmp::Ordering::Greater {
                max = term.abs();
            }
            sum += term;
        }
        (sum, max)
    }

    /// F_k(x) = P[Z=k, X<=x].
    pub fn cdf(&self, k: usize, x: f64) -> Result<Evaluated> {
        self.check_k(k)?;
        if !(x >= 0.0) {
            return fail(Reason::Domain, format!("x must be >= 0, got {x}"));
        }
        let (s, m) = self.sum(k, x, false);
        Ok(Evaluated::from_sum(s, m, self.digit_budget))
    }

    /// P[Z=k, X>x] = F_k(inf) - F_k(x), summed without the stationary term.
    pub fn survival(&self, k: usize, x: f64) -> Result<Evaluated> {
        self.check_k(k)?;
        if !(x >= 0.0) {
            return fail(Reason::Domain, format!("x must be >= 0, got {x}"));
        }
        let xd = dd(x);
        let mut sum = Xdd::ZERO;
        let mut max = Xdd::ZERO;
        for (j, t) in self.spectrum.thetas_dd.iter().enumerate() {
            let term = -(self.coeffs[j] * self.hmat[k][j] * Xdd::exp_tf(*t * xd));
            if term.cmp_abs(&max) == std::cmp::Ordering::Greater {
                max = term.abs();
            }
            sum += term;
        }
        Ok(Evaluated::from_sum(sum, max, self.digit_budget))
    }

    /// f_k(x) = F_k'(x) for x > 0.
    pub fn density(&self, k: usize, x: f64) -> Result<Evaluated> {
        self.check_k(k)?;
        if !(x > 0.0) {
            return fail(Reason::Domain, format!("density needs x > 0, got {x}"));
        }
        let (s, m) = self.sum(k, x, true);
        Ok(Evaluated::from_sum(s, m, self.digit_budget))
    }

    /// Exact product prod theta_j / (theta_j - theta).
    pub fn product(&self, theta: f64) -> Result<SignedLogReal> {
        let t = dd(theta);
        let mut acc = Xdd::one();
        for (tj, &tf) in self.spectrum.thetas_dd.iter().zip(&self.spectrum.thetas) {
            if (tf - theta).abs() <= 1e-12 * tf.abs() {
                return fail(Reason::Pole, format!("theta={theta} hits eigenvalue {tf}"));
            }
            acc = acc * Xdd::from_tf(*tj) / Xdd::from_tf(*tj - t);
        }
        Ok(acc.to_signed_log())
    }

    /// Balance-equation residual at (k, x), relative to the largest term.
    pub fn balance_residual(&self, k: usize, x: f64) -> Result<f64> {
        let p = &self.params;
        let n = p.n;
        let l = dd(p.lambda);
        let fk = self.sum(k, x, true).0;
        let cdf = |i: isize| -> Xdd {
            if i < 0 || i as usize > n {
                Xdd::ZERO
            } else {
                self.sum(i as usize, x, false).0
            }
        };
        let ki = k as isize;
        let lhs = Xdd::from_tf(dd(k as f64) - dd(p.c)) * fk;
        let t1 = Xdd::from_tf(l * ((n - k + 1) as f64)) * cdf(ki - 1);
        let t2 = Xdd::from_f64((k + 1) as f64) * cdf(ki + 1);
        let t3 = -Xdd::from_tf(l * ((n - k) as f64) + k as f64) * cdf(ki);
        let res = lhs - (t1 + t2 + t3);
        let scale = [lhs, t1, t2, t3].iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(res.abs().to_f64() / scale)
    }
}

fn coefficients_x(p: &DerivedParams, s: &Spectrum) -> Result<Vec<Xdd>> {
    let l = dd(p.lambda);
    let lead = -(Xdd::from_tf(div_dd(l, l + 1.0))).powi(p.n as u32);
    let th = &s.thetas_dd;
    let mut out = Vec::with_capacity(th.len());
    for j in 0..th.len() {
        let mut prod = lead;
        for i in 0..th.len() {
            if i == j {
                continue;
            }
            let diff = th[i] - th[j];
            if diff.hi().abs() <= 1e-12 * th[j].hi().abs() {
                return fail(Reason::DegenerateSpectrum, format!("theta_{i} and theta_{j} coincide"));
            }
            prod = prod * Xdd::from_tf(th[i]) / Xdd::from_tf(diff);
        }
        out.push(prod);
    }
    Ok(out)
}

/// Coefficients a_j as signed-log values.
pub fn coefficients(p: &DerivedParams, s: &Spectrum) -> Result<Vec<SignedLogReal>> {
    Ok(coefficients_x(p, s)?.iter().map(|a| a.to_signed_log()).collect())
}

/// Pascal triangle rows 0..=n.
fn pascal(n: usize) -> Vec<Vec<Xdd>> {
    let mut rows: Vec<Vec<Xdd>> = Vec::with_capacity(n + 1);
    rows.push(vec![Xdd::one()]);
    for r in 1..=n {
        let prev = &rows[r - 1];
        let mut row = Vec::with_capacity(r + 1);
        row.push(Xdd::one());
        for i in 1..r {
            row.push(prev[i - 1] + prev[i]);
        }
        row.push(Xdd::one());
        rows.push(row);
    }
    rows
}

fn binom_tab(tab: &[Vec<Xdd>], n: usize, k: isize) -> Xdd {
    if k < 0 || k as usize > n {
        Xdd::ZERO
    } else {
        tab[n][k as usize]
    }
}

/// h_k(theta_j) for every k and j, with integer exponents NV = j.
fn h_matrix(p: &DerivedParams, s: &Spectrum) -> Vec<Vec<Xdd>> {
    let n = p.n;
    let kc = DdConsts::new(p);
    let tab = pascal(n);
    let m = s.len();
    let mut h = vec![vec![Xdd::ZERO; m]; n + 1];
    for (j, t) in s.thetas_dd.iter().enumerate() {
        let (r1, r2) = kc.r12(*t);
        let mut p1 = Vec::with_capacity(n + 1);
        let mut p2 = Vec::with_capacity(n + 1);
        let (mr1, xr2) = (Xdd::from_tf(-r1), Xdd::from_tf(r2));
        let (mut a, mut b) = (Xdd::one(), Xdd::one());
        for _ in 0..=n {
            p1.push(a);
            p2.push(b);
            a = a * mr1;
            b = b * xr2;
        }
        for (k, hk) in h.iter_mut().enumerate() {
            hk[j] = h_sum(&tab, n, j, k, &p1, &p2);
        }
    }
    h
}

fn h_sum(tab: &[Vec<Xdd>], n: usize, j: usize, k: usize, p1: &[Xdd], p2: &[Xdd]) -> Xdd {
    let top = n - k;
    let lo = j.saturating_sub(k);
    let hi = j.min(top);
    let mut s = Xdd::ZERO;
    for i in lo..=hi {
        let c = binom_tab(tab, j, i as isize) * binom_tab(tab, n - j, (top - i) as isize);
        s += c * p1[i] * p2[top - i];
    }
    s
}

/// h_k(theta) for a single k.
///
/// At eigenvalues N V(theta) is an integer and the ordinary binomial sum is
/// used.  Elsewhere `generalized` must be set; the binomials then take real
/// upper arguments.
pub fn h_poly(p: &DerivedParams, k: usize, theta: f64, generalized: bool) -> Result<SignedLogReal> {
    if k > p.n {
        return fail(Reason::OutOfRange, format!("k={k} exceeds N={}", p.n));
    }
    let kc = DdConsts::new(p);
    let t = dd(theta);
    let nv = kc.v(t) * p.nf();
    let j = nv.hi().round();
    let n = p.n;
    let top = n - k;
    let (r1, r2) = kc.r12(t);
    if (nv.hi() - j).abs() < 1e-9 && j >= 0.0 && j <= n as f64 {
        let j = j as usize;
        let tab = pascal(n);
        let p1: Vec<Xdd> = (0..=n).map(|i| Xdd::from_tf(-r1).powi(i as u32)).collect();
        let p2: Vec<Xdd> = (0..=n).map(|i| Xdd::from_tf(r2).powi(i as u32)).collect();
        return Ok(h_sum(&tab, n, j, k, &p1, &p2).to_signed_log());
    }
    if !generalized {
        return fail(Reason::Domain, format!("theta={theta} is not an eigenvalue (N V = {})", nv.hi()));
    }
    // Coefficient of w^(N-k) in (1 - R1 w)^a (1 + R2 w)^b with real a, b.
    let a = nv;
    let b = dd(n as f64) - nv;
    let gb = |x: TwoFloat, i: usize| -> Xdd {
        let mut c = Xdd::one();
        for m in 0..i {
            c = c * Xdd::from_tf(x - m as f64) / Xdd::from_f64((m + 1) as f64);
        }
        c
    };
    let mut s = Xdd::ZERO;
    for i in 0..=top {
        s += gb(a, i) * Xdd::from_tf(-r1).powi(i as u32) * gb(b, top - i) * Xdd::from_tf(r2).powi((top - i) as u32);
    }
    Ok(s.to_signed_log())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_params, ModelParams};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sigma_at_zero_is_minus_theta0() {
        let p = reference_params();
        assert!(rel(sigma(&p, 0.0).unwrap(), -p.theta0) < 1e-14);
        assert!(sigma(&p, 1.0 - p.gamma).is_err());
    }

    #[test]
    fn sigma_diverges_like_phi_over_eps() {
        let p = reference_params();
        for &e in &[1e-4, 1e-5, 1e-6] {
            let s = sigma(&p, 1.0 - p.gamma - e).unwrap();
            assert!(rel(s * e, p.phi) < 20.0 * e, "eps={e} s*eps={}", s * e);
        }
    }

    #[test]
    fn eigen_count_and_order() {
        let p = reference_params();
        let s = eigenvalues(&p);
        assert_eq!(s.len(), 13);
        assert!(rel(s.thetas[0], p.theta0) < 1e-14);
        assert!(s.thetas.iter().all(|&t| t < 0.0));
        assert!(s.thetas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn eigenvalues_satisfy_v_equation() {
        let p = reference_params();
        let kc = DdConsts::new(&p);
        let s = eigenvalues(&p);
        for (j, t) in s.thetas_dd.iter().enumerate() {
            let v = kc.v(*t).hi();
            assert!((v - j as f64 / 20.0).abs() < 1e-13);
        }
    }

    #[test]
    fn h_special_values() {
        let p = reference_params();
        let s = eigenvalues(&p);
        let n = p.nf();
        for (j, &t) in s.thetas.iter().enumerate() {
            let hn = h_poly(&p, 20, t, false).unwrap();
            assert!((hn.to_f64() - 1.0).abs() < 1e-13, "j={j}");
            let h19 = h_poly(&p, 19, t, false).unwrap().to_f64();
            let want = (1.0 + (1.0 - p.gamma) * t) * n / p.lambda;
            assert!(rel(h19, want) < 1e-10, "j={j} {h19} {want}");
        }
        // theta = 0 is where N V = 0, so the integer path applies.
        for k in 0..=20 {
            let h0 = h_poly(&p, k, 0.0, false).unwrap();
            let want = binomial_x(20, k).to_f64() * p.lambda.powi(k as i32 - 20);
            assert!(rel(h0.to_f64(), want) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn h_rejects_generic_theta_unless_generalized() {
        let p = reference_params();
        assert_eq!(h_poly(&p, 3, -0.7, false).unwrap_err().reason, Reason::Domain);
        let g = h_poly(&p, 20, -0.7, true).unwrap();
        assert!((g.to_f64() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_mode_agrees_at_eigenvalues() {
        let p = reference_params();
        let s = eigenvalues(&p);
        let sol = SpectralSolution::new(&p).unwrap();
        for j in [0usize, 4, 12] {
            for k in [0usize, 7, 15] {
                // Nudge off the integer so the generalized branch runs.
                let g = h_poly(&p, k, s.thetas[j] * (1.0 + 1e-13), true).unwrap();
                let e = sol.h(k, j);
                assert!((g.ratio(&e) - 1.0).abs() < 1e-6, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn coefficients_alternate() {
        let p = reference_params();
        let a = coefficients(&p, &eigenvalues(&p)).unwrap();
        for w in a.windows(2) {
            assert_eq!(w[0].sign, -w[1].sign);
        }
    }

    #[test]
    fn single_eigenvalue_coefficient() {
        let p = ModelParams::new(4, 0.2, 3.5).validated().unwrap();
        let a = coefficients(&p, &eigenvalues(&p)).unwrap();
        assert_eq!(a.len(), 1);
        let want = -(0.2f64 / 1.2).powi(4);
        assert!(rel(a[0].to_f64(), want) < 1e-14);
    }

    #[test]
    fn stationary_sums_to_one() {
        let p = reference_params();
        let s: f64 = (0..=20).map(|k| stationary(&p, k)).sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(rel(stationary(&p, 20), (p.lambda / (1.0 + p.lambda)).powi(20)) < 1e-13);
    }

    #[test]
    fn table_exact_values() {
        let p = reference_params();
        let sol = SpectralSolution::new(&p).unwrap();
        let cases = [(0usize, 0.4454e-19), (12, 0.8578e-18), (20, 0.2284e-42)];
        for (k, want) in cases {
            let f = sol.density(k, 1.0).unwrap();
            assert!(rel(f.value, want) < 5e-4, "k={k} f={}", f.value);
            assert!(!f.cancelled);
        }
    }

    #[test]
    fn boundary_mass_vanishes_above_floor_c() {
        let p = reference_params();
        let sol = SpectralSolution::new(&p).unwrap();
        for k in 8..=20 {
            let f = sol.cdf(k, 0.0).unwrap();
            assert!(f.digits_lost > 20.0, "k={k} lost={}", f.digits_lost);
        }
        for k in 0..=6 {
            let f0 = sol.cdf(k, 0.0).unwrap().value;
            assert!(rel(f0, sol.stationary(k)) < 1e-3, "k={k}");
        }
    }

    #[test]
    fn generator_columns_sum_to_zero() {
        let p = reference_params();
        let g = generator_oracle(&p);
        for j in 0..=20 {
            let s: f64 = (0..=20).map(|i| g.m[i][j]).sum();
            assert!(s.abs() < 1e-12);
        }
        assert_eq!(g.m[3][4], 4.0);
        assert!((g.d[0] + p.c).abs() < 1e-15);
    }

    #[test]
    fn product_at_zero_is_one() {
        let p = reference_params();
        let sol = SpectralSolution::new(&p).unwrap();
        assert!((sol.product(0.0).unwrap().to_f64() - 1.0).abs() < 1e-15);
        let t = sol.spectrum.thetas[3];
        assert_eq!(sol.product(t).unwrap_err().reason, Reason::Pole);
    }
}
