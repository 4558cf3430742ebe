//! Event-driven Monte Carlo of N on-off sources feeding a fluid buffer
//! drained at rate c.  Time is measured in mean on-periods.
//!
//! Each replication draws from its own ChaCha8 stream: the generator is
//! seeded with `seed` and switched to stream number `replication`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{fail, Reason, Result};
use crate::model::DerivedParams;
use crate::spectral::SpectralSolution;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
    pub x_grid: Vec<f64>,
    pub confidence: f64,
}

impl SimConfig {
    /// Defaults: 5% warmup, 32 replications, 99% intervals.
    pub fn new(horizon: f64, seed: u64, x_grid: Vec<f64>) -> Self {
        SimConfig { horizon, warmup: 0.05 * horizon, replications: 32, seed, x_grid, confidence: 0.99 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > self.warmup && self.warmup >= 0.0) || !self.horizon.is_finite() {
            return fail(Reason::Domain, format!("need horizon > warmup >= 0, got {} and {}", self.horizon, self.warmup));
        }
        if self.replications == 0 {
            return fail(Reason::Domain, "need at least one replication");
        }
        if self.x_grid.iter().any(|x| !(*x >= 0.0)) || self.x_grid.windows(2).any(|w| w[0] > w[1]) {
            return fail(Reason::Domain, "x grid must be non-negative and sorted ascending");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return fail(Reason::Domain, format!("confidence must lie in (0,1), got {}", self.confidence));
        }
        Ok(())
    }
}

/// Replication means and confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub x_grid: Vec<f64>,
    /// joint[k][i] estimates P[Z=k, X<=x_i].
    pub joint: Vec<Vec<f64>>,
    pub marginal_z: Vec<f64>,
    pub p_positive: Vec<f64>,
    pub joint_half_width: Vec<Vec<f64>>,
    pub marginal_half_width: Vec<f64>,
    pub positive_half_width: Vec<f64>,
}

impl SimEstimate {
    /// The exact F_k(x) laid out as an estimate with zero half-widths.
    pub fn from_exact(sol: &SpectralSolution, x_grid: &[f64]) -> Result<Self> {
        let n = sol.params.n;
        let mut joint = vec![vec![0.0; x_grid.len()]; n + 1];
        for (k, row) in joint.iter_mut().enumerate() {
            for (cell, &x) in row.iter_mut().zip(x_grid) {
                *cell = sol.cdf(k, x)?.value;
            }
        }
        let marginal_z: Vec<f64> = (0..=n).map(|k| sol.stationary(k)).collect();
        let p_positive = (0..=n).map(|k| sol.survival(k, 0.0).map(|e| e.value)).collect::<Result<_>>()?;
        Ok(SimEstimate {
            x_grid: x_grid.to_vec(),
            joint,
            marginal_z,
            p_positive,
            joint_half_width: vec![vec![0.0; x_grid.len()]; n + 1],
            marginal_half_width: vec![0.0; n + 1],
            positive_half_width: vec![0.0; n + 1],
        })
    }
}

/// Occupation fractions from one replication.
#[derive(Debug, Clone)]
struct Occupation {
    below: Vec<Vec<f64>>,
    in_state: Vec<f64>,
    positive: Vec<f64>,
}

impl Occupation {
    fn new(n: usize, m: usize) -> Self {
        Occupation { below: vec![vec![0.0; m]; n + 1], in_state: vec![0.0; n + 1], positive: vec![0.0; n + 1] }
    }

    fn scale(&mut self, s: f64) {
        for row in &mut self.below {
            row.iter_mut().for_each(|v| *v *= s);
        }
        self.in_state.iter_mut().for_each(|v| *v *= s);
        self.positive.iter_mut().for_each(|v| *v *= s);
    }
}

/// Time within [0, dt] that x0 + d t spends at or below `level`.
fn time_below(x0: f64, d: f64, dt: f64, level: f64) -> f64 {
    if d == 0.0 {
        return if x0 <= level { dt } else { 0.0 };
    }
    let cross = ((level - x0) / d).clamp(0.0, dt);
    if d > 0.0 {
        if x0 > level {
            0.0
        } else {
            cross
        }
    } else if x0 <= level {
        dt
    } else {
        dt - cross
    }
}

/// Buffer path over one holding interval, starting at x0 with net input
/// rate d, reflected at 0.  Accumulates occupation times for state k.
fn accumulate(occ: &mut Occupation, grid: &[f64], k: usize, x0: f64, d: f64, dt: f64) -> f64 {
    occ.in_state[k] += dt;
    if d >= 0.0 {
        let positive = if x0 > 0.0 || d > 0.0 { dt } else { 0.0 };
        occ.positive[k] += positive;
        for (cell, &level) in occ.below[k].iter_mut().zip(grid) {
            *cell += time_below(x0, d, dt, level);
        }
        return x0 + d * dt;
    }
    // Draining: linear until the buffer empties, then held at 0.
    let t_empty = (x0 / -d).min(dt);
    occ.positive[k] += t_empty;
    for (cell, &level) in occ.below[k].iter_mut().zip(grid) {
        *cell += time_below(x0, d, t_empty, level) + (dt - t_empty);
    }
    (x0 + d * dt).max(0.0)
}

fn replicate(p: &DerivedParams, cfg: &SimConfig, rep: usize) -> Occupation {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let n = p.n;
    let mut occ = Occupation::new(n, cfg.x_grid.len());
    // Start from the binomial marginal with an empty buffer.
    let on = p.lambda / (1.0 + p.lambda);
    let mut k = (0..n).filter(|_| rng.random::<f64>() < on).count();
    let mut x = 0.0f64;
    let mut t = 0.0f64;
    while t < cfg.horizon {
        let up = p.lambda * (n - k) as f64;
        let rate = up + k as f64;
        let hold: f64 = rng.sample::<f64, _>(Exp1) / rate;
        let end = (t + hold).min(cfg.horizon);
        let d = k as f64 - p.c;
        if end <= cfg.warmup {
            x = advance(x, d, end - t);
        } else {
            if t < cfg.warmup {
                x = advance(x, d, cfg.warmup - t);
                t = cfg.warmup;
            }
            x = accumulate(&mut occ, &cfg.x_grid, k, x, d, end - t);
        }
        t = end;
        if t >= cfg.horizon {
            break;
        }
        if rng.random::<f64>() * rate < up {
            k += 1;
        } else {
            k -= 1;
        }
    }
    occ.scale(1.0 / (cfg.horizon - cfg.warmup));
    occ
}

fn advance(x: f64, d: f64, dt: f64) -> f64 {
    (x + d * dt).max(0.0)
}

fn mean_and_half_width(vals: &[f64], tq: f64) -> (f64, f64) {
    let r = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / r;
    if vals.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, tq * (var / r).sqrt())
}

/// Runs the replications (in parallel) and merges them in replication
/// order, so the result depends only on the parameters and the config.
pub fn run(p: &DerivedParams, cfg: &SimConfig) -> Result<SimEstimate> {
    p.raw().validate()?;
    cfg.validate()?;
    let reps = cfg.replications;
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get()).min(reps);
    let mut results: Vec<Option<Occupation>> = vec![None; reps];
    std::thread::scope(|s| {
        for (w, chunk) in results.chunks_mut(reps.div_ceil(threads)).enumerate() {
            let base = w * reps.div_ceil(threads);
            s.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(replicate(p, cfg, base + i));
                }
            });
        }
    });
    let occ: Vec<Occupation> = results.into_iter().map(|o| o.expect("replication finished")).collect();

    let tq = if reps >= 2 {
        StudentsT::new(0.0, 1.0, (reps - 1) as f64)
            .map_err(|e| crate::error::Error::new(Reason::Domain, e.to_string()))?
            .inverse_cdf(0.5 + 0.5 * cfg.confidence)
    } else {
        f64::INFINITY
    };
    let n = p.n;
    let m = cfg.x_grid.len();
    let mut est = SimEstimate {
        x_grid: cfg.x_grid.clone(),
        joint: vec![vec![0.0; m]; n + 1],
        marginal_z: vec![0.0; n + 1],
        p_positive: vec![0.0; n + 1],
        joint_half_width: vec![vec![0.0; m]; n + 1],
        marginal_half_width: vec![0.0; n + 1],
        positive_half_width: vec![0.0; n + 1],
    };
    let mut buf = vec![0.0; reps];
    for k in 0..=n {
        for i in 0..m {
            buf.iter_mut().zip(&occ).for_each(|(b, o)| *b = o.below[k][i]);
            (est.joint[k][i], est.joint_half_width[k][i]) = mean_and_half_width(&buf, tq);
        }
        buf.iter_mut().zip(&occ).for_each(|(b, o)| *b = o.in_state[k]);
        (est.marginal_z[k], est.marginal_half_width[k]) = mean_and_half_width(&buf, tq);
        buf.iter_mut().zip(&occ).for_each(|(b, o)| *b = o.positive[k]);
        (est.p_positive[k], est.positive_half_width[k]) = mean_and_half_width(&buf, tq);
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub k: usize,
    pub x: f64,
    pub estimate: f64,
    pub exact: f64,
    pub half_width: f64,
    /// (estimate - exact) / half_width; 0 when both deviation and width vanish.
    pub z_score: f64,
    pub covered: bool,
    /// Exact value below the tail cutoff: reported but not scored.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub cells: Vec<CellComparison>,
    pub scored: usize,
    pub coverage: f64,
    pub max_abs_z: f64,
}

/// Scores every (k, x) cell of `est` against the exact F_k(x).  Cells whose
/// exact value is below `tail_cutoff` in magnitude are left out of the
/// coverage fraction.
pub fn compare(est: &SimEstimate, exact: &SpectralSolution, tail_cutoff: f64) -> Result<CompareReport> {
    if est.joint.len() != exact.params.n + 1 {
        return fail(Reason::Domain, format!("estimate has {} rows, exact N={}", est.joint.len(), exact.params.n));
    }
    let mut cells = Vec::new();
    let (mut scored, mut hit, mut max_z) = (0usize, 0usize, 0.0f64);
    for (k, row) in est.joint.iter().enumerate() {
        for (i, &x) in est.x_grid.iter().enumerate() {
            let e = exact.cdf(k, x)?.value;
            let (v, hw) = (row[i], est.joint_half_width[k][i]);
            let dev = v - e;
            let z = if hw > 0.0 {
                dev / hw
            } else if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(dev)
            };
            let covered = z.abs() <= 1.0;
            let excluded = e.abs() < tail_cutoff;
            if !excluded {
                scored += 1;
                hit += covered as usize;
                max_z = max_z.max(z.abs());
            }
            cells.push(CellComparison { k, x, estimate: v, exact: e, half_width: hw, z_score: z, covered, excluded });
        }
    }
    let coverage = if scored == 0 { 1.0 } else { hit as f64 / scored as f64 };
    Ok(CompareReport { cells, scored, coverage, max_abs_z: max_z })
}
