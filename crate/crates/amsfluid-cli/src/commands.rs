//! One function per subcommand, each producing tables.

use amsfluid::approx::{boundary_iii, boundary_iv, density_approx, interior_g1, interior_g2, ApproxResult};
use amsfluid::conditional::{buffer_given_sources, sources_given_buffer, Coordinate};
use amsfluid::error::{Error, Result as NumResult};
use amsfluid::kernel::kernel_point;
use amsfluid::model::DerivedParams;
use amsfluid::saddle::{self, classify, curves, LayerWidths, RegionTag};
use amsfluid::simulate::{compare, run as simulate, SimConfig};
use amsfluid::spectral::SpectralSolution;
use serde_json::{json, Value};

use crate::grid::{reals, states};
use crate::output::{emit, Cell, Table};
use crate::{CliError, Cmd, Common};

/// Per-row failures: reported in the row's flags, on stderr, and in the exit status.
#[derive(Default)]
struct Failures(Vec<(String, Error)>);

impl Failures {
    fn note(&mut self, at: String, e: Error) -> String {
        let code = e.reason.code().to_string();
        self.0.push((at, e));
        code
    }

    fn finish(self) -> Result<(), CliError> {
        let mut it = self.0.into_iter();
        let Some((at, first)) = it.next() else { return Ok(()) };
        for (at, e) in it {
            eprintln!("error: {}: {} ({at})", e.reason.code(), e.detail);
        }
        Err(CliError::Numeric(Error::new(first.reason, format!("{} ({at})", first.detail))))
    }
}

fn flags(list: &[String]) -> Cell {
    Cell::Text(list.join("|"))
}

pub fn run(cmd: Cmd) -> Result<(), CliError> {
    let (common, tables, failures) = match cmd {
        Cmd::Params { common } => {
            let p = common.params.resolve()?;
            (common, vec![params(&p)], Failures::default())
        }
        Cmd::Exact { common, k, x } => {
            let p = common.params.resolve()?;
            let (t, f) = exact(&p, &states(&k, p.n)?, &reals(&x, "x")?)?;
            (common, vec![t], f)
        }
        Cmd::Asymptotic { common, k, x, region, widths } => {
            let p = common.params.resolve()?;
            let (t, f) = asymptotic(&p, &states(&k, p.n)?, &reals(&x, "x")?, region, &widths.widths())?;
            (common, vec![t], f)
        }
        Cmd::Curves { common, z } => {
            let p = common.params.resolve()?;
            (common, vec![curve_table(&p, &reals(&z, "z")?)], Failures::default())
        }
        Cmd::Classify { common, y, z, widths } => {
            let p = common.params.resolve()?;
            let t = classify_table(&p, &reals(&y, "y")?, &reals(&z, "z")?, &widths.widths());
            (common, vec![t], Failures::default())
        }
        Cmd::KernelDump { common, theta, z } => {
            let p = common.params.resolve()?;
            (common, vec![kernel_table(&p, &reals(&theta, "theta")?, &reals(&z, "z")?)], Failures::default())
        }
        Cmd::Conditional { common, given, points, widths } => {
            let p = common.params.resolve()?;
            (common, vec![conditional(&p, &given, points, &widths.widths())?], Failures::default())
        }
        Cmd::Simulate { common, horizon, reps, seed, x_grid, warmup, confidence, compare_exact, tail_cutoff } => {
            let p = common.params.resolve()?;
            let mut cfg = SimConfig::new(horizon, seed, reals(&x_grid, "x-grid")?);
            cfg.replications = reps;
            cfg.confidence = confidence;
            if let Some(w) = warmup {
                cfg.warmup = w;
            }
            let t = simulation(&p, &cfg, compare_exact.then_some(tail_cutoff))?;
            (common, vec![t], Failures::default())
        }
        Cmd::Tables { common, x, x_max, points } => {
            let p = common.params.resolve()?;
            (common, tables(&p, x, x_max, points)?, Failures::default())
        }
    };
    write(&common, &tables)?;
    failures.finish()
}

fn write(common: &Common, tables: &[Table]) -> Result<(), CliError> {
    let p = common.params.resolve()?;
    emit(tables, &p, common.format, common.out.as_deref())?;
    Ok(())
}

fn numeric<T>(r: NumResult<T>) -> Result<T, CliError> {
    r.map_err(CliError::Numeric)
}

fn params(p: &DerivedParams) -> Table {
    let mut t = Table::new(
        "params",
        &["n", "lambda", "c", "gamma", "rho", "phi", "delta", "alpha", "beta", "theta0", "zeta", "c_floor", "n_eigen"],
    );
    t.push(vec![
        p.n.into(),
        p.lambda.into(),
        p.c.into(),
        p.gamma.into(),
        p.rho.into(),
        p.phi.into(),
        p.delta.into(),
        p.alpha.into(),
        p.beta.into(),
        p.theta0.into(),
        p.zeta.into(),
        p.c_floor.into(),
        p.n_eigen().into(),
    ]);
    t
}

fn exact(p: &DerivedParams, ks: &[usize], xs: &[f64]) -> Result<(Table, Failures), CliError> {
    let sol = numeric(SpectralSolution::new(p))?;
    let mut t = Table::new("exact", &["k", "x", "F", "f", "digits", "flags"]);
    let mut fails = Failures::default();
    for &k in ks {
        for &x in xs {
            match sol.cdf(k, x).and_then(|c| Ok((c, sol.density(k, x)?))) {
                Ok((c, d)) => {
                    let fl = if c.cancelled || d.cancelled { vec!["CANCELLATION".to_string()] } else { vec![] };
                    t.push(vec![k.into(), x.into(), c.value.into(), d.value.into(), c.digits.min(d.digits).into(), flags(&fl)]);
                }
                Err(e) => {
                    let code = fails.note(format!("k={k}, x={x}"), e);
                    t.push(vec![k.into(), x.into(), Cell::Empty, Cell::Empty, Cell::Empty, code.into()]);
                }
            }
        }
    }
    Ok((t, fails))
}

fn approx_flags(r: &ApproxResult) -> Vec<String> {
    let mut fl = Vec::new();
    if r.near_coalescence {
        fl.push("NEAR_COALESCENCE".to_string());
    }
    if r.is_deviation {
        fl.push("DEVIATION".to_string());
    }
    fl
}

fn asymptotic(
    p: &DerivedParams,
    ks: &[usize],
    xs: &[f64],
    region: Option<RegionTag>,
    widths: &LayerWidths,
) -> Result<(Table, Failures), CliError> {
    let sol = numeric(SpectralSolution::new(p))?;
    let mut t = Table::new(
        "asymptotic",
        &["k", "x", "y", "z", "region", "saddle", "approx_F", "approx_f", "exact_f", "relative_gap", "flags"],
    );
    let mut fails = Failures::default();
    let n = p.nf();
    for &k in ks {
        for &x in xs {
            let (y, z) = (x / n, k as f64 / n);
            let exact = sol.density(k, x);
            let mut fl = Vec::new();
            if matches!(&exact, Ok(e) if e.cancelled) {
                fl.push("CANCELLATION".to_string());
            }
            let exact = match exact {
                Ok(e) => Some(e.value),
                Err(e) => {
                    fl.push(fails.note(format!("exact k={k}, x={x}"), e));
                    None
                }
            };
            let row = match density_approx(p, k, x, region, widths) {
                Ok(r) => {
                    fl.extend(approx_flags(&r));
                    let f = r.density.to_f64();
                    vec![
                        r.region.as_str().into(),
                        r.saddle.into(),
                        r.value.to_f64().into(),
                        f.into(),
                        exact.into(),
                        exact.map(|e| f / e - 1.0).into(),
                    ]
                }
                Err(e) => {
                    let tag = region.unwrap_or_else(|| classify(p, y, z, widths).tag);
                    fl.push(fails.note(format!("k={k}, x={x}, region {tag}"), e));
                    vec![tag.as_str().into(), Cell::Empty, Cell::Empty, Cell::Empty, exact.into(), Cell::Empty]
                }
            };
            let mut cells = vec![k.into(), x.into(), y.into(), z.into()];
            cells.extend(row);
            cells.push(flags(&fl));
            t.push(cells);
        }
    }
    Ok((t, fails))
}

fn curve_table(p: &DerivedParams, zs: &[f64]) -> Table {
    let mut t = Table::new("curves", &["z", "y0", "y1", "ystar", "y2"]);
    for &z in zs {
        let c = curves(p, z);
        t.push(vec![z.into(), c.y0.into(), c.y1.into(), c.ystar.into(), c.y2.into()]);
    }
    t
}

fn classify_table(p: &DerivedParams, ys: &[f64], zs: &[f64], widths: &LayerWidths) -> Table {
    let mut t = Table::new("classify", &["y", "z", "x", "k", "region", "saddle", "distance"]);
    let n = p.nf();
    for &z in zs {
        for &y in ys {
            let r = classify(p, y, z, widths);
            t.push(vec![
                y.into(),
                z.into(),
                (y * n).into(),
                (z * n).into(),
                r.tag.as_str().into(),
                r.saddle_value.into(),
                r.distance_to_boundary.into(),
            ]);
        }
    }
    t
}

fn kernel_table(p: &DerivedParams, thetas: &[f64], zs: &[f64]) -> Table {
    let mut t = Table::new(
        "kernel",
        &["theta", "z", "delta", "v", "r1", "r2", "disc", "w_minus", "w_plus", "eta_minus", "eta_ww_minus", "mu"],
    );
    for &z in zs {
        for &th in thetas {
            let k = kernel_point(p, th, z);
            t.push(vec![
                th.into(),
                z.into(),
                k.delta.into(),
                k.v.into(),
                k.r1.into(),
                k.r2.into(),
                k.disc.into(),
                k.w_minus.into(),
                k.w_plus.into(),
                k.eta_minus.into(),
                k.eta_ww_minus.into(),
                k.mu.into(),
            ]);
        }
    }
    t
}

fn conditional(p: &DerivedParams, given: &str, points: usize, widths: &LayerWidths) -> Result<Table, CliError> {
    let usage = || CliError::Usage(format!("--given: expected buffer=X or sources=K, got '{given}'"));
    let (key, value) = given.split_once('=').ok_or_else(usage)?;
    let law = match key.trim() {
        "buffer" => {
            let x: f64 = value.trim().parse().map_err(|_| usage())?;
            numeric(sources_given_buffer(p, x, widths))?
        }
        "sources" => {
            let k: usize = value.trim().parse().map_err(|_| usage())?;
            numeric(buffer_given_sources(p, k, widths))?
        }
        _ => return Err(usage()),
    };
    let coord = match law.coordinate {
        Coordinate::K => "k",
        Coordinate::X => "x",
        Coordinate::Chi => "chi",
    };
    let mut t = Table::new("conditional", &[coord, "density"]);
    for (v, d) in law.curve(points) {
        t.push(vec![v.into(), d.into()]);
    }
    let mut summary = serde_json::to_value(&law).expect("law serializes");
    summary["mean"] = json!(law.mean());
    summary["total_mass"] = json!(law.total_mass());
    t.extra.push(("given".into(), json!(given)));
    t.extra.push(("law".into(), summary));
    Ok(t)
}

fn simulation(p: &DerivedParams, cfg: &SimConfig, tail_cutoff: Option<f64>) -> Result<Table, CliError> {
    let est = numeric(simulate(p, cfg))?;
    let marginal: Vec<Value> = est
        .marginal_z
        .iter()
        .zip(&est.marginal_half_width)
        .enumerate()
        .map(|(k, (m, h))| json!({ "k": k, "p": m, "half_width": h }))
        .collect();
    let mut t = match tail_cutoff {
        None => {
            let mut t = Table::new("simulate", &["k", "x", "estimate", "half_width"]);
            for (k, (row, hw)) in est.joint.iter().zip(&est.joint_half_width).enumerate() {
                for ((&x, &e), &h) in est.x_grid.iter().zip(row).zip(hw) {
                    t.push(vec![k.into(), x.into(), e.into(), h.into()]);
                }
            }
            t
        }
        Some(cut) => {
            let sol = numeric(SpectralSolution::new(p))?;
            let rep = numeric(compare(&est, &sol, cut))?;
            let mut t = Table::new(
                "simulate",
                &["k", "x", "estimate", "half_width", "exact", "z_score", "covered", "excluded"],
            );
            for c in &rep.cells {
                t.push(vec![
                    c.k.into(),
                    c.x.into(),
                    c.estimate.into(),
                    c.half_width.into(),
                    c.exact.into(),
                    c.z_score.into(),
                    c.covered.into(),
                    c.excluded.into(),
                ]);
            }
            t.extra.push((
                "coverage".into(),
                json!({ "coverage": rep.coverage, "scored": rep.scored, "max_abs_z": rep.max_abs_z, "tail_cutoff": cut }),
            ));
            t
        }
    };
    t.extra.push((
        "config".into(),
        json!({ "horizon": cfg.horizon, "warmup": cfg.warmup, "replications": cfg.replications, "seed": cfg.seed, "confidence": cfg.confidence }),
    ));
    t.extra.push(("marginal".into(), Value::Array(marginal)));
    Ok(t)
}

/// The saddle listed next to state k in the comparison tables: theta0 at
/// k=0, the plus branch below N/2, the minus branch above, theta1 at k=N.
fn table_theta(p: &DerivedParams, k: usize, y: f64) -> NumResult<f64> {
    let z = k as f64 / p.nf();
    if k == 0 {
        saddle::solve_theta0(p, y)
    } else if k == p.n {
        saddle::solve_theta1(p, y)
    } else if 2 * k < p.n {
        saddle::solve_theta_plus(p, y, z).map(|s| s.theta)
    } else {
        saddle::solve_theta(p, y, z).map(|s| s.theta)
    }
}

fn opt(r: NumResult<f64>, label: &str, fl: &mut Vec<String>) -> Cell {
    match r {
        Ok(v) => v.into(),
        Err(e) => {
            fl.push(format!("{label}:{}", e.reason.code()));
            Cell::Empty
        }
    }
}

fn density_of(r: NumResult<ApproxResult>) -> NumResult<f64> {
    r.map(|a| a.density.abs().to_f64())
}

fn tables(p: &DerivedParams, x: f64, x_max: f64, points: usize) -> Result<Vec<Table>, CliError> {
    if !(x > 0.0) || !(x_max > 0.0) || points == 0 {
        return Err(CliError::Usage("tables: need --x > 0, --x-max > 0 and --points >= 1".into()));
    }
    let sol = numeric(SpectralSolution::new(p))?;
    let n = p.nf();
    let y = x / n;
    let mut t1 = Table::new("table1", &["k", "theta", "exact", "F3", "G2", "flags"]);
    let mut t2 = Table::new("table2", &["k", "theta", "exact", "G1", "F4", "flags"]);
    for k in 0..=p.n {
        let z = k as f64 / n;
        let mut fl = Vec::new();
        let theta = opt(table_theta(p, k, y), "theta", &mut fl);
        let ex = numeric(sol.density(k, x))?;
        if ex.cancelled {
            fl.push("CANCELLATION".into());
        }
        if 2 * k < p.n {
            let f3 = opt(density_of(boundary_iii(p, k, y)), "F3", &mut fl);
            let g2 = if k == 0 { Cell::Empty } else { opt(density_of(interior_g2(p, y, z)), "G2", &mut fl) };
            t1.push(vec![k.into(), theta, ex.value.into(), f3, g2, flags(&fl)]);
        } else {
            let g1 = if k == p.n { Cell::Empty } else { opt(density_of(interior_g1(p, y, z)), "G1", &mut fl) };
            let f4 = opt(density_of(boundary_iv(p, p.n - k, y)), "F4", &mut fl);
            t2.push(vec![k.into(), theta, ex.value.into(), g1, f4, flags(&fl)]);
        }
    }
    let mut out = vec![t1, t2];
    let widths = LayerWidths::default();
    let cols = ["k", "x", "z", "exact", "approx", "region", "relative_gap", "flags"];
    let sweep = |t: &mut Table, k: usize, x: f64| -> Result<(), CliError> {
        let ex = numeric(sol.density(k, x))?;
        let mut fl = if ex.cancelled { vec!["CANCELLATION".to_string()] } else { vec![] };
        let row = match density_approx(p, k, x, None, &widths) {
            Ok(r) => {
                fl.extend(approx_flags(&r));
                let a = r.density.to_f64();
                vec![a.into(), r.region.as_str().into(), (a / ex.value - 1.0).into()]
            }
            Err(e) => {
                fl.push(e.reason.code().to_string());
                let tag = classify(p, x / n, k as f64 / n, &widths).tag;
                vec![Cell::Empty, tag.as_str().into(), Cell::Empty]
            }
        };
        let mut cells = vec![k.into(), x.into(), (k as f64 / n).into(), ex.value.into()];
        cells.extend(row);
        cells.push(flags(&fl));
        t.push(cells);
        Ok(())
    };
    for k in [17, 3, 0].into_iter().filter(|&k| k <= p.n) {
        let mut t = Table::new(format!("sweep_x_k{k}"), &cols);
        for i in 1..=points {
            sweep(&mut t, k, x_max * i as f64 / points as f64)?;
        }
        out.push(t);
    }
    for (name, xs) in [("sweep_k_x0.001", 0.001), ("sweep_k_x5", 5.0)] {
        let mut t = Table::new(name, &cols);
        for k in 0..=p.n {
            sweep(&mut t, k, xs)?;
        }
        out.push(t);
    }
    Ok(out)
}
