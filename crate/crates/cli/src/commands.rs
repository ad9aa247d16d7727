//! One function per subcommand. Each fills its defaults into the config
//! (so the config hash covers them) and returns the reports to write.

use rayon::prelude::*;
use serde_json::{json, Value};

use magspec_core::asymptotics::{
    epsilon_leading, fit_leading_coefficient, lambda_neg_asymptote, leading_coefficient,
};
use magspec_core::cache::{lattice_eta, BranchCache, LATTICE};
use magspec_core::counting::{
    bound_correction_branch, bound_correction_eigfn, kappa0_limit, two_term_count, BoundaryCorrection,
    CorrectionCache, Rectangle, Side2, TwoTermInput,
};
use magspec_core::dynamics::{
    hop_metrics, hop_speed, integrate_flow, portrait, FlowOptions, PhaseState, PortraitId,
};
use magspec_core::edge::QuadOptions;
use magspec_core::model2d::{defect_profile, oracle_count_2d, trace_defect, OracleProblem};
use magspec_core::oscillator::{branch_sample, dh_formula, eigenpair};
use magspec_core::validate::run_suite;
use magspec_core::{BoundaryCondition, ModelParams, OscillatorGrid, PotentialField};

use crate::config::{parse_grid, parse_indices, parse_list, short_hex, ExperimentConfig, MethodChoice};
use crate::output::{num, opt_num, Report};
use crate::CliError;

/// Result of a subcommand: the grid fingerprint, the reports (primary
/// first, each with a file stem) and whether a check failed.
pub struct Outcome {
    pub grid: String,
    pub files: Vec<(String, Report)>,
    pub failed: bool,
}

impl Outcome {
    fn single(grid: String, stem: &str, report: Report) -> Self {
        Self {
            grid,
            files: vec![(stem.to_string(), report)],
            failed: false,
        }
    }
}

fn bc(cfg: &mut ExperimentConfig) -> Result<BoundaryCondition, CliError> {
    let s = cfg.bc.get_or_insert_with(|| "dirichlet".into());
    let bc: BoundaryCondition = s.parse().map_err(|e: magspec_core::Error| CliError::Usage(e.to_string()))?;
    // Canonical spelling, so `d` and `dirichlet` hash alike.
    *s = bc.to_string();
    Ok(bc)
}

fn osc_grid(cfg: &mut ExperimentConfig) -> Result<OscillatorGrid, CliError> {
    let mut g = OscillatorGrid::default();
    g.step = *cfg.grid_step.get_or_insert(g.step);
    g.validate()?;
    Ok(g)
}

fn quad(cfg: &mut ExperimentConfig) -> Result<QuadOptions, CliError> {
    let mut q = QuadOptions::default();
    q.gk_tol = *cfg.tol.get_or_insert(q.gk_tol);
    q.validate()?;
    Ok(q)
}

fn params(cfg: &mut ExperimentConfig, mu: f64, h: f64) -> Result<ModelParams, CliError> {
    let h = *cfg.h.get_or_insert(h);
    let mu = *cfg.mu.get_or_insert(mu);
    Ok(ModelParams::new(mu, h)?)
}

fn text<'a>(slot: &'a mut Option<String>, default: &str) -> &'a str {
    slot.get_or_insert_with(|| default.to_string())
}

/// Moves grid points that sit on the cache lattice exactly onto it, so the
/// same `eta` is solved with and without a cache.
fn snap(eta: f64) -> (f64, Option<i64>) {
    let idx = (eta / LATTICE).round();
    if (eta - idx * LATTICE).abs() < 1e-9 {
        let idx = idx as i64;
        (lattice_eta(idx), Some(idx))
    } else {
        (eta, None)
    }
}

/// `(lambda, u(eta), u'(eta))`, from the cache when the point is a lattice node.
fn branch_point(
    bc: BoundaryCondition,
    n: usize,
    eta: f64,
    lattice: Option<i64>,
    grid: &OscillatorGrid,
    cache: Option<&BranchCache>,
) -> Result<(f64, f64, f64), CliError> {
    if let (Some(c), Some(i)) = (cache, lattice) {
        let v = c.node(bc, n, i)?;
        return Ok((v.lambda, v.boundary_value, v.boundary_derivative));
    }
    let p = eigenpair(eta, bc, n, grid)?;
    Ok((p.lambda, p.boundary_value, p.boundary_derivative))
}

fn branch_values(
    bc: BoundaryCondition,
    n: usize,
    etas: &[(f64, Option<i64>)],
    grid: &OscillatorGrid,
    cache: Option<&BranchCache>,
) -> Result<Vec<(f64, f64, f64)>, CliError> {
    etas.par_iter()
        .map(|&(eta, idx)| branch_point(bc, n, eta, idx, grid, cache))
        .collect()
}

pub fn branches(cfg: &mut ExperimentConfig, cache: Option<&BranchCache>) -> Result<Outcome, CliError> {
    let bc = bc(cfg)?;
    let grid = osc_grid(cfg)?;
    let ns = parse_indices(text(&mut cfg.n, "0..2"))?;
    let etas: Vec<_> = parse_grid(text(&mut cfg.eta, "-2..6:0.05"))?.into_iter().map(snap).collect();
    let mut r = Report::new(&["bc", "n", "eta", "lambda", "u", "du", "dlambda_deta"]);
    for n in ns {
        let vals = branch_values(bc, n, &etas, &grid, cache)?;
        for (&(eta, _), (lam, u, du)) in etas.iter().zip(vals) {
            r.push(vec![
                json!(bc.to_string()),
                json!(n),
                num(eta),
                num(lam),
                num(u),
                num(du),
                num(dh_formula(bc, eta, lam, u, du)),
            ]);
        }
    }
    Ok(Outcome::single(grid.fingerprint(), "branches", r))
}

pub fn asymptotics(cfg: &mut ExperimentConfig, cache: Option<&BranchCache>) -> Result<Outcome, CliError> {
    let bc = bc(cfg)?;
    let grid = osc_grid(cfg)?;
    let ns = parse_indices(text(&mut cfg.n, "0..2"))?;
    let etas: Vec<_> = parse_grid(text(&mut cfg.eta, "-8..4:0.5"))?.into_iter().map(snap).collect();
    let window = parse_grid(text(&mut cfg.window, "2.5..3.5:0.05"))?;
    let mut r = Report::new(&["bc", "n", "eta", "lambda", "prediction", "regime"]);
    for n in ns.clone() {
        let vals = branch_values(bc, n, &etas, &grid, cache)?;
        for (&(eta, _), (lam, _, _)) in etas.iter().zip(vals) {
            let (pred, regime) = if eta <= -2.0 {
                (Some(lambda_neg_asymptote(bc, n, eta)?), "airy")
            } else if eta > 0.0 {
                let eps = epsilon_leading(bc, n, eta)?;
                let sign = if bc.is_dirichlet() { 1.0 } else { -1.0 };
                (Some((2 * n + 1) as f64 + sign * eps), "tunneling")
            } else {
                (None, "transition")
            };
            r.push(vec![json!(bc.to_string()), json!(n), num(eta), num(lam), opt_num(pred), json!(regime)]);
        }
    }
    // The reference coefficient is the Dirichlet/Neumann one.
    if !matches!(bc, BoundaryCondition::Robin { .. }) {
        let (lo, hi) = (window[0], window[window.len() - 1]);
        for n in ns {
            let branch = branch_sample(bc, n, &window, &grid)?;
            let (c0, c1) = fit_leading_coefficient(&branch, (lo, hi))?;
            r.meta(
                &format!("fit_n{n}"),
                json!({ "c0": c0, "c1": c1, "theory": leading_coefficient(n) }),
            );
        }
    }
    Ok(Outcome::single(grid.fingerprint(), "asymptotics", r))
}

fn correction_record(c: &BoundaryCorrection) -> Value {
    json!({
        "bc": c.bc.to_string(),
        "tau": c.tau,
        "hbar": c.hbar,
        "method": c.method,
        "value": c.value,
        "quad_error": c.quad_error,
        "truncation": c.truncation,
    })
}

pub fn bound_correction(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let bc = bc(cfg)?;
    let grid = osc_grid(cfg)?;
    let quad = quad(cfg)?;
    let tau = *cfg.tau.get_or_insert(1.0);
    let hbars = parse_list(text(&mut cfg.hbar, "0.2,0.1,0.05"))?;
    let method = *cfg.method.get_or_insert(MethodChoice::Both);
    let mut r = Report::new(&[
        "bc", "tau", "hbar", "method", "value", "quad_error", "x1_max", "eta_max", "j_max",
    ]);
    r.meta("kappa0_limit", num(kappa0_limit(bc, tau)?));
    for hbar in hbars {
        let mut found = Vec::new();
        if matches!(method, MethodChoice::Branch | MethodChoice::Both) {
            found.push(bound_correction_branch(bc, tau, hbar, &grid)?);
        }
        if matches!(method, MethodChoice::Eigfn | MethodChoice::Both) {
            found.push(bound_correction_eigfn(bc, tau, hbar, &grid, &quad)?);
        }
        for c in found {
            let t = c.truncation;
            let cells = vec![
                json!(bc.to_string()),
                num(tau),
                num(hbar),
                serde_json::to_value(c.method).expect("method serializes"),
                num(c.value),
                num(c.quad_error),
                opt_num(t.x1_max),
                num(t.eta_max),
                t.j_max.map_or(Value::Null, |j| json!(j)),
            ];
            r.push_with_record(cells, correction_record(&c));
        }
    }
    Ok(Outcome::single(grid.fingerprint(), "bound-correction", r))
}

pub fn density_profile(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let bc = bc(cfg)?;
    let grid = osc_grid(cfg)?;
    let quad = quad(cfg)?;
    let p = params(cfg, 4.0, 1.0 / 16.0)?;
    let tau = *cfg.tau.get_or_insert(1.0);
    let xs = parse_grid(text(&mut cfg.x1, "0..1:0.01"))?;
    let rows = defect_profile(tau, &p, bc, &xs, &grid, &quad)?;
    let td = trace_defect(tau, &p, bc, &grid, &quad)?;
    let mut r = Report::new(&["x1", "defect"]);
    r.meta("trace_defect", json!({ "value": num(td.value), "error": num(td.error) }));
    r.meta("magnetic_length", num(p.hbar_half()));
    for (x, d) in rows {
        r.push(vec![num(x), num(d)]);
    }
    Ok(Outcome::single(grid.fingerprint(), "density-profile", r))
}

/// Strip `[0, L1] x (R / Z)` with `F = 1`, `V = -1`, the chosen condition on
/// the left edge and Dirichlet on the right, against the finite-difference
/// oracle at each requested resolution.
pub fn count_compare(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let bc = bc(cfg)?;
    let grid = osc_grid(cfg)?;
    let h = *cfg.h.get_or_insert(0.1);
    let p = params(cfg, h.powf(-0.5), h)?;
    let tau = *cfg.tau.get_or_insert(0.0);
    let divs = parse_list(text(&mut cfg.oracle_div, "8,16"))?;
    if divs.iter().any(|&d| !(d > 0.0)) {
        return Err(CliError::Usage("oracle divisors must be positive".into()));
    }
    let ell = p.hbar_half();
    let l1 = (6.0 / p.mu() + 6.0 * ell).max(1.0);
    let l2 = 1.0;
    let input = TwoTermInput {
        domain: Rectangle {
            x1: (0.0, l1),
            x2: (0.0, l2),
            boundaries: vec![(Side2::Left, bc), (Side2::Right, BoundaryCondition::Dirichlet)],
        },
        f: PotentialField::constant(1.0),
        v: PotentialField::constant(-1.0),
        psi: PotentialField::constant(1.0),
        params: p,
        tau,
        panels: 1,
        order: 4,
        f_floor: 0.5,
    };
    let tt = two_term_count(&input, &grid, &CorrectionCache::new())?;
    let mut r = Report::new(&["oracle_step", "unknowns", "oracle", "two_term", "bulk", "boundary"]);
    r.meta("strip", json!({ "l1": l1, "l2": l2, "mu": p.mu(), "h": p.h() }));
    let mut fp = format!("{};", grid.fingerprint());
    for d in divs {
        let s = ell / d;
        fp.push_str(&format!("{s:.17e};"));
        let problem = OracleProblem {
            l1,
            l2,
            n1: (l1 / s).ceil() as usize,
            n2: (l2 / s).ceil() as usize,
            bc,
            v: PotentialField::constant(-1.0),
            params: p,
            cap: 200_000,
        };
        let c = oracle_count_2d(&problem, tau)?;
        r.push(vec![num(s), json!(c.unknowns), json!(c.count), num(tt.total), num(tt.bulk), num(tt.boundary)]);
    }
    Ok(Outcome::single(short_hex(fp.as_bytes()), "count-compare", r))
}

fn flow_fingerprint(o: &FlowOptions) -> String {
    short_hex(format!("flow/v1;tol={:.17e};energy={:.17e};steps={:.17e}", o.tol, o.energy_tol, o.steps_per_period).as_bytes())
}

fn linear_potential(s: &str) -> Result<(PotentialField, [f64; 3]), CliError> {
    let c = parse_list(s)?;
    let [c0, g1, g2] = c[..] else {
        return Err(CliError::Usage(format!("--w wants c,g1,g2, got `{s}`")));
    };
    Ok((PotentialField::linear(c0, g1, g2), [c0, g1, g2]))
}

pub fn billiard(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let p = params(cfg, 10.0, 0.1)?;
    let (w, coef) = linear_potential(text(&mut cfg.w, "1,0,0"))?;
    let eta = *cfg.eta_start.get_or_insert(0.0);
    let x2 = *cfg.x2.get_or_insert(0.0);
    let duration = *cfg.duration.get_or_insert(10.0);
    let mut opts = FlowOptions::default();
    opts.tol = *cfg.tol.get_or_insert(opts.tol);
    let w0 = w.value(0.0, x2);
    if !(w0 > 0.0) {
        return Err(CliError::Usage(format!("W must be positive at the start, got {w0}")));
    }
    let a = w0.sqrt();
    let start = PhaseState::at_boundary(eta, x2, a)?;
    let tr = integrate_flow(&start, &w, &p, duration, &opts)?;

    let mut traj = Report::new(&["t", "x1", "x2", "xi1", "xi2", "event_flag"]);
    traj.meta("potential", json!(coef));
    traj.meta("reflections", json!(tr.reflections.len()));
    traj.meta("max_energy_drift", num(tr.max_energy_drift()));
    let m = hop_metrics(a, eta, p.mu())?;
    traj.meta(
        "hop_prediction",
        json!({ "chord": m.chord, "arc": m.arc, "time": m.time, "mean_dx2_rate": -2.0 * a * hop_speed(eta)? }),
    );
    for (s, k) in tr.samples.iter().zip(&tr.kinds) {
        traj.push(vec![num(s.t), num(s.x1), num(s.x2), num(s.xi1), num(s.xi2), json!(k.flag())]);
    }
    let mut hops = Report::new(&["index", "t_start", "time", "dx2", "chord", "arc_length", "apex_x1", "apex_x2"]);
    for h in &tr.hops {
        hops.push(vec![
            json!(h.index),
            num(h.t_start),
            num(h.time),
            num(h.dx2),
            num(h.chord),
            num(h.arc_length),
            opt_num(h.apex.map(|a| a.x1)),
            opt_num(h.apex.map(|a| a.x2)),
        ]);
    }
    Ok(Outcome {
        grid: flow_fingerprint(&opts),
        files: vec![("billiard".into(), traj), ("billiard-hops".into(), hops)],
        failed: false,
    })
}

pub fn portraits(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let p = params(cfg, 40.0, 0.1)?;
    let which = text(&mut cfg.portrait, "all").to_string();
    let ids: Vec<PortraitId> = if which == "all" {
        PortraitId::all()
    } else {
        which
            .split(',')
            .map(|t| t.trim().parse::<PortraitId>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let bundles = ids.par_iter().map(|&id| portrait(id, &p)).collect::<Result<Vec<_>, _>>()?;
    let mut summary = Report::new(&[
        "portrait",
        "potential",
        "torn_off",
        "expect_torn_off",
        "collides",
        "expect_collision",
        "drift_direction_ok",
        "passed",
    ]);
    let mut files = Vec::new();
    for b in &bundles {
        summary.push(vec![
            json!(b.id.tag()),
            json!(b.potential),
            json!(b.torn_off),
            json!(b.expect_torn_off),
            json!(b.collides),
            json!(b.expect_collision),
            json!(b.drift_direction_ok),
            json!(b.passed()),
        ]);
        for m in &b.members {
            let role = format!("{:?}", m.role).to_lowercase();
            let mut t = Report::new(&["t", "x1", "x2", "xi1", "xi2", "event_flag"]);
            t.meta("portrait", json!(b.id.tag()));
            t.meta("role", json!(role));
            for (s, k) in m.trajectory.samples.iter().zip(&m.trajectory.kinds) {
                t.push(vec![num(s.t), num(s.x1), num(s.x2), num(s.xi1), num(s.xi2), json!(k.flag())]);
            }
            files.push((format!("portrait-{}-{role}", b.id.tag()), t));
        }
    }
    files.insert(0, ("portraits".into(), summary));
    Ok(Outcome {
        grid: flow_fingerprint(&FlowOptions::default()),
        files,
        failed: false,
    })
}

pub fn validate(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = osc_grid(cfg)?;
    let outcomes = run_suite(&grid);
    let mut r = Report::new(&["check", "passed", "seconds", "detail"]);
    let failed = outcomes.iter().any(|o| !o.passed);
    r.meta("passed", json!(outcomes.iter().filter(|o| o.passed).count()));
    r.meta("total", json!(outcomes.len()));
    for o in outcomes {
        r.push(vec![json!(o.name), json!(o.passed), num((o.seconds * 1e3).round() / 1e3), json!(o.detail)]);
    }
    Ok(Outcome {
        grid: grid.fingerprint(),
        files: vec![("validate".into(), r)],
        failed,
    })
}
