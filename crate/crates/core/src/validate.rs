//! Quick invariant suite behind `magspec validate`.
//!
//! Every check is small enough that the whole suite runs in well under a
//! minute; the heavy experiments live in the acceptance tests.

use std::time::Instant;

use serde::Serialize;

use crate::counting::{bound_correction_branch, bound_correction_eigfn};
use crate::dynamics::{self, FlowOptions, PhaseState, PortraitId};
use crate::edge::QuadOptions;
use crate::error::Result;
use crate::model2d::{oracle_count_2d, trace_defect, OracleProblem, ORACLE_CAP};
use crate::oscillator::{dh_derivative, eigenpair, eigenvalue, OscillatorGrid};
use crate::{cache::BranchCache, BoundaryCondition, ModelParams, PotentialField};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(&OscillatorGrid) -> Result<(bool, String)>;

const D: BoundaryCondition = BoundaryCondition::Dirichlet;
const N: BoundaryCondition = BoundaryCondition::Neumann;

pub fn checks() -> Vec<(&'static str, Check)> {
    vec![
        ("eigenvalues_at_zero", eigenvalues_at_zero),
        ("interlacing", interlacing),
        ("dauge_helffer", dauge_helffer),
        ("dual_forms_agree", dual_forms_agree),
        ("odd_level_cancellation", odd_level_cancellation),
        ("trace_defect_identity", trace_defect_identity),
        ("oracle_shift_covariance", oracle_shift_covariance),
        ("cache_roundtrip", cache_roundtrip),
        ("hop_closed_form", hop_closed_form),
        ("energy_and_reflection", energy_and_reflection),
        ("time_reversal", time_reversal),
        ("portrait_signs", portrait_signs),
    ]
}

/// Runs every check; numerical errors count as failures with the message kept.
pub fn run_suite(grid: &OscillatorGrid) -> Vec<CheckOutcome> {
    checks()
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f(grid) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn eigenvalues_at_zero(g: &OscillatorGrid) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 0..=2 {
        worst = worst.max((eigenvalue(0.0, D, n, g)?.0 - (4 * n + 3) as f64).abs());
        worst = worst.max((eigenvalue(0.0, N, n, g)?.0 - (4 * n + 1) as f64).abs());
    }
    Ok((worst < 1e-6, format!("max |lambda(0) - (4n+3|4n+1)| = {worst:.2e}")))
}

fn interlacing(g: &OscillatorGrid) -> Result<(bool, String)> {
    let mut bad = 0;
    for eta in [-2.0, 0.0, 1.5, 4.0] {
        for n in 0..=2 {
            let nn = eigenvalue(eta, N, n, g)?.0;
            let dn = eigenvalue(eta, D, n, g)?.0;
            let nn1 = eigenvalue(eta, N, n + 1, g)?.0;
            if !(nn < dn && dn < nn1) {
                bad += 1;
            }
        }
    }
    Ok((bad == 0, format!("{bad} violations at 12 (eta, n) points")))
}

fn dauge_helffer(g: &OscillatorGrid) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let d = 1e-3;
    for bc in [D, N] {
        for eta in [-1.0, 0.5, 2.0] {
            let pair = eigenpair(eta, bc, 0, g)?;
            let analytic = dh_derivative(&pair, eta, bc)?;
            let fd = (eigenvalue(eta + d, bc, 0, g)?.0 - eigenvalue(eta - d, bc, 0, g)?.0) / (2.0 * d);
            worst = worst.max(((analytic - fd) / fd).abs());
        }
    }
    Ok((worst < 1e-3, format!("max relative error {worst:.2e}")))
}

fn dual_forms_agree(g: &OscillatorGrid) -> Result<(bool, String)> {
    let mut detail = Vec::new();
    let mut ok = true;
    for bc in [D, N] {
        let b = bound_correction_branch(bc, 1.0, 0.4, g)?;
        let e = bound_correction_eigfn(bc, 1.0, 0.4, g, &QuadOptions::default())?;
        let diff = (b.value - e.value).abs();
        ok &= diff <= b.quad_error + e.quad_error;
        detail.push(format!("{bc}: {:.8} vs {:.8}", b.value, e.value));
    }
    Ok((ok, detail.join("; ")))
}

fn odd_level_cancellation(g: &OscillatorGrid) -> Result<(bool, String)> {
    let v = bound_correction_branch(D, 0.6, 0.2, g)?.value;
    Ok((v.abs() < 1e-9, format!("N_bound at tau = 3 hbar: {v:.2e}")))
}

fn trace_defect_identity(g: &OscillatorGrid) -> Result<(bool, String)> {
    let h = 0.1;
    let params = ModelParams::new(3.0, h)?;
    let t = trace_defect(0.8, &params, D, g, &QuadOptions::default())?;
    let b = bound_correction_branch(D, 0.8, 0.3, g)?;
    let want = b.value / h;
    let ok = want != 0.0 && (t.value - want).abs() <= t.error + b.quad_error / h;
    Ok((ok, format!("{:.8} vs {want:.8}", t.value)))
}

fn oracle_shift_covariance(_: &OscillatorGrid) -> Result<(bool, String)> {
    let strip = |v: f64| OracleProblem {
        l1: 1.2,
        l2: 0.8,
        n1: 24,
        n2: 13,
        bc: D,
        v: PotentialField::constant(v),
        params: ModelParams::new(5.0, 0.12).expect("valid parameters"),
        cap: ORACLE_CAP,
    };
    let a = oracle_count_2d(&strip(0.0), 0.7)?.count;
    let b = oracle_count_2d(&strip(-0.5), 0.2)?.count;
    Ok((a == b && a > 0, format!("counts {a} and {b}")))
}

fn cache_roundtrip(g: &OscillatorGrid) -> Result<(bool, String)> {
    let dir = std::env::temp_dir().join(format!("magspec-validate-{}", std::process::id()));
    let first = {
        let c = BranchCache::open(*g, &dir)?;
        let v = c.node(D, 1, 250)?;
        c.flush()?;
        v
    };
    let reloaded = BranchCache::open(*g, &dir)?;
    let second = reloaded.node(D, 1, 250)?;
    let direct = BranchCache::new(*g).node(D, 1, 250)?;
    let _ = std::fs::remove_dir_all(&dir);
    let ok = first == second && second == direct && reloaded.len() == 1;
    Ok((ok, format!("lambda {} (bitwise equal: {ok})", second.lambda)))
}

fn hop_closed_form(_: &OscillatorGrid) -> Result<(bool, String)> {
    let mu = 10.0;
    let params = ModelParams::new(mu, 0.1)?;
    let w = PotentialField::constant(1.0);
    let mut worst: f64 = 0.0;
    for eta in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let m = dynamics::hop_metrics(1.0, eta, mu)?;
        let s = PhaseState::at_boundary(eta, 0.0, 1.0)?;
        let tr = dynamics::integrate_flow(&s, &w, &params, 3.5 * m.time, &FlowOptions::default())?;
        for h in &tr.hops {
            worst = worst.max((h.dx2 + m.chord).abs()).max((h.time - m.time).abs());
        }
    }
    Ok((worst < 1e-6, format!("max chord/time deviation {worst:.2e}")))
}

fn energy_and_reflection(_: &OscillatorGrid) -> Result<(bool, String)> {
    let mu = 20.0;
    let params = ModelParams::new(mu, 0.1)?;
    let w = PotentialField::constant(1.0);
    let s = PhaseState::at_boundary(0.2, 0.0, 1.0)?;
    let tr = dynamics::integrate_flow(&s, &w, &params, 1.0, &FlowOptions::default())?;
    let drift = tr.max_energy_drift();
    let reflections_ok = tr.reflections.iter().all(|r| (r.xi2 - s.xi2).abs() < 1e-12);
    Ok((
        drift < 1e-8 && reflections_ok,
        format!("energy drift {drift:.2e} over unit time, {} reflections", tr.reflections.len()),
    ))
}

fn time_reversal(_: &OscillatorGrid) -> Result<(bool, String)> {
    let params = ModelParams::new(15.0, 0.1)?;
    let w = PotentialField::linear(1.0, 0.3, -0.2);
    let opts = FlowOptions::default();
    let s = PhaseState::at_boundary(0.1, 0.0, 1.0)?;
    let fwd = dynamics::integrate_flow(&s, &w, &params, 1.0, &opts)?;
    let back = dynamics::integrate_backward(fwd.last(), &w, &params, 1.0, &opts)?;
    let e = back.last();
    let dev = [e.x1 - s.x1, e.x2 - s.x2, e.xi1 - s.xi1, e.xi2 - s.xi2]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    Ok((dev < 100.0 * opts.tol, format!("max deviation {dev:.2e}")))
}

fn portrait_signs(_: &OscillatorGrid) -> Result<(bool, String)> {
    let params = ModelParams::new(40.0, 0.01)?;
    let mut failed = Vec::new();
    for id in PortraitId::all() {
        if !dynamics::portrait(id, &params)?.passed() {
            failed.push(id.tag());
        }
    }
    Ok((failed.is_empty(), format!("failed: [{}]", failed.join(", "))))
}
