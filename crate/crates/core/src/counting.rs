//! Magnetic Weyl counting: bulk density, the boundary correction in its two
//! integral forms, the two-term count, the superstrong-field boundary term and
//! spectral-gap predicates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::cache::BranchCache;
use crate::edge::{edge_layer, landau_count, sublevel_sets, QuadOptions};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::oscillator::{self, OscillatorGrid};
use crate::params::{step, BoundaryCondition, HeavisideConvention, ModelParams, PotentialField};
use crate::quadrature::gauss_legendre;
use crate::roots;

/// Which integral representation produced a [`BoundaryCorrection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `x1`-integral of eigenfunction densities over sublevel sets.
    EigenfunctionIntegral,
    /// Signed lengths of sublevel sets from branch crossings.
    BranchIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// `x1` cutoff in oscillator units (eigenfunction form only).
    pub x1_max: Option<f64>,
    /// Largest `eta` reached by the quadrature or crossing search.
    pub eta_max: f64,
    /// Highest branch index that contributed, if any.
    pub j_max: Option<usize>,
}

/// `N^MW_bound(tau, hbar)` with provenance and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCorrection {
    pub bc: BoundaryCondition,
    pub tau: f64,
    pub hbar: f64,
    pub method: Method,
    pub value: f64,
    pub quad_error: f64,
    pub truncation: Truncation,
}

/// Magnetic Weyl density `#{j : (2j+1) mu_h F + V <= tau} (2 pi)^-1 sqrt_g mu_h F`.
///
/// The threshold case `(2j+1) mu_h F + V = tau` counts under `RightContinuous`
/// and not under `LeftContinuous`.
pub fn n_mw_density(
    f: f64,
    v: f64,
    tau: f64,
    mu_h: f64,
    sqrt_g: f64,
    conv: HeavisideConvention,
) -> Result<f64> {
    for (name, x) in [("F", f), ("V", v), ("tau", tau), ("mu_h", mu_h), ("sqrt_g", sqrt_g)] {
        ensure_finite(name, x)?;
    }
    if f <= 0.0 {
        return Err(invalid("F", "must be positive"));
    }
    if mu_h <= 0.0 {
        return Err(invalid("mu_h", "must be positive"));
    }
    let mut count = 0usize;
    while step(tau - v - (2 * count + 1) as f64 * mu_h * f, conv) == 1 {
        count += 1;
    }
    Ok(count as f64 * sqrt_g * mu_h * f / (2.0 * PI))
}

fn check_tau_hbar(tau: f64, hbar: f64) -> Result<()> {
    ensure_finite("tau", tau)?;
    ensure_finite("hbar", hbar)?;
    if hbar <= 0.0 {
        return Err(invalid("hbar", "must be positive"));
    }
    if tau <= 0.0 {
        return Err(invalid("tau", "must be positive"));
    }
    Ok(())
}

/// Branch form: `(2 pi)^-1 hbar^(1/2) sum_j int [theta(tau - hbar lambda_j) - theta_conv(tau - (2j+1) hbar) theta(eta)] d eta`.
///
/// Each term is a signed interval length read off the crossings of branch `j`
/// with `tau / hbar`.
pub fn bound_correction_branch(
    bc: BoundaryCondition,
    tau: f64,
    hbar: f64,
    grid: &OscillatorGrid,
) -> Result<BoundaryCorrection> {
    check_tau_hbar(tau, hbar)?;
    let level = tau / hbar;
    let subs = sublevel_sets(bc, level, grid)?;
    let count = landau_count(bc, level);
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut eta_max = 0.0f64;
    for sub in &subs {
        let counted = sub.j < count;
        sum += match (sub.hi.is_finite(), counted) {
            (false, true) => -sub.lo,
            (true, false) => sub.hi - sub.lo,
            // An unbounded sublevel set always sits above a counted level and
            // a bounded one never does; anything else is a tracking failure.
            _ => {
                return Err(Error::BranchTracking {
                    n: sub.j,
                    eta_left: sub.lo,
                    eta_right: sub.hi,
                    reason: "sublevel set inconsistent with the Landau count".into(),
                })
            }
        };
        for eta in [sub.lo, sub.hi] {
            if eta.is_finite() {
                eta_max = eta_max.max(eta.abs());
                err += crossing_error(bc, sub.j, eta, grid)?;
            }
        }
    }
    let pref = hbar.sqrt() / (2.0 * PI);
    Ok(BoundaryCorrection {
        bc,
        tau,
        hbar,
        method: Method::BranchIntegral,
        value: pref * sum,
        quad_error: pref * err,
        truncation: Truncation {
            x1_max: None,
            eta_max,
            j_max: subs.last().map(|s| s.j),
        },
    })
}

/// Error in a crossing location: eigenvalue error over the branch slope, plus
/// the root-finder tolerance.
fn crossing_error(bc: BoundaryCondition, j: usize, eta: f64, grid: &OscillatorGrid) -> Result<f64> {
    let pair = oscillator::eigenpair(eta, bc, j, grid)?;
    let slope = oscillator::dh_derivative(&pair, eta, bc)?.abs();
    // The last Richardson correction bounds the error of the extrapolated value.
    let d_lambda = pair.lambda_error.max(1e-12 * pair.lambda.abs());
    Ok(d_lambda / slope.max(1e-3) + 1e-10)
}

/// Eigenfunction form: `(2 pi)^-1 hbar^(1/2) int_0^inf [G(x1) - count] dx1`,
/// with `G` the sublevel-set integral of squared eigenfunctions.
///
/// The `x1` cutoff is doubled once; if that moves the value by more than
/// `quad.tail_rel_tol` (relative, with an absolute floor) the call fails.
pub fn bound_correction_eigfn(
    bc: BoundaryCondition,
    tau: f64,
    hbar: f64,
    grid: &OscillatorGrid,
    quad: &QuadOptions,
) -> Result<BoundaryCorrection> {
    check_tau_hbar(tau, hbar)?;
    let level = tau / hbar;
    let layer = edge_layer(bc, level, grid, quad)?;
    let pref = hbar.sqrt() / (2.0 * PI);
    let (v1, _) = layer.defect_integral(layer.x_first);
    let (v2, disc) = layer.defect_integral(layer.x_max);
    let tail = (v2 - v1).abs();
    if tail > quad.tail_rel_tol * v2.abs().max(1e-3) {
        return Err(Error::TailNotConverged(format!(
            "doubling the x1 cutoff from {:.2} to {:.2} changed the integral by {tail:.3e} \
             (value {v2:.6e})",
            layer.x_first, layer.x_max
        )));
    }
    Ok(BoundaryCorrection {
        bc,
        tau,
        hbar,
        method: Method::EigenfunctionIntegral,
        value: pref * v2,
        quad_error: pref * (layer.gk_error + tail + disc),
        truncation: Truncation {
            x1_max: Some(layer.x_max),
            eta_max: layer.eta_max,
            j_max: layer.sublevels.last().map(|s| s.j),
        },
    })
}

/// Weak limit `-/+ (4 pi)^-1 tau_+^(1/2)` of the boundary correction as `hbar -> 0`.
/// Dirichlet gives the minus sign; Neumann and Robin the plus sign.
pub fn kappa0_limit(bc: BoundaryCondition, tau: f64) -> Result<f64> {
    ensure_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(invalid("tau", "must be positive"));
    }
    let s = if bc.is_dirichlet() { -1.0 } else { 1.0 };
    Ok(s * tau.sqrt() / (4.0 * PI))
}

/// Side of an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side2 {
    /// `x1 = x1_min`.
    Left,
    /// `x1 = x1_max`.
    Right,
    /// `x2 = x2_min`.
    Bottom,
    /// `x2 = x2_max`.
    Top,
}

/// Rectangle `[x1_min, x1_max] x [x2_min, x2_max]`; sides not listed in
/// `boundaries` are treated as periodic and carry no correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub boundaries: Vec<(Side2, BoundaryCondition)>,
}

/// Inputs to [`two_term_count`].
#[derive(Debug, Clone)]
pub struct TwoTermInput {
    pub domain: Rectangle,
    pub f: PotentialField,
    pub v: PotentialField,
    pub psi: PotentialField,
    pub params: ModelParams,
    pub tau: f64,
    /// Composite Gauss–Legendre panels per direction and points per panel.
    pub panels: usize,
    pub order: usize,
    /// Floor for `F` on the domain.
    pub f_floor: f64,
}

/// Bulk and boundary parts of the two-term count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTermCount {
    pub bulk: f64,
    pub boundary: f64,
    pub total: f64,
}

/// Boundary corrections keyed by a relative `1e-3` lattice in `(hbar, level)`.
#[derive(Debug, Default)]
pub struct CorrectionCache {
    map: Mutex<HashMap<(String, i64, i64), f64>>,
}

impl CorrectionCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// `N_bound(bc, tau, hbar)` at the lattice point nearest `(hbar, tau)`.
    pub fn get(&self, bc: BoundaryCondition, tau: f64, hbar: f64, grid: &OscillatorGrid) -> Result<f64> {
        if tau <= 0.0 {
            return Ok(0.0);
        }
        let q = |x: f64| (x.ln() / 1e-3).round() as i64;
        let key = (bc.tag(), q(hbar), q(tau));
        if let Some(v) = self.map.lock().expect("lock").get(&key) {
            return Ok(*v);
        }
        let (hq, tq) = ((key.1 as f64 * 1e-3).exp(), (key.2 as f64 * 1e-3).exp());
        let v = bound_correction_branch(bc, tq, hq, grid)?.value;
        self.map.lock().expect("lock").insert(key, v);
        Ok(v)
    }
}

/// `h^-2 int_X N^MW psi dx + h^-1 int_{dX} N^MW_bound psi ds`, with
/// `hbar = mu h F(x)` and level `tau - V(x)` pointwise.
pub fn two_term_count(
    input: &TwoTermInput,
    grid: &OscillatorGrid,
    cache: &CorrectionCache,
) -> Result<TwoTermCount> {
    let TwoTermInput {
        domain,
        f,
        v,
        psi,
        params,
        tau,
        panels,
        order,
        f_floor,
    } = input;
    ensure_finite("tau", *tau)?;
    if *panels == 0 || *order == 0 {
        return Err(invalid("panels", "panels and order must be positive"));
    }
    let (a1, b1) = domain.x1;
    let (a2, b2) = domain.x2;
    if !(b1 > a1 && b2 > a2) {
        return Err(invalid("domain", "empty rectangle"));
    }
    let h = params.h();
    let mu_h = params.hbar_large();
    let (xg, wg) = gauss_legendre(*order);
    let nodes = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let d = (b - a) / *panels as f64;
        let mut out = Vec::with_capacity(*panels * *order);
        for p in 0..*panels {
            let c = a + (p as f64 + 0.5) * d;
            for (x, w) in xg.iter().zip(&wg) {
                out.push((c + 0.5 * d * x, 0.5 * d * w));
            }
        }
        out
    };
    let n1 = nodes(a1, b1);
    let n2 = nodes(a2, b2);
    let check_f = |x1: f64, x2: f64| -> Result<f64> {
        let fv = f.value(x1, x2);
        ensure_finite("F", fv)?;
        if fv < *f_floor {
            return Err(invalid(
                "F",
                format!("F({x1}, {x2}) = {fv} below floor {f_floor}"),
            ));
        }
        Ok(fv)
    };

    // Bulk term uses the left-continuous convention away from the boundary.
    let mut bulk = 0.0;
    for &(x1, w1) in &n1 {
        for &(x2, w2) in &n2 {
            let fv = check_f(x1, x2)?;
            let dens = n_mw_density(
                fv,
                v.value(x1, x2),
                *tau,
                mu_h,
                1.0,
                HeavisideConvention::LeftContinuous,
            )?;
            bulk += w1 * w2 * dens * psi.value(x1, x2);
        }
    }
    bulk /= h * h;

    let mut boundary = 0.0;
    for &(side, bc) in &domain.boundaries {
        let pts: Vec<(f64, f64, f64)> = match side {
            Side2::Left => n2.iter().map(|&(x2, w)| (a1, x2, w)).collect(),
            Side2::Right => n2.iter().map(|&(x2, w)| (b1, x2, w)).collect(),
            Side2::Bottom => n1.iter().map(|&(x1, w)| (x1, a2, w)).collect(),
            Side2::Top => n1.iter().map(|&(x1, w)| (x1, b2, w)).collect(),
        };
        for (x1, x2, w) in pts {
            let weight = psi.value(x1, x2);
            if weight == 0.0 {
                continue;
            }
            let fv = check_f(x1, x2)?;
            let nb = cache.get(bc, *tau - v.value(x1, x2), mu_h * fv, grid)?;
            boundary += w * nb * weight;
        }
    }
    boundary /= h;
    Ok(TwoTermCount {
        bulk,
        boundary,
        total: bulk + boundary,
    })
}

/// C^2 cutoff: 1 on `[-1/2, 1/2]`, 0 outside `(-1, 1)`, quintic smoothstep between.
pub fn cutoff(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let u = 2.0 * (1.0 - a);
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// Inputs to [`superstrong_bound_correction`].
#[derive(Debug, Clone)]
pub struct SuperstrongInput {
    pub bc: BoundaryCondition,
    /// Odd integer `2m + 1`.
    pub z_frak: f64,
    pub params: ModelParams,
    pub w_eff: PotentialField,
    pub psi: PotentialField,
    /// Tangential extent of the integration.
    pub x2: (f64, f64),
    /// Cutoff width; `None` means `5 sqrt(h / mu)`.
    pub eps_cut: Option<f64>,
    /// Lower bound for `mu h`.
    pub eps0: f64,
    /// Tangential Gauss–Legendre panels and points per panel.
    pub panels: usize,
    pub order: usize,
}

/// Scan resolution for sign changes along `x1`.
const SUPERSTRONG_SCAN: usize = 64;
const SUPERSTRONG_MAX_TERMS: usize = 10_000;

/// Lower bound for branch `n`, valid for every `eta`.
///
/// Restricting the form to functions vanishing at the boundary gives
/// `lambda_n >= lambda_{D,n-1} >= 2n - 1` for any Robin parameter.
fn branch_floor(bc: BoundaryCondition, n: usize) -> f64 {
    if bc.is_dirichlet() {
        2.0 * n as f64 + 1.0
    } else {
        (2.0 * n as f64 - 1.0).max(0.0)
    }
}

/// Upper bound for branch `n` on `eta >= 0`: the Dirichlet value at `eta = 0`.
fn branch_ceiling(n: usize) -> f64 {
    4.0 * n as f64 + 3.0
}

/// `sum_n (2 pi)^-1 mu iint [theta(mu h (lambda_n(x1 / hbar_half) - z) - W)
///  - theta(mu h (2n + 1 - z) - W)] psi zeta(x1 / eps) dx1 dx2`.
///
/// Branch values come from `cache` (cubic interpolation on the `eta`
/// lattice). The `n`-sum stops once both Heaviside arguments are of one sign
/// on the whole integration region for all later `n`.
pub fn superstrong_bound_correction(input: &SuperstrongInput, cache: &BranchCache) -> Result<f64> {
    let SuperstrongInput {
        bc,
        z_frak,
        params,
        w_eff,
        psi,
        x2,
        eps_cut,
        eps0,
        panels,
        order,
    } = input;
    let bc = *bc;
    ensure_finite("z_frak", *z_frak)?;
    let zi = z_frak.round();
    if (z_frak - zi).abs() > 0.0 || zi < 1.0 || (zi as i64) % 2 == 0 {
        return Err(invalid("z_frak", format!("must be an odd integer >= 1, got {z_frak}")));
    }
    let mu_h = params.hbar_large();
    if mu_h < *eps0 {
        return Err(invalid(
            "params",
            format!("mu h = {mu_h} below the strong-field floor {eps0}"),
        ));
    }
    let hb = params.hbar_half();
    let eps = eps_cut.unwrap_or(5.0 * hb);
    if !(eps > 0.0) {
        return Err(invalid("eps_cut", "must be positive"));
    }
    let (a2, b2) = *x2;
    if !(b2 > a2) {
        return Err(invalid("x2", "empty interval"));
    }
    let conv = bc.bulk_convention();

    // Range of W on the support, with a margin for unsampled extremes.
    let mut w_min = f64::INFINITY;
    let mut w_max = f64::NEG_INFINITY;
    for i in 0..=32 {
        for k in 0..=32 {
            let x1 = eps * i as f64 / 32.0;
            let xx2 = a2 + (b2 - a2) * k as f64 / 32.0;
            let w = w_eff.value(x1, xx2);
            ensure_finite("W_eff", w)?;
            w_min = w_min.min(w);
            w_max = w_max.max(w);
        }
    }
    let margin = 0.05 * (w_max - w_min) + 1e-12 * w_max.abs().max(1.0);
    let (w_min, w_max) = (w_min - margin, w_max + margin);

    let (xg, wg) = gauss_legendre(*order);
    let (x8, w8) = gauss_legendre(8);
    let d2 = (b2 - a2) / *panels as f64;
    let mut total = 0.0;
    let mut n = 0usize;
    loop {
        if n > SUPERSTRONG_MAX_TERMS {
            return Err(Error::SumNotConverged { terms: n });
        }
        let bulk_arg_min = mu_h * (2.0 * n as f64 + 1.0 - zi) - w_max;
        let floor_arg_min = mu_h * (branch_floor(bc, n) - zi) - w_max;
        // Both arguments positive everywhere, now and for every later n.
        if bulk_arg_min > 0.0 && floor_arg_min > 0.0 {
            break;
        }
        let bulk_arg_max = mu_h * (2.0 * n as f64 + 1.0 - zi) - w_min;
        let branch_arg_max = mu_h * (branch_ceiling(n) - zi) - w_min;
        // Both negative everywhere: the term vanishes.
        let skip = bulk_arg_max < 0.0 && branch_arg_max < 0.0;
        if !skip {
            let mut term = 0.0;
            for p in 0..*panels {
                let c = a2 + (p as f64 + 0.5) * d2;
                for (xk, wk) in xg.iter().zip(&wg) {
                    let xx2 = c + 0.5 * d2 * xk;
                    let g = |x1: f64| -> Result<f64> {
                        Ok(mu_h * (cache.lambda(bc, n, x1 / hb)? - zi) - w_eff.value(x1, xx2))
                    };
                    let b = |x1: f64| mu_h * (2.0 * n as f64 + 1.0 - zi) - w_eff.value(x1, xx2);
                    let line = integrate_indicator_difference(g, b, eps, conv, |x1| {
                        psi.value(x1, xx2) * cutoff(x1 / eps)
                    }, &x8, &w8)?;
                    term += 0.5 * d2 * wk * line;
                }
            }
            total += term;
        }
        n += 1;
    }
    Ok(params.mu() / (2.0 * PI) * total)
}

/// `int_0^eps [theta(g) - theta(b)] weight dx1` with breakpoints at the sign
/// changes of `g` and `b`.
fn integrate_indicator_difference<G, B, W>(
    g: G,
    b: B,
    eps: f64,
    conv: HeavisideConvention,
    weight: W,
    xg: &[f64],
    wg: &[f64],
) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
    B: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let m = SUPERSTRONG_SCAN;
    let xs: Vec<f64> = (0..=m).map(|i| eps * i as f64 / m as f64).collect();
    let gv: Vec<f64> = xs.iter().map(|&x| g(x)).collect::<Result<_>>()?;
    let bv: Vec<f64> = xs.iter().map(|&x| b(x)).collect();
    let mut breaks = vec![0.0];
    for i in 0..m {
        if (gv[i] > 0.0) != (gv[i + 1] > 0.0) {
            breaks.push(roots::bracketed(&g, xs[i], xs[i + 1], 1e-13 * eps)?);
        }
        if (bv[i] > 0.0) != (bv[i + 1] > 0.0) {
            breaks.push(roots::bracketed(|x| Ok(b(x)), xs[i], xs[i + 1], 1e-13 * eps)?);
        }
    }
    breaks.push(eps);
    breaks.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let ind = step(g(mid)?, conv) as f64 - step(b(mid), conv) as f64;
        if ind == 0.0 {
            continue;
        }
        // The cutoff has kinks at eps/2; split there for full Gauss accuracy.
        let mut pieces = vec![lo, hi];
        if lo < 0.5 * eps && hi > 0.5 * eps {
            pieces.insert(1, 0.5 * eps);
        }
        for p in pieces.windows(2) {
            let (c, r) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            let s: f64 = xg.iter().zip(wg).map(|(x, w)| w * weight(c + r * x)).sum();
            acc += ind * r * s;
        }
    }
    Ok(acc)
}

/// Outcome of a spectral-gap test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "witness", rename_all = "snake_case")]
pub enum GapResult {
    Gap,
    /// First `m` that violates the condition.
    NoGap(usize),
}

fn affine_box_min_abs(c: f64, slope_f: f64, f_range: (f64, f64), v_range: (f64, f64)) -> f64 {
    // |c + slope_f F + V| over the box: zero if the affine form changes sign.
    let corners = [
        c + slope_f * f_range.0 + v_range.0,
        c + slope_f * f_range.0 + v_range.1,
        c + slope_f * f_range.1 + v_range.0,
        c + slope_f * f_range.1 + v_range.1,
    ];
    let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 && hi >= 0.0 {
        0.0
    } else {
        lo.abs().min(hi.abs())
    }
}

/// Checks `|(2m+1-z) mu h F + V - tau| >= eps0 mu h` for every `m` in
/// `m_range` and every `(F, V)` in the given ranges.
pub fn spectral_gap_check(
    m_range: std::ops::RangeInclusive<usize>,
    z_frak: f64,
    mu_h: f64,
    f_range: (f64, f64),
    v_range: (f64, f64),
    tau: f64,
    eps0: f64,
) -> Result<GapResult> {
    for (name, x) in [
        ("z_frak", z_frak),
        ("mu_h", mu_h),
        ("F.lo", f_range.0),
        ("F.hi", f_range.1),
        ("V.lo", v_range.0),
        ("V.hi", v_range.1),
        ("tau", tau),
        ("eps0", eps0),
    ] {
        ensure_finite(name, x)?;
    }
    if f_range.0 > f_range.1 || v_range.0 > v_range.1 {
        return Err(invalid("ranges", "lower end above upper end"));
    }
    for m in m_range {
        let slope = (2.0 * m as f64 + 1.0 - z_frak) * mu_h;
        if affine_box_min_abs(-tau, slope, f_range, v_range) < eps0 * mu_h {
            return Ok(GapResult::NoGap(m));
        }
    }
    Ok(GapResult::Gap)
}

/// Ellipticity of the `n`-th boundary operator near the boundary:
/// `(lambda_low - z - eps) mu h F + V - tau >= 0` on the ranges, where
/// `lambda_low` is `2n + 1` for Dirichlet and the branch minimum otherwise.
#[allow(clippy::too_many_arguments)]
pub fn boundary_ellipticity(
    bc: BoundaryCondition,
    n: usize,
    z_frak: f64,
    mu_h: f64,
    f_range: (f64, f64),
    v_range: (f64, f64),
    tau: f64,
    eps: f64,
    grid: &OscillatorGrid,
) -> Result<bool> {
    let lambda_low = if bc.is_dirichlet() {
        2.0 * n as f64 + 1.0
    } else {
        oscillator::branch_minimum(bc, n, grid)?.lambda_min
    };
    let slope = (lambda_low - z_frak - eps) * mu_h;
    let worst = [f_range.0, f_range.1]
        .iter()
        .map(|&f| slope * f + v_range.0 - tau)
        .fold(f64::INFINITY, f64::min);
    Ok(worst >= 0.0)
}
