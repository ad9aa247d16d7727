//! Half-line harmonic oscillator `-u'' + x^2 u` on `(-inf, eta]`.
//!
//! This is `L(eta) = -d^2/dx^2 + (x + eta)^2` on the negative half-line after
//! the shift `x -> x + eta`. The boundary sits at the grid node `x = eta` and an
//! artificial Dirichlet wall closes the window deep in the classically
//! forbidden region.
//!
//! Eigenvalues come from a second-order finite-difference matrix solved by
//! Sturm bisection and are Richardson-extrapolated over halved steps.
//! Eigenvector samples are indexed by distance from the boundary: sample `i`
//! lives at `x = eta - i * step`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics;
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::params::BoundaryCondition;
use crate::roots;
use crate::tridiag::SymTridiagonal;

/// Two levels closer than this are treated as a discretization failure.
pub const COLLISION_TOLERANCE: f64 = 1e-9;

/// Below this `|lambda - (2n+1)|` the tunneling formula replaces the
/// finite-difference value, whose absolute accuracy is a few `1e-11`.
pub const TUNNELING_SWITCH: f64 = 1e-7;

/// Largest eigenfunction mass tolerated in the last unit of the window.
pub const FAR_CUT_MASS_LIMIT: f64 = 1e-10;

/// Discretization parameters for the oscillator eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorGrid {
    /// Base grid spacing.
    pub step: f64,
    /// Window length beyond the classical turning region.
    pub left_cut: f64,
    /// Number of step halvings combined by Richardson extrapolation.
    pub richardson_levels: usize,
}

impl Default for OscillatorGrid {
    fn default() -> Self {
        Self {
            step: 5e-3,
            left_cut: 12.0,
            richardson_levels: 2,
        }
    }
}

impl OscillatorGrid {
    pub fn new(step: f64, left_cut: f64, richardson_levels: usize) -> Result<Self> {
        let g = Self {
            step,
            left_cut,
            richardson_levels,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("step", self.step)?;
        ensure_finite("left_cut", self.left_cut)?;
        if self.step <= 0.0 {
            return Err(invalid("step", "must be positive"));
        }
        if self.left_cut < 8.0 {
            return Err(invalid("left_cut", format!("must be >= 8, got {}", self.left_cut)));
        }
        if self.richardson_levels < 1 {
            return Err(invalid("richardson_levels", "must be >= 1"));
        }
        Ok(())
    }

    /// Stable hash of every discretization parameter, used as a cache key.
    pub fn fingerprint(&self) -> String {
        let canon = format!(
            "oscillator-grid/v1;step={:.17e};left_cut={:.17e};levels={}",
            self.step, self.left_cut, self.richardson_levels
        );
        let digest = Sha256::digest(canon.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Steps used by the Richardson table, coarsest first.
    pub fn steps(&self) -> Vec<f64> {
        (0..self.richardson_levels)
            .map(|k| self.step / f64::powi(2.0, k as i32))
            .collect()
    }
}

/// One eigenvalue with its normalized eigenfunction and boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub n: usize,
    pub eta: f64,
    pub bc: BoundaryCondition,
    /// Richardson-extrapolated eigenvalue.
    pub lambda: f64,
    /// Difference between the last two Richardson columns.
    pub lambda_error: f64,
    /// Eigenfunction on the finest grid; `samples[i]` is `u(eta - i * sample_step)`.
    pub samples: Vec<f64>,
    pub sample_step: f64,
    /// `u(eta)`.
    pub boundary_value: f64,
    /// `u'(eta)`.
    pub boundary_derivative: f64,
}

impl EigenPair {
    /// Trapezoidal `int u^2`, which the solver normalizes to one.
    pub fn norm_squared(&self) -> f64 {
        trapezoid_norm(&self.samples, self.sample_step)
    }
}

fn trapezoid_norm(u: &[f64], step: f64) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    let interior: f64 = u.iter().map(|v| v * v).sum();
    let ends = 0.5 * (u[0] * u[0] + u[u.len() - 1] * u[u.len() - 1]);
    (interior - ends) * step
}

/// Upper bound on the `n`-th eigenvalue for any boundary condition.
///
/// For `eta >= 0` the Dirichlet value at zero bounds everything. For
/// `eta < 0`, `x^2 <= 2 eta^2 + 2 s^2` with `s = eta - x` reduces to a
/// Dirichlet oscillator of frequency `sqrt 2`.
pub(crate) fn lambda_upper_bound(eta: f64, n: usize) -> f64 {
    let d0 = 4.0 * n as f64 + 3.0;
    if eta >= 0.0 {
        d0
    } else {
        2.0 * eta * eta + std::f64::consts::SQRT_2 * d0
    }
}

/// Finite-difference matrix for one `(eta, bc, step)`.
pub(crate) struct Discretization {
    pub step: f64,
    bc: BoundaryCondition,
    /// Number of intervals between the boundary and the wall.
    intervals: usize,
    matrix: SymTridiagonal,
    lambda_bound: f64,
}

impl Discretization {
    pub fn new(eta: f64, bc: BoundaryCondition, step: f64, left_cut: f64, n_max: usize) -> Self {
        let lambda_bound = lambda_upper_bound(eta, n_max);
        let x_left = eta.min(-lambda_bound.sqrt()) - left_cut;
        let intervals = ((eta - x_left) / step).ceil() as usize;
        let inv_s2 = 1.0 / (step * step);
        let node = |i: usize| eta - i as f64 * step;
        let matrix = match bc.robin_alpha() {
            None => {
                // Unknowns at nodes 1..intervals-1.
                let diag = (1..intervals)
                    .map(|i| 2.0 * inv_s2 + node(i).powi(2))
                    .collect();
                SymTridiagonal::new(diag, vec![-inv_s2; intervals - 2])
            }
            Some(alpha) => {
                // Ghost node u_{-1} = u_1 - 2 step alpha u_0, then a diagonal
                // similarity to symmetrize the first row.
                let mut diag: Vec<f64> = (0..intervals)
                    .map(|i| 2.0 * inv_s2 + node(i).powi(2))
                    .collect();
                diag[0] += 2.0 * alpha / step;
                let mut off = vec![-inv_s2; intervals - 1];
                off[0] = -std::f64::consts::SQRT_2 * inv_s2;
                SymTridiagonal::new(diag, off)
            }
        };
        Self {
            step,
            bc,
            intervals,
            matrix,
            lambda_bound,
        }
    }

    fn bracket(&self) -> (f64, f64) {
        // Attractive Robin conditions can push the ground state below zero.
        let lo = self.matrix.gershgorin().0.min(-1.0);
        (lo, 1.05 * self.lambda_bound + 1.0)
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (lo, hi) = self.bracket();
        self.matrix.eigenvalue(k, lo, hi, 1e-15)
    }

    /// True when `lambda` is the `k`-th eigenvalue and no other level lies
    /// within `tol` of it.
    pub fn isolated(&self, k: usize, lambda: f64, tol: f64) -> bool {
        self.matrix.count_below(lambda - tol) == k && self.matrix.count_below(lambda + tol) == k + 1
    }

    pub fn eigenvalues(&self, n_max: usize) -> Vec<f64> {
        let (mut lo, hi) = self.bracket();
        let mut out = Vec::with_capacity(n_max + 1);
        for k in 0..=n_max {
            let v = self.matrix.eigenvalue(k, lo, hi, 1e-15);
            out.push(v);
            lo = v;
        }
        out
    }

    /// Eigenvector as grid samples from the boundary to the wall (inclusive),
    /// normalized by the trapezoidal rule and sign-fixed so the lobe nearest
    /// the boundary is positive.
    pub fn samples(&self, lambda: f64) -> Vec<f64> {
        let w = self.matrix.eigenvector(lambda);
        let mut u = vec![0.0; self.intervals + 1];
        match self.bc.robin_alpha() {
            None => u[1..self.intervals].copy_from_slice(&w),
            Some(_) => {
                u[..self.intervals].copy_from_slice(&w);
                u[0] *= std::f64::consts::SQRT_2;
            }
        }
        let norm = trapezoid_norm(&u, self.step).sqrt();
        let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let first = u
            .iter()
            .copied()
            .find(|v| v.abs() > 1e-3 * peak)
            .unwrap_or(1.0);
        let scale = first.signum() / norm;
        u.iter_mut().for_each(|v| *v *= scale);
        u
    }

    /// `(u(eta), u'(eta))` with the derivative taken in `x` (towards the boundary).
    pub fn boundary_data(&self, u: &[f64]) -> (f64, f64) {
        match self.bc.robin_alpha() {
            None => {
                // Fourth-order one-sided stencil; samples run away from the boundary.
                let d = (25.0 * u[0] - 48.0 * u[1] + 36.0 * u[2] - 16.0 * u[3] + 3.0 * u[4])
                    / (12.0 * self.step);
                (0.0, d)
            }
            Some(alpha) => (u[0], -alpha * u[0]),
        }
    }

    /// Mass of `u^2` in the last unit length before the wall.
    pub fn far_mass(&self, u: &[f64]) -> f64 {
        let k = ((1.0 / self.step).ceil() as usize).min(u.len());
        u[u.len() - k..].iter().map(|v| v * v).sum::<f64>() * self.step
    }
}

/// Richardson table for a quantity with an even error expansion in the step.
/// Returns the extrapolated value and the last-column correction.
pub(crate) fn richardson(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 1 {
        return (values[0], 0.0);
    }
    let mut table = values.to_vec();
    let mut last_change = 0.0;
    for col in 1..m {
        let factor = f64::powi(4.0, col as i32) - 1.0;
        for row in (col..m).rev() {
            let refined = table[row] + (table[row] - table[row - 1]) / factor;
            if row == m - 1 {
                last_change = refined - table[row];
            }
            table[row] = refined;
        }
    }
    (table[m - 1], last_change.abs())
}

fn check_eta(eta: f64) -> Result<()> {
    ensure_finite("eta", eta)
}

fn validate_bc(bc: BoundaryCondition) -> Result<()> {
    if let BoundaryCondition::Robin { alpha } = bc {
        ensure_finite("alpha", alpha)?;
        if alpha < 0.0 {
            return Err(invalid("alpha", "must be >= 0"));
        }
    }
    Ok(())
}

/// Lowest `n_max + 1` eigenpairs at `eta`, in increasing order.
pub fn solve_spectrum(
    eta: f64,
    bc: BoundaryCondition,
    n_max: usize,
    grid: &OscillatorGrid,
) -> Result<Vec<EigenPair>> {
    check_eta(eta)?;
    validate_bc(bc)?;
    grid.validate()?;
    let steps = grid.steps();
    let mut lambdas = vec![Vec::with_capacity(steps.len()); n_max + 1];
    let mut bvals = vec![Vec::with_capacity(steps.len()); n_max + 1];
    let mut bders = vec![Vec::with_capacity(steps.len()); n_max + 1];
    let mut finest_samples = Vec::new();
    let mut finest_step = grid.step;
    for (level, &step) in steps.iter().enumerate() {
        let disc = Discretization::new(eta, bc, step, grid.left_cut, n_max);
        let values = disc.eigenvalues(n_max);
        if level + 1 == steps.len() {
            for k in 0..n_max {
                let gap = values[k + 1] - values[k];
                if gap <= COLLISION_TOLERANCE {
                    return Err(Error::LevelCollision {
                        eta,
                        lower: k,
                        upper: k + 1,
                        gap,
                        tolerance: COLLISION_TOLERANCE,
                    });
                }
            }
        }
        let mut samples_here = Vec::with_capacity(n_max + 1);
        for (k, &lam) in values.iter().enumerate() {
            let u = disc.samples(lam);
            let mass = disc.far_mass(&u);
            if mass > FAR_CUT_MASS_LIMIT {
                return Err(Error::WindowTooShort {
                    eta,
                    level: k,
                    mass,
                    limit: FAR_CUT_MASS_LIMIT,
                });
            }
            let (b, d) = disc.boundary_data(&u);
            lambdas[k].push(lam);
            bvals[k].push(b);
            bders[k].push(d);
            samples_here.push(u);
        }
        if level + 1 == steps.len() {
            finest_samples = samples_here;
            finest_step = step;
        }
    }
    let pairs = finest_samples
        .into_iter()
        .enumerate()
        .map(|(k, samples)| {
            let (lambda, lambda_error) = refine_far(eta, bc, k, richardson(&lambdas[k]));
            let (boundary_value, _) = richardson(&bvals[k]);
            let (boundary_derivative, _) = richardson(&bders[k]);
            let (boundary_value, boundary_derivative) = match bc.robin_alpha() {
                None => (0.0, boundary_derivative),
                Some(alpha) => (boundary_value, -alpha * boundary_value),
            };
            EigenPair {
                n: k,
                eta,
                bc,
                lambda,
                lambda_error,
                samples,
                sample_step: finest_step,
                boundary_value,
                boundary_derivative,
            }
        })
        .collect();
    Ok(pairs)
}

/// The `n`-th eigenpair alone, skipping the lower levels' eigenvectors.
pub fn eigenpair(
    eta: f64,
    bc: BoundaryCondition,
    n: usize,
    grid: &OscillatorGrid,
) -> Result<EigenPair> {
    check_eta(eta)?;
    validate_bc(bc)?;
    grid.validate()?;
    let steps = grid.steps();
    let (mut lams, mut bvals, mut bders) = (Vec::new(), Vec::new(), Vec::new());
    let mut finest = (Vec::new(), grid.step);
    for (level, &step) in steps.iter().enumerate() {
        let disc = Discretization::new(eta, bc, step, grid.left_cut, n);
        let lam = disc.eigenvalue(n);
        let u = disc.samples(lam);
        if level + 1 == steps.len() {
            if !disc.isolated(n, lam, COLLISION_TOLERANCE) {
                let values = disc.eigenvalues(n + 1);
                let (lower, upper) = if n > 0 && lam - values[n - 1] <= COLLISION_TOLERANCE {
                    (n - 1, n)
                } else {
                    (n, n + 1)
                };
                return Err(Error::LevelCollision {
                    eta,
                    lower,
                    upper,
                    gap: values[upper] - values[lower],
                    tolerance: COLLISION_TOLERANCE,
                });
            }
            let mass = disc.far_mass(&u);
            if mass > FAR_CUT_MASS_LIMIT {
                return Err(Error::WindowTooShort {
                    eta,
                    level: n,
                    mass,
                    limit: FAR_CUT_MASS_LIMIT,
                });
            }
        }
        let (b, d) = disc.boundary_data(&u);
        lams.push(lam);
        bvals.push(b);
        bders.push(d);
        if level + 1 == steps.len() {
            finest = (u, step);
        }
    }
    let (lambda, lambda_error) = refine_far(eta, bc, n, richardson(&lams));
    let (boundary_value, boundary_derivative) = match bc.robin_alpha() {
        None => (0.0, richardson(&bders).0),
        Some(alpha) => {
            let b = richardson(&bvals).0;
            (b, -alpha * b)
        }
    };
    Ok(EigenPair {
        n,
        eta,
        bc,
        lambda,
        lambda_error,
        samples: finest.0,
        sample_step: finest.1,
        boundary_value,
        boundary_derivative,
    })
}

/// Richardson-extrapolated `n`-th eigenvalue without eigenvectors.
/// Returns the value and its extrapolation error estimate.
pub fn eigenvalue(
    eta: f64,
    bc: BoundaryCondition,
    n: usize,
    grid: &OscillatorGrid,
) -> Result<(f64, f64)> {
    check_eta(eta)?;
    validate_bc(bc)?;
    let values: Vec<f64> = grid
        .steps()
        .iter()
        .map(|&s| Discretization::new(eta, bc, s, grid.left_cut, n).eigenvalue(n))
        .collect();
    Ok(refine_far(eta, bc, n, richardson(&values)))
}

/// Swaps in the tunneling offset far inside the well, where the
/// finite-difference splitting drowns in discretization noise.
fn refine_far(eta: f64, bc: BoundaryCondition, n: usize, fd: (f64, f64)) -> (f64, f64) {
    if bc.robin_alpha().is_some_and(|a| a > 0.0) || eta < asymptotics::TUNNELING_MIN_ETA {
        return fd;
    }
    let bc = if bc.is_dirichlet() { BoundaryCondition::Dirichlet } else { BoundaryCondition::Neumann };
    match asymptotics::tunneling_offset(bc, n, eta) {
        Ok((off, err)) if off.abs() < TUNNELING_SWITCH => (2.0 * n as f64 + 1.0 + off, err),
        _ => fd,
    }
}

/// `n`-th eigenfunction on a single grid of spacing `step`, for quadrature over
/// the boundary layer. Returns the (unextrapolated) eigenvalue and samples.
pub(crate) fn eigenfunction_on_grid(
    eta: f64,
    bc: BoundaryCondition,
    n: usize,
    step: f64,
    left_cut: f64,
) -> (f64, Vec<f64>) {
    let disc = Discretization::new(eta, bc, step, left_cut, n);
    let lam = disc.eigenvalue(n);
    let u = disc.samples(lam);
    (lam, u)
}

/// Sampled eigenvalue curve `eta -> lambda_n(eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBranch {
    pub bc: BoundaryCondition,
    pub n: usize,
    pub eta_samples: Vec<f64>,
    pub lambda_samples: Vec<f64>,
    /// `(u(eta), u'(eta))` per sample.
    pub boundary_data: Vec<(f64, f64)>,
    pub provenance: OscillatorGrid,
}

impl EigenBranch {
    /// Analytic `d lambda / d eta` at every sample.
    pub fn dh_derivatives(&self) -> Vec<f64> {
        self.eta_samples
            .iter()
            .zip(&self.lambda_samples)
            .zip(&self.boundary_data)
            .map(|((&eta, &lam), &(u, du))| dh_formula(self.bc, eta, lam, u, du))
            .collect()
    }
}

/// `d lambda / d eta` from `lambda` and the boundary data `(u(eta), u'(eta))`.
pub fn dh_formula(bc: BoundaryCondition, eta: f64, lambda: f64, u: f64, du: f64) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => -du * du,
        BoundaryCondition::Neumann => (eta * eta - lambda) * u * u,
        BoundaryCondition::Robin { alpha } => (eta * eta - alpha * alpha - lambda) * u * u,
    }
}

/// Samples branch `n` on a strictly increasing `eta_grid`.
pub fn branch_sample(
    bc: BoundaryCondition,
    n: usize,
    eta_grid: &[f64],
    grid: &OscillatorGrid,
) -> Result<EigenBranch> {
    if eta_grid.is_empty() {
        return Err(invalid("eta_grid", "must be non-empty"));
    }
    for w in eta_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(invalid(
                "eta_grid",
                format!("must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
    }
    let pairs: Vec<EigenPair> = eta_grid
        .par_iter()
        .map(|&eta| {
eigenpair(eta, bc, n, grid)
        })
        .collect::<Result<_>>()?;
    let branch = EigenBranch {
        bc,
        n,
        eta_samples: eta_grid.to_vec(),
        lambda_samples: pairs.iter().map(|p| p.lambda).collect(),
        boundary_data: pairs
            .iter()
            .map(|p| (p.boundary_value, p.boundary_derivative))
            .collect(),
        provenance: *grid,
    };
    check_branch(&branch)?;
    Ok(branch)
}

fn check_branch(b: &EigenBranch) -> Result<()> {
    let n = b.n;
    let floor = match b.bc {
        BoundaryCondition::Dirichlet => 2.0 * n as f64 + 1.0,
        _ => (2.0 * n as f64 - 1.0).max(0.0),
    };
    let fail = |k: usize, reason: String| Error::BranchTracking {
        n,
        eta_left: b.eta_samples[k.saturating_sub(1)],
        eta_right: b.eta_samples[k],
        reason,
    };
    for (k, &lam) in b.lambda_samples.iter().enumerate() {
        // Far out the branch sits on the floor up to discretization noise.
        if !(lam > floor - 1e-9) {
            return Err(fail(k, format!("value {lam} not above lower bound {floor}")));
        }
    }
    let slopes = b.dh_derivatives();
    for k in 1..b.eta_samples.len() {
        let d_eta = b.eta_samples[k] - b.eta_samples[k - 1];
        let d_lam = b.lambda_samples[k] - b.lambda_samples[k - 1];
        if b.bc.is_dirichlet() && !(d_lam < 0.0) {
            // Far out on the plateau both values sit on 2n+1 to machine precision.
            let plateau = (b.lambda_samples[k] - floor).abs() < 1e-9;
            if !plateau {
                return Err(fail(k, format!("Dirichlet branch not decreasing ({d_lam:+.3e})")));
            }
        }
        let bound = 2.0 * slopes[k].abs().max(slopes[k - 1].abs()) * d_eta + 1e-6;
        if d_lam.abs() > bound {
            return Err(fail(
                k,
                format!("jump {d_lam:.3e} exceeds local Lipschitz bound {bound:.3e}"),
            ));
        }
    }
    Ok(())
}

/// `d lambda / d eta` from boundary data of a solved pair.
pub fn dh_derivative(pair: &EigenPair, eta: f64, bc: BoundaryCondition) -> Result<f64> {
    if pair.bc != bc {
        return Err(invalid("bc", format!("pair solved with {} not {bc}", pair.bc)));
    }
    if pair.eta != eta {
        return Err(invalid("eta", format!("pair solved at {} not {eta}", pair.eta)));
    }
    if !(pair.boundary_value.is_finite() && pair.boundary_derivative.is_finite()) {
        return Err(Error::MissingBoundaryData(format!(
            "pair n = {} at eta = {eta}",
            pair.n
        )));
    }
    Ok(dh_formula(
        bc,
        eta,
        pair.lambda,
        pair.boundary_value,
        pair.boundary_derivative,
    ))
}

/// Stationary point of a Neumann or Robin branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMinimum {
    pub n: usize,
    pub eta: f64,
    pub lambda_min: f64,
    /// Centered second difference of the branch at `eta`.
    pub curvature_fd: f64,
    /// `2 eta |u(eta)|^2`.
    pub curvature_dh: f64,
}

type MinimumKey = (String, usize, String);

fn minimum_memo() -> &'static Mutex<HashMap<MinimumKey, BranchMinimum>> {
    static MEMO: OnceLock<Mutex<HashMap<MinimumKey, BranchMinimum>>> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Minimum of a Neumann or Robin branch, found by bisection on the sign of
/// `eta^2 - alpha^2 - lambda` (positive beyond the minimum).
pub fn branch_minimum(
    bc: BoundaryCondition,
    n: usize,
    grid: &OscillatorGrid,
) -> Result<BranchMinimum> {
    let alpha = bc
        .robin_alpha()
        .ok_or_else(|| invalid("bc", "Dirichlet branches are monotone and have no minimum"))?;
    validate_bc(bc)?;
    let key = (bc.tag(), n, grid.fingerprint());
    if let Some(m) = minimum_memo().lock().expect("memo poisoned").get(&key) {
        return Ok(*m);
    }
    let sign_fn = |eta: f64| -> Result<f64> {
        let (lam, _) = eigenvalue(eta, bc, n, grid)?;
        Ok(lam + alpha * alpha - eta * eta)
    };
    let lo = 0.0;
    let hi = (alpha * alpha + 4.0 * n as f64 + 3.0).sqrt();
    let (f_lo, f_hi) = (sign_fn(lo)?, sign_fn(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Bracketing {
            lo,
            hi,
            reason: format!(
                "lambda + alpha^2 - eta^2 should change sign from + to -, got {f_lo:.3e} and {f_hi:.3e}"
            ),
        });
    }
    let eta = roots::bisect_predicate(|e| Ok(sign_fn(e)? > 0.0), lo, hi, 1e-12)?;
    let pair = eigenpair(eta, bc, n, grid)?;
    let delta = 1e-2;
    let (lp, _) = eigenvalue(eta + delta, bc, n, grid)?;
    let (lm, _) = eigenvalue(eta - delta, bc, n, grid)?;
    let curvature_fd = (lp - 2.0 * pair.lambda + lm) / (delta * delta);
    let result = BranchMinimum {
        n,
        eta,
        lambda_min: pair.lambda,
        curvature_fd,
        curvature_dh: 2.0 * eta * pair.boundary_value * pair.boundary_value,
    };
    minimum_memo()
        .lock()
        .expect("memo poisoned")
        .insert(key, result);
    Ok(result)
}

/// `(eta_n, lambda_N,n(eta_n))` for the Neumann branch `n`.
pub fn neumann_minimum(n: usize, grid: &OscillatorGrid) -> Result<BranchMinimum> {
    branch_minimum(BoundaryCondition::Neumann, n, grid)
}

/// All `eta` in `search` where `lambda_n(eta) = level`, in increasing order.
///
/// Dirichlet branches are monotone and have at most one crossing. Neumann and
/// Robin branches are split at their minimum into two monotone pieces.
pub fn branch_crossing(
    bc: BoundaryCondition,
    n: usize,
    level: f64,
    grid: &OscillatorGrid,
    search: (f64, f64),
) -> Result<Vec<f64>> {
    ensure_finite("level", level)?;
    ensure_finite("search.lo", search.0)?;
    ensure_finite("search.hi", search.1)?;
    let (lo, hi) = search;
    if !(lo < hi) {
        return Err(invalid("search", format!("empty interval [{lo}, {hi}]")));
    }
    let g = |eta: f64| -> Result<f64> { Ok(eigenvalue(eta, bc, n, grid)?.0 - level) };
    // Within solver accuracy of the level counts as a root.
    let edge_tol = 1e-9 * level.abs().max(1.0);
    let piece = |a: f64, b: f64, ga: f64, gb: f64| -> Result<Option<f64>> {
        if ga.abs() <= edge_tol {
            return Err(Error::RootAtBoundary { eta: a, lo, hi });
        }
        if gb.abs() <= edge_tol {
            return Err(Error::RootAtBoundary { eta: b, lo, hi });
        }
        if ga.signum() == gb.signum() {
            return Ok(None);
        }
        let root = roots::bracketed(g, a, b, 1e-11 * (1.0 + a.abs().max(b.abs())))?;
        Ok(Some(root))
    };
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if bc.is_dirichlet() {
        return Ok(piece(lo, hi, g_lo, g_hi)?.into_iter().collect());
    }
    let min = branch_minimum(bc, n, grid)?;
    if min.eta <= lo || min.eta >= hi {
        return Ok(piece(lo, hi, g_lo, g_hi)?.into_iter().collect());
    }
    let g_mid = min.lambda_min - level;
    if g_mid.abs() <= edge_tol {
        // Tangency at the minimum: a double root.
        return Ok(vec![min.eta]);
    }
    let mut out = Vec::new();
    out.extend(piece(lo, min.eta, g_lo, g_mid)?);
    out.extend(piece(min.eta, hi, g_mid, g_hi)?);
    Ok(out)
}

/// `lambda_n(eta; alpha)` over increasing nonnegative Robin coefficients.
pub fn robin_family(
    eta: f64,
    alphas: &[f64],
    n: usize,
    grid: &OscillatorGrid,
) -> Result<Vec<f64>> {
    for (i, &a) in alphas.iter().enumerate() {
        ensure_finite("alpha", a)?;
        if a < 0.0 {
            return Err(invalid("alphas", "must be nonnegative"));
        }
        if i > 0 && !(a > alphas[i - 1]) {
            return Err(invalid("alphas", "must be strictly increasing"));
        }
    }
    alphas
        .par_iter()
        .map(|&a| eigenvalue(eta, BoundaryCondition::robin(a)?, n, grid).map(|(l, _)| l))
        .collect()
}

/// Inflection points of a Neumann branch, located as sign changes of the second
/// difference over `[lo, hi]`. Exploratory output only.
pub fn neumann_inflections(
    n: usize,
    lo: f64,
    hi: f64,
    samples: usize,
    grid: &OscillatorGrid,
) -> Result<Vec<f64>> {
    if samples < 5 {
        return Err(invalid("samples", "need at least 5"));
    }
    let d = (hi - lo) / (samples - 1) as f64;
    let etas: Vec<f64> = (0..samples).map(|i| lo + i as f64 * d).collect();
    let vals: Vec<f64> = etas
        .par_iter()
        .map(|&e| eigenvalue(e, BoundaryCondition::Neumann, n, grid).map(|v| v.0))
        .collect::<Result<_>>()?;
    let second: Vec<f64> = (1..samples - 1)
        .map(|i| (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (d * d))
        .collect();
    let mut out = Vec::new();
    for i in 1..second.len() {
        let (a, b) = (second[i - 1], second[i]);
        // Ignore flat stretches where rounding noise dominates.
        let noise = 1e-9 / (d * d);
        if a.abs() > noise && b.abs() > noise && a.signum() != b.signum() {
            let t = a / (a - b);
            out.push(etas[i] + t * d);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> OscillatorGrid {
        OscillatorGrid::default()
    }

    #[test]
    fn values_at_zero() {
        let d = solve_spectrum(0.0, BoundaryCondition::Dirichlet, 2, &grid()).unwrap();
        for (k, p) in d.iter().enumerate() {
            assert!((p.lambda - (4 * k + 3) as f64).abs() < 1e-6, "{}", p.lambda);
        }
        let n = solve_spectrum(0.0, BoundaryCondition::Neumann, 2, &grid()).unwrap();
        for (k, p) in n.iter().enumerate() {
            assert!((p.lambda - (4 * k + 1) as f64).abs() < 1e-6, "{}", p.lambda);
        }
    }

    #[test]
    fn eigenpair_invariants() {
        let grid = grid();
        for bc in [
            BoundaryCondition::Dirichlet,
            BoundaryCondition::Neumann,
            BoundaryCondition::Robin { alpha: 1.5 },
        ] {
            for p in solve_spectrum(0.7, bc, 3, &grid).unwrap() {
                assert!((p.norm_squared() - 1.0).abs() < 1e-8);
                let first = p.samples.iter().find(|v| v.abs() > 1e-6).unwrap();
                assert!(*first > 0.0);
                match bc {
                    BoundaryCondition::Dirichlet => assert_eq!(p.boundary_value, 0.0),
                    BoundaryCondition::Neumann => assert_eq!(p.boundary_derivative, 0.0),
                    BoundaryCondition::Robin { alpha } => {
                        assert!((p.boundary_derivative + alpha * p.boundary_value).abs() < 1e-12)
                    }
                }
            }
        }
    }

    #[test]
    fn single_pair_matches_full_spectrum() {
        let g = grid();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Robin { alpha: 0.7 }] {
            let all = solve_spectrum(-1.3, bc, 3, &g).unwrap();
            let one = eigenpair(-1.3, bc, 3, &g).unwrap();
            assert!((all[3].lambda - one.lambda).abs() < 1e-12, "{} {}", all[3].lambda, one.lambda);
            assert!((all[3].boundary_derivative - one.boundary_derivative).abs() < 1e-9);
            let du = all[3]
                .samples
                .iter()
                .zip(&one.samples)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(du < 1e-9, "{du}");
        }
    }

    #[test]
    fn richardson_removes_leading_orders() {
        // f(s) = 1 + s^2 + s^4 sampled at s, s/2, s/4.
        let f = |s: f64| 1.0 + s * s + s.powi(4);
        let (v, _) = richardson(&[f(0.1), f(0.05), f(0.025)]);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn richardson_order_at_least_four() {
        let bc = BoundaryCondition::Dirichlet;
        let err = |s: f64| {
            let g = OscillatorGrid::new(s, 12.0, 2).unwrap();
            (eigenvalue(0.0, bc, 0, &g).unwrap().0 - 3.0).abs()
        };
        let (e1, e2) = (err(0.04), err(0.02));
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "observed order {order} ({e1:.3e} -> {e2:.3e})");
    }

    #[test]
    fn dirichlet_far_right_approaches_landau_level() {
        // The lowest branch decays to the first Landau level 2n + 1 = 1.
        let (lam, _) = eigenvalue(6.0, BoundaryCondition::Dirichlet, 0, &grid()).unwrap();
        assert!((lam - 1.0).abs() < 1e-9, "{lam}");
    }

    #[test]
    fn far_splitting_keeps_its_sign() {
        let g = grid();
        for n in 0..=3 {
            // Beyond eta = 6 the n = 0 splitting drops under one ulp of 1.
            let etas: Vec<f64> = (0..=40).map(|i| 3.5 + 0.0625 * i as f64).collect();
            let d: Vec<f64> = etas.iter().map(|&e| eigenvalue(e, BoundaryCondition::Dirichlet, n, &g).unwrap().0).collect();
            let nm: Vec<f64> = etas.iter().map(|&e| eigenvalue(e, BoundaryCondition::Neumann, n, &g).unwrap().0).collect();
            let level = 2.0 * n as f64 + 1.0;
            for i in 0..etas.len() {
                assert!(nm[i] < level && level < d[i], "n={n} eta={}", etas[i]);
                if i > 0 {
                    assert!(d[i] < d[i - 1], "n={n} eta={}", etas[i]);
                }
            }
        }
        // Where both methods resolve the splitting they agree.
        for (n, eta) in [(0, 4.0), (1, 4.5), (3, 5.0)] {
            let bc = BoundaryCondition::Dirichlet;
            let fd = richardson(
                &grid()
                    .steps()
                    .iter()
                    .map(|&s| Discretization::new(eta, bc, s, g.left_cut, n).eigenvalue(n))
                    .collect::<Vec<_>>(),
            )
            .0 - (2 * n + 1) as f64;
            let (t, _) = asymptotics::tunneling_offset(bc, n, eta).unwrap();
            assert!((fd / t - 1.0).abs() < 1e-3, "n={n}: {fd} vs {t}");
        }
    }

    #[test]
    fn robin_zero_is_neumann() {
        let g = grid();
        let (a, _) = eigenvalue(0.4, BoundaryCondition::Neumann, 1, &g).unwrap();
        let (b, _) = eigenvalue(0.4, BoundaryCondition::Robin { alpha: 0.0 }, 1, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn branch_sample_examples() {
        let g = grid();
        let b = branch_sample(BoundaryCondition::Dirichlet, 0, &[-1.0, 0.0, 1.0], &g).unwrap();
        assert!(b.lambda_samples[0] > b.lambda_samples[1]);
        assert!(b.lambda_samples[1] > b.lambda_samples[2]);
        assert!((b.lambda_samples[1] - 3.0).abs() < 1e-6);

        let b = branch_sample(BoundaryCondition::Neumann, 0, &[0.0], &g).unwrap();
        assert!((b.lambda_samples[0] - 1.0).abs() < 1e-6);

        let b = branch_sample(BoundaryCondition::Dirichlet, 1, &[0.0, 0.5, 1.0], &g).unwrap();
        assert!(b.lambda_samples.windows(2).all(|w| w[1] < w[0]));
        assert!(b.lambda_samples.iter().all(|&l| l > 3.0 && l <= 7.0 + 1e-6));
    }

    #[test]
    fn branch_sample_rejects_unsorted_grid() {
        assert!(branch_sample(BoundaryCondition::Neumann, 0, &[0.0, 0.0], &grid()).is_err());
        assert!(branch_sample(BoundaryCondition::Neumann, 0, &[], &grid()).is_err());
    }

    #[test]
    fn dh_requires_boundary_data() {
        let mut p = solve_spectrum(0.0, BoundaryCondition::Neumann, 0, &grid())
            .unwrap()
            .remove(0);
        p.boundary_value = f64::NAN;
        assert!(matches!(
            dh_derivative(&p, 0.0, BoundaryCondition::Neumann),
            Err(Error::MissingBoundaryData(_))
        ));
        assert!(dh_derivative(&p, 0.0, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn dirichlet_dh_matches_finite_difference_at_zero() {
        let g = grid();
        let bc = BoundaryCondition::Dirichlet;
        let p = solve_spectrum(0.0, bc, 0, &g).unwrap().remove(0);
        let analytic = dh_derivative(&p, 0.0, bc).unwrap();
        assert!(analytic < 0.0);
        let d = 1e-3;
        let fd = (eigenvalue(d, bc, 0, &g).unwrap().0 - eigenvalue(-d, bc, 0, &g).unwrap().0)
            / (2.0 * d);
        assert!(((analytic - fd) / fd).abs() < 1e-3, "{analytic} vs {fd}");
    }

    #[test]
    fn neumann_minimum_zero() {
        let m = neumann_minimum(0, &grid()).unwrap();
        assert!(m.eta > 0.0 && m.eta < 1.0);
        assert!((m.lambda_min - m.eta * m.eta).abs() < 1e-6);
        assert!(((m.curvature_fd - m.curvature_dh) / m.curvature_dh).abs() < 5e-2);
    }

    #[test]
    fn crossings() {
        let g = grid();
        let d = branch_crossing(BoundaryCondition::Dirichlet, 0, 3.0, &g, (-5.0, 5.0)).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].abs() < 1e-7, "{d:?}");
        let empty = branch_crossing(BoundaryCondition::Dirichlet, 0, 0.9, &g, (-5.0, 5.0)).unwrap();
        assert!(empty.is_empty());
        let two = branch_crossing(BoundaryCondition::Dirichlet, 0, 2.0, &g, (-5.0, 5.0)).unwrap();
        assert!(two.len() == 1 && two[0] > 0.0);
        let n = branch_crossing(BoundaryCondition::Neumann, 0, 1.0, &g, (-5.0, 3.0)).unwrap();
        // The right half of the branch tends to 1 from below without reaching it.
        assert_eq!(n.len(), 1);
        assert!(n.iter().any(|e| e.abs() < 1e-7), "{n:?}");
        let err = branch_crossing(BoundaryCondition::Dirichlet, 0, 3.0, &g, (0.0, 5.0));
        assert!(matches!(err, Err(Error::RootAtBoundary { .. })));
    }

    #[test]
    fn robin_examples() {
        let g = grid();
        let v = robin_family(0.0, &[0.0, 1.0, 1e4], 0, &g).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-6);
        assert!(v[1] > 1.0 && v[1] < 3.0);
        assert!(v[2] < 3.0 && v[2] > 2.99, "{}", v[2]);
        assert!(robin_family(0.0, &[1.0, 0.5], 0, &g).is_err());
        assert!(robin_family(0.0, &[-1.0], 0, &g).is_err());
    }

    #[test]
    fn fingerprint_tracks_every_parameter() {
        let a = OscillatorGrid::default();
        let mut b = a;
        b.left_cut = 13.0;
        let mut c = a;
        c.richardson_levels = 3;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.fingerprint(), OscillatorGrid::default().fingerprint());
    }
}
