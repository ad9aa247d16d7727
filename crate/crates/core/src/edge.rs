//! Boundary-layer density `G(x1) = sum_j int_{S_j} u_j(x1, eta)^2 d eta` in
//! oscillator units, where `S_j = {eta : lambda_j(eta) < L}`.
//!
//! Shared by the eigenfunction form of the boundary correction and the model
//! kernel. `G - count` decays to zero away from the boundary, with `count` the
//! number of Landau levels below `L` under the boundary condition's
//! Heaviside convention.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::oscillator::{self, branch_crossing, OscillatorGrid};
use crate::params::{step, BoundaryCondition};
use crate::quadrature::{kronrod_nodes, kronrod_weights, trapezoid};

/// Sublevel set of one branch: `(lo, hi)` with `hi = +inf` for unbounded sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sublevel {
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Number of Landau levels `2j+1` below `level` under the bc's convention.
pub fn landau_count(bc: BoundaryCondition, level: f64) -> usize {
    let conv = bc.bulk_convention();
    let mut j = 0usize;
    while step(level - (2 * j + 1) as f64, conv) == 1 {
        j += 1;
    }
    j
}

/// Moves `hi` right until `lambda_j(hi)` is on the requested side of `level`.
fn push_right<F: Fn(f64) -> bool>(
    bc: BoundaryCondition,
    j: usize,
    level: f64,
    grid: &OscillatorGrid,
    start: f64,
    done: F,
) -> Result<f64> {
    let mut hi = start;
    for _ in 0..40 {
        let (lam, _) = oscillator::eigenvalue(hi, bc, j, grid)?;
        if done(lam) && (lam - level).abs() > 1e-9 * level.max(1.0) {
            return Ok(hi);
        }
        hi += 1.0;
    }
    Err(Error::Bracketing {
        lo: start,
        hi,
        reason: format!(
            "crossing search window exhausted for branch {j} at level {level}; \
             the level is too close to the Landau threshold {} to resolve",
            2 * j + 1
        ),
    })
}

/// Sublevel sets `{lambda_j < level}` for every branch that has one.
///
/// Crossings come from [`branch_crossing`] on fresh eigensolves.
pub fn sublevel_sets(
    bc: BoundaryCondition,
    level: f64,
    grid: &OscillatorGrid,
) -> Result<Vec<Sublevel>> {
    if !(level > 0.0) {
        return Ok(Vec::new());
    }
    // lambda_j(eta) > eta^2 for eta < 0, so every crossing is right of -sqrt(level).
    let lo = -level.sqrt() - 1.0;
    let mut out = Vec::new();
    for j in 0.. {
        let landau = (2 * j + 1) as f64;
        if bc.is_dirichlet() {
            if level <= landau {
                break;
            }
            let hi = push_right(bc, j, level, grid, 2.0_f64.max(landau.sqrt() + 1.0), |l| {
                l < level
            })?;
            let roots = branch_crossing(bc, j, level, grid, (lo, hi))?;
            if roots.len() != 1 {
                return Err(Error::BranchTracking {
                    n: j,
                    eta_left: lo,
                    eta_right: hi,
                    reason: format!("expected one crossing of a monotone branch, found {}", roots.len()),
                });
            }
            out.push(Sublevel {
                j,
                lo: roots[0],
                hi: f64::INFINITY,
            });
        } else {
            // Neumann-type branches dip below 2j+1 with minimum in (2j-1, 2j+1).
            let min = oscillator::branch_minimum(bc, j, grid)?;
            // Minima increase with j, so no deeper branch dips below the level either.
            if level <= min.lambda_min {
                break;
            }
            if level >= landau {
                let roots = branch_crossing(bc, j, level, grid, (lo, min.eta))?;
                if roots.len() != 1 {
                    return Err(Error::BranchTracking {
                        n: j,
                        eta_left: lo,
                        eta_right: min.eta,
                        reason: format!("expected one left crossing, found {}", roots.len()),
                    });
                }
                out.push(Sublevel {
                    j,
                    lo: roots[0],
                    hi: f64::INFINITY,
                });
            } else {
                let hi = push_right(bc, j, level, grid, min.eta + 1.0, |l| l > level)?;
                let roots = branch_crossing(bc, j, level, grid, (lo, hi))?;
                if roots.len() != 2 {
                    return Err(Error::BranchTracking {
                        n: j,
                        eta_left: lo,
                        eta_right: hi,
                        reason: format!("expected two crossings around the minimum, found {}", roots.len()),
                    });
                }
                out.push(Sublevel {
                    j,
                    lo: roots[0],
                    hi: roots[1],
                });
            }
        }
    }
    Ok(out)
}

/// Quadrature controls for the boundary-layer integrals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadOptions {
    /// Fine `x1` step for eigenfunctions; the coarse pass uses twice this.
    pub step: f64,
    /// `X = sqrt(level) + x_margin` is the first `x1` cutoff (pushed further out
    /// when the finite-difference zone reaches beyond it); the tail check doubles it.
    pub x_margin: f64,
    /// Target Gauss–Kronrod error for `int_0^X |G15 - G7| dx1`, per branch.
    pub gk_tol: f64,
    /// Relative change allowed when the `x1` cutoff is doubled.
    pub tail_rel_tol: f64,
    pub max_rounds: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            step: 1e-2,
            x_margin: 10.0,
            gk_tol: 1e-9,
            tail_rel_tol: 1e-6,
            max_rounds: 12,
        }
    }
}

impl QuadOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.05) {
            return Err(invalid("quad.step", "must lie in (0, 0.05]"));
        }
        if !(self.x_margin >= 4.0) {
            return Err(invalid("quad.x_margin", "must be >= 4"));
        }
        if !(self.gk_tol > 0.0 && self.tail_rel_tol > 0.0) {
            return Err(invalid("quad", "tolerances must be positive"));
        }
        Ok(())
    }
}

/// Boundary-layer density on a uniform `x1` grid.
#[derive(Debug, Clone)]
pub struct EdgeLayer {
    pub level: f64,
    /// Fine step `s`; `fine[i] = G(i s)`.
    pub step: f64,
    pub fine: Vec<f64>,
    /// `coarse[i] = G(2 i s)` from eigenfunctions on the `2s` grid.
    pub coarse: Vec<f64>,
    pub count: usize,
    /// First and doubled `x1` cutoffs.
    pub x_first: f64,
    pub x_max: f64,
    pub eta_max: f64,
    pub gk_error: f64,
    pub sublevels: Vec<Sublevel>,
}

impl EdgeLayer {
    /// Richardson-combined `int_0^x (G - count) dx1`, with `x` snapped to the coarse grid.
    pub fn defect_integral(&self, x: f64) -> (f64, f64) {
        let m = ((x / (2.0 * self.step)).round() as usize).min(self.coarse.len() - 1);
        let c = self.count as f64;
        let fine: Vec<f64> = self.fine[..=2 * m].iter().map(|g| g - c).collect();
        let coarse: Vec<f64> = self.coarse[..=m].iter().map(|g| g - c).collect();
        let vf = trapezoid(&fine, self.step);
        let vc = trapezoid(&coarse, 2.0 * self.step);
        let v = (4.0 * vf - vc) / 3.0;
        (v, (v - vf).abs())
    }

    /// Richardson-combined `G` at coarse node `i`.
    pub fn density_at_node(&self, i: usize) -> f64 {
        (4.0 * self.fine[2 * i] - self.coarse[i]) / 3.0
    }

    /// Cubic interpolation of the Richardson-combined `G` at `x1`; beyond the
    /// grid `G` has converged to `count`.
    pub fn density(&self, x1: f64) -> f64 {
        let h = 2.0 * self.step;
        let n = self.coarse.len();
        let t = x1 / h;
        if t >= (n - 1) as f64 {
            return self.count as f64;
        }
        let i0 = t.floor() as usize;
        let f = t - i0 as f64;
        if f == 0.0 {
            return self.density_at_node(i0);
        }
        // Clamp the 4-point stencil inside the grid.
        let base = i0.saturating_sub(1).min(n.saturating_sub(4));
        let xs: Vec<f64> = (0..4).map(|k| (base + k) as f64).collect();
        let ys: Vec<f64> = (0..4).map(|k| self.density_at_node(base + k)).collect();
        let mut acc = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (t - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += w * ys[a];
        }
        acc
    }
}

struct Panel {
    a: f64,
    b: f64,
    fine: Vec<f64>,
    coarse: Vec<f64>,
    error: f64,
}

/// Normalized Hermite function `psi_j(t)`, eigenfunction of `-d^2/dt^2 + t^2`.
pub(crate) fn hermite_function(j: usize, t: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    for k in 0..j {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * t * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Distance from the boundary beyond which branch `j` no longer feels it:
/// boundary effects are of order `exp(-(eta - sqrt(2j+1))^2) < e^-64`.
fn free_threshold(j: usize) -> f64 {
    (2.0 * j as f64 + 1.0).sqrt() + 8.0
}

fn eigenfunction_samples(
    bc: BoundaryCondition,
    j: usize,
    eta: f64,
    step: f64,
    len: usize,
    left_cut: f64,
) -> Vec<f64> {
    if eta >= free_threshold(j) {
        // psi_j(t)^2 < e^-60 beyond |t| = sqrt(2j+1) + 11.
        let reach = (2.0 * j as f64 + 1.0).sqrt() + 11.0;
        let mut u: Vec<f64> = (0..len)
            .map(|i| {
                let t = i as f64 * step - eta;
                if t.abs() > reach {
                    0.0
                } else {
                    hermite_function(j, t)
                }
            })
            .collect();
        if bc.is_dirichlet() {
            // The Hermite tail there is below e^-32; keep the condition exact.
            u[0] = 0.0;
        }
        u
    } else {
        oscillator::eigenfunction_on_grid(eta, bc, j, step, left_cut).1
    }
}

fn eval_panel(
    bc: BoundaryCondition,
    j: usize,
    a: f64,
    b: f64,
    s: f64,
    m_fine: usize,
    left_cut: f64,
) -> Panel {
    let nodes = kronrod_nodes(a, b);
    let (wk, wg) = kronrod_weights(a, b);
    let mut fine = vec![0.0; m_fine + 1];
    let mut gauss = vec![0.0; m_fine + 1];
    let mut coarse = vec![0.0; m_fine / 2 + 1];
    for k in 0..15 {
        let u = eigenfunction_samples(bc, j, nodes[k], s, m_fine + 1, left_cut);
        let uc = eigenfunction_samples(bc, j, nodes[k], 2.0 * s, m_fine / 2 + 1, left_cut);
        for (i, v) in u.iter().take(m_fine + 1).enumerate() {
            let sq = v * v;
            fine[i] += wk[k] * sq;
            gauss[i] += wg[k] * sq;
        }
        for (i, v) in uc.iter().take(coarse.len()).enumerate() {
            coarse[i] += wk[k] * v * v;
        }
    }
    let diff: Vec<f64> = fine.iter().zip(&gauss).map(|(f, g)| (f - g).abs()).collect();
    let error = trapezoid(&diff, s);
    Panel {
        a,
        b,
        fine,
        coarse,
        error,
    }
}

/// Builds the boundary-layer density for `level = tau / hbar`.
pub fn edge_layer(
    bc: BoundaryCondition,
    level: f64,
    grid: &OscillatorGrid,
    quad: &QuadOptions,
) -> Result<EdgeLayer> {
    quad.validate()?;
    let s = quad.step;
    let sq = level.max(0.0).sqrt();
    let sublevels = sublevel_sets(bc, level, grid)?;
    // Finite-difference eigenfunctions (eta below the free threshold) leave a
    // small Richardson residual in G up to this distance. It integrates to zero
    // over its full extent, so the first cutoff must lie beyond it.
    let fd_reach = sublevels
        .iter()
        .map(|sub| free_threshold(sub.j) + (2.0 * sub.j as f64 + 1.0).sqrt() + 6.0)
        .fold(0.0, f64::max);
    let x_first = (sq + quad.x_margin).max(fd_reach);
    let x_max = 2.0 * x_first;
    // Beyond this, u_j(x1, eta) for x1 <= x_max is below e^-32.
    let eta_max = x_max + (2.0 * level.max(0.0) + 1.0).sqrt() + 8.0;
    let m_coarse = (x_max / (2.0 * s)).ceil() as usize;
    let m_fine = 2 * m_coarse;
    let count = landau_count(bc, level);
    let mut fine = vec![0.0; m_fine + 1];
    let mut coarse = vec![0.0; m_coarse + 1];
    let mut gk_error = 0.0;
    for sub in &sublevels {
        let a = sub.lo;
        let b = sub.hi.min(eta_max);
        if !(b > a) {
            continue;
        }
        let mut cuts = vec![a];
        let free = free_threshold(sub.j);
        if a < free && free < b {
            cuts.push(free);
        }
        cuts.push(b);
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for c in cuts.windows(2) {
            let n0 = ((c[1] - c[0]).ceil() as usize).max(1);
            let w = (c[1] - c[0]) / n0 as f64;
            intervals.extend((0..n0).map(|k| (c[0] + k as f64 * w, c[0] + (k + 1) as f64 * w)));
        }
        let mut done: Vec<Panel> = Vec::new();
        for round in 0..=quad.max_rounds {
            let panels: Vec<Panel> = intervals
                .par_iter()
                .map(|&(pa, pb)| eval_panel(bc, sub.j, pa, pb, s, m_fine, grid.left_cut))
                .collect();
            let accepted_err: f64 = done.iter().map(|p| p.error).sum();
            let pending_err: f64 = panels.iter().map(|p| p.error).sum();
            if accepted_err + pending_err <= quad.gk_tol || round == quad.max_rounds {
                done.extend(panels);
                break;
            }
            intervals.clear();
            for p in panels {
                let share = quad.gk_tol * (p.b - p.a) / (b - a);
                if p.error > share {
                    let mid = 0.5 * (p.a + p.b);
                    intervals.push((p.a, mid));
                    intervals.push((mid, p.b));
                } else {
                    done.push(p);
                }
            }
            if intervals.is_empty() {
                break;
            }
        }
        // Deterministic reduction order.
        done.sort_by(|x, y| x.a.total_cmp(&y.a));
        for p in &done {
            for (acc, v) in fine.iter_mut().zip(&p.fine) {
                *acc += v;
            }
            for (acc, v) in coarse.iter_mut().zip(&p.coarse) {
                *acc += v;
            }
            gk_error += p.error;
        }
    }
    Ok(EdgeLayer {
        level,
        step: s,
        fine,
        coarse,
        count,
        x_first,
        x_max,
        eta_max,
        gk_error,
        sublevels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landau_counts_follow_conventions() {
        assert_eq!(landau_count(BoundaryCondition::Dirichlet, 3.0), 1);
        assert_eq!(landau_count(BoundaryCondition::Neumann, 3.0), 2);
        assert_eq!(landau_count(BoundaryCondition::Dirichlet, 0.5), 0);
        assert_eq!(landau_count(BoundaryCondition::Neumann, 5.5), 3);
    }

    #[test]
    fn sublevels_at_threshold() {
        let g = OscillatorGrid::default();
        let d = sublevel_sets(BoundaryCondition::Dirichlet, 3.0, &g).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].lo.abs() < 1e-8);
        let n = sublevel_sets(BoundaryCondition::Neumann, 0.3, &g).unwrap();
        assert!(n.is_empty());
        let n = sublevel_sets(BoundaryCondition::Neumann, 0.9, &g).unwrap();
        assert_eq!(n.len(), 1);
        assert!(n[0].hi.is_finite() && n[0].lo < n[0].hi);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let s = 1e-2;
        for j in 0..6 {
            for k in 0..6 {
                let ip: f64 = (-1500..=1500)
                    .map(|i| hermite_function(j, i as f64 * s) * hermite_function(k, i as f64 * s))
                    .sum::<f64>()
                    * s;
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "{j} {k} {ip}");
            }
        }
    }

    #[test]
    fn free_samples_match_eigensolve() {
        let (j, s) = (2, 1e-2);
        let eta = free_threshold(j) + 0.3;
        let fd = oscillator::eigenfunction_on_grid(eta, BoundaryCondition::Dirichlet, j, s, 12.0).1;
        let m = (eta / s) as usize;
        // The finite-difference eigenvector is O(s^2) accurate; allow either sign.
        let sign = fd[m].signum() * hermite_function(j, m as f64 * s - eta).signum();
        for i in (0..2 * m).step_by(37) {
            let h = hermite_function(j, i as f64 * s - eta);
            assert!((fd[i] - sign * h).abs() < 1e-4, "i={i}: {} vs {h}", fd[i]);
        }
    }

    #[test]
    fn density_converges_to_count() {
        let g = OscillatorGrid::default();
        let q = QuadOptions::default();
        let layer = edge_layer(BoundaryCondition::Dirichlet, 5.0, &g, &q).unwrap();
        assert_eq!(layer.count, 2);
        assert_eq!(layer.density(0.0), 0.0);
        let far = layer.density(layer.x_first);
        assert!((far - 2.0).abs() < 1e-6, "{far}");
    }
}
