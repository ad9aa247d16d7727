//! Half-plane model operator `h^2 D_1^2 + (h D_2 - mu x_1)^2` on `x_1 > 0`:
//! diagonal of the spectral projector, its boundary defect, and a brute-force
//! finite-difference eigenvalue counter on a periodic strip.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::{HermitianBand, Inertia};
use crate::edge::{edge_layer, EdgeLayer, QuadOptions};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::oscillator::OscillatorGrid;
use crate::params::{BoundaryCondition, ModelParams, PotentialField};

/// Point query for the projector diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    /// Distance from the boundary.
    pub x1: f64,
    pub tau: f64,
    pub params: ModelParams,
    pub bc: BoundaryCondition,
}

impl KernelQuery {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("x1", self.x1)?;
        ensure_finite("tau", self.tau)?;
        if self.x1 < 0.0 {
            return Err(invalid("x1", "must be nonnegative"));
        }
        Ok(())
    }
}

/// `e(x, x, tau)` as a function of `x1`, built once per `(tau, params, bc)`.
#[derive(Debug, Clone)]
pub struct KernelProfile {
    pub tau: f64,
    pub params: ModelParams,
    pub bc: BoundaryCondition,
    /// `None` below the spectrum.
    layer: Option<EdgeLayer>,
}

impl KernelProfile {
    pub fn new(
        tau: f64,
        params: ModelParams,
        bc: BoundaryCondition,
        grid: &OscillatorGrid,
        quad: &QuadOptions,
    ) -> Result<Self> {
        ensure_finite("tau", tau)?;
        let layer = if tau > 0.0 {
            Some(edge_layer(bc, tau / params.hbar_large(), grid, quad)?)
        } else {
            None
        };
        Ok(Self {
            tau,
            params,
            bc,
            layer,
        })
    }

    /// `(2 pi)^-1 (mu / h)`, the density of one fully occupied Landau level.
    fn unit(&self) -> f64 {
        1.0 / (2.0 * PI * self.params.hbar_small())
    }

    /// Projector diagonal at distance `x1` from the boundary.
    pub fn density(&self, x1: f64) -> f64 {
        match &self.layer {
            None => 0.0,
            Some(l) => self.unit() * l.density(x1 / self.params.hbar_half()),
        }
    }

    /// Bulk value `h^-2 N^MW(tau, mu h)` with the boundary condition's convention.
    pub fn bulk(&self) -> f64 {
        match &self.layer {
            None => 0.0,
            Some(l) => self.unit() * l.count as f64,
        }
    }

    pub fn layer(&self) -> Option<&EdgeLayer> {
        self.layer.as_ref()
    }
}

/// Diagonal `e(x, x, tau)` of the spectral projector; independent of `x2`.
pub fn kernel_density(q: &KernelQuery, grid: &OscillatorGrid, quad: &QuadOptions) -> Result<f64> {
    q.validate()?;
    Ok(KernelProfile::new(q.tau, q.params, q.bc, grid, quad)?.density(q.x1))
}

/// `int_0^inf (e(x, x, tau) - h^-2 N^MW) dx1` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceDefect {
    pub value: f64,
    pub error: f64,
}

pub fn trace_defect(
    tau: f64,
    params: &ModelParams,
    bc: BoundaryCondition,
    grid: &OscillatorGrid,
    quad: &QuadOptions,
) -> Result<TraceDefect> {
    let profile = KernelProfile::new(tau, *params, bc, grid, quad)?;
    let Some(layer) = profile.layer() else {
        return Ok(TraceDefect {
            value: 0.0,
            error: 0.0,
        });
    };
    // dx1 = hbar_half dy.
    let scale = profile.unit() * params.hbar_half();
    let (v1, _) = layer.defect_integral(layer.x_first);
    let (v2, disc) = layer.defect_integral(layer.x_max);
    let tail = (v2 - v1).abs();
    if tail > quad.tail_rel_tol * v2.abs().max(1e-3) {
        return Err(Error::TailNotConverged(format!(
            "trace defect changed by {tail:.3e} when the cutoff doubled to {:.2} magnetic lengths",
            layer.x_max
        )));
    }
    Ok(TraceDefect {
        value: scale * v2,
        error: scale * (layer.gk_error + tail + disc),
    })
}

/// Samples of `e(x, x, tau) - h^-2 N^MW` on `x1_grid`.
pub fn defect_profile(
    tau: f64,
    params: &ModelParams,
    bc: BoundaryCondition,
    x1_grid: &[f64],
    grid: &OscillatorGrid,
    quad: &QuadOptions,
) -> Result<Vec<(f64, f64)>> {
    for w in x1_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(invalid("x1_grid", "must be strictly increasing"));
        }
    }
    if x1_grid.first().is_some_and(|&x| x < 0.0) {
        return Err(invalid("x1_grid", "must be nonnegative"));
    }
    let profile = KernelProfile::new(tau, *params, bc, grid, quad)?;
    let bulk = profile.bulk();
    Ok(x1_grid.iter().map(|&x| (x, profile.density(x) - bulk)).collect())
}

/// Default cap on oracle unknowns.
pub const ORACLE_CAP: usize = 40_000;

/// Breakdown retry offset.
pub const ORACLE_SHIFT: f64 = 1e-12;

/// Finite-difference problem on `[0, L1] x (R / L2 Z)`: `bc` at `x1 = 0`,
/// Dirichlet at `x1 = L1`, periodic in `x2`.
#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub l1: f64,
    pub l2: f64,
    /// Intervals across `[0, L1]`.
    pub n1: usize,
    /// Points around the period.
    pub n2: usize,
    pub bc: BoundaryCondition,
    /// Must be `L2`-periodic in `x2`.
    pub v: PotentialField,
    pub params: ModelParams,
    pub cap: usize,
}

impl OracleProblem {
    pub fn step1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn step2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    /// Rows of unknowns in `x1`: Dirichlet drops the boundary row.
    pub fn layers(&self) -> usize {
        if self.bc.is_dirichlet() {
            self.n1 - 1
        } else {
            self.n1
        }
    }

    pub fn unknowns(&self) -> usize {
        self.layers() * self.n2
    }

    fn validate(&self) -> Result<()> {
        ensure_finite("L1", self.l1)?;
        ensure_finite("L2", self.l2)?;
        if !(self.l1 > 0.0 && self.l2 > 0.0) {
            return Err(invalid("extents", "L1 and L2 must be positive"));
        }
        if self.n1 < 2 || self.n2 < 3 {
            return Err(invalid("grid", "need n1 >= 2 and n2 >= 3"));
        }
        if self.unknowns() > self.cap {
            return Err(Error::CapExceeded {
                unknowns: self.unknowns(),
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Assembles the Hermitian band matrix.
    ///
    /// `(h D_2 - mu x1)^2` uses the gauge-covariant (Peierls) centered
    /// difference, whose symbol `2 (h/s2)^2 (1 - cos(k s2 - mu x1 s2 / h))`
    /// keeps the Landau levels in place for every `x1`. The Neumann/Robin
    /// ghost row is symmetrized as in the one-dimensional operator.
    pub fn assemble(&self) -> Result<HermitianBand> {
        self.validate()?;
        let h = self.params.h();
        let mu = self.params.mu();
        let (s1, s2) = (self.step1(), self.step2());
        let (c1, c2) = (h * h / (s1 * s1), h * h / (s2 * s2));
        let n2 = self.n2;
        let first = if self.bc.is_dirichlet() { 1 } else { 0 };
        let layers = self.layers();
        let mut m = HermitianBand::new(layers * n2, n2);
        let robin = self
            .bc
            .robin_alpha()
            .map(|a| 2.0 * h * h * a / (self.params.hbar_half() * s1));
        for r in 0..layers {
            let i1 = r + first;
            let x1 = i1 as f64 * s1;
            let phase = Complex64::from_polar(1.0, -mu * x1 * s2 / h);
            for i2 in 0..n2 {
                let p = r * n2 + i2;
                let x2 = i2 as f64 * s2;
                let v = self.v.value(x1, x2);
                ensure_finite("V", v)?;
                let mut d = 2.0 * c1 + 2.0 * c2 + v;
                if i1 == 0 {
                    d += robin.unwrap_or(0.0);
                }
                m.add(p, p, Complex64::new(d, 0.0))?;
                m.add(p, r * n2 + (i2 + 1) % n2, -c2 * phase)?;
                if r + 1 < layers {
                    let w = if i1 == 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                    m.add(p, p + n2, Complex64::new(-w * c1, 0.0))?;
                }
            }
        }
        Ok(m)
    }
}

/// Eigenvalue count with the shift actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCount {
    pub count: usize,
    pub unknowns: usize,
    /// Offset added to `tau` after a factorization breakdown.
    pub shift: f64,
}

/// Number of eigenvalues `<= tau` of the discretized operator, from the
/// inertia of `M - tau I`.
///
/// A vanishing pivot triggers one retry at `tau + 1e-12`, then one at
/// `tau - 1e-12`; the count is reported at the shifted level.
pub fn oracle_count_2d(p: &OracleProblem, tau: f64) -> Result<OracleCount> {
    ensure_finite("tau", tau)?;
    let m = p.assemble()?;
    let unknowns = m.dim();
    let mut last = 0;
    for shift in [0.0, ORACLE_SHIFT, -ORACLE_SHIFT] {
        match m.count_below(tau + shift) {
            Inertia::Negative(count) => {
                return Ok(OracleCount {
                    count,
                    unknowns,
                    shift,
                })
            }
            Inertia::Breakdown(k) => last = k,
        }
    }
    Err(Error::FactorizationBreakdown {
        index: last,
        shift: ORACLE_SHIFT,
    })
}

/// Several oracle counts, one factorization per worker.
pub fn oracle_counts(problems: &[OracleProblem], tau: f64) -> Vec<Result<OracleCount>> {
    problems.par_iter().map(|p| oracle_count_2d(p, tau)).collect()
}
