//! Shared domain types: scaling parameters, boundary conditions, step-function
//! conventions and the reduced potential `W = (tau - V) / F`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};

/// Field strength `mu` and semiclassical parameter `h`.
///
/// Three effective Planck constants are derived from them:
/// `hbar_large = mu h` sets the spectral scale of Landau levels,
/// `hbar_small = h / mu` sets the kernel scale, and
/// `hbar_half = sqrt(h / mu)` is the magnetic length (boundary-layer width).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    mu: f64,
    h: f64,
}

impl ModelParams {
    pub fn new(mu: f64, h: f64) -> Result<Self> {
        ensure_finite("mu", mu)?;
        ensure_finite("h", h)?;
        if mu < 1.0 {
            return Err(invalid("mu", format!("must be >= 1, got {mu}")));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(invalid("h", format!("must lie in (0, 1], got {h}")));
        }
        Ok(Self { mu, h })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `mu h`, the Landau-level spacing scale.
    pub fn hbar_large(&self) -> f64 {
        self.mu * self.h
    }

    /// `h / mu`.
    pub fn hbar_small(&self) -> f64 {
        self.h / self.mu
    }

    /// `sqrt(h / mu)`, the magnetic length.
    pub fn hbar_half(&self) -> f64 {
        (self.h / self.mu).sqrt()
    }

    /// `(hbar_large, hbar_small, hbar_half)`.
    pub fn derive_constants(&self) -> (f64, f64, f64) {
        (self.hbar_large(), self.hbar_small(), self.hbar_half())
    }
}

/// Condition imposed at the boundary of the half-line oscillator.
///
/// Robin means `u' + alpha u = 0` at the boundary point, with the derivative
/// taken towards the boundary; `alpha = 0` is Neumann.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Robin { alpha: f64 },
}

impl BoundaryCondition {
    pub fn robin(alpha: f64) -> Result<Self> {
        ensure_finite("alpha", alpha)?;
        if alpha < 0.0 {
            return Err(invalid("alpha", format!("must be >= 0, got {alpha}")));
        }
        Ok(Self::Robin { alpha })
    }

    /// Robin coefficient for the ghost-point family (Neumann is `alpha = 0`).
    pub fn robin_alpha(&self) -> Option<f64> {
        match *self {
            Self::Dirichlet => None,
            Self::Neumann => Some(0.0),
            Self::Robin { alpha } => Some(alpha),
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Dirichlet)
    }

    /// Step-function convention used when subtracting the bulk Landau count.
    ///
    /// Dirichlet branches approach `2j+1` from above, so a threshold level
    /// is never reached and the left-continuous step applies. Neumann and
    /// Robin branches dip below `2j+1` and reach it from below, which calls for
    /// the right-continuous step.
    pub fn bulk_convention(&self) -> HeavisideConvention {
        match self {
            Self::Dirichlet => HeavisideConvention::LeftContinuous,
            _ => HeavisideConvention::RightContinuous,
        }
    }

    /// Short stable tag used in cache keys and file names.
    pub fn tag(&self) -> String {
        match *self {
            Self::Dirichlet => "dirichlet".into(),
            Self::Neumann => "neumann".into(),
            Self::Robin { alpha } => format!("robin:{alpha:.17e}"),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Dirichlet => f.write_str("dirichlet"),
            Self::Neumann => f.write_str("neumann"),
            Self::Robin { alpha } => write!(f, "robin:{alpha}"),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "dirichlet" | "d" => Ok(Self::Dirichlet),
            "neumann" | "n" => Ok(Self::Neumann),
            other => {
                if let Some(rest) = other.strip_prefix("robin:") {
                    let alpha: f64 = rest
                        .parse()
                        .map_err(|_| invalid("bc", format!("bad Robin coefficient `{rest}`")))?;
                    Self::robin(alpha)
                } else {
                    Err(invalid(
                        "bc",
                        format!("expected dirichlet, neumann or robin:ALPHA, got `{s}`"),
                    ))
                }
            }
        }
    }
}

/// Value of the unit step at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeavisideConvention {
    /// `theta(0) = 0`.
    LeftContinuous,
    /// `theta(0) = 1`.
    RightContinuous,
}

/// Unit step with an explicit convention at zero.
pub fn heaviside(x: f64, conv: HeavisideConvention) -> Result<u8> {
    ensure_finite("x", x)?;
    Ok(step(x, conv))
}

/// Unchecked variant for inner loops; `x` must be finite.
#[inline]
pub(crate) fn step(x: f64, conv: HeavisideConvention) -> u8 {
    match conv {
        HeavisideConvention::LeftContinuous => u8::from(x > 0.0),
        HeavisideConvention::RightContinuous => u8::from(x >= 0.0),
    }
}

type ScalarFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, f64) -> [f64; 2] + Send + Sync;
type HessFn = dyn Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync;

/// Default finite-difference step for derivatives of a [`PotentialField`].
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Reduced potential `W(x1, x2) = (tau - V(x)) / F(x)` with optional analytic
/// derivatives.
///
/// Missing derivatives fall back to fourth-order central differences.
#[derive(Clone)]
pub struct PotentialField {
    value: Arc<ScalarFn>,
    gradient: Option<Arc<GradFn>>,
    hessian: Option<Arc<HessFn>>,
    fd_step: f64,
    label: String,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialField")
            .field("label", &self.label)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl PotentialField {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(f),
            gradient: None,
            hessian: None,
            fd_step: DEFAULT_FD_STEP,
            label: "custom".into(),
        }
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(
        mut self,
        g: impl Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(g));
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `W = c`.
    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c)
            .with_gradient(|_, _| [0.0, 0.0])
            .with_hessian(|_, _| [[0.0, 0.0], [0.0, 0.0]])
            .with_label(format!("constant({c})"))
    }

    /// `W = c + g1 x1 + g2 x2`.
    pub fn linear(c: f64, g1: f64, g2: f64) -> Self {
        Self::new(move |x1, x2| c + g1 * x1 + g2 * x2)
            .with_gradient(move |_, _| [g1, g2])
            .with_hessian(|_, _| [[0.0, 0.0], [0.0, 0.0]])
            .with_label(format!("linear({c}, {g1}, {g2})"))
    }

    /// `W = c + g1 x1 + g2 x2 + k11 x1^2 / 2 + k12 x1 x2 + k22 x2^2 / 2`.
    pub fn quadratic(c: f64, g1: f64, g2: f64, k11: f64, k12: f64, k22: f64) -> Self {
        Self::new(move |x1, x2| {
            c + g1 * x1 + g2 * x2 + 0.5 * k11 * x1 * x1 + k12 * x1 * x2 + 0.5 * k22 * x2 * x2
        })
        .with_gradient(move |x1, x2| [g1 + k11 * x1 + k12 * x2, g2 + k12 * x1 + k22 * x2])
        .with_hessian(move |_, _| [[k11, k12], [k12, k22]])
        .with_label(format!("quadratic({c}, {g1}, {g2}, {k11}, {k12}, {k22})"))
    }

    /// Builds `W = (tau - V) / F` from a potential and a field-strength profile.
    pub fn from_potential(
        tau: f64,
        v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(move |x1, x2| (tau - v(x1, x2)) / f(x1, x2)).with_label("from_potential")
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    #[inline]
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        (self.value)(x1, x2)
    }

    pub fn gradient(&self, x1: f64, x2: f64) -> [f64; 2] {
        match &self.gradient {
            Some(g) => g(x1, x2),
            None => self.fd_gradient(x1, x2),
        }
    }

    pub fn hessian(&self, x1: f64, x2: f64) -> [[f64; 2]; 2] {
        match &self.hessian {
            Some(g) => g(x1, x2),
            None => self.fd_hessian(x1, x2),
        }
    }

    /// Fourth-order central difference of a scalar function along one axis.
    fn central4(f: impl Fn(f64) -> f64, step: f64) -> f64 {
        (f(-2.0 * step) - 8.0 * f(-step) + 8.0 * f(step) - f(2.0 * step)) / (12.0 * step)
    }

    pub fn fd_gradient(&self, x1: f64, x2: f64) -> [f64; 2] {
        let s = self.fd_step;
        [
            Self::central4(|d| self.value(x1 + d, x2), s),
            Self::central4(|d| self.value(x1, x2 + d), s),
        ]
    }

    pub fn fd_hessian(&self, x1: f64, x2: f64) -> [[f64; 2]; 2] {
        let s = self.fd_step;
        let g1 = |a: f64, b: f64| Self::central4(|d| self.value(a + d, b), s);
        let g2 = |a: f64, b: f64| Self::central4(|d| self.value(a, b + d), s);
        let h11 = Self::central4(|d| g1(x1 + d, x2), s);
        let h22 = Self::central4(|d| g2(x1, x2 + d), s);
        let h12 = Self::central4(|d| g1(x1, x2 + d), s);
        [[h11, h12], [h12, h22]]
    }

    /// Compares supplied analytic derivatives against central differences.
    ///
    /// Passes trivially when no analytic derivative is present.
    pub fn verify_derivatives(&self, points: &[(f64, f64)], rel_tol: f64) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0);
        for &(x1, x2) in points {
            if let Some(g) = &self.gradient {
                let analytic = g(x1, x2);
                let numeric = self.fd_gradient(x1, x2);
                for k in 0..2 {
                    if !close(analytic[k], numeric[k]) {
                        return Err(Error::DerivativeMismatch {
                            x1,
                            x2,
                            analytic: analytic[k],
                            numeric: numeric[k],
                        });
                    }
                }
            }
            if let Some(hf) = &self.hessian {
                let analytic = hf(x1, x2);
                let numeric = self.fd_hessian(x1, x2);
                for i in 0..2 {
                    for j in 0..2 {
                        // Nested differences lose digits; scale the tolerance.
                        if !((analytic[i][j] - numeric[i][j]).abs()
                            <= 1e2 * rel_tol * analytic[i][j].abs().max(1.0))
                        {
                            return Err(Error::DerivativeMismatch {
                                x1,
                                x2,
                                analytic: analytic[i][j],
                                numeric: numeric[i][j],
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
