//! Classical magnetic billiard in the half-plane `x1 > 0`.
//!
//! The flow is generated by `xi1^2 + (xi2 - mu x1)^2 - W(x)` with `F = 1`, so
//! cyclotron circles have radius `a / mu` (`a = W^{1/2}`) and are run at
//! angular speed `2 mu`. At `x1 = 0` the momentum is reflected, `xi1 -> -xi1`.
//! Hops advance along the boundary towards `-x2`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::ode::{dopri_step, error_norm, step_factor, Vector};
use crate::params::{ModelParams, PotentialField};

/// Default `C0` in the regime margin `C0 / mu`.
pub const MARGIN_C0: f64 = 1.0;

/// Starts with `|eta + 1|` below this are refused (gliding limit).
pub const GLIDING_GUARD: f64 = 1e-3;

/// Event times are refined to this absolute accuracy.
pub const EVENT_TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x1: f64,
    pub x2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x1: f64, x2: f64, xi1: f64, xi2: f64, t: f64) -> Self {
        Self { x1, x2, xi1, xi2, t }
    }

    /// Top of the cyclotron circle with parameter `eta` and speed `a`:
    /// `x1 = (eta + 1) a / mu`, `xi1 = 0`, `xi2 = eta a`.
    pub fn at_apex(eta: f64, x2: f64, a: f64, mu: f64) -> Result<Self> {
        ensure_finite("eta", eta)?;
        ensure_finite("x2", x2)?;
        if !(a > 0.0) || !(mu > 0.0) {
            return Err(invalid("a", "speed and field must be positive"));
        }
        if eta <= -1.0 {
            return Err(invalid("eta", "apex lies outside the half-plane for eta <= -1"));
        }
        Ok(Self::new((eta + 1.0) * a / mu, x2, 0.0, eta * a, 0.0))
    }

    /// Boundary point entering the domain, i.e. right after a reflection.
    pub fn at_boundary(eta: f64, x2: f64, a: f64) -> Result<Self> {
        ensure_finite("x2", x2)?;
        if !(eta.abs() < 1.0) {
            return Err(invalid("eta", "a boundary start needs |eta| < 1"));
        }
        if !(a > 0.0) {
            return Err(invalid("a", "must be positive"));
        }
        Ok(Self::new(0.0, x2, a * (1.0 - eta * eta).sqrt(), eta * a, 0.0))
    }

    fn vector(&self) -> Vector {
        [self.x1, self.x2, self.xi1, self.xi2]
    }

    fn from_vector(v: &Vector, t: f64) -> Self {
        Self::new(v[0], v[1], v[2], v[3], t)
    }

    /// `xi1^2 + (xi2 - mu x1)^2`.
    pub fn kinetic(&self, mu: f64) -> f64 {
        let v = self.xi2 - mu * self.x1;
        self.xi1 * self.xi1 + v * v
    }

    pub fn velocity(&self, mu: f64) -> [f64; 2] {
        [2.0 * self.xi1, 2.0 * (self.xi2 - mu * self.x1)]
    }

    /// Centre of the osculating cyclotron circle, exact when `W` is constant.
    pub fn circle_center(&self, mu: f64) -> [f64; 2] {
        [self.xi2 / mu, self.x2 - self.xi1 / mu]
    }
}

/// Conserved quantity `xi1^2 + (xi2 - mu x1)^2 - W(x)`.
pub fn energy(s: &PhaseState, w: &PotentialField, mu: f64) -> f64 {
    s.kinetic(mu) - w.value(s.x1, s.x2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    Circular,
    Hop,
    Gliding,
    Transitional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub eta: f64,
}

pub fn default_margin(mu: f64) -> f64 {
    MARGIN_C0 / mu
}

/// Classifies by `eta = xi2 / W0^{1/2}`.
pub fn classify(state: &PhaseState, w0: f64, margin: f64) -> Result<Regime> {
    if !(w0 > 0.0) {
        return Err(invalid("w0", "boundary value of W must be positive"));
    }
    let eta = state.xi2 / w0.sqrt();
    Ok(Regime {
        kind: classify_eta(eta, margin),
        eta,
    })
}

pub fn classify_eta(eta: f64, margin: f64) -> RegimeKind {
    if eta >= 1.0 + margin {
        RegimeKind::Circular
    } else if eta.abs() < 1.0 - margin {
        RegimeKind::Hop
    } else if eta <= -1.0 + margin {
        RegimeKind::Gliding
    } else {
        RegimeKind::Transitional
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopMetrics {
    pub chord: f64,
    pub arc: f64,
    pub time: f64,
}

/// `pi - arccos(eta)` without cancellation near `eta = -1`.
fn swept_angle(eta: f64) -> f64 {
    2.0 * ((1.0 + eta) / 2.0).sqrt().asin()
}

fn check_hop_eta(eta: f64) -> Result<()> {
    ensure_finite("eta", eta)?;
    if eta.abs() >= 1.0 {
        return Err(invalid("eta", format!("hops need |eta| < 1, got {eta}")));
    }
    Ok(())
}

/// Chord, arc length and duration of one hop.
pub fn hop_metrics(a: f64, eta: f64, mu: f64) -> Result<HopMetrics> {
    check_hop_eta(eta)?;
    if !(a > 0.0) {
        return Err(invalid("a", "must be positive"));
    }
    if !(mu >= 1.0) {
        return Err(invalid("mu", "must be at least 1"));
    }
    let phi = swept_angle(eta);
    Ok(HopMetrics {
        chord: 2.0 * a / mu * ((1.0 - eta) * (1.0 + eta)).sqrt(),
        arc: 2.0 * a / mu * phi,
        time: phi / mu,
    })
}

/// `v(eta) = (1 - eta^2)^{1/2} / (pi - arccos eta)`; the mean x2-velocity of a
/// hop chain is `-2 a v(eta)`.
pub fn hop_speed(eta: f64) -> Result<f64> {
    check_hop_eta(eta)?;
    Ok(((1.0 - eta) * (1.0 + eta)).sqrt() / swept_angle(eta))
}

/// Drift of the cyclotron centre: `(W_x2, -W_x1) / mu`.
pub fn drift_velocity(x1: f64, x2: f64, w: &PotentialField, mu: f64) -> Result<[f64; 2]> {
    let g = w.gradient(x1, x2);
    if !g[0].is_finite() || !g[1].is_finite() {
        return Err(invalid("W", format!("gradient not finite at ({x1}, {x2})")));
    }
    Ok([g[1] / mu, -g[0] / mu])
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Local error tolerance of the Runge–Kutta controller.
    pub tol: f64,
    /// Allowed `|E - E0| / (1 + |E0|)`.
    pub energy_tol: f64,
    /// Lower bound on steps per cyclotron period.
    pub steps_per_period: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            energy_tol: 1e-6,
            steps_per_period: 32.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleKind {
    Start,
    Step,
    /// Post-reflection state.
    Reflection,
    /// Local maximum of `x1`.
    Apex,
}

impl SampleKind {
    pub fn flag(self) -> u8 {
        match self {
            SampleKind::Start => 0,
            SampleKind::Step => 0,
            SampleKind::Reflection => 1,
            SampleKind::Apex => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub t: f64,
    pub x2: f64,
    pub incident_xi1: f64,
    pub xi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopSummary {
    pub index: usize,
    pub t_start: f64,
    pub time: f64,
    pub dx2: f64,
    pub chord: f64,
    /// Trapezoid estimate of the path length.
    pub arc_length: f64,
    pub apex: Option<PhaseState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub mu: f64,
    pub samples: Vec<PhaseState>,
    pub kinds: Vec<SampleKind>,
    /// `E - E0` at every sample.
    pub energy_log: Vec<f64>,
    pub reflections: Vec<Reflection>,
    pub hops: Vec<HopSummary>,
}

impl Trajectory {
    pub fn initial(&self) -> &PhaseState {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.samples.last().expect("trajectory has a start sample")
    }

    pub fn apexes(&self) -> impl Iterator<Item = &PhaseState> {
        self.samples
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == SampleKind::Apex)
            .map(|(s, _)| s)
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energy_log.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Columns `t,x1,x2,xi1,xi2,event_flag`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,x1,x2,xi1,xi2,event_flag")?;
        for (s, k) in self.samples.iter().zip(&self.kinds) {
            writeln!(out, "{},{},{},{},{},{}", s.t, s.x1, s.x2, s.xi1, s.xi2, k.flag())?;
        }
        Ok(())
    }

    pub fn write_hops_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "index,t_start,time,dx2,chord,arc_length,apex_x1,apex_x2")?;
        for h in &self.hops {
            let (ax1, ax2) = h.apex.map_or((f64::NAN, f64::NAN), |a| (a.x1, a.x2));
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                h.index, h.t_start, h.time, h.dx2, h.chord, h.arc_length, ax1, ax2
            )?;
        }
        Ok(())
    }
}

struct Flow<'a> {
    w: &'a PotentialField,
    mu: f64,
}

impl Flow<'_> {
    fn rhs(&self, y: &Vector) -> Vector {
        let g = self.w.gradient(y[0], y[1]);
        let v = y[3] - self.mu * y[0];
        [2.0 * y[2], 2.0 * v, 2.0 * self.mu * v + g[0], g[1]]
    }

    fn step(&self, y: &Vector, h: f64) -> Vector {
        dopri_step(&|z: &Vector| self.rhs(z), y, h).0
    }

    /// Bisection on the fraction `theta` of a step of size `h` for a sign
    /// change of `g`, with `g(lo) >= 0 > g(hi)` (or the reverse). Returns the
    /// endpoint on the side of `lo`.
    fn locate(&self, y: &Vector, h: f64, g: impl Fn(&Vector) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let lo_sign = g(&self.step(y, lo * h)) >= 0.0;
        while (hi - lo) * h.abs() > EVENT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if (g(&self.step(y, mid * h)) >= 0.0) == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Integrates forward over `[t0, t0 + duration]`.
pub fn integrate_flow(
    initial: &PhaseState,
    w: &PotentialField,
    params: &ModelParams,
    duration: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(invalid("T", "must be positive and finite"));
    }
    run(initial, w, params.mu(), duration, opts)
}

/// Integrates backward over `[t0 - duration, t0]`, reflecting at the same wall.
pub fn integrate_backward(
    initial: &PhaseState,
    w: &PotentialField,
    params: &ModelParams,
    duration: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(invalid("T", "must be positive and finite"));
    }
    run(initial, w, params.mu(), -duration, opts)
}

fn run(initial: &PhaseState, w: &PotentialField, mu: f64, duration: f64, opts: &FlowOptions) -> Result<Trajectory> {
    for (name, v) in [
        ("x1", initial.x1),
        ("x2", initial.x2),
        ("xi1", initial.xi1),
        ("xi2", initial.xi2),
        ("t", initial.t),
    ] {
        ensure_finite(name, v)?;
    }
    if initial.x1 < 0.0 {
        return Err(invalid("x1", "initial point lies outside the half-plane"));
    }
    if !(opts.tol > 0.0) || !(opts.energy_tol > 0.0) || !(opts.steps_per_period >= 1.0) {
        return Err(invalid("options", "tolerances and steps per period must be positive"));
    }
    let w0 = w.value(0.0, initial.x2);
    if w0 > 0.0 {
        let eta = initial.xi2 / w0.sqrt();
        if (eta + 1.0).abs() < GLIDING_GUARD {
            return Err(invalid(
                "eta",
                format!("start at eta = {eta} is within {GLIDING_GUARD:.0e} of the gliding limit"),
            ));
        }
    }

    let flow = Flow { w, mu };
    let e0 = energy(initial, w, mu);
    let energy_limit = opts.energy_tol * (1.0 + e0.abs());
    let period = PI / mu;
    let max_step = period / opts.steps_per_period;
    let min_step = 1e-12 * period;
    let dir = duration.signum();
    // Positions live on the cyclotron scale a / mu.
    let weight = [mu, mu, 1.0, 1.0];
    let t_end = initial.t + duration;

    let mut traj = Trajectory {
        mu,
        samples: vec![*initial],
        kinds: vec![SampleKind::Start],
        energy_log: vec![0.0],
        reflections: Vec::new(),
        hops: Vec::new(),
    };
    let push = |traj: &mut Trajectory, s: PhaseState, kind: SampleKind| -> Result<()> {
        let drift = energy(&s, w, mu) - e0;
        if !(drift.abs() <= energy_limit) {
            return Err(Error::EnergyDrift {
                t: s.t,
                drift,
                limit: energy_limit,
            });
        }
        traj.samples.push(s);
        traj.kinds.push(kind);
        traj.energy_log.push(drift);
        Ok(())
    };

    let mut t = initial.t;
    let mut y = initial.vector();
    let mut h_abs = max_step;
    while (t_end - t) * dir > 0.0 {
        let remaining = (t_end - t).abs();
        let last = h_abs >= remaining;
        let h = dir * h_abs.min(remaining);
        let (y1, err) = dopri_step(&|z: &Vector| flow.rhs(z), &y, h);
        let norm = error_norm(&y, &y1, &err, opts.tol, &weight);
        if !norm.is_finite() || norm > 1.0 {
            h_abs = h.abs() * step_factor(norm).min(0.5);
            if h_abs < min_step {
                return Err(Error::StepUnderflow { t, x1: y[0], x2: y[1] });
            }
            continue;
        }

        // Wall crossing, including a shallow dip that comes back within the step.
        let mut event = None;
        if y1[0] < 0.0 {
            event = Some(flow.locate(&y, h, |z| z[0], 0.0, 1.0));
        } else if dir * y[2] < 0.0 && dir * y1[2] > 0.0 {
            let tm = flow.locate(&y, h, |z| -dir * z[2], 0.0, 1.0);
            if flow.step(&y, tm * h)[0] < 0.0 {
                event = Some(flow.locate(&y, h, |z| z[0], 0.0, tm));
            }
        }
        let theta = event.unwrap_or(1.0);
        let y_end = if event.is_some() { flow.step(&y, theta * h) } else { y1 };

        if dir * y[2] > 0.0 && dir * y_end[2] <= 0.0 {
            let ta = flow.locate(&y, h, |z| dir * z[2], 0.0, theta);
            let ya = flow.step(&y, ta * h);
            push(&mut traj, PhaseState::from_vector(&ya, t + ta * h), SampleKind::Apex)?;
        }

        match event {
            Some(theta) => {
                t += theta * h;
                // Keep the located x1 (>= 0, within the event tolerance) so the
                // reflection changes nothing but the sign of xi1.
                y = y_end;
                let incident = y[2];
                y[2] = -incident;
                traj.reflections.push(Reflection {
                    t,
                    x2: y[1],
                    incident_xi1: incident,
                    xi2: y[3],
                });
                push(&mut traj, PhaseState::from_vector(&y, t), SampleKind::Reflection)?;
            }
            None => {
                t = if last { t_end } else { t + h };
                y = y1;
                push(&mut traj, PhaseState::from_vector(&y, t), SampleKind::Step)?;
                h_abs = (h.abs() * step_factor(norm)).min(max_step);
            }
        }
    }
    traj.hops = summarize_hops(&traj);
    Ok(traj)
}

fn summarize_hops(traj: &Trajectory) -> Vec<HopSummary> {
    let refl: Vec<usize> = traj
        .kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == SampleKind::Reflection)
        .map(|(i, _)| i)
        .collect();
    refl.windows(2)
        .enumerate()
        .map(|(index, w)| {
            let (a, b) = (w[0], w[1]);
            let s = &traj.samples[a..=b];
            let arc_length = s
                .windows(2)
                .map(|p| {
                    let v0 = 2.0 * p[0].kinetic(traj.mu).sqrt();
                    let v1 = 2.0 * p[1].kinetic(traj.mu).sqrt();
                    0.5 * (v0 + v1) * (p[1].t - p[0].t).abs()
                })
                .sum();
            let apex = (a..=b)
                .find(|&i| traj.kinds[i] == SampleKind::Apex)
                .map(|i| traj.samples[i]);
            let dx2 = traj.samples[b].x2 - traj.samples[a].x2;
            HopSummary {
                index,
                t_start: traj.samples[a].t,
                time: traj.samples[b].t - traj.samples[a].t,
                dx2,
                chord: dx2.abs(),
                arc_length,
                apex,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidingCenter {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
}

/// Time-averaged position over each full cyclotron period between
/// consecutive apexes that contains no reflection.
pub fn guiding_centers(traj: &Trajectory) -> Vec<GuidingCenter> {
    let mu = traj.mu;
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, k) in traj.kinds.iter().enumerate() {
        match k {
            SampleKind::Reflection => start = None,
            SampleKind::Apex => {
                if let Some(a) = start {
                    let s = &traj.samples[a..=i];
                    let mut acc = [0.0; 2];
                    for p in s.windows(2) {
                        let dt = p[1].t - p[0].t;
                        let (v0, v1) = (p[0].velocity(mu), p[1].velocity(mu));
                        let x0 = [p[0].x1, p[0].x2];
                        let x1 = [p[1].x1, p[1].x2];
                        // Cubic Hermite quadrature.
                        for c in 0..2 {
                            acc[c] += 0.5 * dt * (x0[c] + x1[c]) + dt * dt / 12.0 * (v0[c] - v1[c]);
                        }
                    }
                    let span = s[s.len() - 1].t - s[0].t;
                    out.push(GuidingCenter {
                        t: 0.5 * (s[0].t + s[s.len() - 1].t),
                        x1: acc[0] / span,
                        x2: acc[1] / span,
                    });
                }
                start = Some(i);
            }
            _ => {}
        }
    }
    out
}

/// Per-hop values of `rho' exp(-(4/3) W0^{1/2})`, `rho' = 1 + eta`, read at the apex.
///
/// `power_law` holds `rho' W0^{2/3}` at the same apexes. Averaging `d xi2/dt`
/// over a hop and dividing by the hop's x2-velocity `-2 W0^{1/2} v(eta)` gives
/// `d rho'/d x2 = -(2/3) rho' W0_x2 / W0` near the gliding limit, so this is
/// the quantity that actually stays flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticRecord {
    pub values: Vec<f64>,
    pub power_law: Vec<f64>,
    pub rho_primes: Vec<f64>,
    pub mu: f64,
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (hi - lo) / mean
}

impl AdiabaticRecord {
    /// `(max - min) / mean` of `values`.
    pub fn relative_spread(&self) -> f64 {
        spread(&self.values)
    }

    pub fn power_law_spread(&self) -> f64 {
        spread(&self.power_law)
    }

    /// Measured `C` in `spread <= C (1/mu + max rho')`.
    pub fn constant(&self) -> f64 {
        let rho = self.rho_primes.iter().cloned().fold(0.0, f64::max);
        self.relative_spread() / (1.0 / self.mu + rho)
    }
}

/// Every apex of the trajectory is classified, including those outside complete
/// hops, so a tear-off after the last reflection is reported too. The hop
/// index in the error counts the complete hops before the offending apex.
pub fn adiabatic_invariant(traj: &Trajectory, w0: impl Fn(f64) -> f64, margin: f64) -> Result<AdiabaticRecord> {
    if traj.hops.is_empty() {
        return Err(invalid("trajectory", "contains no complete hop"));
    }
    let mut values = Vec::with_capacity(traj.hops.len());
    let mut rho_primes = Vec::with_capacity(traj.hops.len());
    let mut power_law = Vec::with_capacity(traj.hops.len());
    let mut reflections = 0usize;
    for (s, k) in traj.samples.iter().zip(&traj.kinds) {
        match k {
            SampleKind::Reflection => reflections += 1,
            SampleKind::Apex => {
                let w = w0(s.x2);
                let regime = classify(s, w, margin)?;
                let complete = reflections.saturating_sub(1).min(traj.hops.len());
                if regime.kind != RegimeKind::Hop {
                    return Err(Error::RegimeExit {
                        hop: complete,
                        eta: regime.eta,
                    });
                }
                // Apexes inside complete hops carry the invariant.
                if reflections >= 1 && reflections <= traj.hops.len() {
                    let rho = 1.0 + regime.eta;
                    rho_primes.push(rho);
                    values.push(rho * (-(4.0 / 3.0) * w.sqrt()).exp());
                    power_law.push(rho * w.powf(2.0 / 3.0));
                }
            }
            _ => {}
        }
    }
    if values.len() != traj.hops.len() {
        return Err(invalid("trajectory", "some hops have no apex sample"));
    }
    Ok(AdiabaticRecord {
        values,
        power_law,
        rho_primes,
        mu: traj.mu,
    })
}

/// Number of separate boundary episodes: runs of reflections split by
/// reflection-free gaps longer than two cyclotron periods.
pub fn boundary_episodes(traj: &Trajectory) -> usize {
    let gap = 2.0 * PI / traj.mu;
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for r in &traj.reflections {
        match prev {
            Some(t) if (r.t - t).abs() <= gap => {}
            _ => count += 1,
        }
        prev = Some(r.t);
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortraitCase {
    /// `W_x1 > 0`, second sign positive.
    A,
    /// `W_x1 > 0`, second sign negative.
    B,
    /// `W_x1 < 0`, second sign positive.
    C,
    /// `W_x1 < 0`, second sign negative.
    D,
}

/// Linear: the second sign is that of `W_x2`. Quadratic: that of `W_x2x2`,
/// with `W_x2` vanishing at `x2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortraitShape {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortraitId {
    pub case: PortraitCase,
    pub shape: PortraitShape,
}

impl PortraitId {
    pub fn all() -> Vec<PortraitId> {
        let mut out = Vec::new();
        for shape in [PortraitShape::Linear, PortraitShape::Quadratic] {
            for case in [PortraitCase::A, PortraitCase::B, PortraitCase::C, PortraitCase::D] {
                out.push(PortraitId { case, shape });
            }
        }
        out
    }

    fn signs(&self) -> (f64, f64) {
        match self.case {
            PortraitCase::A => (1.0, 1.0),
            PortraitCase::B => (1.0, -1.0),
            PortraitCase::C => (-1.0, 1.0),
            PortraitCase::D => (-1.0, -1.0),
        }
    }

    pub fn tag(&self) -> String {
        let c = match self.case {
            PortraitCase::A => "a",
            PortraitCase::B => "b",
            PortraitCase::C => "c",
            PortraitCase::D => "d",
        };
        let s = match self.shape {
            PortraitShape::Linear => "linear",
            PortraitShape::Quadratic => "quadratic",
        };
        format!("{c}-{s}")
    }
}

impl std::str::FromStr for PortraitId {
    type Err = Error;

    /// `a-linear`, `d-quadratic`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (c, sh) = s
            .split_once(['-', ':'])
            .ok_or_else(|| invalid("portrait", format!("expected CASE-SHAPE, got `{s}`")))?;
        let case = match c {
            "a" => PortraitCase::A,
            "b" => PortraitCase::B,
            "c" => PortraitCase::C,
            "d" => PortraitCase::D,
            _ => return Err(invalid("portrait", format!("unknown case `{c}`"))),
        };
        let shape = match sh {
            "linear" => PortraitShape::Linear,
            "quadratic" => PortraitShape::Quadratic,
            _ => return Err(invalid("portrait", format!("unknown shape `{sh}`"))),
        };
        Ok(PortraitId { case, shape })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberRole {
    /// Starts on the boundary where hops get torn off.
    Hop,
    /// Starts one radius off the boundary where drift runs into it.
    Drift,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortraitMember {
    pub role: MemberRole,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortraitBundle {
    pub id: PortraitId,
    pub potential: String,
    pub members: Vec<PortraitMember>,
    /// The hop member ends off the boundary in the circular regime.
    pub torn_off: bool,
    /// The drift member reaches the boundary.
    pub collides: bool,
    pub expect_torn_off: bool,
    pub expect_collision: bool,
    /// Sign of the x2-displacement of the drift member before any reflection
    /// matches `-sign(W_x1)`.
    pub drift_direction_ok: bool,
}

impl PortraitBundle {
    pub fn passed(&self) -> bool {
        self.torn_off == self.expect_torn_off && self.collides == self.expect_collision && self.drift_direction_ok
    }
}

const PORTRAIT_SLOPE: f64 = 0.5;
const PORTRAIT_DURATION: f64 = 4.0;

/// Trajectory bundle for one of the qualitative pictures. Hops advance
/// towards `-x2` and are torn off where the boundary value of `W` falls in that
/// direction (`W_x2 > 0`); drift has `dx1/dt = W_x2 / mu`, so it reaches the
/// boundary where `W_x2 < 0`. The hop member is started where `W_x2 > 0` and the
/// drift member where `W_x2 < 0` (for the linear shape only one of the two
/// regions exists: tear-off in cases a, c and collision in b, d).
pub fn portrait(id: PortraitId, params: &ModelParams) -> Result<PortraitBundle> {
    let mu = params.mu();
    let (s1, s2) = id.signs();
    let g1 = s1 * PORTRAIT_SLOPE;
    let (w, hop_x2, hop_eta, drift_x2) = match id.shape {
        PortraitShape::Linear => {
            let w = PotentialField::linear(1.5, g1, s2 * PORTRAIT_SLOPE);
            (w, 0.0, 0.3, 0.0)
        }
        PortraitShape::Quadratic => {
            // W_x2 = s2 x2: positive on the side of sign s2. The hop has to
            // tear off before it reaches x2 = 0, hence the later start.
            let w = PotentialField::quadratic(1.5, g1, 0.0, 0.0, 0.0, s2);
            (w, s2 * 1.2, 0.7, -s2 * 0.8)
        }
    };
    let opts = FlowOptions::default();
    let mut members = Vec::new();

    // Hop member.
    let a = w.value(0.0, hop_x2).sqrt();
    let start = PhaseState::at_boundary(hop_eta, hop_x2, a)?;
    let hop = integrate_flow(&start, &w, params, PORTRAIT_DURATION, &opts)?;
    let quiet_after = start.t + 0.75 * PORTRAIT_DURATION;
    let last_refl = hop.reflections.last().map_or(f64::NEG_INFINITY, |r| r.t);
    let end_regime = hop
        .apexes()
        .last()
        .map(|s| classify(s, w.value(0.0, s.x2), default_margin(mu)))
        .transpose()?;
    let torn = !hop.reflections.is_empty()
        && last_refl < quiet_after
        && end_regime.is_some_and(|r| r.kind == RegimeKind::Circular);
    members.push(PortraitMember {
        role: MemberRole::Hop,
        trajectory: hop,
    });

    // Drift member: circle one radius off the boundary.
    let a = w.value(0.0, drift_x2).sqrt();
    let start = PhaseState::at_apex(2.0, drift_x2, a, mu)?;
    let drift = integrate_flow(&start, &w, params, PORTRAIT_DURATION, &opts)?;
    let collides = !drift.reflections.is_empty();
    let gc = guiding_centers(&drift);
    let first_refl = drift.reflections.first().map_or(f64::INFINITY, |r| r.t);
    let before: Vec<&GuidingCenter> = gc.iter().filter(|g| g.t < first_refl).collect();
    let drift_direction_ok = match (before.first(), before.last()) {
        (Some(a), Some(b)) if b.t > a.t => (b.x2 - a.x2) * s1 < 0.0,
        _ => false,
    };
    members.push(PortraitMember {
        role: MemberRole::Drift,
        trajectory: drift,
    });

    // A linear W has one global sign of W_x2, so only one event can occur;
    // the quadratic members start on opposite sides of x2 = 0.
    let (expect_torn_off, expect_collision) = match id.shape {
        PortraitShape::Linear => (s2 > 0.0, s2 < 0.0),
        PortraitShape::Quadratic => (true, true),
    };

    Ok(PortraitBundle {
        id,
        potential: w.label().to_string(),
        members,
        torn_off: torn,
        collides,
        expect_torn_off,
        expect_collision,
        drift_direction_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_metrics_at_eta_zero() {
        let m = hop_metrics(1.0, 0.0, 10.0).unwrap();
        assert!((m.chord - 0.2).abs() < 1e-15);
        assert!((m.arc - 0.1 * PI).abs() < 1e-15);
        assert!((m.time - 0.05 * PI).abs() < 1e-15);
        assert!(hop_metrics(1.0, 1.0, 10.0).is_err());
        assert!(hop_metrics(1.0, 0.3, 0.5).is_err());
    }

    #[test]
    fn hop_limits() {
        let near = hop_metrics(1.0, 1.0 - 1e-12, 4.0).unwrap();
        assert!(near.chord < 1e-5 && (near.time - PI / 4.0).abs() < 1e-5);
        let glide = hop_metrics(1.0, -1.0 + 1e-12, 4.0).unwrap();
        assert!(glide.chord < 1e-5 && glide.time < 1e-5);
        assert!((hop_speed(0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((hop_speed(-1.0 + 1e-14).unwrap() - 1.0).abs() < 1e-6);
        assert!(hop_speed(1.0 - 1e-14).unwrap() < 1e-6);
    }

    #[test]
    fn regimes() {
        let s = |xi2| PhaseState::new(0.1, 0.0, 0.0, xi2, 0.0);
        assert_eq!(classify(&s(2.0), 1.0, 0.1).unwrap().kind, RegimeKind::Circular);
        assert_eq!(classify(&s(0.0), 1.0, 0.1).unwrap().kind, RegimeKind::Hop);
        assert_eq!(classify(&s(1.0), 1.0, 0.1).unwrap().kind, RegimeKind::Transitional);
        assert_eq!(classify(&s(-1.0), 1.0, 0.1).unwrap().kind, RegimeKind::Gliding);
        assert_eq!(classify(&s(-2.0), 4.0, 0.1).unwrap().kind, RegimeKind::Gliding);
        assert!(classify(&s(0.0), 0.0, 0.1).is_err());
    }

    #[test]
    fn drift_examples() {
        let mu = 8.0;
        let v = drift_velocity(0.3, 0.2, &PotentialField::linear(0.0, 1.0, 0.0), mu).unwrap();
        assert_eq!(v, [0.0, -1.0 / mu]);
        let v = drift_velocity(0.3, 0.2, &PotentialField::linear(0.0, 0.0, 1.0), mu).unwrap();
        assert_eq!(v, [1.0 / mu, 0.0]);
    }

    #[test]
    fn gliding_start_refused() {
        let p = ModelParams::new(10.0, 0.1).unwrap();
        let w = PotentialField::constant(1.0);
        let s = PhaseState::at_boundary(-1.0 + 1e-4, 0.0, 1.0).unwrap();
        assert!(integrate_flow(&s, &w, &p, 1.0, &FlowOptions::default()).is_err());
    }
}
