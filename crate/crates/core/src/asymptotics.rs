//! Closed-form asymptotics of the oscillator branches as `eta -> +/-inf`, and
//! a least-squares extractor for the exponentially small splitting.
//!
//! Nothing here calls the eigensolver, so these functions can serve as
//! independent predictions in tests.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::oscillator::EigenBranch;
use crate::params::BoundaryCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    PlusInfinity,
    MinusInfinity,
}

/// A fitted or predicted leading coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCoefficient {
    pub bc: BoundaryCondition,
    pub n: usize,
    pub side: Side,
    pub value: f64,
    pub theory_value: Option<f64>,
}

/// `2^(n+1) / (n! sqrt(pi))`.
pub fn leading_coefficient(n: usize) -> f64 {
    let mut c = 2.0 / std::f64::consts::PI.sqrt();
    for k in 1..=n {
        c *= 2.0 / k as f64;
    }
    c
}

/// Predicted `eps_n(eta) ~ c0 eta^(2n+1) exp(-eta^2)` for `eta > 0`.
///
/// `eps` is `lambda - (2n+1)` for Dirichlet and `(2n+1) - lambda` for
/// Neumann; the leading term is the same for both.
pub fn epsilon_leading(_bc: BoundaryCondition, n: usize, eta: f64) -> Result<f64> {
    ensure_finite("eta", eta)?;
    if eta <= 0.0 {
        return Err(invalid("eta", "the expansion holds for eta > 0"));
    }
    Ok(leading_coefficient(n) * eta.powi(2 * n as i32 + 1) * (-eta * eta).exp())
}

/// Smallest `eta` accepted by [`tunneling_offset`].
pub const TUNNELING_MIN_ETA: f64 = 3.0;

/// `lambda_n(eta) - (2n+1)` for Dirichlet and Neumann at large `eta`, with
/// relative accuracy where the eigensolver has none.
///
/// The eigenfunction is `D_nu(-sqrt2 x)` with `lambda = 2 nu + 1`. The
/// connection formula `D_nu(-s) = cos(pi nu) D_nu(s) + pi / Gamma(-nu) V(s)`,
/// with `V = sqrt(2/pi) U int U^-2` built from `U = He_n e^(-s^2/4)`, gives
/// `nu - n` to first order at `s = sqrt2 eta`. The relative error is
/// `O(nu - n)` plus `O(exp(-(s^2 - s0^2)/2))`, where `s0` sits just past the
/// last zero of `He_n`. Returns the offset and that error bound.
pub fn tunneling_offset(bc: BoundaryCondition, n: usize, eta: f64) -> Result<(f64, f64)> {
    ensure_finite("eta", eta)?;
    if eta < TUNNELING_MIN_ETA {
        return Err(invalid("eta", format!("needs eta >= {TUNNELING_MIN_ETA}, got {eta}")));
    }
    if n > 20 {
        return Err(invalid("n", "supported for n <= 20"));
    }
    let s = std::f64::consts::SQRT_2 * eta;
    // Largest zero of He_n is below sqrt(4n + 2).
    let s0 = ((4 * n + 2) as f64).sqrt() + 0.5;
    if s <= s0 + 1.0 {
        return Err(invalid("eta", format!("too close to the turning point for n = {n}")));
    }
    let lo = s0.max(s - 40.0 / s);
    // e^((t^2 - s^2)/2) / He_n(t)^2 varies on the scale 1/s near t = s.
    let scaled = crate::quadrature::composite_gauss(
        |t| ((t * t - s * s) / 2.0).exp() / hermite_he(n, t).0.powi(2),
        lo,
        s,
        64,
        8,
    );
    let norm = (1..=n).map(|k| k as f64).product::<f64>() * (2.0 * std::f64::consts::PI).sqrt();
    let tiny = (-s * s / 2.0).exp();
    let nu = match bc {
        BoundaryCondition::Dirichlet => tiny / (norm * scaled),
        BoundaryCondition::Neumann => {
            let (he, dhe) = hermite_he(n, s);
            let p = he * (dhe - 0.5 * s * he);
            p * tiny / (norm * (p * scaled + 1.0))
        }
        BoundaryCondition::Robin { .. } => {
            return Err(invalid("bc", "Dirichlet and Neumann only"));
        }
    };
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let rel = nu.abs() * (3.0 + s.ln() + harmonic) + (-(s * s - lo * lo) / 2.0).exp();
    Ok((2.0 * nu, 2.0 * nu.abs() * rel))
}

/// `(He_n(t), He_n'(t))` for the probabilists' Hermite polynomials.
fn hermite_he(n: usize, t: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = t * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    (cur, n as f64 * prev)
}

/// Least-squares fit of `|lambda - (2n+1)| eta^-(2n+1) e^(eta^2)` to
/// `c0 + c1 eta^-2` over the samples inside `window`. Returns `(c0, c1)`.
pub fn fit_leading_coefficient(branch: &EigenBranch, window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if lo < 2.0 {
        return Err(invalid("window", format!("left endpoint {lo} must be >= 2")));
    }
    if !(hi > lo) {
        return Err(invalid("window", "empty window"));
    }
    let level = 2.0 * branch.n as f64 + 1.0;
    let p = 2 * branch.n as i32 + 1;
    let pts: Vec<(f64, f64)> = branch
        .eta_samples
        .iter()
        .zip(&branch.lambda_samples)
        .filter(|(&e, _)| e >= lo && e <= hi)
        .map(|(&e, &l)| (e, (l - level).abs() * e.powi(-p) * (e * e).exp()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Fit(format!(
            "only {} samples inside [{lo}, {hi}], need at least 4",
            pts.len()
        )));
    }
    // Normal equations for the 2x2 system in basis {1, eta^-2}.
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(e, r) in &pts {
        let b = e.powi(-2);
        s00 += 1.0;
        s01 += b;
        s11 += b * b;
        r0 += r;
        r1 += b * r;
    }
    let det = s00 * s11 - s01 * s01;
    if det.abs() < 1e-300 {
        return Err(Error::Fit("degenerate design matrix".into()));
    }
    let c0 = (s11 * r0 - s01 * r1) / det;
    let c1 = (s00 * r1 - s01 * r0) / det;
    let worst = pts
        .iter()
        .map(|&(e, r)| (r - c0 - c1 * e.powi(-2)).abs())
        .fold(0.0, f64::max);
    if worst > 0.2 * c0.abs() {
        return Err(Error::Fit(format!(
            "residual {worst:.3e} exceeds 20% of c0 = {c0:.3e}; solver accuracy insufficient"
        )));
    }
    Ok((c0, c1))
}

/// Which Airy function's zeros to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AiryKind {
    Ai,
    AiPrime,
}

/// Largest `|x|` the series evaluator accepts.
pub const AIRY_SERIES_LIMIT: f64 = 14.0;

/// `(Ai(x), Ai'(x), error bound)` from the Maclaurin series.
///
/// Summation runs in double-double arithmetic so the cancellation for
/// negative `x` (terms up to ~1e13 near `|x| = 14`) costs nothing visible in
/// the final double. The returned bound covers the truncated tail; rounding is
/// below `1e-18` on the supported range.
pub fn airy(x: f64) -> Result<(f64, f64, f64)> {
    ensure_finite("x", x)?;
    if x.abs() > AIRY_SERIES_LIMIT {
        return Err(invalid(
            "x",
            format!("|x| = {} beyond series range {AIRY_SERIES_LIMIT}", x.abs()),
        ));
    }
    // Ai(0) and -Ai'(0) split into double-double.
    let c1 = Dd::new(0.355_028_053_887_817_2, 2.052_336_324_362_12e-17);
    let c2 = Dd::new(0.258_819_403_792_806_8, -2.522_243_111_610_832e-17);
    let x3 = Dd::from(x).mul_f(x).mul_f(x);
    let ax3 = x.abs().powi(3);

    // f = sum a_k x^3k, g = sum b_k x^(3k+1) with f'' = x f, g'' = x g.
    let mut tf = Dd::from(1.0);
    let mut tg = Dd::from(x);
    let mut tfp = Dd::from(0.0);
    let mut tgp = Dd::from(1.0);
    let (mut f, mut g, mut fp, mut gp) = (tf, tg, tfp, tgp);
    let mut tail = f64::INFINITY;
    for k in 0..200usize {
        let kf = k as f64;
        // term_{k+1} from term_k.
        tf = tf.mul(x3).div_f((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        tg = tg.mul(x3).div_f((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        tfp = if k == 0 {
            Dd::from(0.5 * x * x)
        } else {
            tfp.mul(x3).div_f(3.0 * kf * (3.0 * kf + 2.0))
        };
        tgp = tgp.mul(x3).div_f((3.0 * kf + 1.0) * (3.0 * kf + 3.0));
        f = f.add(tf);
        g = g.add(tg);
        fp = fp.add(tfp);
        gp = gp.add(tgp);
        // Ratio bound for all later terms of the four series.
        let kn = kf + 1.0;
        let ratio = ax3 / ((3.0 * kn) * (3.0 * kn + 1.0));
        if ratio < 0.5 {
            let biggest = tf.hi.abs().max(tg.hi.abs()).max(tfp.hi.abs()).max(tgp.hi.abs())
                * (1.0 + x.abs());
            let bound = biggest * ratio / (1.0 - ratio);
            if bound < 1e-20 {
                tail = bound;
                break;
            }
        }
    }
    if !tail.is_finite() {
        return Err(Error::SumNotConverged { terms: 200 });
    }
    let ai = c1.mul(f).add(c2.mul(g).neg());
    let aip = c1.mul(fp).add(c2.mul(gp).neg());
    Ok((ai.to_f64(), aip.to_f64(), tail + 1e-18))
}

/// Magnitude of the `k`-th negative zero of `Ai` or `Ai'`, `1 <= k <= 10`.
pub fn airy_zero(kind: AiryKind, k: usize) -> Result<f64> {
    if !(1..=10).contains(&k) {
        return Err(invalid("k", format!("supported range is 1..=10, got {k}")));
    }
    let eval = |t: f64| -> Result<f64> {
        let (a, ap, _) = airy(-t)?;
        Ok(match kind {
            AiryKind::Ai => a,
            AiryKind::AiPrime => ap,
        })
    };
    // Zeros are at least ~0.9 apart; a 0.05 scan cannot skip one.
    let mut found = 0;
    let mut t = 0.0;
    let mut prev = eval(t)?;
    while t < AIRY_SERIES_LIMIT - 0.05 {
        let next_t = t + 0.05;
        let next = eval(next_t)?;
        if prev.signum() != next.signum() {
            found += 1;
            if found == k {
                let (mut lo, mut hi, mut flo) = (t, next_t, prev);
                while hi - lo > 1e-15 * hi {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = eval(mid)?;
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
        }
        t = next_t;
        prev = next;
    }
    Err(invalid("k", format!("zero {k} not found within the series range")))
}

/// `eta^2 + (2|eta|)^(2/3) a` for `eta <= -2`, with `a` the first-kind
/// Airy zero (Dirichlet) or derivative zero (Neumann) of index `n + 1`.
///
/// A fixed Robin coefficient scales away in the Airy variables, so Robin uses
/// the Neumann prediction.
pub fn lambda_neg_asymptote(bc: BoundaryCondition, n: usize, eta: f64) -> Result<f64> {
    ensure_finite("eta", eta)?;
    if eta > -2.0 {
        return Err(invalid("eta", format!("asymptotic regime needs eta <= -2, got {eta}")));
    }
    let kind = if bc.is_dirichlet() {
        AiryKind::Ai
    } else {
        AiryKind::AiPrime
    };
    let a = airy_zero(kind, n + 1)?;
    Ok(eta * eta + (2.0 * eta.abs()).powf(2.0 / 3.0) * a)
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn new(hi: f64, lo: f64) -> Self {
        quick_two_sum(hi, lo)
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        quick_two_sum(p, e + self.lo * b)
    }

    fn div_f(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.add(Dd::from(q1).mul_f(b).neg());
        let q2 = r.hi / b;
        let r = r.add(Dd::from(q2).mul_f(b).neg());
        let q3 = r.hi / b;
        quick_two_sum(q1, q2).add(Dd::from(q3))
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tunneling_offset_approaches_leading_term() {
        for n in 0..=3 {
            let eta = 7.0;
            let (d, derr) = tunneling_offset(BoundaryCondition::Dirichlet, n, eta).unwrap();
            let (nm, _) = tunneling_offset(BoundaryCondition::Neumann, n, eta).unwrap();
            let lead = epsilon_leading(BoundaryCondition::Dirichlet, n, eta).unwrap();
            assert!(d > 0.0 && nm < 0.0);
            assert!(derr < 1e-9 * d);
            // Next-order corrections are O(eta^-2).
            assert!((d / lead - 1.0).abs() < 2.0 * (n + 1) as f64 / (eta * eta), "n={n}");
            assert!((-nm / lead - 1.0).abs() < 2.0 * (n + 1) as f64 / (eta * eta), "n={n}");
        }
        assert!(tunneling_offset(BoundaryCondition::Dirichlet, 0, 2.0).is_err());
        assert!(tunneling_offset(BoundaryCondition::robin(1.0).unwrap(), 0, 5.0).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)] // the literal is the point
    fn leading_coefficients() {
        assert!((leading_coefficient(0) - 1.128_379_167_095_512_6).abs() < 1e-15);
        assert!((leading_coefficient(1) - 4.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        let e = epsilon_leading(BoundaryCondition::Dirichlet, 0, 3.0).unwrap();
        assert!((e - 4.178e-4).abs() < 1e-6, "{e}");
        assert!(epsilon_leading(BoundaryCondition::Dirichlet, 0, 0.0).is_err());
    }

    #[test]
    fn airy_satisfies_wronskian() {
        // W(Ai, Bi) is unavailable; use the ODE instead: Ai'' = x Ai by differences.
        for &x in &[-12.0, -7.3, -1.0, 0.0, 0.4, 3.0] {
            let d = 1e-3;
            let (a0, _, _) = airy(x).unwrap();
            let (_, pp, _) = airy(x + d).unwrap();
            let (_, pm, _) = airy(x - d).unwrap();
            let second = (pp - pm) / (2.0 * d);
            assert!((second - x * a0).abs() < 1e-6 * (1.0 + x.abs()), "x={x}");
        }
    }

    #[test]
    fn airy_zero_ordering_and_range() {
        let mut prev = 0.0;
        for k in 1..=10 {
            let z = airy_zero(AiryKind::Ai, k).unwrap();
            let zp = airy_zero(AiryKind::AiPrime, k).unwrap();
            assert!(z > prev && zp < z);
            prev = z;
        }
        assert!(airy_zero(AiryKind::Ai, 0).is_err());
        assert!(airy_zero(AiryKind::Ai, 11).is_err());
    }

    #[test]
    fn neg_asymptote_examples() {
        let d = lambda_neg_asymptote(BoundaryCondition::Dirichlet, 0, -8.0).unwrap();
        let n = lambda_neg_asymptote(BoundaryCondition::Neumann, 0, -8.0).unwrap();
        assert!(n < d && d > 64.0);
        assert!(lambda_neg_asymptote(BoundaryCondition::Dirichlet, 0, -1.0).is_err());
    }

    #[test]
    fn fit_recovers_planted_coefficient() {
        let eta: Vec<f64> = (0..21).map(|i| 2.5 + 0.05 * i as f64).collect();
        let b0 = EigenBranch {
            bc: BoundaryCondition::Dirichlet,
            n: 0,
            lambda_samples: eta.iter().map(|&e| 1.0 + 1.2 * e * (-e * e).exp()).collect(),
            boundary_data: vec![(0.0, 0.0); eta.len()],
            eta_samples: eta,
            provenance: Default::default(),
        };
        let (c0, c1) = fit_leading_coefficient(&b0, (2.5, 3.5)).unwrap();
        assert!((c0 - 1.2).abs() < 1e-6 && c1.abs() < 1e-5, "{c0} {c1}");
        assert!(fit_leading_coefficient(&b0, (1.0, 3.5)).is_err());
        assert!(fit_leading_coefficient(&b0, (2.5, 2.6)).is_err());
    }
}
