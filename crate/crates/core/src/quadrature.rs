//! Gauss–Legendre and Gauss–Kronrod rules, plus a vector-valued adaptive
//! integrator used for the boundary-layer integrals.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Composite Gauss–Legendre over `panels` equal pieces of `[a, b]`.
pub fn composite_gauss<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> f64 {
    let (x, w) = gauss_legendre(order);
    let d = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * d;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(c + 0.5 * d * xi);
        }
        total += 0.5 * d * s;
    }
    total
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the 7-point rule at `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod abscissae on `[a, b]`, ascending.
pub fn kronrod_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut out = [0.0; 15];
    for k in 0..7 {
        out[k] = c - r * XGK[k];
        out[14 - k] = c + r * XGK[k];
    }
    out[7] = c;
    out
}

/// Kronrod and Gauss weights (scaled to `[a, b]`) aligned with [`kronrod_nodes`].
pub fn kronrod_weights(a: f64, b: f64) -> ([f64; 15], [f64; 15]) {
    let r = 0.5 * (b - a);
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for k in 0..7 {
        wk[k] = r * WGK[k];
        wk[14 - k] = r * WGK[k];
        if k % 2 == 1 {
            wg[k] = r * WG[k / 2];
            wg[14 - k] = r * WG[k / 2];
        }
    }
    wk[7] = r * WGK[7];
    wg[7] = r * WG[3];
    (wk, wg)
}

/// One Gauss–Kronrod 7/15 panel: `(kronrod, |kronrod - gauss|)`.
pub fn gk15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let nodes = kronrod_nodes(a, b);
    let (wk, wg) = kronrod_weights(a, b);
    let mut k = 0.0;
    let mut g = 0.0;
    for i in 0..15 {
        let v = f(nodes[i]);
        k += wk[i] * v;
        g += wg[i] * v;
    }
    (k, (k - g).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Globally adaptive Gauss–Kronrod integration of a scalar function.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    panels.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::TailNotConverged(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {error:.3e} after {} panels",
                panels.len()
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
        // Keep a deterministic left-to-right order for the final sum.
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
}

/// Trapezoidal rule on uniform samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])) * step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn kronrod_degrees() {
        // Kronrod-15 is exact to degree 22, the embedded Gauss-7 to degree 13.
        for deg in 0..=22 {
            let (k, _) = gk15(|x| x.powi(deg), 0.0, 1.0);
            assert!((k - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg={deg}");
        }
        let (_, wg) = kronrod_weights(0.0, 1.0);
        let nodes = kronrod_nodes(0.0, 1.0);
        for deg in 0..=13 {
            let g: f64 = (0..15).map(|i| wg[i] * nodes[i].powi(deg)).sum();
            assert!((g - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg={deg}");
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-12, 500).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-8, "{} vs {exact}", r.value);
    }

    #[test]
    fn trapezoid_linear() {
        assert!((trapezoid(&[0.0, 1.0, 2.0], 0.5) - 1.0).abs() < 1e-15);
    }
}
