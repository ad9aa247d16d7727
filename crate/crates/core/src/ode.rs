//! Dormand–Prince 5(4) stepping for small autonomous systems.

/// Phase-space vector `(x1, x2, xi1, xi2)`.
pub type Vector = [f64; 4];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &Vector, h: f64, terms: &[(f64, &Vector)]) -> Vector {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        *o += h * s;
    }
    out
}

/// One step of size `h` (either sign). Returns the fifth-order solution and
/// the embedded error estimate.
pub fn dopri_step<F: Fn(&Vector) -> Vector>(f: &F, y: &Vector, h: f64) -> (Vector, Vector) {
    let k1 = f(y);
    let k2 = f(&axpy(y, h, &[(A21, &k1)]));
    let k3 = f(&axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(&axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(&axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(&axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y5 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(&y5);
    let mut err = [0.0; 4];
    for i in 0..4 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err)
}

/// Scaled error norm: component `i`, measured in units of `1 / weight[i]`, is
/// allowed `tol * (1 + |y|)`.
pub fn error_norm(y0: &Vector, y1: &Vector, err: &Vector, tol: f64, weight: &Vector) -> f64 {
    (0..4)
        .map(|i| {
            let w = weight[i];
            w * err[i].abs() / (tol * (1.0 + w * y0[i].abs().max(y1[i].abs())))
        })
        .fold(0.0, f64::max)
}

/// Step-size factor from an error norm (order 5 controller with safety 0.9).
pub fn step_factor(norm: f64) -> f64 {
    if norm == 0.0 {
        5.0
    } else {
        (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_single_step_order() {
        let f = |y: &Vector| [y[1], -y[0], 0.0, 0.0];
        let y0 = [1.0, 0.0, 0.0, 0.0];
        let errs: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&h| {
                let (y, _) = dopri_step(&f, &y0, h);
                (y[0] - f64::cos(h)).abs().max((y[1] + f64::sin(h)).abs())
            })
            .collect();
        // Local error is O(h^6).
        let ratio = errs[0] / errs[1];
        assert!(ratio > 40.0 && ratio < 100.0, "{ratio}");
    }

    #[test]
    fn embedded_estimate_tracks_true_error() {
        let f = |y: &Vector| [y[1], -y[0], 0.0, 0.0];
        let (y, e) = dopri_step(&f, &[1.0, 0.0, 0.0, 0.0], 0.3);
        let true_err = (y[0] - 0.3f64.cos()).abs();
        assert!(e[0].abs() > true_err);
        assert!(e[0].abs() < 1e-4);
    }

    #[test]
    fn backward_step_inverts_forward() {
        let f = |y: &Vector| [2.0 * y[2], 2.0 * (y[3] - y[0]), 2.0 * (y[3] - y[0]), 0.0];
        let y0 = [0.3, -0.1, 0.4, 0.7];
        let (y1, _) = dopri_step(&f, &y0, 0.05);
        let (back, _) = dopri_step(&f, &y1, -0.05);
        for i in 0..4 {
            assert!((back[i] - y0[i]).abs() < 1e-9);
        }
    }
}
