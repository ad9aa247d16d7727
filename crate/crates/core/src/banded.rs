//! Hermitian banded matrices and inertia counting by `L D L^H` without pivoting.

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Hermitian matrix with `bandwidth` superdiagonals, upper band storage.
#[derive(Debug, Clone)]
pub struct HermitianBand {
    n: usize,
    bw: usize,
    /// Row `i` holds `A[i][i..=i+bw]`.
    data: Vec<Complex64>,
}

/// Outcome of an inertia count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inertia {
    /// Number of negative pivots.
    Negative(usize),
    /// A pivot fell below the breakdown threshold at this index.
    Breakdown(usize),
}

impl HermitianBand {
    pub fn new(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            data: vec![Complex64::new(0.0, 0.0); n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j - i)
    }

    /// Adds `v` to `A[i][j]` (and its conjugate to `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) -> Result<()> {
        let (i, j, v) = if i <= j { (i, j, v) } else { (j, i, v.conj()) };
        if j >= self.n || j - i > self.bw {
            return Err(invalid("band", format!("entry ({i}, {j}) outside the band")));
        }
        if i == j && v.im != 0.0 {
            return Err(invalid("band", "diagonal entries must be real"));
        }
        let k = self.idx(i, j);
        self.data[k] += v;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if b - a > self.bw {
            return Complex64::new(0.0, 0.0);
        }
        let v = self.data[self.idx(a, b)];
        if i <= j {
            v
        } else {
            v.conj()
        }
    }

    /// Gershgorin interval.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i + 1..=(i + self.bw).min(self.n - 1) {
                let a = self.data[self.idx(i, j)].norm();
                radius[i] += a;
                radius[j] += a;
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let d = self.data[self.idx(i, i)].re;
            lo = lo.min(d - radius[i]);
            hi = hi.max(d + radius[i]);
        }
        (lo, hi)
    }

    /// Negative pivots of `L D L^H` for `A - shift I`. By Sylvester's law of
    /// inertia this is the number of eigenvalues below `shift`.
    pub fn count_below(&self, shift: f64) -> Inertia {
        let (lo, hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(shift.abs()).max(1.0);
        let tiny = 64.0 * f64::EPSILON * scale;
        let w = self.bw + 1;
        let mut a = self.data.clone();
        for i in 0..self.n {
            a[i * w].re -= shift;
        }
        let mut negative = 0;
        let mut row = vec![Complex64::new(0.0, 0.0); w];
        for k in 0..self.n {
            let d = a[k * w].re;
            if d.abs() <= tiny {
                return Inertia::Breakdown(k);
            }
            if d < 0.0 {
                negative += 1;
            }
            let last = (k + self.bw).min(self.n - 1);
            let m = last - k;
            row[..=m].copy_from_slice(&a[k * w..k * w + m + 1]);
            let inv = 1.0 / d;
            // A[i][j] -= conj(A[k][i]) A[k][j] / d for k < i <= j <= last.
            for di in 1..=m {
                let f = row[di].conj() * inv;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                let base = (k + di) * w;
                for dj in di..=m {
                    a[base + dj - di] -= f * row[dj];
                }
            }
        }
        Inertia::Negative(negative)
    }
}
