//! Periodic grid on the torus `[0, 2π L_box)^d` and its discrete Fourier transform.
//!
//! Flat indices are row-major with axis 0 slowest. The integer wavenumber
//! attached to index `j` along an axis is `j` for `j <= N/2` and `j - N`
//! otherwise, so the stored set is `{-N/2+1, …, N/2}`; physical wavenumbers
//! are the integers divided by `L_box`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

pub struct Grid {
    dim: usize,
    n: usize,
    l_box: f64,
    dealias_fraction: f64,
    int_k: Vec<[i64; 3]>,
    k2: Vec<f64>,
    mask: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("l_box", &self.l_box)
            .field("dealias_fraction", &self.dealias_fraction)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.l_box == other.l_box
            && self.dealias_fraction == other.dealias_fraction
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, l_box: f64) -> Result<Arc<Grid>> {
        Self::with_dealias(dim, n, l_box, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(
        dim: usize,
        n: usize,
        l_box: f64,
        dealias_fraction: f64,
    ) -> Result<Arc<Grid>> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(l_box.is_finite() && l_box > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {l_box}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let total = n.pow(dim as u32);
        let cutoff = dealias_fraction * (n / 2) as f64;
        let mut int_k = Vec::with_capacity(total);
        let mut k2 = Vec::with_capacity(total);
        let mut mask = Vec::with_capacity(total);
        for flat in 0..total {
            let mut kv = [0i64; 3];
            let mut rem = flat;
            for axis in (0..dim).rev() {
                let j = rem % n;
                rem /= n;
                kv[axis] = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
            }
            let m: i64 = kv.iter().map(|k| k * k).sum();
            k2.push(m as f64 / (l_box * l_box));
            mask.push(kv[..dim].iter().all(|&k| (k.abs() as f64) <= cutoff));
            int_k.push(kv);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            dim,
            n,
            l_box,
            dealias_fraction,
            int_k,
            k2,
            mask,
            forward,
            inverse,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_box(&self) -> f64 {
        self.l_box
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of grid points (equivalently, of stored Fourier modes).
    pub fn len(&self) -> usize {
        self.int_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.int_k.is_empty()
    }

    /// Volume of the periodic box, `(2π L_box)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI * self.l_box).powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Grid spacing along any axis.
    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.l_box / self.n as f64
    }

    pub fn int_wavevector(&self, idx: usize) -> [i64; 3] {
        self.int_k[idx]
    }

    /// Physical wavenumber component along `axis` (zero for `axis >= dim`).
    #[inline]
    pub fn k(&self, idx: usize, axis: usize) -> f64 {
        if axis >= self.dim {
            0.0
        } else {
            self.int_k[idx][axis] as f64 / self.l_box
        }
    }

    /// Wavenumber used for differentiation along `axis`. The Nyquist mode is
    /// its own conjugate partner, so its derivative is zero on the grid.
    #[inline]
    pub fn k_deriv(&self, idx: usize, axis: usize) -> f64 {
        if axis >= self.dim {
            return 0.0;
        }
        let kk = self.int_k[idx][axis];
        if kk == (self.n / 2) as i64 {
            0.0
        } else {
            kk as f64 / self.l_box
        }
    }

    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    #[inline]
    pub fn kabs(&self, idx: usize) -> f64 {
        self.k2[idx].sqrt()
    }

    pub fn k2_all(&self) -> &[f64] {
        &self.k2
    }

    #[inline]
    pub fn retained(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Index of the mode with the given integer wavevector, if it is stored.
    pub fn index_of(&self, kv: &[i64]) -> Option<usize> {
        if kv.len() != self.dim {
            return None;
        }
        let n = self.n as i64;
        let mut flat = 0usize;
        for &k in kv {
            if k <= -n / 2 || k > n / 2 {
                return None;
            }
            let j = k.rem_euclid(n) as usize;
            flat = flat * self.n + j;
        }
        Some(flat)
    }

    /// Index of the conjugate partner `-k` of mode `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let mut flat = 0usize;
        let mut rem = idx;
        let mut digits = [0usize; 3];
        for axis in (0..self.dim).rev() {
            digits[axis] = rem % self.n;
            rem /= self.n;
        }
        for &j in digits.iter().take(self.dim) {
            flat = flat * self.n + (self.n - j) % self.n;
        }
        flat
    }

    /// Physical coordinate of grid point `idx` along `axis`.
    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        let stride = self.n.pow((self.dim - 1 - axis) as u32);
        let j = (idx / stride) % self.n;
        j as f64 * self.spacing()
    }

    /// Largest `|k|` over stored modes.
    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * (self.dim as f64).sqrt() / self.l_box
    }

    /// Smallest nonzero `|k|`.
    pub fn k_min(&self) -> f64 {
        1.0 / self.l_box
    }

    /// Forward transform, normalised so that a constant `c` maps to `c` at `k = 0`.
    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.fft_nd(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Unnormalised inverse transform (synthesis from coefficients).
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.fft_nd(data, &self.inverse);
    }

    fn fft_nd(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = self.len() / (n * stride);
            for o in 0..outer {
                let base = o * n * stride;
                for inner in 0..stride {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + inner + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + inner + j * stride] = *v;
                    }
                }
            }
        }
    }
}
