//! Initial-condition generators.
//!
//! * `random-bandlimited`: independent Gaussian coefficients on every integer
//!   wavevector `n` with `0 < |n| ≤ k_max`, weighted by `|n|^{-slope}`, made
//!   Hermitian, projected onto the admissible set (Leray projection for
//!   velocities, symmetric trace-free part for Q) and rescaled to the requested
//!   root-mean-square amplitude. The draw order depends only on `n`, so the same
//!   seed produces the same field on every grid that resolves `k_max`.
//! * `taylor-green`: `u = U (sin(x₁/L) cos(x₂/L), −cos(x₁/L) sin(x₂/L), 0)`.
//! * `uniaxial-stripe`: `Q = s (n⊗n − Id/d)` with `n = (cos θ, sin θ, 0)` and
//!   `θ = θ₀ sin(x₁/L)`, where `L` is the box length parameter.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{RealField, Shape, SpectralField};
use crate::grid::Grid;
use crate::model::{QTensorField, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimitedSpec {
    pub seed: u64,
    /// Largest integer wavevector magnitude carrying energy.
    pub kmax: f64,
    /// Coefficient magnitude decays as `|n|^{-slope}`.
    pub slope: f64,
    /// Root-mean-square value of the generated field.
    pub amplitude: f64,
}

impl Default for BandLimitedSpec {
    fn default() -> Self {
        BandLimitedSpec {
            seed: 0,
            kmax: 4.0,
            slope: 1.0,
            amplitude: 0.1,
        }
    }
}

/// Half-space representative test: the first nonzero entry is positive.
fn is_representative(n: &[i64]) -> bool {
    n.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

/// Raw Hermitian random field of the given shape (no projection, no rescaling).
pub fn random_bandlimited_raw(grid: &Arc<Grid>, shape: Shape, spec: &BandLimitedSpec) -> Result<SpectralField> {
    if !(spec.kmax > 0.0 && spec.kmax.is_finite()) {
        return Err(Error::InvalidParameter(format!("kmax must be positive, got {}", spec.kmax)));
    }
    let cutoff = grid.dealias_fraction() * (grid.n() / 2) as f64;
    let kint = spec.kmax.floor() as i64;
    if kint as f64 > cutoff {
        return Err(Error::InvalidParameter(format!(
            "kmax {} exceeds the resolved band {cutoff:.2} of an N={} grid",
            spec.kmax,
            grid.n()
        )));
    }
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; shape.size()];
    let side = (2 * kint + 1) as usize;
    let total = side.pow(dim as u32);
    let mut n = vec![0i64; dim];
    for comp in coeffs.iter_mut() {
        for flat in 0..total {
            let mut rem = flat;
            for axis in (0..dim).rev() {
                n[axis] = (rem % side) as i64 - kint;
                rem /= side;
            }
            if !is_representative(&n) {
                continue;
            }
            let mag2: i64 = n.iter().map(|v| v * v).sum();
            let mag = (mag2 as f64).sqrt();
            if mag > spec.kmax {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(re, im) * mag.powf(-spec.slope);
            let i = grid.index_of(&n).expect("within band");
            let neg: Vec<i64> = n.iter().map(|v| -v).collect();
            let j = grid.index_of(&neg).expect("within band");
            comp[i] = z;
            comp[j] = z.conj();
        }
    }
    SpectralField::from_coeffs(grid, shape, coeffs)
}

fn rescale(f: SpectralField, amplitude: f64) -> SpectralField {
    // Mean of |f|² over the box equals the coefficient energy.
    let rms = f.coeff_energy().sqrt();
    if rms == 0.0 {
        f
    } else {
        f.scale(amplitude / rms)
    }
}

pub fn random_q(grid: &Arc<Grid>, m: usize, spec: &BandLimitedSpec) -> Result<QTensorField> {
    let raw = random_bandlimited_raw(grid, Shape::matrix(m, m), spec)?;
    let q = QTensorField::project(raw)?;
    QTensorField::project(rescale(q.into_inner(), spec.amplitude))
}

pub fn random_u(grid: &Arc<Grid>, m: usize, spec: &BandLimitedSpec) -> Result<VelocityField> {
    let raw = random_bandlimited_raw(grid, Shape::vector(m), spec)?;
    let u = VelocityField::project(raw)?;
    VelocityField::project(rescale(u.into_inner(), spec.amplitude))
}

/// Random scalar with zero mean.
pub fn random_scalar(grid: &Arc<Grid>, spec: &BandLimitedSpec) -> Result<SpectralField> {
    Ok(rescale(random_bandlimited_raw(grid, Shape::scalar(), spec)?, spec.amplitude))
}

pub fn taylor_green(grid: &Arc<Grid>, m: usize, amplitude: f64) -> Result<VelocityField> {
    let l = grid.l_box();
    let r = RealField::from_fn(grid, Shape::vector(m), |c, x| {
        let (x1, x2) = (x[0] / l, x[1] / l);
        match c {
            0 => amplitude * x1.sin() * x2.cos(),
            1 => -amplitude * x1.cos() * x2.sin(),
            _ => 0.0,
        }
    });
    VelocityField::project(r.to_spectral())
}

pub fn uniaxial_stripe(grid: &Arc<Grid>, m: usize, order: f64, theta0: f64) -> Result<QTensorField> {
    let l = grid.l_box();
    let r = RealField::from_fn(grid, Shape::matrix(m, m), |c, x| {
        let theta = theta0 * (x[0] / l).sin();
        let n = [theta.cos(), theta.sin(), 0.0];
        let (a, b) = (c / m, c % m);
        let id = if a == b { 1.0 / m as f64 } else { 0.0 };
        order * (n[a] * n[b] - id)
    });
    QTensorField::project(r.to_spectral())
}
