//! Mollification `R_ε f = (ε^{-d} χ(·/ε)) * f` with a fixed radial bump kernel.
//!
//! The kernel is `χ(x) ∝ exp(-1/(1-|x|²))` on the unit ball, normalised to unit
//! mass. Its Fourier multiplier is radial, so it is evaluated as the cosine
//! transform of the kernel's projection onto one axis,
//! `χ̂(κ) = ∫ A(s) cos(κ s) ds`, `A(s) = ∫ χ(s, y) dy` over the remaining axes.
//! The outer integrand vanishes to all orders at `s = ±1`, so the trapezoid
//! rule converges faster than any power; the inner integral uses Romberg
//! extrapolation.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

const PROJ_NODES: usize = 1024;

fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Radial multiplier of the unit-mass bump in dimension `dim`.
#[derive(Debug, Clone)]
pub struct BumpMultiplier {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl BumpMultiplier {
    pub fn new(dim: usize) -> Self {
        let h = 2.0 / PROJ_NODES as f64;
        let mut nodes = Vec::with_capacity(PROJ_NODES + 1);
        let mut weights = Vec::with_capacity(PROJ_NODES + 1);
        for j in 0..=PROJ_NODES {
            let s = -1.0 + j as f64 * h;
            nodes.push(s);
            weights.push(projection(dim, s) * h);
        }
        let mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= mass);
        BumpMultiplier { nodes, weights }
    }

    /// `χ̂(κ)` for `κ = |ξ|`, normalised so that `χ̂(0) = 1`.
    pub fn eval(&self, kappa: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (kappa * s).cos())
            .sum()
    }
}

/// Integral of the bump over the hyperplane `x₁ = s`.
fn projection(dim: usize, s: f64) -> f64 {
    let rmax2 = 1.0 - s * s;
    if rmax2 <= 0.0 {
        return 0.0;
    }
    match dim {
        2 => 2.0 * romberg(|y| bump(s * s + y * y), 0.0, rmax2.sqrt()),
        // Polar coordinates in the transverse plane, then w = 1 - s² - ρ².
        _ => std::f64::consts::PI * romberg(|w| if w > 0.0 { (-1.0 / w).exp() } else { 0.0 }, 0.0, rmax2),
    }
}

/// Romberg extrapolation of the trapezoid rule.
fn romberg(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const LEVELS: usize = 10;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    let mut h = b - a;
    table[0][0] = 0.5 * h * (f(a) + f(b));
    for i in 1..LEVELS {
        h *= 0.5;
        let count = 1usize << (i - 1);
        let mid: f64 = (0..count).map(|j| f(a + (2 * j + 1) as f64 * h)).sum();
        table[i][0] = 0.5 * table[i - 1][0] + h * mid;
        let mut factor = 1.0;
        for j in 1..=i {
            factor *= 4.0;
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
        }
    }
    table[LEVELS - 1][LEVELS - 1]
}

/// Mode-wise multiplier table for `R_ε` on a grid.
#[derive(Debug, Clone)]
pub struct Mollifier {
    eps: f64,
    grid: Arc<Grid>,
    table: Vec<f64>,
}

impl Mollifier {
    pub fn new(grid: &Arc<Grid>, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!("mollifier width must be positive, got {eps}")));
        }
        let profile = BumpMultiplier::new(grid.dim());
        let mut memo: HashMap<i64, f64> = HashMap::new();
        let table = (0..grid.len())
            .map(|i| {
                let kv = grid.int_wavevector(i);
                let m2: i64 = kv.iter().map(|k| k * k).sum();
                *memo
                    .entry(m2)
                    .or_insert_with(|| profile.eval(eps * (m2 as f64).sqrt() / grid.l_box()))
            })
            .collect();
        Ok(Mollifier {
            eps,
            grid: grid.clone(),
            table,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn multiplier(&self, idx: usize) -> f64 {
        self.table[idx]
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        assert!(**f.grid() == *self.grid, "mollifier grid mismatch");
        f.apply_multiplier(|i| self.table[i])
    }
}

/// One-shot `R_ε f`.
pub fn mollify_reps(f: &SpectralField, eps: f64) -> Result<SpectralField> {
    Ok(Mollifier::new(f.grid(), eps)?.apply(f))
}
