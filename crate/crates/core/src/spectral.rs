//! Spectral differential operators, projections and cutoffs.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{RealField, Shape, SpectralField};
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Forward transform of physical samples, one array per component.
pub fn transform_forward(grid: &Arc<Grid>, shape: Shape, data: Vec<Vec<f64>>) -> Result<SpectralField> {
    Ok(RealField::new(grid, shape, data)?.to_spectral())
}

/// Physical samples of a spectral field.
pub fn transform_inverse(f: &SpectralField) -> RealField {
    f.to_real()
}

/// Gradient along the domain axes; appends an axis of length `d`.
pub fn gradient(f: &SpectralField) -> SpectralField {
    gradient_padded(f, f.grid().dim())
}

/// Gradient with the appended axis padded to `width` entries; derivatives
/// along axes the domain does not have are zero.
pub fn gradient_padded(f: &SpectralField, width: usize) -> SpectralField {
    let g = f.grid().clone();
    let mut out = Vec::with_capacity(f.n_components() * width);
    for comp in f.components() {
        for axis in 0..width {
            let c: Vec<Complex64> = comp
                .iter()
                .enumerate()
                .map(|(i, &z)| I * g.k_deriv(i, axis) * z)
                .collect();
            out.push(c);
        }
    }
    SpectralField::from_coeffs(&g, f.shape().append(width), out).expect("gradient shape")
}

/// Partial derivative of every component along one axis.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    let g = f.grid().clone();
    f.map_coeffs(|_, i, z| I * g.k_deriv(i, axis) * z)
}

/// Contraction of the last tensor index with the gradient:
/// `(∇·M)_{…} = Σ_β ∂_β M_{…β}`.
pub fn divergence(f: &SpectralField) -> Result<SpectralField> {
    let dims = f.shape().dims();
    if dims.is_empty() {
        return Err(Error::ShapeMismatch("divergence of a scalar field".into()));
    }
    let m = *dims.last().unwrap();
    let out_shape = Shape::from_dims(dims[..dims.len() - 1].to_vec());
    let g = f.grid().clone();
    let outer = out_shape.size();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g.len()]; outer];
    for (o, acc) in out.iter_mut().enumerate() {
        for beta in 0..m.min(g.dim()) {
            let comp = f.component(o * m + beta);
            for (i, a) in acc.iter_mut().enumerate() {
                *a += I * g.k_deriv(i, beta) * comp[i];
            }
        }
    }
    SpectralField::from_coeffs(&g, out_shape, out)
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    f.apply_multiplier(|i| -g.k2(i))
}

/// Leray projection `v̂ ↦ v̂ − k (k·v̂)/|k|²`; the mean mode passes through.
/// Components beyond the domain dimension carry no wavenumber and are untouched.
pub fn leray_project(v: &SpectralField) -> Result<SpectralField> {
    let dims = v.shape().dims();
    if dims.len() != 1 {
        return Err(Error::ShapeMismatch(format!("Leray projection needs a vector field, got {}", v.shape())));
    }
    let m = dims[0];
    let g = v.grid().clone();
    let d = g.dim().min(m);
    let mut out: Vec<Vec<Complex64>> = v.components().to_vec();
    for i in 0..g.len() {
        let k2: f64 = (0..d).map(|a| g.k_deriv(i, a).powi(2)).sum();
        if k2 == 0.0 {
            continue;
        }
        let mut kv = Complex64::new(0.0, 0.0);
        for (a, comp) in out.iter().enumerate().take(d) {
            kv += comp[i] * g.k_deriv(i, a);
        }
        let s = kv / k2;
        for (a, comp) in out.iter_mut().enumerate().take(d) {
            comp[i] -= s * g.k_deriv(i, a);
        }
    }
    SpectralField::from_coeffs(&g, v.shape().clone(), out)
}

/// Sharp annular truncation: keeps modes with `2^{-n} ≤ |k| ≤ 2^n`.
pub fn spectral_cutoff_jn(f: &SpectralField, n: u32) -> SpectralField {
    let g = f.grid().clone();
    let lo = 2f64.powi(-(n as i32));
    let hi = 2f64.powi(n as i32);
    // Compare squared magnitudes with a relative slack so that modes lying
    // exactly on a dyadic radius are kept.
    let lo2 = lo * lo * (1.0 - 1e-12);
    let hi2 = hi * hi * (1.0 + 1e-12);
    f.apply_multiplier(|i| {
        let k2 = g.k2(i);
        if k2 >= lo2 && k2 <= hi2 {
            1.0
        } else {
            0.0
        }
    })
}

/// Zero every mode outside the dealias mask.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    f.apply_multiplier(|i| if g.retained(i) { 1.0 } else { 0.0 })
}

/// Largest coefficient magnitude outside the dealias mask.
pub fn mask_leak(f: &SpectralField) -> f64 {
    let g = f.grid();
    f.components()
        .iter()
        .flat_map(|c| c.iter().enumerate())
        .filter(|(i, _)| !g.retained(*i))
        .fold(0.0, |m: f64, (_, z)| m.max(z.norm()))
}

/// `L²` inner product summed over components: `V Σ Re(f̂ conj ĝ)`.
pub fn l2_inner(f: &SpectralField, g: &SpectralField) -> f64 {
    assert_eq!(f.shape(), g.shape(), "inner product shape mismatch");
    let s: f64 = f
        .components()
        .iter()
        .zip(g.components())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
        .sum();
    s * f.grid().volume()
}

/// Homogeneous `Ḣ^s` inner product by the direct multiplier `|k|^{2s}`;
/// the zero mode is excluded.
pub fn hdot_inner(f: &SpectralField, g: &SpectralField, s: f64) -> f64 {
    assert_eq!(f.shape(), g.shape(), "inner product shape mismatch");
    let grid = f.grid();
    let w: Vec<f64> = (0..grid.len())
        .map(|i| {
            let k2 = grid.k2(i);
            if k2 == 0.0 {
                0.0
            } else {
                k2.powf(s)
            }
        })
        .collect();
    let sum: f64 = f
        .components()
        .iter()
        .zip(g.components())
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .zip(&w)
                .map(|((x, y), wi)| wi * (x * y.conj()).re)
                .sum::<f64>()
        })
        .sum();
    sum * grid.volume()
}

/// Direct-multiplier homogeneous Sobolev norm `(V Σ_{k≠0} |k|^{2s} |f̂|²)^{1/2}`.
pub fn hdot_norm(f: &SpectralField, s: f64) -> f64 {
    hdot_inner(f, f, s).max(0.0).sqrt()
}

/// Relative size of the divergence of a vector field.
pub fn divergence_defect(v: &SpectralField) -> f64 {
    let div = divergence(v).expect("vector field");
    let nv = v.l2_norm();
    if nv == 0.0 {
        0.0
    } else {
        div.l2_norm() / nv
    }
}
