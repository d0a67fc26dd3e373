//! Constitutive terms of the Q-tensor / Navier–Stokes system.
//!
//! Conventions: `(∇u)_{αβ} = ∂_β u_α`, `D = ½(∇u + ∇uᵀ)`,
//! `Ω = ½(∇u − ∇uᵀ)`, `(∇Q⊙∇Q)_{ij} = ∂_i Q_{αβ} ∂_j Q_{αβ}` and the
//! divergence of a matrix contracts its last index. Matrices have size
//! `d_target`, which may exceed the domain dimension; derivatives along the
//! missing axes vanish.
//!
//! Every pointwise product is formed in physical space and dealiased before it
//! enters the next product.

use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{RealField, Shape, SpectralField};
use crate::grid::Grid;
use crate::spectral;
use crate::tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub l: f64,
    pub gamma: f64,
    pub nu: f64,
    pub lambda: f64,
    pub xi: f64,
    pub d_target: usize,
    /// Advisory threshold for `|ξ|`; `+∞` disables the warning.
    pub xi0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            a: -0.2,
            b: 1.0,
            c: 1.0,
            l: 1.0,
            gamma: 1.0,
            nu: 1.0,
            lambda: 1.0,
            xi: 0.3,
            d_target: 2,
            xi0: f64::INFINITY,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        // c = 0 is accepted as the degenerate limit used by the heat-flow checks.
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::InvalidParameter(format!("c must be nonnegative, got {}", self.c)));
        }
        let positive = [
            ("L", self.l),
            ("Gamma", self.gamma),
            ("nu", self.nu),
            ("lambda", self.lambda),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("xi", self.xi)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.d_target == 2 || self.d_target == 3) {
            return Err(Error::InvalidParameter(format!(
                "target dimension must be 2 or 3, got {}",
                self.d_target
            )));
        }
        if self.xi0.is_nan() || self.xi0 < 0.0 {
            return Err(Error::InvalidParameter(format!("xi0 must be nonnegative, got {}", self.xi0)));
        }
        Ok(())
    }

    /// True when `|ξ|` exceeds the configured smallness threshold.
    pub fn xi_exceeds_threshold(&self) -> bool {
        self.xi.abs() > self.xi0
    }

    /// Validate and log a warning when `|ξ|` exceeds the threshold.
    pub fn check(&self) -> Result<()> {
        self.validate()?;
        if self.xi_exceeds_threshold() {
            log::warn!(
                "|xi| = {} exceeds the configured threshold xi0 = {}; the energy-based a priori bounds are not guaranteed",
                self.xi.abs(),
                self.xi0
            );
        }
        Ok(())
    }

    /// Smallest `M ≥ 0` (up to a bisection tolerance) such that
    /// `(M + a)/2 tr Q² − b/3 tr Q³ + c/8 tr² Q² ≥ 0` on a sampled range of
    /// Q-tensors. For `d_target = 3` the samples are uniaxial with either sign
    /// of the cubic invariant, which attain the extremes of `tr Q³` at fixed
    /// `tr Q²`; in two dimensions `tr Q³ = 0`. This is a numerical search, not
    /// a closed form.
    pub fn shift_constant_m(&self) -> f64 {
        let samples: Vec<(f64, f64)> = (0..=2000)
            .flat_map(|j| {
                let s = 10f64.powf(-6.0 + 12.0 * j as f64 / 2000.0);
                let t = if self.d_target == 3 { s.powf(1.5) / 6f64.sqrt() } else { 0.0 };
                [(s, t), (s, -t)]
            })
            .collect();
        let ok = |m: f64| {
            samples
                .iter()
                .all(|&(s, t)| 0.5 * (m + self.a) * s - self.b / 3.0 * t + self.c / 8.0 * s * s >= 0.0)
        };
        if ok(0.0) {
            return 0.0;
        }
        let mut hi = 1.0;
        while !ok(hi) {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
        }
        hi
    }
}

/// Symmetric trace-free `d_target × d_target` matrix field.
#[derive(Debug, Clone)]
pub struct QTensorField(SpectralField);

impl QTensorField {
    /// Wrap a matrix field, checking shape, symmetry and trace to `tol`
    /// relative to the field's L² norm.
    pub fn new(f: SpectralField, tol: f64) -> Result<Self> {
        Self::check_shape(&f)?;
        let r = f.to_real();
        let sym = tensor::symmetry_defect(&r);
        let tr = tensor::trace_defect(&r);
        if sym > tol || tr > tol {
            return Err(Error::Precondition(format!(
                "Q must be symmetric and trace-free (symmetry defect {sym:e}, trace defect {tr:e})"
            )));
        }
        Ok(QTensorField(f))
    }

    /// Symmetrize, remove the trace and dealias, coefficient-wise.
    pub fn project(f: SpectralField) -> Result<Self> {
        Self::check_shape(&f)?;
        let m = f.shape().dims()[0];
        let g = f.grid().clone();
        let src = f.components();
        let mut out = vec![vec![num_complex::Complex64::new(0.0, 0.0); g.len()]; m * m];
        for i in 0..g.len() {
            if !g.retained(i) {
                continue;
            }
            let tr: num_complex::Complex64 = (0..m).map(|a| src[a * m + a][i]).sum::<num_complex::Complex64>() / m as f64;
            for a in 0..m {
                for b in 0..m {
                    let mut v = 0.5 * (src[a * m + b][i] + src[b * m + a][i]);
                    if a == b {
                        v -= tr;
                    }
                    out[a * m + b][i] = v;
                }
            }
        }
        Ok(QTensorField(SpectralField::from_coeffs(&g, f.shape().clone(), out)?))
    }

    pub fn zeros(grid: &Arc<Grid>, m: usize) -> Self {
        QTensorField(SpectralField::zeros(grid, Shape::matrix(m, m)))
    }

    fn check_shape(f: &SpectralField) -> Result<()> {
        if !f.shape().is_square_matrix() || !(2..=3).contains(&f.shape().dims()[0]) {
            return Err(Error::ShapeMismatch(format!("Q must be a 2x2 or 3x3 field, got {}", f.shape())));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.0.shape().dims()[0]
    }

    pub fn inner(&self) -> &SpectralField {
        &self.0
    }

    pub fn into_inner(self) -> SpectralField {
        self.0
    }
}

impl Deref for QTensorField {
    type Target = SpectralField;
    fn deref(&self) -> &SpectralField {
        &self.0
    }
}

/// Divergence-free velocity with `d_target` components.
#[derive(Debug, Clone)]
pub struct VelocityField(SpectralField);

impl VelocityField {
    /// Wrap a vector field after checking that its divergence is below `tol`
    /// relative to its norm.
    pub fn new(f: SpectralField, tol: f64) -> Result<Self> {
        Self::check_shape(&f)?;
        let defect = spectral::divergence_defect(&f);
        if defect > tol {
            return Err(Error::Precondition(format!("velocity divergence defect {defect:e} exceeds {tol:e}")));
        }
        Ok(VelocityField(f))
    }

    /// Leray-project and dealias.
    pub fn project(f: SpectralField) -> Result<Self> {
        Self::check_shape(&f)?;
        Ok(VelocityField(spectral::dealias(&spectral::leray_project(&f)?)))
    }

    pub fn zeros(grid: &Arc<Grid>, m: usize) -> Self {
        VelocityField(SpectralField::zeros(grid, Shape::vector(m)))
    }

    fn check_shape(f: &SpectralField) -> Result<()> {
        let dims = f.shape().dims();
        if dims.len() != 1 || !(2..=3).contains(&dims[0]) || dims[0] < f.grid().dim() {
            return Err(Error::ShapeMismatch(format!(
                "velocity needs between d and 3 components, got {}",
                f.shape()
            )));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.0.shape().dims()[0]
    }

    pub fn inner(&self) -> &SpectralField {
        &self.0
    }

    pub fn into_inner(self) -> SpectralField {
        self.0
    }
}

impl Deref for VelocityField {
    type Target = SpectralField;
    fn deref(&self) -> &SpectralField {
        &self.0
    }
}

/// Velocity gradient and its symmetric and antisymmetric parts, in physical space.
#[derive(Debug, Clone)]
pub struct StrainRotation {
    pub grad: RealField,
    pub d: RealField,
    pub omega: RealField,
}

impl StrainRotation {
    pub fn from_velocity(u: &SpectralField) -> Self {
        let m = u.shape().dims()[0];
        let grad = spectral::gradient_padded(u, m).to_real();
        Self::from_gradient(grad)
    }

    pub fn from_gradient(grad: RealField) -> Self {
        let d = tensor::sym_part(&grad);
        let omega = tensor::antisym_part(&grad);
        StrainRotation { grad, d, omega }
    }
}

fn dealiased(r: RealField) -> RealField {
    r.dealias()
}

/// Non-Laplacian part of the molecular field, in physical space:
/// `−aQ + b[Q² − tr(Q²)/d Id] − cQ tr(Q²)`.
pub fn bulk_force_real(q: &RealField, p: &ModelParams) -> RealField {
    let m = q.shape.dims()[0];
    let q2 = dealiased(tensor::matmul(q, q));
    let t2 = tensor::trace(&q2);
    let b_term = tensor::add_scalar_identity(&q2, &t2.scale(-1.0 / m as f64));
    let c_term = dealiased(tensor::scale_by(&t2, q));
    q.scale(-p.a).axpy(p.b, &b_term).axpy(-p.c, &c_term)
}

pub fn bulk_force_f(q: &SpectralField, p: &ModelParams) -> SpectralField {
    bulk_force_real(&q.to_real(), p).to_spectral_dealiased()
}

/// `H = LΔQ + F(Q)`.
pub fn molecular_field_h(q: &SpectralField, p: &ModelParams) -> SpectralField {
    spectral::laplacian(q).scale(p.l).add(&bulk_force_f(q, p))
}

/// Flow-alignment term
/// `(ξD+Ω)(Q+Id/d) + (Q+Id/d)(ξD−Ω) − 2ξ(Q+Id/d) tr(Q∇u)`, physical space.
pub fn alignment_s_real(sr: &StrainRotation, q: &RealField, p: &ModelParams) -> RealField {
    let m = q.shape.dims()[0];
    let pq = tensor::add_identity(q, 1.0 / m as f64);
    let left = sr.d.scale(p.xi).add(&sr.omega);
    let right = sr.d.scale(p.xi).sub(&sr.omega);
    let s1 = dealiased(tensor::matmul(&left, &pq));
    let s2 = dealiased(tensor::matmul(&pq, &right));
    let tr = dealiased(tensor::trace_product(q, &sr.grad));
    let s3 = dealiased(tensor::scale_by(&tr, &pq));
    s1.add(&s2).axpy(-2.0 * p.xi, &s3)
}

pub fn alignment_s(u: &SpectralField, q: &SpectralField, p: &ModelParams) -> SpectralField {
    let sr = StrainRotation::from_velocity(u);
    alignment_s_real(&sr, &q.to_real(), p).to_spectral_dealiased()
}

/// `(∇Q⊙∇Q)_{ij} = Σ_{αβ} ∂_i Q_{αβ} ∂_j Q_{αβ}` from a padded gradient
/// (shape `m×m×m`, last axis the derivative direction).
pub fn grad_q_odot(grad_q: &RealField) -> RealField {
    let m = grad_q.shape.dims()[0];
    let mut out = RealField::zeros(&grad_q.grid, Shape::matrix(m, m));
    for i in 0..m {
        for j in i..m {
            let mut acc = vec![0.0; grad_q.len()];
            for ab in 0..m * m {
                let x = &grad_q.data[ab * m + i];
                let y = &grad_q.data[ab * m + j];
                for ((a, xv), yv) in acc.iter_mut().zip(x).zip(y) {
                    *a += xv * yv;
                }
            }
            if i != j {
                out.data[j * m + i] = acc.clone();
            }
            out.data[i * m + j] = acc;
        }
    }
    out
}

/// Symmetric stress
/// `τ = −ξ(Q+Id/d)H − ξH(Q+Id/d) + 2ξ(Q+Id/d) tr(QH) − L ∇Q⊙∇Q`.
pub fn stress_tau_real(q: &RealField, h: &RealField, grad_q: &RealField, p: &ModelParams) -> RealField {
    let m = q.shape.dims()[0];
    let pq = tensor::add_identity(q, 1.0 / m as f64);
    let mut tau = dealiased(grad_q_odot(grad_q)).scale(-p.l);
    if p.xi != 0.0 {
        let t1 = dealiased(tensor::matmul(&pq, h));
        let t2 = dealiased(tensor::matmul(h, &pq));
        let tr = dealiased(tensor::trace_product(q, h));
        let t3 = dealiased(tensor::scale_by(&tr, &pq));
        tau = tau.axpy(-p.xi, &t1).axpy(-p.xi, &t2).axpy(2.0 * p.xi, &t3);
    }
    tau
}

pub fn stress_tau(q: &SpectralField, h: &SpectralField, p: &ModelParams) -> SpectralField {
    let m = q.shape().dims()[0];
    let grad_q = spectral::gradient_padded(q, m).to_real();
    stress_tau_real(&q.to_real(), &h.to_real(), &grad_q, p).to_spectral_dealiased()
}

/// Antisymmetric stress `σ = QH − HQ`, physical space.
pub fn stress_sigma_real(q: &RealField, h: &RealField) -> RealField {
    dealiased(tensor::matmul(q, h).sub(&tensor::matmul(h, q)))
}

pub fn stress_sigma(q: &SpectralField, h: &SpectralField) -> SpectralField {
    stress_sigma_real(&q.to_real(), &h.to_real()).to_spectral_dealiased()
}

/// `‖∇f‖²_{L²}` by Parseval, summed over components.
pub fn grad_norm_sq(f: &SpectralField) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .components()
        .iter()
        .map(|c| c.iter().enumerate().map(|(i, z)| g.k2(i) * z.norm_sqr()).sum::<f64>())
        .sum();
    s * g.volume()
}

/// Bulk potential `∫ a/2 tr Q² − b/3 tr Q³ + c/4 tr² Q²` by grid quadrature.
pub fn bulk_potential(q: &RealField, p: &ModelParams) -> f64 {
    let q2 = tensor::matmul(q, q);
    let t2 = tensor::trace(&q2);
    let t3 = tensor::trace_product(&q2, q);
    let dv = q.grid.cell_volume();
    let mut acc = 0.0;
    for (s, t) in t2.data[0].iter().zip(&t3.data[0]) {
        acc += 0.5 * p.a * s - p.b / 3.0 * t + 0.25 * p.c * s * s;
    }
    acc * dv
}

/// `F_e(Q) = ∫ L/2 |∇Q|² + a/2 tr Q² − b/3 tr Q³ + c/4 tr² Q²`.
pub fn free_energy(q: &SpectralField, p: &ModelParams) -> f64 {
    0.5 * p.l * grad_norm_sq(q) + bulk_potential(&q.to_real(), p)
}

/// `½‖u‖²_{L²}`.
pub fn kinetic_energy(u: &SpectralField) -> f64 {
    0.5 * u.l2_norm().powi(2)
}

/// `E = ½‖u‖² + λ F_e(Q)`.
pub fn total_energy_e(q: &SpectralField, u: &SpectralField, p: &ModelParams) -> f64 {
    kinetic_energy(u) + p.lambda * free_energy(q, p)
}

/// `(ν‖∇u‖², Γλ‖H‖²)`.
pub fn dissipation_rate(q: &SpectralField, u: &SpectralField, p: &ModelParams) -> (f64, f64) {
    let visc = p.nu * grad_norm_sq(u);
    let h = molecular_field_h(q, p);
    let rot = p.gamma * p.lambda * h.l2_norm().powi(2);
    (visc, rot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn const_matrix(g: &Arc<Grid>, m: usize, vals: &[f64]) -> SpectralField {
        RealField::from_fn(g, Shape::matrix(m, m), |c, _| vals[c]).to_spectral()
    }

    fn low_mode_field(g: &Arc<Grid>, shape: Shape, seed: u64, kmax: i64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = shape.size();
        let mut coeffs: Vec<Vec<(i64, i64, f64, f64)>> = vec![Vec::new(); comps];
        for c in coeffs.iter_mut() {
            for kx in -kmax..=kmax {
                for ky in -kmax..=kmax {
                    c.push((kx, ky, rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)));
                }
            }
        }
        RealField::from_fn(g, shape, |c, x| {
            coeffs[c]
                .iter()
                .map(|&(kx, ky, a, b)| {
                    let ph = (kx as f64 * x[0] + ky as f64 * x[1]) / g.l_box();
                    a * ph.cos() + b * ph.sin()
                })
                .sum()
        })
        .to_spectral()
    }

    fn random_q(g: &Arc<Grid>, m: usize, seed: u64) -> SpectralField {
        QTensorField::project(low_mode_field(g, Shape::matrix(m, m), seed, 3))
            .unwrap()
            .into_inner()
    }

    fn random_u(g: &Arc<Grid>, m: usize, seed: u64) -> SpectralField {
        VelocityField::project(low_mode_field(g, Shape::vector(m), seed, 3))
            .unwrap()
            .into_inner()
    }

    fn naive_matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out[i * m + j] += a[i * m + k] * b[k * m + j];
                }
            }
        }
        out
    }

    #[test]
    fn params_validation() {
        let mut p = ModelParams::default();
        assert!(p.validate().is_ok());
        p.c = -1.0;
        assert!(ModelParams { c: 0.0, ..ModelParams::default() }.validate().is_ok());
        assert!(p.validate().is_err());
        p = ModelParams { d_target: 4, ..ModelParams::default() };
        assert!(p.validate().is_err());
        p = ModelParams { xi0: 0.1, ..ModelParams::default() };
        assert!(p.xi_exceeds_threshold());
        assert!(p.check().is_ok());
    }

    #[test]
    fn bulk_force_two_by_two_cayley_hamilton() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let (q1, q2) = (0.3, -0.7);
        let p = ModelParams { a: 0.4, b: 2.0, c: 1.5, ..ModelParams::default() };
        let q = const_matrix(&g, 2, &[q1, q2, q2, -q1]);
        let f = bulk_force_f(&q, &p).to_real();
        let s = q1 * q1 + q2 * q2;
        let expect = [q1, q2, q2, -q1].map(|v| -p.a * v - 2.0 * p.c * s * v);
        for c in 0..4 {
            assert!(f.data[c].iter().all(|v| (v - expect[c]).abs() < 1e-14));
        }
    }

    #[test]
    fn bulk_force_unit_diagonal() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let p = ModelParams { a: 1.0, b: 1.0, c: 1.0, ..ModelParams::default() };
        let q = const_matrix(&g, 2, &[1.0, 0.0, 0.0, -1.0]);
        let f = bulk_force_f(&q, &p).to_real();
        // −Q + (Q² − Id) − 2Q with Q² = Id.
        for (c, e) in [-3.0, 0.0, 0.0, 3.0].iter().enumerate() {
            assert!(f.data[c].iter().all(|v| (v - e).abs() < 1e-14));
        }
    }

    #[test]
    fn bulk_force_three_by_three_matches_matrix_oracle() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let p = ModelParams { a: 0.7, b: 1.3, c: 0.9, d_target: 3, ..ModelParams::default() };
        let v = [0.2, 0.1, -0.3, 0.1, 0.5, 0.25, -0.3, 0.25, -0.7];
        let q = const_matrix(&g, 3, &v);
        let q2 = naive_matmul(&v, &v, 3);
        let t2 = q2[0] + q2[4] + q2[8];
        let f = bulk_force_f(&q, &p).to_real();
        for c in 0..9 {
            let id = if c % 4 == 0 { 1.0 } else { 0.0 };
            let e = -p.a * v[c] + p.b * (q2[c] - t2 / 3.0 * id) - p.c * v[c] * t2;
            assert!(f.data[c].iter().all(|x| (x - e).abs() < 1e-14));
        }
    }

    #[test]
    fn molecular_field_examples() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let zero = ModelParams { a: 0.0, b: 0.0, c: 0.0, l: 2.0, ..ModelParams::default() };
        // Single mode Q = cos(2x + y) diag(1,−1): ΔQ = −5Q.
        let q = RealField::from_fn(&g, Shape::matrix(2, 2), |c, x| {
            let s = (2.0 * x[0] + x[1]).cos();
            [s, 0.0, 0.0, -s][c]
        })
        .to_spectral();
        let h = molecular_field_h(&q, &zero);
        assert!(h.sub(&q.scale(-10.0)).l2_norm() < 1e-12 * h.l2_norm());
        let p = ModelParams::default();
        let qc = const_matrix(&g, 2, &[0.2, 0.1, 0.1, -0.2]);
        let hc = molecular_field_h(&qc, &p);
        assert!(hc.sub(&bulk_force_f(&qc, &p)).l2_norm() < 1e-15);
    }

    #[test]
    fn alignment_examples() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let p = ModelParams { xi: 0.0, ..ModelParams::default() };
        let q = random_q(&g, 2, 1);
        let u0 = SpectralField::zeros(&g, Shape::vector(2));
        assert_eq!(alignment_s(&u0, &q, &ModelParams::default()).l2_norm(), 0.0);

        // ξ = 0 gives the co-rotation commutator ΩQ − QΩ.
        let u = random_u(&g, 2, 2);
        let s = alignment_s(&u, &q, &p);
        let sr = StrainRotation::from_velocity(&u);
        let qr = q.to_real();
        let comm = tensor::matmul(&sr.omega, &qr).sub(&tensor::matmul(&qr, &sr.omega));
        assert!(s.sub(&comm.to_spectral_dealiased()).l2_norm() < 1e-13 * s.l2_norm());

        // Q = 0: only the 2ξ/d D term survives.
        let pxi = ModelParams::default();
        let sq0 = alignment_s(&u, &SpectralField::zeros(&g, Shape::matrix(2, 2)), &pxi);
        let d = sr.d.to_spectral().scale(2.0 * pxi.xi / 2.0);
        assert!(sq0.sub(&d).l2_norm() < 1e-14 * d.l2_norm());
    }

    #[test]
    fn rigid_rotation_alignment() {
        // The gradient of u = (−x₂, x₁) is [[0,−1],[1,0]]; a linear field is
        // not periodic, so the gradient is supplied directly.
        let g = Grid::new(2, 8, 1.0).unwrap();
        let grad = RealField::from_fn(&g, Shape::matrix(2, 2), |c, _| [0.0, -1.0, 1.0, 0.0][c]);
        let sr = StrainRotation::from_gradient(grad);
        let qv = [0.4, 0.3, 0.3, -0.4];
        let q = RealField::from_fn(&g, Shape::matrix(2, 2), |c, _| qv[c]);
        let p = ModelParams::default();
        let s = alignment_s_real(&sr, &q, &p);
        // ΩQ − QΩ with Ω = [[0,−1],[1,0]]: [[−2q₂, 2q₁],[2q₁, 2q₂]].
        let expect = [-0.6, 0.8, 0.8, 0.6];
        for c in 0..4 {
            assert!(s.data[c].iter().all(|v| (v - expect[c]).abs() < 1e-14));
        }
    }

    #[test]
    fn stress_examples() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let p0 = ModelParams { xi: 0.0, ..ModelParams::default() };
        let qc = const_matrix(&g, 2, &[0.2, 0.1, 0.1, -0.2]);
        let hc = molecular_field_h(&qc, &p0);
        assert!(stress_tau(&qc, &hc, &p0).l2_norm() < 1e-15);
        let qz = SpectralField::zeros(&g, Shape::matrix(2, 2));
        let hz = molecular_field_h(&qz, &ModelParams::default());
        assert_eq!(stress_tau(&qz, &hz, &ModelParams::default()).l2_norm(), 0.0);
        assert_eq!(stress_sigma(&qz, &hz).l2_norm(), 0.0);

        // ξ = 0: tr τ = −L|∇Q|² pointwise.
        let q = random_q(&g, 2, 7);
        let h = molecular_field_h(&q, &p0);
        let tau = stress_tau(&q, &h, &p0).to_real();
        let gq = spectral::gradient(&q).to_real();
        let grad2 = gq.map(|v| v * v);
        let mut lhs = tensor::trace(&tau);
        let mut sumsq = RealField::zeros(&g, Shape::scalar());
        for c in &grad2.data {
            for (s, v) in sumsq.data[0].iter_mut().zip(c) {
                *s += v;
            }
        }
        let sumsq = sumsq.dealias().scale(-p0.l);
        lhs = lhs.sub(&sumsq);
        assert!(lhs.max_abs() < 1e-12 * sumsq.max_abs());
    }

    #[test]
    fn sigma_commuting_and_random() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let q = const_matrix(&g, 3, &[0.1, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, -0.4]);
        let h = const_matrix(&g, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]);
        assert!(stress_sigma(&q, &h).l2_norm() < 1e-15);
        let qv = [0.1, 0.2, 0.3, 0.2, -0.5, 0.4, 0.3, 0.4, 0.4];
        let hv = [1.0, -0.3, 0.2, -0.3, 0.5, 0.7, 0.2, 0.7, -1.5];
        let s = stress_sigma(&const_matrix(&g, 3, &qv), &const_matrix(&g, 3, &hv)).to_real();
        let qh = naive_matmul(&qv, &hv, 3);
        let hq = naive_matmul(&hv, &qv, 3);
        for c in 0..9 {
            assert!(s.data[c].iter().all(|v| (v - (qh[c] - hq[c])).abs() < 1e-14));
        }
        assert!(tensor::antisymmetry_defect(&s) < 1e-12);
    }

    #[test]
    fn energy_examples() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let p = ModelParams { a: 2.0, b: 0.0, c: 0.0, ..ModelParams::default() };
        let qv = [0.3, 0.2, 0.2, -0.3];
        let q = const_matrix(&g, 2, &qv);
        let trq2 = 2.0 * (0.09 + 0.04);
        let fe = free_energy(&q, &p);
        assert!((fe - g.volume() * trq2).abs() < 1e-12 * fe);
        let zq = SpectralField::zeros(&g, Shape::matrix(2, 2));
        let zu = SpectralField::zeros(&g, Shape::vector(2));
        assert_eq!(total_energy_e(&zq, &zu, &p), 0.0);
        assert_eq!(dissipation_rate(&zq, &zu, &p), (0.0, 0.0));

        // u = cos(x₁) e₂: E = V/4, visc = ν V/2.
        let u = RealField::from_fn(&g, Shape::vector(2), |c, x| if c == 1 { x[0].cos() } else { 0.0 }).to_spectral();
        let e = total_energy_e(&zq, &u, &p);
        assert!((e - g.volume() / 4.0).abs() < 1e-12 * e);
        let (visc, rot) = dissipation_rate(&zq, &u, &ModelParams { nu: 0.7, ..p });
        assert!((visc - 0.7 * g.volume() / 2.0).abs() < 1e-12 * visc);
        assert_eq!(rot, 0.0);
    }

    #[test]
    fn two_dimensional_degeneracy() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let q = random_q(&g, 2, 11).to_real();
        let q2 = tensor::matmul(&q, &q);
        let t3 = tensor::trace_product(&q2, &q);
        assert!(t3.max_abs() < 1e-14);
        let t2 = tensor::trace(&q2);
        let dev = tensor::add_scalar_identity(&q2, &t2.scale(-0.5));
        assert!(dev.max_abs() < 1e-14);
    }

    #[test]
    fn shift_constant_matches_closed_form() {
        // In 3D the uniaxial worst case gives M = max(0, −a + 4β²/c),
        // β = |b|/(3√6).
        for &(a, b, c) in &[(-0.2, 1.0, 1.0), (0.5, 3.0, 0.5), (1.0, 0.0, 1.0)] {
            let p = ModelParams { a, b, c, d_target: 3, ..ModelParams::default() };
            let beta = b.abs() / (3.0 * 6f64.sqrt());
            let expect = (-a + 4.0 * beta * beta / c).max(0.0);
            let m = p.shift_constant_m();
            assert!(m <= expect * (1.0 + 1e-9) && m >= expect * (1.0 - 1e-4), "a={a} b={b}: {m} vs {expect}");
        }
        let p2 = ModelParams { a: -0.2, ..ModelParams::default() };
        assert!((p2.shift_constant_m() - 0.2).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn outputs_keep_their_symmetry(seed in any::<u64>(), m in 2usize..=3) {
            let g = Grid::new(2, 16, 1.0).unwrap();
            let p = ModelParams { d_target: m, ..ModelParams::default() };
            let q = random_q(&g, m, seed);
            let u = random_u(&g, m, seed ^ 0x55);
            let f = bulk_force_f(&q, &p).to_real();
            prop_assert!(tensor::symmetry_defect(&f) < 1e-12);
            prop_assert!(tensor::trace_defect(&f) < 1e-12);
            let s = alignment_s(&u, &q, &p).to_real();
            prop_assert!(tensor::symmetry_defect(&s) < 1e-12);
            prop_assert!(tensor::trace_defect(&s) < 1e-12);
            let h = molecular_field_h(&q, &p);
            let tau = stress_tau(&q, &h, &p).to_real();
            prop_assert!(tensor::symmetry_defect(&tau) < 1e-12);
            let sig = stress_sigma(&q, &h).to_real();
            prop_assert!(tensor::antisymmetry_defect(&sig) < 1e-12);
        }

        #[test]
        fn molecular_field_is_free_energy_gradient(seed in any::<u64>(), m in 2usize..=3) {
            // F_e(Q + hδ) − F_e(Q) = −h⟨H, δ⟩ + O(h²). A small grid keeps the
            // quartic integrand resolved by the quadrature.
            let g = Grid::new(2, 32, 1.0).unwrap();
            let p = ModelParams { d_target: m, ..ModelParams::default() };
            let q = random_q(&g, m, seed);
            let dq = random_q(&g, m, seed.wrapping_add(1));
            let h = molecular_field_h(&q, &p);
            let slope = spectral::l2_inner(&h, &dq);
            let f0 = free_energy(&q, &p);
            let mut errs = Vec::new();
            for &step in &[1e-3, 1e-4] {
                let f1 = free_energy(&q.axpy(step, &dq), &p);
                errs.push((f1 - f0 + step * slope).abs());
            }
            let scale = slope.abs().max(f0.abs()).max(1.0);
            prop_assert!(errs[0] <= 1e-4 * scale, "{:?}", errs);
            prop_assert!(errs[1] <= 1e-6 * scale, "{:?}", errs);
        }
    }

    #[test]
    fn velocity_and_q_constructors_validate() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let phi = low_mode_field(&g, Shape::scalar(), 3, 3);
        let grad = spectral::gradient(&phi);
        assert!(VelocityField::new(grad.clone(), 1e-12).is_err());
        let u = VelocityField::project(grad).unwrap();
        assert!(u.l2_norm() < 1e-13);
        let bad = low_mode_field(&g, Shape::matrix(2, 2), 4, 2);
        assert!(QTensorField::new(bad.clone(), 1e-12).is_err());
        let ok = QTensorField::project(bad).unwrap();
        assert!(QTensorField::new(ok.into_inner(), 1e-12).is_ok());
    }
}
