//! Right-hand sides of the Q and u equations.
//!
//! The stiff linear parts `ΓLΔQ` (optionally `−ΓaQ`) and `νΔu` are kept apart
//! from everything else so the stepper can integrate them exactly.

use std::sync::Arc;

use crate::error::Result;
use crate::field::{RealField, Shape, SpectralField};
use crate::grid::Grid;
use crate::mollifier::Mollifier;
use crate::model::{self, ModelParams, StrainRotation};
use crate::spectral;
use crate::tensor;

use super::{Regularization, SimState};

/// Operators used by the regularized right-hand side: `R_ε`, `J_n` and `ε`.
#[derive(Debug, Clone)]
pub struct Regularizer {
    pub mollifier: Mollifier,
    pub n: u32,
    pub eps: f64,
}

impl Regularizer {
    pub fn new(grid: &Arc<Grid>, reg: &Regularization) -> Result<Option<Self>> {
        if !reg.enabled {
            return Ok(None);
        }
        Ok(Some(Regularizer {
            mollifier: Mollifier::new(grid, reg.eps)?,
            n: reg.n,
            eps: reg.eps,
        }))
    }

    fn jn(&self, f: &SpectralField) -> SpectralField {
        spectral::spectral_cutoff_jn(f, self.n)
    }

    fn r(&self, f: &SpectralField) -> SpectralField {
        self.mollifier.apply(f)
    }
}

/// `(u·∇)Q` with a padded gradient of Q (`m×m×m`, last axis the derivative).
fn advect_matrix(u: &RealField, grad_q: &RealField) -> RealField {
    let m = u.shape.dims()[0];
    let mut out = RealField::zeros(&u.grid, Shape::matrix(m, m));
    for ab in 0..m * m {
        for g in 0..m {
            let dq = &grad_q.data[ab * m + g];
            for ((o, uv), dv) in out.data[ab].iter_mut().zip(&u.data[g]).zip(dq) {
                *o += uv * dv;
            }
        }
    }
    out
}

/// Nonlinear (explicitly treated) parts of the right-hand sides.
///
/// Returns `(N_Q, N_u)` with
/// `N_Q = Γ F(Q) + S(∇u, Q) − u·∇Q` (plus `ΓaQ` when `fold_a` moves `−ΓaQ`
/// into the linear part) and `N_u = 𝒫[−u·∇u + λ∇·(τ + σ)]`, or their
/// regularized counterparts when `reg` is given.
pub fn nonlinear(state: &SimState, p: &ModelParams, fold_a: bool, reg: Option<&Regularizer>) -> (SpectralField, SpectralField) {
    match reg {
        None => nonlinear_plain(state, p, fold_a),
        Some(r) => nonlinear_regularized(state, p, fold_a, r),
    }
}

fn folded_a(p: &ModelParams, fold_a: bool) -> f64 {
    if fold_a && p.a > 0.0 {
        p.a
    } else {
        0.0
    }
}

fn nonlinear_plain(state: &SimState, p: &ModelParams, fold_a: bool) -> (SpectralField, SpectralField) {
    let m = state.target_dim();
    let q = state.q.inner();
    let u = state.u.inner();
    let qr = q.to_real();
    let ur = u.to_real();
    let grad_q = spectral::gradient_padded(q, m).to_real();
    let sr = StrainRotation::from_velocity(u);

    let f = model::bulk_force_real(&qr, p).to_spectral_dealiased();
    let h = spectral::laplacian(q).scale(p.l).add(&f);
    let hr = h.to_real();

    let s = model::alignment_s_real(&sr, &qr, p);
    let adv_q = advect_matrix(&ur, &grad_q).dealias();
    let nq = s.sub(&adv_q).to_spectral_dealiased().axpy(p.gamma, &f);
    let nq = nq.axpy(p.gamma * folded_a(p, fold_a), q);

    let adv_u = tensor::matvec(&sr.grad, &ur);
    let tau = model::stress_tau_real(&qr, &hr, &grad_q, p);
    let sigma = model::stress_sigma_real(&qr, &hr);
    let stress = tau.add(&sigma).to_spectral_dealiased();
    let div = spectral::divergence(&stress).expect("matrix field");
    let nu = div.scale(p.lambda).sub(&adv_u.to_spectral_dealiased());
    let nu = spectral::leray_project(&nu).expect("vector field");
    (nq, nu)
}

fn nonlinear_regularized(
    state: &SimState,
    p: &ModelParams,
    fold_a: bool,
    reg: &Regularizer,
) -> (SpectralField, SpectralField) {
    let m = state.target_dim();
    let q = state.q.inner();
    let u = state.u.inner();
    let qr = q.to_real();
    let u_eps = reg.r(u);
    let ur_eps = u_eps.to_real();
    let grad_q = spectral::gradient_padded(q, m).to_real();
    let sr = StrainRotation::from_velocity(u);
    let sr_eps = StrainRotation::from_velocity(&u_eps);

    // H̄ = LΔQ − aQ + J_n[b(Q² − tr(Q²)/d Id) − cQ tr(Q²)].
    let f = model::bulk_force_real(&qr, p).to_spectral_dealiased();
    let f_rest = reg.jn(&f.axpy(p.a, q));
    let f_bar = f_rest.axpy(-p.a, q);
    let h_bar = spectral::laplacian(q).scale(p.l).add(&f_bar);
    let hr_bar = h_bar.to_real();

    let s = reg.jn(&model::alignment_s_real(&sr_eps, &qr, p).to_spectral_dealiased());
    let adv_q = reg.jn(&advect_matrix(&ur_eps, &grad_q).to_spectral_dealiased());
    let nq = s.sub(&adv_q).axpy(p.gamma, &f_bar);
    let nq = nq.axpy(p.gamma * folded_a(p, fold_a), q);

    // Transport by the mollified velocity.
    let adv_u = reg.jn(&tensor::matvec(&sr.grad, &ur_eps).to_spectral_dealiased());

    // Stresses with H̄; the antisymmetric part keeps only L(QΔQ − ΔQ Q).
    let lap_r = spectral::laplacian(q).to_real();
    let mut tau_xi = model::stress_tau_real(&qr, &hr_bar, &grad_q, p);
    let odot = model::grad_q_odot(&grad_q).dealias();
    tau_xi = tau_xi.axpy(p.l, &odot);
    let sigma = tensor::matmul(&qr, &lap_r).sub(&tensor::matmul(&lap_r, &qr)).dealias().scale(p.l);
    let stress = reg.jn(&tau_xi.add(&sigma).to_spectral_dealiased());
    let elastic = reg.jn(&spectral::divergence(&odot.to_spectral_dealiased()).expect("matrix"));
    let mut nu = spectral::divergence(&stress)
        .expect("matrix")
        .sub(&elastic)
        .scale(p.lambda)
        .sub(&adv_u);

    // −ε J_n(Σ_lm ∇Q_lm (R_ε u·∇Q_lm) |R_ε u·∇Q|).
    let adv_eps = advect_matrix(&ur_eps, &grad_q).dealias();
    let mag = tensor::contract(&adv_eps, &adv_eps).map(f64::sqrt).dealias();
    let mut v = RealField::zeros(&qr.grid, Shape::vector(m));
    for i in 0..m {
        for lm in 0..m * m {
            for ((o, g), a) in v.data[i].iter_mut().zip(&grad_q.data[lm * m + i]).zip(&adv_eps.data[lm]) {
                *o += g * a;
            }
        }
    }
    let v = tensor::scale_by(&mag, &v.dealias()).dealias();
    nu = nu.axpy(-reg.eps, &reg.jn(&v.to_spectral_dealiased()));

    // +ε ∇·J_n R_ε(∇R_ε u |∇R_ε u|²).
    let g2 = tensor::contract(&sr_eps.grad, &sr_eps.grad).dealias();
    let gg = tensor::scale_by(&g2, &sr_eps.grad).to_spectral_dealiased();
    let hyper = spectral::divergence(&reg.jn(&reg.r(&gg))).expect("matrix");
    nu = nu.axpy(reg.eps, &hyper);

    let nu = spectral::leray_project(&nu).expect("vector field");
    (nq, nu)
}

/// Full right-hand side of the Q equation, `ΓH + S − u·∇Q` (or its regularized form).
pub fn rhs_q(state: &SimState, p: &ModelParams, reg: Option<&Regularizer>) -> SpectralField {
    let (nq, _) = nonlinear(state, p, false, reg);
    spectral::laplacian(state.q.inner()).scale(p.gamma * p.l).add(&nq)
}

/// Full right-hand side of the u equation, `𝒫[−u·∇u + λ∇·(τ+σ)] + νΔu`.
pub fn rhs_u(state: &SimState, p: &ModelParams, reg: Option<&Regularizer>) -> SpectralField {
    let (_, nu) = nonlinear(state, p, false, reg);
    spectral::laplacian(state.u.inner()).scale(p.nu).add(&nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_q, random_u, taylor_green, BandLimitedSpec};
    use crate::model::{QTensorField, VelocityField};

    fn state(m: usize, seed: u64) -> SimState {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let spec = BandLimitedSpec { seed, kmax: 4.0, slope: 1.0, amplitude: 0.3 };
        let q = random_q(&g, m, &spec).unwrap();
        let u = random_u(&g, m, &BandLimitedSpec { seed: seed + 100, ..spec }).unwrap();
        SimState::new(0.0, q, u).unwrap()
    }

    #[test]
    fn heat_flow_limit() {
        let mut s = state(2, 1);
        s.u = VelocityField::zeros(s.grid(), 2);
        let p = ModelParams { a: 0.0, b: 0.0, c: 0.0, gamma: 0.7, l: 1.3, ..ModelParams::default() };
        let r = rhs_q(&s, &p, None);
        let expect = spectral::laplacian(s.q.inner()).scale(0.7 * 1.3);
        assert!(r.sub(&expect).l2_norm() < 1e-14 * expect.l2_norm());
    }

    #[test]
    fn zero_q_gives_strain_source() {
        let mut s = state(2, 2);
        s.q = QTensorField::zeros(s.grid(), 2);
        let p = ModelParams::default();
        let r = rhs_q(&s, &p, None);
        let sr = StrainRotation::from_velocity(s.u.inner());
        let expect = sr.d.scale(2.0 * p.xi / 2.0).to_spectral();
        assert!(r.sub(&expect).l2_norm() < 1e-13 * expect.l2_norm());
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let s = SimState::zeros(&g, 3);
        let p = ModelParams { d_target: 3, ..ModelParams::default() };
        assert_eq!(rhs_q(&s, &p, None).l2_norm(), 0.0);
        assert_eq!(rhs_u(&s, &p, None).l2_norm(), 0.0);
    }

    #[test]
    fn constant_q_without_alignment_is_navier_stokes() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let qc = RealField::from_fn(&g, Shape::matrix(2, 2), |c, _| [0.3, 0.1, 0.1, -0.3][c]).to_spectral();
        let q = QTensorField::project(qc).unwrap();
        let u = random_u(&g, 2, &BandLimitedSpec { seed: 5, ..BandLimitedSpec::default() }).unwrap();
        let s = SimState::new(0.0, q, u.clone()).unwrap();
        let p = ModelParams { xi: 0.0, ..ModelParams::default() };
        let r = rhs_u(&s, &p, None);
        // Independent Navier–Stokes right-hand side: 𝒫[−(u·∇)u] + νΔu.
        let ur = u.to_real();
        let mut adv = RealField::zeros(&g, Shape::vector(2));
        for a in 0..2 {
            let du_x = spectral::partial(&u.select(Shape::scalar(), &[a]), 0).to_real();
            let du_y = spectral::partial(&u.select(Shape::scalar(), &[a]), 1).to_real();
            for i in 0..g.len() {
                adv.data[a][i] = ur.data[0][i] * du_x.data[0][i] + ur.data[1][i] * du_y.data[0][i];
            }
        }
        let ns = spectral::leray_project(&adv.to_spectral_dealiased().scale(-1.0))
            .unwrap()
            .add(&spectral::laplacian(&u).scale(p.nu));
        assert!(r.sub(&ns).l2_norm() < 1e-13 * ns.l2_norm());
    }

    #[test]
    fn taylor_green_is_steady_for_the_nonlinearity() {
        // Taylor–Green is an Euler steady state: the projected advection vanishes,
        // leaving pure viscous decay.
        let g = Grid::new(2, 32, 1.0).unwrap();
        let u = taylor_green(&g, 2, 1.0).unwrap();
        let s = SimState::new(0.0, QTensorField::zeros(&g, 2), u.clone()).unwrap();
        let p = ModelParams::default();
        let r = rhs_u(&s, &p, None);
        let expect = u.scale(-2.0 * p.nu);
        assert!(r.sub(&expect).l2_norm() < 1e-13 * expect.l2_norm());
    }

    #[test]
    fn outputs_are_admissible() {
        for m in [2, 3] {
            let s = state(m, 7);
            let p = ModelParams { d_target: m, ..ModelParams::default() };
            let rq = rhs_q(&s, &p, None).to_real();
            assert!(tensor::symmetry_defect(&rq) < 1e-12);
            assert!(tensor::trace_defect(&rq) < 1e-12);
            let ru = rhs_u(&s, &p, None);
            assert!(spectral::divergence_defect(&ru) < 1e-13);
        }
    }

    #[test]
    fn regularized_rhs_reduces_to_plain_as_regularization_vanishes() {
        let s = state(2, 9);
        let p = ModelParams::default();
        // J_n always removes the mean mode, so compare against the mean-free
        // parts of the unregularized right-hand sides.
        let plain_q = spectral::spectral_cutoff_jn(&rhs_q(&s, &p, None), 10);
        let plain_u = spectral::spectral_cutoff_jn(&rhs_u(&s, &p, None), 10);
        let mut prev = f64::INFINITY;
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let reg = Regularizer::new(s.grid(), &Regularization { enabled: true, n: 10, eps }).unwrap();
            let rq = rhs_q(&s, &p, reg.as_ref());
            let ru = rhs_u(&s, &p, reg.as_ref());
            let err = rq.sub(&plain_q).l2_norm() / plain_q.l2_norm() + ru.sub(&plain_u).l2_norm() / plain_u.l2_norm();
            assert!(err < prev, "eps={eps}: {err} vs {prev}");
            prev = err;
        }
        assert!(prev < 1e-3);
    }
}
