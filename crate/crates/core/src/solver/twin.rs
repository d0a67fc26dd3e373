use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral;

use super::{SimState, Stepper};

/// Difference measures of two states at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinRow {
    pub step: usize,
    pub t: f64,
    /// `Φ = (2λ)⁻¹‖δu‖²_{Ḣ^{-1/2}} + L‖∇δQ‖²_{Ḣ^{-1/2}}`.
    pub phi: f64,
    /// `(ν/λ)‖∇δu‖²_{Ḣ^{-1/2}}`.
    pub dissipation_u: f64,
    /// `ΓL²‖ΔδQ‖²_{Ḣ^{-1/2}}`.
    pub dissipation_q: f64,
}

#[derive(Debug, Clone)]
pub struct TwinSeries {
    pub rows: Vec<TwinRow>,
    pub final_a: SimState,
    pub final_b: SimState,
}

/// Φ and the dissipation quantities of the pair `(a, b)`.
pub fn uniqueness_functional(a: &SimState, b: &SimState, p: &ModelParams) -> Result<(f64, f64, f64)> {
    if **a.grid() != **b.grid() {
        return Err(Error::GridMismatch);
    }
    let du = a.u.sub(&b.u);
    let dq = a.q.sub(&b.q);
    // ‖∇f‖_{Ḣ^s} = ‖f‖_{Ḣ^{s+1}} and ‖Δf‖_{Ḣ^s} = ‖f‖_{Ḣ^{s+2}} on the torus.
    let u_m = spectral::hdot_norm(&du, -0.5).powi(2);
    let q_p = spectral::hdot_norm(&dq, 0.5).powi(2);
    let u_p = spectral::hdot_norm(&du, 0.5).powi(2);
    let q_pp = spectral::hdot_norm(&dq, 1.5).powi(2);
    let phi = u_m / (2.0 * p.lambda) + p.l * q_p;
    Ok((phi, p.nu / p.lambda * u_p, p.gamma * p.l * p.l * q_pp))
}

/// Co-advance two states with identical copies of `stepper`, recording the
/// twin functional at step 0, every `cadence` steps and at the end.
pub fn twin_run(stepper: &Stepper, a: SimState, b: SimState, cadence: usize) -> Result<TwinSeries> {
    if cadence == 0 {
        return Err(Error::InvalidParameter("twin cadence must be at least 1".into()));
    }
    let p = *stepper.params();
    let n_steps = stepper.config().n_steps();
    let mut sa = stepper.clone();
    let mut sb = stepper.clone();
    let (mut a, mut b) = (a, b);
    let mut rows = Vec::new();
    let record = |step: usize, a: &SimState, b: &SimState, rows: &mut Vec<TwinRow>| -> Result<()> {
        let (phi, dissipation_u, dissipation_q) = uniqueness_functional(a, b, &p)?;
        rows.push(TwinRow { step, t: a.t, phi, dissipation_u, dissipation_q });
        Ok(())
    };
    record(0, &a, &b, &mut rows)?;
    for k in 1..=n_steps {
        a = sa.step(&a)?;
        b = sb.step(&b)?;
        if k % cadence == 0 || k == n_steps {
            record(k, &a, &b, &mut rows)?;
        }
    }
    Ok(TwinSeries { rows, final_a: a, final_b: b })
}
