//! Parabolic scaling check.
//!
//! If `(Q, u)` solves the system on a box of side `2πL`, then
//! `Q_δ(x, t) = Q(δx, δ²t)`, `u_δ(x, t) = δu(δx, δ²t)` solves it on the box of
//! side `2πL/δ` with `(a, b, c)` multiplied by `δ²`. On a grid with the same
//! number of points the sample `j` of the scaled field is the sample `j` of the
//! base field, so the two runs can be compared coefficient by coefficient.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::model::{ModelParams, QTensorField, VelocityField};
use crate::solver::{SimState, Stepper, StepperConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// `(scaled time, relative discrepancy)` per checkpoint.
    pub checkpoints: Vec<(f64, f64)>,
    pub max_discrepancy: f64,
}

fn rebuild(grid: &Arc<Grid>, f: &SpectralField, s: f64) -> Result<SpectralField> {
    SpectralField::from_coeffs(grid, f.shape().clone(), f.components().to_vec()).map(|g| g.scale(s))
}

fn relative_gap(a: &SpectralField, b: &SpectralField) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.components().iter().zip(b.components()) {
        for (p, q) in x.iter().zip(y) {
            num += (p - q).norm_sqr();
            den += q.norm_sqr();
        }
    }
    (den > 0.0).then(|| (num / den).sqrt())
}

/// Run the base system for `δ²·n` steps and the scaled system for `n` steps,
/// both with `config.dt`, and compare every `checkpoint_every` scaled steps.
///
/// `delta` must be a positive power of two.
pub fn audit_scaling(
    base_grid: &Arc<Grid>,
    params: &ModelParams,
    config: &StepperConfig,
    initial: &SimState,
    delta: u32,
    checkpoint_every: usize,
) -> Result<ScalingReport> {
    if delta == 0 || !delta.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("delta must be a power of two, got {delta}")));
    }
    if checkpoint_every == 0 {
        return Err(Error::InvalidParameter("checkpoint spacing must be at least 1".into()));
    }
    let d = delta as f64;
    let ratio = (delta * delta) as usize;
    let scaled_grid = Grid::with_dealias(base_grid.dim(), base_grid.n(), base_grid.l_box() / d, base_grid.dealias_fraction())?;
    let scaled_params = ModelParams { a: params.a * d * d, b: params.b * d * d, c: params.c * d * d, ..*params };

    let mut base = Stepper::new(base_grid, *params, *config)?;
    let mut scaled = Stepper::new(&scaled_grid, scaled_params, *config)?;
    let mut sb = initial.clone();
    let mut ss = SimState::new(
        initial.t,
        QTensorField::project(rebuild(&scaled_grid, &initial.q, 1.0)?)?,
        VelocityField::project(rebuild(&scaled_grid, &initial.u, d)?)?,
    )?;

    let n = config.n_steps();
    let mut checkpoints = Vec::new();
    for k in 1..=n {
        ss = scaled.step(&ss)?;
        for _ in 0..ratio {
            sb = base.step(&sb)?;
        }
        if k % checkpoint_every == 0 || k == n {
            let gq = relative_gap(&ss.q, &sb.q);
            let gu = relative_gap(&ss.u.scale(1.0 / d), &sb.u);
            let gap = gq.into_iter().chain(gu).fold(0.0, f64::max);
            checkpoints.push((ss.t, gap));
        }
    }
    let max_discrepancy = checkpoints.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(ScalingReport { checkpoints, max_discrepancy })
}
