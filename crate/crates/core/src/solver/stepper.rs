use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::model::{ModelParams, QTensorField, VelocityField};

use super::rhs::{nonlinear, Regularizer};
use super::{Scheme, SimState, StepperConfig};

/// Integrating-factor IMEX stepper.
///
/// With `L` the diagonal linear operator and `N` the explicit remainder, one
/// step of size `h` is
///
/// * `imex1`: `y⁺ = e^{Lh}(y + hN(y))`
/// * `imex2`: `y* = e^{Lh}(y + hN(y))`, `y⁺ = e^{Lh}(y + h/2 N(y)) + h/2 N(y*)`
///
/// followed by Leray projection of u, symmetric trace-free projection of Q and
/// dealiasing of both.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<Grid>,
    params: ModelParams,
    config: StepperConfig,
    reg: Option<Regularizer>,
    exp_q: Vec<f64>,
    exp_u: Vec<f64>,
    step_index: usize,
    cfl_warned: bool,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, params: ModelParams, config: StepperConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let reg = Regularizer::new(grid, &config.regularization)?;
        let a_fold = if config.fold_a && params.a > 0.0 { params.a } else { 0.0 };
        let h = config.dt;
        let exp_q = grid
            .k2_all()
            .iter()
            .map(|&k2| (-params.gamma * (params.l * k2 + a_fold) * h).exp())
            .collect();
        let exp_u = grid.k2_all().iter().map(|&k2| (-params.nu * k2 * h).exp()).collect();
        Ok(Stepper {
            grid: grid.clone(),
            params,
            config,
            reg,
            exp_q,
            exp_u,
            step_index: 0,
            cfl_warned: false,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn regularizer(&self) -> Option<&Regularizer> {
        self.reg.as_ref()
    }

    /// Number of steps taken so far.
    pub fn steps_taken(&self) -> usize {
        self.step_index
    }

    fn nonlinear(&self, s: &SimState) -> (SpectralField, SpectralField) {
        nonlinear(s, &self.params, self.config.fold_a, self.reg.as_ref())
    }

    /// `e^{Lh}(y + α N)` componentwise.
    fn propagate(y: &SpectralField, n: &SpectralField, alpha: f64, e: &[f64]) -> SpectralField {
        y.map_coeffs(|c, i, z| e[i] * (z + alpha * n.component(c)[i]))
    }

    fn project(&self, t: f64, q: SpectralField, u: SpectralField) -> Result<SimState> {
        let q = QTensorField::project(q)?;
        let u = VelocityField::project(u)?;
        if !q.is_finite() || !u.is_finite() {
            return Err(Error::NonFinite { step: self.step_index + 1 });
        }
        SimState::new(t, q, u)
    }

    /// Advance `state` by one time step.
    pub fn step(&mut self, state: &SimState) -> Result<SimState> {
        if **state.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        if state.target_dim() != self.params.d_target {
            return Err(Error::DimensionMismatch {
                expected: format!("d_target = {}", self.params.d_target),
                got: format!("{}", state.target_dim()),
            });
        }
        let h = self.config.dt;
        let t_next = state.t + h;
        self.check_cfl(state);
        let q0 = state.q.inner();
        let u0 = state.u.inner();
        let (nq0, nu0) = self.nonlinear(state);
        let q1 = Self::propagate(q0, &nq0, h, &self.exp_q);
        let u1 = Self::propagate(u0, &nu0, h, &self.exp_u);
        let next = match self.config.scheme {
            Scheme::Imex1 => self.project(t_next, q1, u1)?,
            Scheme::Imex2 => {
                let stage = self.project(t_next, q1, u1)?;
                let (nq1, nu1) = self.nonlinear(&stage);
                let q2 = Self::propagate(q0, &nq0, 0.5 * h, &self.exp_q).axpy(0.5 * h, &nq1);
                let u2 = Self::propagate(u0, &nu0, 0.5 * h, &self.exp_u).axpy(0.5 * h, &nu1);
                self.project(t_next, q2, u2)?
            }
        };
        self.step_index += 1;
        Ok(next)
    }

    fn check_cfl(&mut self, state: &SimState) {
        let ur = state.u.to_real();
        let umax = ur.magnitude().into_iter().fold(0.0, f64::max);
        let cfl = umax * self.config.dt / self.grid.spacing();
        if cfl > 1.0 && !self.cfl_warned {
            warn!(
                "advective CFL number {cfl:.3} exceeds 1 at step {} (max |u| = {umax:.3e})",
                self.step_index
            );
            self.cfl_warned = true;
        }
    }
}
