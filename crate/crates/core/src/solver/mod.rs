//! Time integration of the coupled system and per-step diagnostics.

mod diagnostics;
mod rhs;
mod stepper;
mod twin;

use std::sync::Arc;

pub use diagnostics::{run, structure_defects, DiagnosticRow, RunSummary, Sink, StructureDefects, VecSink};
pub use rhs::{nonlinear, rhs_q, rhs_u, Regularizer};
pub use stepper::Stepper;
pub use twin::{twin_run, uniqueness_functional, TwinRow, TwinSeries};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{QTensorField, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Integrating-factor forward Euler (order 1).
    Imex1,
    /// Integrating-factor Heun (order 2).
    Imex2,
}

impl Scheme {
    pub fn order(&self) -> u32 {
        match self {
            Scheme::Imex1 => 1,
            Scheme::Imex2 => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex1" => Ok(Scheme::Imex1),
            "imex2" => Ok(Scheme::Imex2),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}' (expected imex1 or imex2)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Imex1 => "imex1",
            Scheme::Imex2 => "imex2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub enabled: bool,
    /// Index of the spectral cutoff `J_n`.
    pub n: u32,
    /// Mollifier width and weight of the two stabilising terms.
    pub eps: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization {
            enabled: false,
            n: 8,
            eps: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub regularization: Regularization,
    pub t_final: f64,
    /// Diagnostics are emitted every `cadence` steps (and at the final step).
    pub cadence: usize,
    /// Treat `−ΓaQ` with the integrating factor when `a > 0`.
    pub fold_a: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            scheme: Scheme::Imex2,
            regularization: Regularization::default(),
            t_final: 1.0,
            cadence: 10,
            fold_a: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidParameter(format!("final time must be nonnegative, got {}", self.t_final)));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidParameter("diagnostic cadence must be at least 1".into()));
        }
        let r = &self.regularization;
        if r.enabled && (r.n < 1 || !(r.eps.is_finite() && r.eps > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "regularization needs n >= 1 and eps > 0, got n={} eps={}",
                r.n, r.eps
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`, rounding to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Simulation state: time, Q-tensor and velocity on a common grid.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub q: QTensorField,
    pub u: VelocityField,
}

impl SimState {
    pub fn new(t: f64, q: QTensorField, u: VelocityField) -> Result<Self> {
        if !q.same_grid(u.inner()) {
            return Err(Error::GridMismatch);
        }
        if q.size() != u.size() {
            return Err(Error::DimensionMismatch {
                expected: format!("velocity with {} components", q.size()),
                got: format!("{}", u.size()),
            });
        }
        Ok(SimState { t, q, u })
    }

    pub fn zeros(grid: &Arc<Grid>, m: usize) -> Self {
        SimState {
            t: 0.0,
            q: QTensorField::zeros(grid, m),
            u: VelocityField::zeros(grid, m),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.q.grid()
    }

    pub fn target_dim(&self) -> usize {
        self.q.size()
    }
}
