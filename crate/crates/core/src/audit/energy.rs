//! Energy-balance bookkeeping over recorded diagnostics.

use crate::error::{Error, Result};
use crate::solver::DiagnosticRow;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `(t, r)` per recorded row.
    pub residuals: Vec<(f64, f64)>,
    pub max_abs_residual: f64,
    /// Largest increase of `E` between consecutive rows; negative when `E` decays.
    pub max_energy_increase: f64,
    /// Smallest value of `r + visc + rot`, i.e. of `−dE/dt` as seen by the
    /// discrete balance. Nonnegative up to rounding for a dissipative run.
    pub min_dissipation_balance: f64,
}

/// Summarise the residual time series of a run.
pub fn audit_energy_balance(rows: &[DiagnosticRow]) -> Result<EnergyReport> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no diagnostic rows".into()));
    }
    let residuals: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.residual)).collect();
    let max_abs_residual = residuals.iter().map(|(_, r)| r.abs()).filter(|r| r.is_finite()).fold(0.0, f64::max);
    let max_energy_increase = rows.windows(2).map(|w| w[1].e - w[0].e).fold(f64::NEG_INFINITY, f64::max);
    let min_dissipation_balance = rows
        .iter()
        .filter(|r| r.residual.is_finite())
        .map(|r| r.visc + r.rot - r.residual)
        .fold(f64::INFINITY, f64::min);
    Ok(EnergyReport { residuals, max_abs_residual, max_energy_increase, min_dissipation_balance })
}

/// Observed order `log₂(coarse / fine)` of a quantity under step halving.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
