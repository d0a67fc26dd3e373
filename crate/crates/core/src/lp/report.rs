//! CSV output for inequality ensembles.

use std::io::Write;

use crate::error::Result;

use super::inequalities::EnsembleReport;

pub const REPORT_HEADER: &str = "check-name,grid,trial-seed,lhs,rhs,ratio";
pub const THRESHOLD_HEADER: &str = "check-name,grid,trials,min-ratio,max-ratio";

fn grid_label(r: &EnsembleReport) -> String {
    vec![r.grid_n.to_string(); r.dim].join("x")
}

/// One row per trial.
pub fn write_report<W: Write>(mut w: W, reports: &[EnsembleReport]) -> Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        let grid = grid_label(r);
        for t in &r.trials {
            writeln!(w, "{},{grid},{},{:.16e},{:.16e},{:.16e}", r.kind.name(), t.seed, t.lhs, t.rhs, t.ratio)?;
        }
    }
    Ok(())
}

/// One row per ensemble with the empirical constants.
pub fn write_thresholds<W: Write>(mut w: W, reports: &[EnsembleReport]) -> Result<()> {
    writeln!(w, "{THRESHOLD_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e}",
            r.kind.name(),
            grid_label(r),
            r.trials.len(),
            r.min_ratio(),
            r.max_ratio()
        )?;
    }
    Ok(())
}
