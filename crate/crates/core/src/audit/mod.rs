//! Numerical audits of the energy identities, the uniqueness functional and
//! the scaling symmetry.
//!
//! Every zero-identity check comes with a companion field generator that
//! breaks one hypothesis of the identity, so a test suite can confirm that
//! the quadrature actually detects a violation.

pub mod energy;
pub mod lyapunov;
pub mod monitor;
pub mod scaling;
pub mod uniqueness;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use crate::error::Result;
use crate::field::{Shape, SpectralField};
use crate::grid::Grid;
use crate::init::{random_bandlimited_raw, random_scalar, BandLimitedSpec};
use crate::spectral;

pub use energy::{audit_energy_balance, convergence_order, EnergyReport};
pub use lyapunov::{audit_lyapunov_cancellations, negative_control_velocity, Hypothesis};
pub use monitor::{compare_envelopes, uniqueness_monitor, OsgoodReport, OsgoodRow, Prop2Monitor, Prop2Row};
pub use scaling::{audit_scaling, ScalingReport};
pub use uniqueness::{audit_uniqueness_cancellations, UniquenessControl};

pub const LYAPUNOV_TOL: f64 = 1e-10;
pub const UNIQUENESS_TOL: f64 = 1e-9;
/// Smallest relative size of a constituent term (or of a broken identity)
/// for a check to count as having power.
pub const POWER_MIN: f64 = 1e-3;

/// Labelled terms evaluated from one snapshot.
#[derive(Debug, Clone, Default)]
pub struct TermLedger {
    pub terms: BTreeMap<String, f64>,
    /// Size of each term: the integral of the pointwise Cauchy–Schwarz bound
    /// for integrals, the global Cauchy–Schwarz bound for pairings.
    pub scales: BTreeMap<String, f64>,
    pub grid_n: usize,
    pub dim: usize,
    pub seeds: Vec<u64>,
}

impl TermLedger {
    fn new(grid: &Grid) -> Self {
        TermLedger { grid_n: grid.n(), dim: grid.dim(), ..Default::default() }
    }

    fn insert(&mut self, label: &str, value: f64, scale: f64) {
        self.terms.insert(label.to_string(), value);
        self.scales.insert(label.to_string(), scale);
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        self.terms.get(label).copied()
    }

    pub fn scale(&self, label: &str) -> Option<f64> {
        self.scales.get(label).copied()
    }

    /// `Σ cᵢ·termᵢ` checked against zero, relative to the largest `|cᵢ|·scaleᵢ`.
    fn zero_check(&self, name: &str, parts: &[(f64, &str)], tol: f64) -> IdentityCheck {
        let value: f64 = parts.iter().map(|(c, l)| c * self.terms[*l]).sum();
        let scale = parts.iter().map(|(c, l)| c.abs() * self.scales[*l]).fold(0.0, f64::max);
        IdentityCheck::new(name, value, scale, Expect::Zero(tol))
    }

    fn power_check(&self, label: &str) -> IdentityCheck {
        IdentityCheck::new(&format!("|{label}|"), self.terms[label], self.scales[label], Expect::Nonzero(POWER_MIN))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expect {
    /// `ratio ≤ tol`.
    Zero(f64),
    /// `ratio ≥ min`.
    Nonzero(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub value: f64,
    pub scale: f64,
    pub ratio: f64,
    pub expect: Expect,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: &str, value: f64, scale: f64, expect: Expect) -> Self {
        // A vanishing scale means every constituent vanished: the identity
        // holds trivially and the term has no power.
        let ratio = if scale > 0.0 { value.abs() / scale } else { 0.0 };
        let pass = match expect {
            Expect::Zero(tol) => ratio <= tol,
            Expect::Nonzero(min) => ratio >= min,
        };
        IdentityCheck { name: name.to_string(), value, scale, ratio, expect, pass }
    }
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub ledger: TermLedger,
    pub checks: Vec<IdentityCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "ok" } else { "FAIL" };
            s.push_str(&format!("{:<18} ratio {:>10.3e}  {verdict}\n", c.name, c.ratio));
        }
        s
    }
}

pub const AUDIT_HEADER: &str = "identity,value,scale,ratio,pass";

pub fn write_audit_csv<W: Write>(mut w: W, checks: &[IdentityCheck]) -> Result<()> {
    writeln!(w, "{AUDIT_HEADER}")?;
    for c in checks {
        writeln!(w, "{},{:.16e},{:.16e},{:.16e},{}", c.name, c.value, c.scale, c.ratio, c.pass)?;
    }
    Ok(())
}

/// Curl-free velocity `∇φ` for a random scalar `φ`: breaks incompressibility.
pub fn gradient_velocity(grid: &Arc<Grid>, m: usize, spec: &BandLimitedSpec) -> Result<SpectralField> {
    let phi = random_scalar(grid, spec)?;
    Ok(spectral::gradient_padded(&phi, m))
}

/// Trace-free but non-symmetric random matrix field.
pub fn nonsymmetric_tracefree(grid: &Arc<Grid>, m: usize, spec: &BandLimitedSpec) -> Result<SpectralField> {
    let raw = random_bandlimited_raw(grid, Shape::matrix(m, m), spec)?;
    let mut comps = raw.into_components();
    for i in 0..comps[0].len() {
        let tr: num_complex::Complex64 = (0..m).map(|a| comps[a * m + a][i]).sum();
        for a in 0..m {
            comps[a * m + a][i] -= tr / m as f64;
        }
    }
    SpectralField::from_coeffs(grid, Shape::matrix(m, m), comps)
}
