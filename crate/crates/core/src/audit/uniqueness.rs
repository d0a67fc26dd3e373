//! The `C`, `D` and `F` groups of the twin-difference energy computation,
//! each term an `Ḣ^{-1/2}` pairing of a difference quantity against
//! `ΔδQ` or `∇δu`.

use crate::error::{Error, Result};
use crate::field::{Shape, SpectralField};
use crate::model::ModelParams;
use crate::spectral;
use crate::tensor;

use super::{AuditReport, TermLedger, UNIQUENESS_TOL};

/// Hypothesis-breaking variants of the pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniquenessControl {
    #[default]
    None,
    /// Use the strain `δD` where the rotation `δΩ` belongs in the `D` group.
    StrainForRotation,
    /// Use `Q₂ T Q₁` instead of `Q₂ T Q₂` in `F₂`.
    MismatchedFactor,
}

fn pair(a: &SpectralField, b: &SpectralField) -> f64 {
    spectral::hdot_inner(a, b, -0.5)
}

fn bound(a: &SpectralField, b: &SpectralField) -> f64 {
    spectral::hdot_norm(a, -0.5) * spectral::hdot_norm(b, -0.5)
}

fn transpose(a: &SpectralField) -> SpectralField {
    let m = a.shape().dims()[0];
    let perm: Vec<usize> = (0..m * m).map(|c| (c % m) * m + c / m).collect();
    a.select(a.shape().clone(), &perm)
}

/// Evaluate `C₁..C₄`, `D₁, D₂`, `F₁, F₂` for the twins `(Q₁, u₁)`, `(Q₂, u₂)`
/// and check the three vanishing sums together with the size of every
/// constituent.
pub fn audit_uniqueness_cancellations(
    q1: &SpectralField,
    q2: &SpectralField,
    u1: &SpectralField,
    u2: &SpectralField,
    p: &ModelParams,
    control: UniquenessControl,
) -> Result<AuditReport> {
    if !(q1.same_grid(q2) && q1.same_grid(u1) && q1.same_grid(u2)) {
        return Err(Error::GridMismatch);
    }
    if !q1.shape().is_square_matrix() || q1.shape() != q2.shape() {
        return Err(Error::ShapeMismatch(format!("Q fields must be square matrices, got {} and {}", q1.shape(), q2.shape())));
    }
    let m = q1.shape().dims()[0];
    for u in [u1, u2] {
        if u.shape() != &Shape::vector(m) {
            return Err(Error::ShapeMismatch(format!("u must be a {m}-vector, got {}", u.shape())));
        }
    }
    let dm = m as f64;
    let (l, xi, c) = (p.l, p.xi, p.c);

    let dq = q1.sub(q2);
    let du = u1.sub(u2);
    let grad_du = spectral::gradient_padded(&du, m);
    let grad_du_t = transpose(&grad_du);
    let dd = grad_du.add(&grad_du_t).scale(0.5);
    let domega = grad_du.sub(&grad_du_t).scale(0.5);
    let lap_dq = spectral::laplacian(&dq);

    let mut ledger = TermLedger::new(q1.grid());
    let mut put = |label: &str, coef: f64, a: &SpectralField, b: &SpectralField| {
        ledger.insert(label, coef * pair(a, b), coef.abs() * bound(a, b));
    };

    put("C1", -l * xi / dm, &dd, &lap_dq);
    put("C2", -l * xi / dm, &dd, &lap_dq);
    put("C3", l * xi / dm, &lap_dq, &grad_du);
    put("C4", l * xi / dm, &lap_dq, &grad_du);

    let w = match control {
        UniquenessControl::StrainForRotation => dd.clone(),
        _ => domega,
    };
    put("D1", -l / dm, &w, &lap_dq);
    put("D2", -l / dm, &transpose(&w), &lap_dq);

    let (q1r, q2r, dqr) = (q1.to_real(), q2.to_real(), dq.to_real());
    let t = tensor::trace(&tensor::matmul(&dqr, &q1r).add(&tensor::matmul(&q2r, &dqr)));
    let f1 = tensor::scale_by(&t, &tensor::matmul(&q2r, &q2r)).to_spectral_dealiased();
    let right = if control == UniquenessControl::MismatchedFactor { &q1r } else { &q2r };
    let f2 = tensor::matmul(&tensor::scale_by(&t, &q2r), right).to_spectral_dealiased();
    put("F1", c, &f1, &grad_du);
    put("F2", -c, &f2, &grad_du);

    let tol = UNIQUENESS_TOL;
    let mut checks = vec![
        ledger.zero_check("C1+C2+C3+C4", &[(1.0, "C1"), (1.0, "C2"), (1.0, "C3"), (1.0, "C4")], tol),
        ledger.zero_check("D1+D2", &[(1.0, "D1"), (1.0, "D2")], tol),
        ledger.zero_check("F1+F2", &[(1.0, "F1"), (1.0, "F2")], tol),
    ];
    for label in ["C1", "C2", "C3", "C4", "D1", "D2", "F1", "F2"] {
        checks.push(ledger.power_check(label));
    }
    Ok(AuditReport { ledger, checks })
}
