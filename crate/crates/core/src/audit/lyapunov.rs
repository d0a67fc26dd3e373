//! Term-by-term quadrature of the Lyapunov-functional computation.
//!
//! Each term is the grid integral of a pointwise integrand built from one
//! `(Q, u)` snapshot. For band-limited inputs whose integrands stay below the
//! Nyquist band the trapezoid rule is exact, so the claimed zero combinations
//! vanish to rounding.

use crate::error::{Error, Result};
use crate::field::{RealField, Shape, SpectralField};
use crate::model::{self, ModelParams, StrainRotation};
use crate::spectral;
use crate::tensor;

use super::{AuditReport, TermLedger, LYAPUNOV_TOL};

/// `Σ_γ v_γ ∂_γ A` for a matrix field `A` with padded gradient `grad_a`.
fn directional(v: &RealField, grad_a: &RealField, m: usize) -> RealField {
    let mut out = RealField::zeros(&v.grid, Shape::matrix(m, m));
    for ab in 0..m * m {
        for g in 0..m {
            let (x, y) = (&v.data[g], &grad_a.data[ab * m + g]);
            for ((o, p), q) in out.data[ab].iter_mut().zip(x).zip(y) {
                *o += p * q;
            }
        }
    }
    out
}

fn mul(a: &RealField, b: &RealField) -> RealField {
    tensor::scale_by(a, b)
}

/// Pointwise product of the Frobenius magnitudes of `factors`.
fn magnitude_product(factors: &[&RealField]) -> RealField {
    let mut out = vec![1.0; factors[0].len()];
    for f in factors {
        for (o, v) in out.iter_mut().zip(f.magnitude()) {
            *o *= v;
        }
    }
    RealField { grid: factors[0].grid.clone(), shape: Shape::scalar(), data: vec![out] }
}

/// Evaluate every labelled term and the seven claimed identities.
///
/// `q` is an `m×m` matrix field and `u` an `m`-vector on the same grid. The
/// hypotheses (symmetric trace-free `Q`, divergence-free `u`) are not
/// enforced: broken inputs are how the negative controls are run.
pub fn audit_lyapunov_cancellations(q: &SpectralField, u: &SpectralField, p: &ModelParams) -> Result<AuditReport> {
    if !q.same_grid(u) {
        return Err(Error::GridMismatch);
    }
    if !q.shape().is_square_matrix() {
        return Err(Error::ShapeMismatch(format!("Q must be a square matrix field, got {}", q.shape())));
    }
    let m = q.shape().dims()[0];
    if u.shape() != &Shape::vector(m) {
        return Err(Error::ShapeMismatch(format!("u must be a {m}-vector, got {}", u.shape())));
    }
    let (l, lam) = (p.l, p.lambda);

    let qr = q.to_real();
    let ur = u.to_real();
    let grad_q = spectral::gradient_padded(q, m).to_real();
    let lap_q = spectral::laplacian(q).to_real();
    let sr = StrainRotation::from_gradient(spectral::gradient_padded(u, m).to_real());
    let g = &sr.grad;
    let f = model::bulk_force_real(&qr, p);
    let h = lap_q.scale(l).add(&f);
    let pq = tensor::add_identity(&qr, 1.0 / m as f64);
    let (d, omega) = (&sr.d, &sr.omega);
    let u_grad_q = directional(&ur, &grad_q, m);

    let mut ledger = TermLedger::new(q.grid());
    // The scale of a term is the integral of the pointwise Cauchy–Schwarz
    // bound of its integrand, which does not shrink when the integrand
    // cancels pointwise.
    let mut put = |label: &str, coef: f64, integrand: RealField, factors: &[&RealField]| {
        let scale = magnitude_product(factors).integral();
        ledger.insert(label, coef * integrand.integral(), coef.abs() * scale);
    };

    put("I", lam, tensor::contract(&u_grad_q, &f), &[&ur, &grad_q, &f]);
    let rot = tensor::matmul(&qr, omega).sub(&tensor::matmul(omega, &qr));
    put("II", 2.0 * lam, tensor::contract(&rot, &f).scale(0.5), &[&qr, omega, &f]);

    put("J1", 1.0, tensor::contract(&tensor::matmul(&pq, d), &h), &[&pq, d, &h]);
    put("J2", 1.0, tensor::contract(&tensor::matmul(d, &pq), &h), &[&pq, d, &h]);
    put("J3", 1.0, mul(&tensor::contract(&pq, &h), &tensor::trace_product(&qr, g)), &[&pq, &h, &qr, g]);
    put("JJ1", 1.0, tensor::contract(&tensor::matmul(&pq, &h), g), &[&pq, &h, g]);
    put("JJ2", 1.0, tensor::contract(&tensor::matmul(&h, &pq), g), &[&pq, &h, g]);
    put("JJ3", 1.0, mul(&tensor::contract(&pq, g), &tensor::trace_product(&qr, &h)), &[&pq, g, &qr, &h]);

    put("A", 1.0, tensor::contract(&u_grad_q, &lap_q), &[&ur, &grad_q, &lap_q]);
    put("AA", 1.0, tensor::contract(&model::grad_q_odot(&grad_q), g), &[&grad_q, &grad_q, g]);
    put("B", -0.5 * l * lam, tensor::contract(&tensor::matmul(g, &qr), &lap_q), &[g, &qr, &lap_q]);
    put("C", 0.5 * l * lam, tensor::contract(&tensor::matmul(&tensor::transpose(g), &qr), &lap_q), &[g, &qr, &lap_q]);
    put("CC", -l * lam, tensor::contract(&tensor::matmul(&qr, &lap_q), g), &[g, &qr, &lap_q]);
    put("BB", l * lam, tensor::contract(&tensor::matmul(&lap_q, &qr), g), &[g, &qr, &lap_q]);

    let tol = LYAPUNOV_TOL;
    let checks = vec![
        ledger.zero_check("I", &[(1.0, "I")], tol),
        ledger.zero_check("II", &[(1.0, "II")], tol),
        ledger.zero_check("A+AA", &[(1.0, "A"), (1.0, "AA")], tol),
        ledger.zero_check("2B+BB", &[(2.0, "B"), (1.0, "BB")], tol),
        ledger.zero_check("2C+CC", &[(2.0, "C"), (1.0, "CC")], tol),
        ledger.zero_check("J1+J2-JJ1-JJ2", &[(1.0, "J1"), (1.0, "J2"), (-1.0, "JJ1"), (-1.0, "JJ2")], tol),
        ledger.zero_check("J3-JJ3", &[(1.0, "J3"), (-1.0, "JJ3")], tol),
    ];
    Ok(AuditReport { ledger, checks })
}

/// Which hypothesis a negative control breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `∇·u = 0`, broken by a pure-gradient velocity.
    Incompressible,
    /// `Q = Qᵀ`, broken by the caller's choice of a non-symmetric `Q`.
    Symmetric,
}

impl Hypothesis {
    /// The hypothesis an identity relies on.
    pub fn of(identity: &str) -> Option<Self> {
        match identity {
            "I" | "A+AA" | "J3-JJ3" => Some(Hypothesis::Incompressible),
            "II" | "2B+BB" | "2C+CC" | "J1+J2-JJ1-JJ2" => Some(Hypothesis::Symmetric),
            _ => None,
        }
    }
}

/// Every combination audited above is linear in `u`, so it can be written as
/// `∫ u·w + ∫ ∇u : Y = ∫ u·r` with `r = w − ∇·Y`. Returns `r`.
fn representer(q: &SpectralField, p: &ModelParams, identity: &str) -> Result<SpectralField> {
    let m = q.shape().dims()[0];
    let (l, lam) = (p.l, p.lambda);
    let qr = q.to_real();
    let qt = tensor::transpose(&qr);
    let grad_q = spectral::gradient_padded(q, m).to_real();
    let lap_q = spectral::laplacian(q).to_real();
    let f = model::bulk_force_real(&qr, p);
    let h = lap_q.scale(l).add(&f);
    let pq = tensor::add_identity(&qr, 1.0 / m as f64);
    let pt = tensor::transpose(&pq);
    let zero_y = || RealField::zeros(&qr.grid, Shape::matrix(m, m));
    // w_γ = Σ_ab ∂_γ A_ab B_ab.
    let weighted_gradient = |b: &RealField| {
        let mut w = RealField::zeros(&qr.grid, Shape::vector(m));
        for ab in 0..m * m {
            for g in 0..m {
                for ((o, x), y) in w.data[g].iter_mut().zip(&grad_q.data[ab * m + g]).zip(&b.data[ab]) {
                    *o += x * y;
                }
            }
        }
        w
    };
    let (w, y) = match identity {
        "I" => (weighted_gradient(&f).scale(lam), zero_y()),
        "A+AA" => (weighted_gradient(&lap_q), model::grad_q_odot(&grad_q)),
        "J3-JJ3" => {
            let a = tensor::scale_by(&tensor::contract(&pq, &h), &qt);
            let b = tensor::scale_by(&tensor::trace_product(&qr, &h), &pq);
            (RealField::zeros(&qr.grid, Shape::vector(m)), a.sub(&b))
        }
        "II" => {
            let x = tensor::matmul(&qt, &f).sub(&tensor::matmul(&f, &qt));
            (RealField::zeros(&qr.grid, Shape::vector(m)), tensor::antisym_part(&x).scale(lam))
        }
        "2B+BB" => {
            let y = tensor::matmul(&lap_q, &qr).sub(&tensor::matmul(&lap_q, &qt)).scale(l * lam);
            (RealField::zeros(&qr.grid, Shape::vector(m)), y)
        }
        "2C+CC" => {
            let y = tensor::matmul(&qr, &tensor::transpose(&lap_q)).sub(&tensor::matmul(&qr, &lap_q)).scale(l * lam);
            (RealField::zeros(&qr.grid, Shape::vector(m)), y)
        }
        "J1+J2-JJ1-JJ2" => {
            let s = tensor::sym_part(&tensor::matmul(&pt, &h).add(&tensor::matmul(&h, &pt)));
            let y = s.sub(&tensor::matmul(&pq, &h)).sub(&tensor::matmul(&h, &pq));
            (RealField::zeros(&qr.grid, Shape::vector(m)), y)
        }
        other => return Err(Error::InvalidParameter(format!("unknown identity {other}"))),
    };
    Ok(w.to_spectral().sub(&spectral::divergence(&y.to_spectral())?))
}

/// Velocity that breaks `identity` as strongly as the broken hypothesis allows.
///
/// For incompressibility identities the result is the gradient part of the
/// representer `r` (with `q` admissible); for symmetry identities it is the
/// solenoidal part (with `q` non-symmetric). Either way the audited
/// combination equals `‖u‖²_{L²}` up to quadrature error, so the control
/// cannot pass by an accidental cancellation.
pub fn negative_control_velocity(q: &SpectralField, p: &ModelParams, identity: &str) -> Result<SpectralField> {
    let hyp = Hypothesis::of(identity).ok_or_else(|| Error::InvalidParameter(format!("unknown identity {identity}")))?;
    let r = representer(q, p, identity)?;
    let solenoidal = spectral::leray_project(&r)?;
    Ok(match hyp {
        Hypothesis::Symmetric => solenoidal,
        Hypothesis::Incompressible => r.sub(&solenoidal),
    })
}
