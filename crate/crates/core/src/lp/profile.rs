//! Radial profiles of the dyadic partition.
//!
//! `χ(r) = 1` for `r ≤ 1/2`, `χ(r) = 0` for `r ≥ 9/10`, joined by the
//! C^∞ step `ψ(1−t)/(ψ(1−t)+ψ(t))` with `ψ(t) = e^{−1/t}` and
//! `t = (r − 1/2)/(2/5)`. The ring profile is `φ(r) = χ(r/2) − χ(r)`, which
//! vanishes outside `1/2 < r < 9/5`.

pub const CHI_FLAT: f64 = 0.5;
pub const CHI_SUPPORT: f64 = 0.9;

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Low-pass profile `χ`.
pub fn chi(r: f64) -> f64 {
    if r <= CHI_FLAT {
        1.0
    } else if r >= CHI_SUPPORT {
        0.0
    } else {
        let t = (r - CHI_FLAT) / (CHI_SUPPORT - CHI_FLAT);
        let a = psi(1.0 - t);
        a / (a + psi(t))
    }
}

/// Ring profile `φ(r) = χ(r/2) − χ(r)`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Shell multiplier `φ(2^{−q} r)`.
pub fn phi_q(q: i32, r: f64) -> f64 {
    phi(r * 2f64.powi(-q))
}

/// Low-pass multiplier `χ(2^{−q} r)`.
pub fn chi_q(q: i32, r: f64) -> f64 {
    chi(r * 2f64.powi(-q))
}
