//! Sobolev and Besov norms.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::spectral;

use super::{block_dq, lowpass_sq, profile, Dyadic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevBackend {
    /// `Σ |k|^{2s} |f̂(k)|²` (or `(1+|k|²)^s` when nonhomogeneous).
    Direct,
    /// `Σ_q 2^{2qs} ‖Δ̇_q f‖²` (plus `‖Ṡ₀f‖²` when nonhomogeneous).
    Dyadic,
}

/// `V Σ_k w(|k|) |f̂(k)|²` summed over components.
fn weighted_energy(f: &SpectralField, w: impl Fn(f64) -> f64) -> f64 {
    let g = f.grid();
    let weights: Vec<f64> = (0..g.len()).map(|i| w(g.kabs(i))).collect();
    let s: f64 = f
        .components()
        .iter()
        .map(|c| c.iter().zip(&weights).map(|(z, wi)| wi * z.norm_sqr()).sum::<f64>())
        .sum();
    s * g.volume()
}

pub fn sobolev_norm(f: &SpectralField, s: f64, homogeneous: bool, backend: SobolevBackend) -> f64 {
    let sq = match (backend, homogeneous) {
        (SobolevBackend::Direct, true) => spectral::hdot_norm(f, s).powi(2),
        (SobolevBackend::Direct, false) => weighted_energy(f, |r| (1.0 + r * r).powf(s)),
        (SobolevBackend::Dyadic, true) => {
            let d = Dyadic::new(f.grid());
            d.shells()
                .map(|q| 2f64.powf(2.0 * q as f64 * s) * weighted_energy(f, |r| profile::phi_q(q, r).powi(2)))
                .sum()
        }
        (SobolevBackend::Dyadic, false) => {
            let d = Dyadic::new(f.grid());
            let low = weighted_energy(f, |r| profile::chi(r).powi(2));
            low + (0..=d.q_max().max(0))
                .map(|q| 2f64.powf(2.0 * q as f64 * s) * weighted_energy(f, |r| profile::phi_q(q, r).powi(2)))
                .sum::<f64>()
        }
    };
    sq.max(0.0).sqrt()
}

/// Range of `‖f‖_{Ḣ^s, dyadic} / ‖f‖_{Ḣ^s, direct}` over all nonzero `f`.
///
/// For a single mode at radius `r` the ratio is
/// `(Σ_q 2^{2qs} φ(2^{−q}r)²)^{1/2} / r^s`, which is invariant under
/// `r → 2r`; the extremes are taken over 20001 samples of `r ∈ [1, 2]`.
pub fn sobolev_equivalence_window(s: f64) -> (f64, f64) {
    let samples = 20_000;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for j in 0..=samples {
        let r = 1.0 + j as f64 / samples as f64;
        let sum: f64 = (-3..=3).map(|q| 2f64.powf(2.0 * q as f64 * s) * profile::phi_q(q, r).powi(2)).sum();
        let ratio = sum.sqrt() / r.powf(s);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub homogeneous: bool,
}

impl BesovIndex {
    fn validate(&self) -> Result<()> {
        if !self.s.is_finite() || !(self.p >= 1.0) || !(self.r >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Besov index needs finite s and p, r in [1, ∞], got s={} p={} r={}",
                self.s, self.p, self.r
            )));
        }
        Ok(())
    }
}

fn lr_norm(terms: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        terms.iter().cloned().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// `‖(2^{qs}‖Δ̇_q f‖_{L^p})_q‖_{ℓ^r}`; the nonhomogeneous version replaces the
/// shells below zero by `‖Ṡ₀ f‖_{L^p}`.
pub fn besov_norm(f: &SpectralField, idx: &BesovIndex) -> Result<f64> {
    idx.validate()?;
    let d = Dyadic::new(f.grid());
    let mut terms = Vec::new();
    if idx.homogeneous {
        for q in d.shells() {
            terms.push(2f64.powf(q as f64 * idx.s) * block_dq(f, q).to_real().lp_norm(idx.p));
        }
    } else {
        terms.push(lowpass_sq(f, 0).to_real().lp_norm(idx.p));
        for q in 0..=d.q_max().max(0) {
            terms.push(2f64.powf(q as f64 * idx.s) * block_dq(f, q).to_real().lp_norm(idx.p));
        }
    }
    Ok(lr_norm(&terms, idx.r))
}

/// Low-pass characterisation `‖(2^{qs}‖Ṡ_q f‖_{L^p})_{q∈ℤ}‖_{ℓ^r}` of the
/// homogeneous norm for `s < 0`, applied to the mean-free part of `f`.
///
/// `Ṡ_q f` vanishes for `q ≤ q_min` and equals `f` for `q > q_max`; that
/// geometric tail is summed in closed form.
pub fn besov_lowpass_norm(f: &SpectralField, s: f64, p: f64, r: f64) -> Result<f64> {
    if !(s < 0.0) {
        return Err(Error::Precondition(format!("low-pass characterisation needs s < 0, got {s}")));
    }
    BesovIndex { s, p, r, homogeneous: true }.validate()?;
    let f = f.map_coeffs(|_, i, z| if i == 0 { num_complex::Complex64::new(0.0, 0.0) } else { z });
    let d = Dyadic::new(f.grid());
    let mut terms: Vec<f64> = (d.q_min() + 1..=d.q_max())
        .map(|q| 2f64.powf(q as f64 * s) * lowpass_sq(&f, q).to_real().lp_norm(p))
        .collect();
    let full = f.to_real().lp_norm(p);
    let q0 = (d.q_max() + 1) as f64;
    let tail = if r.is_infinite() {
        2f64.powf(q0 * s) * full
    } else {
        (2f64.powf(q0 * s * r) / (1.0 - 2f64.powf(s * r))).powf(1.0 / r) * full
    };
    terms.push(tail);
    if r.is_infinite() {
        Ok(lr_norm(&terms, r))
    } else {
        Ok(terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r))
    }
}

/// Two-sided window `[2^{−(|s|+1)}, 2(1 + 1/|s|)]` for the ratio
/// `besov_lowpass_norm / besov_norm` when `s < 0`.
///
/// Writing `Ṡ_q = Σ_{j<q} Δ̇_j` gives the upper bound `1/(2^{|s|}−1)` by
/// Young's inequality; `Δ̇_q = Ṡ_{q+1} − Ṡ_q` gives the lower bound
/// `1/(1+2^{|s|})`. Both hold for every `p` and `r`.
pub fn besov_lowpass_window(s: f64) -> (f64, f64) {
    let a = s.abs();
    (2f64.powf(-(a + 1.0)), 2.0 * (1.0 + 1.0 / a))
}
