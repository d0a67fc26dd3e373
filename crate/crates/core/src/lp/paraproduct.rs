//! Paraproducts, the four-term localisation of a matrix product, and commutators.
//!
//! Products are pseudo-spectral: formed in physical space and dealiased.
//! With the 2/3 mask this equals the exact product truncated to the retained
//! band, so every identity below holds to rounding.

use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::tensor;

use super::{block_dq, lowpass_sq, zero_mode, Dyadic};

fn hadamard(a: &RealField, b: &RealField) -> RealField {
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).collect())
        .collect();
    RealField { grid: a.grid.clone(), shape: a.shape.clone(), data }
}

fn product(a: &SpectralField, b: &SpectralField, op: fn(&RealField, &RealField) -> RealField) -> SpectralField {
    op(&a.to_real(), &b.to_real()).to_spectral_dealiased()
}

fn check_pair(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{} vs {}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `ab = Ṫ_a b + Ṫ_b a + Ṙ(a, b)`.
#[derive(Debug, Clone)]
pub struct Bony {
    /// `Ṫ_a b = Σ_q Ṡ_{q−1}a Δ̇_q b`.
    pub t_ab: SpectralField,
    /// `Ṫ_b a = Σ_q Ṡ_{q−1}b Δ̇_q a`.
    pub t_ba: SpectralField,
    /// `Ṙ(a, b) = Σ_{|q−q'|≤1} Δ̇_q a Δ̇_{q'} b`, plus the product of the means.
    pub r: SpectralField,
}

impl Bony {
    pub fn sum(&self) -> SpectralField {
        self.t_ab.add(&self.t_ba).add(&self.r)
    }
}

/// Bony decomposition of the componentwise product of two fields of equal shape.
pub fn bony_decompose(a: &SpectralField, b: &SpectralField) -> Result<Bony> {
    check_pair(a, b)?;
    let d = Dyadic::new(a.grid());
    let blocks_a: Vec<SpectralField> = d.shells().map(|q| block_dq(a, q)).collect();
    let blocks_b: Vec<SpectralField> = d.shells().map(|q| block_dq(b, q)).collect();
    let zero = SpectralField::zeros(a.grid(), a.shape().clone());
    let (mut t_ab, mut t_ba, mut r) = (zero.clone(), zero.clone(), zero);
    for (j, q) in d.shells().enumerate() {
        t_ab = t_ab.add(&product(&lowpass_sq(a, q - 1), &blocks_b[j], hadamard));
        t_ba = t_ba.add(&product(&lowpass_sq(b, q - 1), &blocks_a[j], hadamard));
        for dj in -1i32..=1 {
            let k = j as i32 + dj;
            if k >= 0 && (k as usize) < blocks_b.len() {
                r = r.add(&product(&blocks_a[j], &blocks_b[k as usize], hadamard));
            }
        }
    }
    r = r.add(&product(&zero_mode(a), &zero_mode(b), hadamard));
    Ok(Bony { t_ab, t_ba, r })
}

/// The four pieces of `Δ̇_q(AB)` for matrix fields `A`, `B`.
#[derive(Debug, Clone)]
pub struct JqTerms {
    /// `Σ_{|q−q'|≤5} [Δ̇_q, Ṡ_{q'−1}A] Δ̇_{q'}B`.
    pub j1: SpectralField,
    /// `Σ_{|q−q'|≤5} (Ṡ_{q'−1}A − Ṡ_{q−1}A) Δ̇_q Δ̇_{q'}B`.
    pub j2: SpectralField,
    /// `Ṡ_{q−1}A Δ̇_q B`.
    pub j3: SpectralField,
    /// `Σ_{q' ≥ q−5} Δ̇_q(Δ̇_{q'}A Ṡ_{q'+2}B)`.
    pub j4: SpectralField,
}

impl JqTerms {
    pub fn sum(&self) -> SpectralField {
        self.j1.add(&self.j2).add(&self.j3).add(&self.j4)
    }
}

pub fn jq_decompose(a: &SpectralField, b: &SpectralField, q: i32) -> Result<JqTerms> {
    check_pair(a, b)?;
    if !a.shape().is_square_matrix() {
        return Err(Error::ShapeMismatch(format!("matrix fields expected, got {}", a.shape())));
    }
    let d = Dyadic::new(a.grid());
    let near = (q - 5).max(d.q_min())..=(q + 5).min(d.q_max());
    let s_a_q = lowpass_sq(a, q - 1);
    let db_q = block_dq(b, q);
    let zero = SpectralField::zeros(a.grid(), a.shape().clone());
    let (mut j1, mut j2, mut j4) = (zero.clone(), zero.clone(), zero);
    for qp in near {
        let s_a = lowpass_sq(a, qp - 1);
        let db = block_dq(b, qp);
        let ddb = block_dq(&db, q);
        j1 = j1
            .add(&block_dq(&product(&s_a, &db, tensor::matmul), q))
            .sub(&product(&s_a, &ddb, tensor::matmul));
        j2 = j2.add(&product(&s_a.sub(&s_a_q), &ddb, tensor::matmul));
    }
    let j3 = product(&s_a_q, &db_q, tensor::matmul);
    for qp in (q - 5).max(d.q_min())..=d.q_max() {
        let term = product(&block_dq(a, qp), &lowpass_sq(b, qp + 2), tensor::matmul);
        j4 = j4.add(&block_dq(&term, q));
    }
    Ok(JqTerms { j1, j2, j3, j4 })
}

/// `Δ̇_q(AB)` with the same pseudo-spectral matrix product.
pub fn localized_product(a: &SpectralField, b: &SpectralField, q: i32) -> SpectralField {
    block_dq(&product(a, b, tensor::matmul), q)
}

/// `[Δ̇_q, u]v = Δ̇_q(uv) − u Δ̇_q v`.
pub fn commutator(q: i32, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    check_pair(u, v)?;
    Ok(block_dq(&product(u, v, hadamard), q).sub(&product(u, &block_dq(v, q), hadamard)))
}

/// Componentwise pseudo-spectral product.
pub fn pointwise_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    check_pair(a, b)?;
    Ok(product(a, b, hadamard))
}
