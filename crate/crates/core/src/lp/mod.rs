//! Littlewood–Paley analysis on the periodic grid.
//!
//! Blocks act on physical wavenumbers `|k|`. The shell range `[q_min, q_max]`
//! is chosen so that `Σ_q φ(2^{−q}|k|) = 1` on every stored nonzero mode:
//! `q_min = ⌊log₂ k_min⌋` and `q_max = ⌈log₂ k_max⌉`. The low-pass operator
//! `Ṡ_q = χ(2^{−q}D)` keeps the mean mode, so on the grid
//! `Ṡ_q f = f̂(0) + Σ_{q_min ≤ j ≤ q−1} Δ̇_j f`.

pub mod inequalities;
pub mod norms;
pub mod osgood;
pub mod paraproduct;
pub mod profile;
pub mod report;

use std::sync::Arc;

use crate::field::SpectralField;
use crate::grid::Grid;

pub use norms::{besov_norm, sobolev_norm, sobolev_equivalence_window, BesovIndex, SobolevBackend};
pub use osgood::{osgood_integrate, osgood_mu};
pub use paraproduct::{bony_decompose, commutator, jq_decompose, Bony, JqTerms};

/// Shell range of a grid.
#[derive(Debug, Clone)]
pub struct Dyadic {
    grid: Arc<Grid>,
    q_min: i32,
    q_max: i32,
}

impl Dyadic {
    pub fn new(grid: &Arc<Grid>) -> Self {
        let q_min = grid.k_min().log2().floor() as i32;
        let q_max = grid.k_max().log2().ceil() as i32;
        Dyadic {
            grid: grid.clone(),
            q_min,
            q_max,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn shells(&self) -> std::ops::RangeInclusive<i32> {
        self.q_min..=self.q_max
    }

    /// `Σ_{q_min ≤ q ≤ q_max} φ(2^{−q}|k|)` at mode `idx`.
    pub fn completeness(&self, idx: usize) -> f64 {
        let r = self.grid.kabs(idx);
        self.shells().map(|q| profile::phi_q(q, r)).sum()
    }

    /// Largest deviation from one of the shell sum over retained nonzero modes.
    pub fn partition_defect(&self) -> f64 {
        (1..self.grid.len())
            .filter(|&i| self.grid.retained(i))
            .map(|i| (self.completeness(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `Δ̇_q f = φ(2^{−q}D) f`.
pub fn block_dq(f: &SpectralField, q: i32) -> SpectralField {
    let g = f.grid().clone();
    f.apply_multiplier(|i| profile::phi_q(q, g.kabs(i)))
}

/// `Ṡ_q f = χ(2^{−q}D) f` (keeps the mean).
pub fn lowpass_sq(f: &SpectralField, q: i32) -> SpectralField {
    let g = f.grid().clone();
    f.apply_multiplier(|i| profile::chi_q(q, g.kabs(i)))
}

/// The mean mode of `f` as a field.
pub fn zero_mode(f: &SpectralField) -> SpectralField {
    f.apply_multiplier(|i| if i == 0 { 1.0 } else { 0.0 })
}

/// All blocks `Δ̇_q f` over the shell range of the grid.
pub fn blocks(f: &SpectralField) -> Vec<(i32, SpectralField)> {
    Dyadic::new(f.grid()).shells().map(|q| (q, block_dq(f, q))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Shape;
    use crate::init::{random_scalar, BandLimitedSpec};
    use num_complex::Complex64;

    #[test]
    fn shell_range_covers_band() {
        for (dim, n, l) in [(2, 64, 1.0), (2, 128, 1.0), (3, 16, 0.5), (2, 32, 3.0)] {
            let g = Grid::new(dim, n, l).unwrap();
            let d = Dyadic::new(&g);
            assert!(d.partition_defect() <= 1e-12, "{dim} {n} {l}");
            for i in 1..g.len() {
                assert!((d.completeness(i) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_from_blocks() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let spec = BandLimitedSpec { seed: 3, kmax: 20.0, slope: 0.5, amplitude: 1.0 };
        let f = random_scalar(&g, &spec).unwrap();
        let f = f.map_coeffs(|_, i, z| if i == 0 { Complex64::new(0.7, 0.0) } else { z });
        let mut sum = zero_mode(&f);
        for (_, b) in blocks(&f) {
            sum = sum.add(&b);
        }
        assert!(sum.sub(&f).l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn single_mode_sits_in_neighbouring_shells() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let mut f = SpectralField::zeros(&g, Shape::scalar());
        let i = g.index_of(&[8, 0]).unwrap();
        let j = g.conjugate_index(i);
        f.components_mut()[0][i] = Complex64::new(0.5, 0.0);
        f.components_mut()[0][j] = Complex64::new(0.5, 0.0);
        let q = 3;
        let mut s = SpectralField::zeros(&g, Shape::scalar());
        for (p, b) in blocks(&f) {
            if (p - q).abs() > 1 {
                assert_eq!(b.l2_norm(), 0.0);
            }
            s = s.add(&b);
        }
        assert!(s.sub(&f).l2_norm() <= 1e-12 * f.l2_norm());
        // |k| = 2^q sits where φ(2^{−q}·) = 1.
        assert!((block_dq(&f, q).l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn constants_and_lowpass_limits() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let mut c = SpectralField::zeros(&g, Shape::scalar());
        c.components_mut()[0][0] = Complex64::new(2.0, 0.0);
        for q in -3..8 {
            assert_eq!(block_dq(&c, q).l2_norm(), 0.0);
        }
        assert_eq!(lowpass_sq(&c, -5).sub(&c).l2_norm(), 0.0);
        let f = random_scalar(&g, &BandLimitedSpec::default()).unwrap();
        assert_eq!(lowpass_sq(&f, -2).l2_norm(), 0.0);
        let d = Dyadic::new(&g);
        assert!(lowpass_sq(&f, d.q_max() + 1).sub(&f).l2_norm() <= 1e-14 * f.l2_norm());
    }
}
