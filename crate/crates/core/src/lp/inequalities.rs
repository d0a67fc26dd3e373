//! Ratio checks for the dyadic inequalities and their random ensembles.
//!
//! Each check returns both sides and their ratio. The constants in these
//! inequalities are existential, so ensembles record the empirical maximum
//! rather than asserting a particular value.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::init::{random_scalar, BandLimitedSpec};
use crate::spectral;

use super::norms::{sobolev_norm, SobolevBackend};
use super::paraproduct::{commutator, pointwise_product};
use super::{block_dq, lowpass_sq, Dyadic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or `None` when the right side vanishes.
    pub ratio: Option<f64>,
}

impl RatioReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = (rhs > 0.0).then(|| lhs / rhs);
        RatioReport { lhs, rhs, ratio }
    }
}

fn lp(f: &SpectralField, p: f64) -> f64 {
    f.to_real().lp_norm(p)
}

fn exponents(a: f64, b: f64) -> Result<()> {
    if !(a >= 1.0 && b >= a) {
        return Err(Error::Precondition(format!("Bernstein needs b >= a >= 1, got a={a} b={b}")));
    }
    Ok(())
}

fn bernstein_factor(dim: usize, a: f64, b: f64, q: i32) -> f64 {
    2f64.powf(dim as f64 * (1.0 / a - 1.0 / b) * q as f64)
}

/// `‖Δ̇_q f‖_{L^b}` against `2^{d(1/a−1/b)q}‖Δ̇_q f‖_{L^a}`.
pub fn check_bernstein(f: &SpectralField, q: i32, a: f64, b: f64) -> Result<RatioReport> {
    exponents(a, b)?;
    let block = block_dq(f, q);
    let dim = f.grid().dim();
    Ok(RatioReport::new(lp(&block, b), bernstein_factor(dim, a, b, q) * lp(&block, a)))
}

/// `2^{−q}‖Δ̇_q ∇f‖_{L^p}` against `‖Δ̇_q f‖_{L^p}`; bounded above and below.
pub fn check_bernstein_derivative(f: &SpectralField, q: i32, p: f64) -> RatioReport {
    let block = block_dq(f, q);
    let grad = spectral::gradient(&block);
    RatioReport::new(2f64.powi(-q) * lp(&grad, p), lp(&block, p))
}

/// `‖(Ṡ_q − Ṡ_{q'})f‖_{L^b}` against `2^{d(1/a−1/b)max(q,q')}‖(Ṡ_q − Ṡ_{q'})f‖_{L^a}`.
pub fn check_bernstein_lowpass(f: &SpectralField, q: i32, qp: i32, a: f64, b: f64) -> Result<RatioReport> {
    exponents(a, b)?;
    if (q - qp).abs() > 5 {
        return Err(Error::Precondition(format!("|q − q'| must be at most 5, got {q}, {qp}")));
    }
    let diff = lowpass_sq(f, q).sub(&lowpass_sq(f, qp));
    let dim = f.grid().dim();
    Ok(RatioReport::new(lp(&diff, b), bernstein_factor(dim, a, b, q.max(qp)) * lp(&diff, a)))
}

/// `‖[Δ̇_q, u]v‖_{L²}` against `2^{−q}‖∇u‖_{L⁴}‖v‖_{L⁴}`.
pub fn check_commutator(q: i32, u: &SpectralField, v: &SpectralField) -> Result<RatioReport> {
    let c = commutator(q, u, v)?;
    let rhs = 2f64.powi(-q) * lp(&spectral::gradient(u), 4.0) * lp(v, 4.0);
    Ok(RatioReport::new(c.l2_norm(), rhs))
}

/// `‖ab‖_{Ḣ^{s+t−d/2}}` against `‖a‖_{Ḣ^s}‖b‖_{Ḣ^t}`, for `|s|, |t| < d/2`, `s + t > 0`.
pub fn check_product_law(a: &SpectralField, b: &SpectralField, s: f64, t: f64) -> Result<RatioReport> {
    let half = a.grid().dim() as f64 / 2.0;
    if !(s.abs() < half && t.abs() < half && s + t > 0.0) {
        return Err(Error::Precondition(format!(
            "product law needs |s|, |t| < d/2 and s + t > 0, got s={s} t={t}"
        )));
    }
    let ab = pointwise_product(a, b)?;
    let lhs = sobolev_norm(&ab, s + t - half, true, SobolevBackend::Direct);
    let rhs = sobolev_norm(a, s, true, SobolevBackend::Direct) * sobolev_norm(b, t, true, SobolevBackend::Direct);
    Ok(RatioReport::new(lhs, rhs))
}

/// `‖Ṡ_N f‖_{L^∞}` against `‖f‖_{L²} + √N ‖∇f‖_{L²}`.
pub fn check_sqrt_n(f: &SpectralField, n: i32) -> Result<RatioReport> {
    if n < 1 {
        return Err(Error::Precondition(format!("N must be positive, got {n}")));
    }
    let lhs = lp(&lowpass_sq(f, n), f64::INFINITY);
    let rhs = f.l2_norm() + (n as f64).sqrt() * spectral::gradient(f).l2_norm();
    Ok(RatioReport::new(lhs, rhs))
}

/// `‖f‖_{L^{2p}}` against `√p ‖f‖_{L²}^{1/p} ‖∇f‖_{L²}^{1−1/p}` in two dimensions.
pub fn check_l2p(f: &SpectralField, p: f64) -> Result<RatioReport> {
    if f.grid().dim() != 2 {
        return Err(Error::Precondition("the L^{2p} interpolation check is two-dimensional".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("p must lie in [1, ∞), got {p}")));
    }
    let lhs = lp(f, 2.0 * p);
    let rhs = p.sqrt() * f.l2_norm().powf(1.0 / p) * spectral::gradient(f).l2_norm().powf(1.0 - 1.0 / p);
    Ok(RatioReport::new(lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Bernstein,
    BernsteinDerivative,
    Commutator,
    ProductLaw,
    SqrtN,
    L2p,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::Bernstein,
        CheckKind::BernsteinDerivative,
        CheckKind::Commutator,
        CheckKind::ProductLaw,
        CheckKind::SqrtN,
        CheckKind::L2p,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Bernstein => "bernstein",
            CheckKind::BernsteinDerivative => "bernstein-derivative",
            CheckKind::Commutator => "commutator",
            CheckKind::ProductLaw => "product-law",
            CheckKind::SqrtN => "sqrt-n",
            CheckKind::L2p => "l2p",
        }
    }
}

impl std::str::FromStr for CheckKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown check '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub kind: CheckKind,
    pub grid_n: usize,
    pub dim: usize,
    pub trials: Vec<TrialResult>,
}

impl EnsembleReport {
    pub fn max_ratio(&self) -> f64 {
        self.trials.iter().map(|t| t.ratio).fold(0.0, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.trials.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.trials.iter().all(|t| t.ratio.is_finite())
    }
}

/// Band limit of the ensemble fields. The draw is grid independent, so the
/// same seed yields the same field on every grid resolving this band.
pub const ENSEMBLE_KMAX: f64 = 10.0;

fn field(grid: &Arc<Grid>, seed: u64) -> Result<SpectralField> {
    random_scalar(
        grid,
        &BandLimitedSpec {
            seed,
            kmax: ENSEMBLE_KMAX,
            slope: 1.0,
            amplitude: 1.0,
        },
    )
}

/// Keep the sample with the largest ratio.
fn worst(seed: u64, reports: impl IntoIterator<Item = RatioReport>) -> TrialResult {
    let mut best = TrialResult { seed, lhs: 0.0, rhs: 0.0, ratio: 0.0 };
    for r in reports {
        if let Some(x) = r.ratio {
            if x > best.ratio || best.rhs == 0.0 {
                best = TrialResult { seed, lhs: r.lhs, rhs: r.rhs, ratio: x };
            }
        }
    }
    best
}

/// Shells in which a field of band `ENSEMBLE_KMAX` can have content.
fn active_shells(d: &Dyadic) -> Vec<i32> {
    let top = (ENSEMBLE_KMAX * d.grid().l_box()).log2().ceil() as i32 + 1;
    d.shells().filter(|&q| q <= top).collect()
}

/// Free exponents of the ensemble checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    /// `(s, t)` of the product law.
    pub product_exponents: (f64, f64),
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions { product_exponents: (0.5, 0.5) }
    }
}

impl EnsembleOptions {
    /// Reject exponents outside the range of `kind` before any trial runs.
    pub fn validate(&self, kind: CheckKind, grid: &Grid) -> Result<()> {
        if kind == CheckKind::ProductLaw {
            let (s, t) = self.product_exponents;
            let half = grid.dim() as f64 / 2.0;
            if !(s.abs() < half && t.abs() < half && s + t > 0.0) {
                return Err(Error::Precondition(format!(
                    "product law needs |s|, |t| < d/2 and s + t > 0, got s={s} t={t}"
                )));
            }
        }
        Ok(())
    }
}

fn trial(kind: CheckKind, grid: &Arc<Grid>, seed: u64, opts: &EnsembleOptions) -> Result<TrialResult> {
    let d = Dyadic::new(grid);
    let f = field(grid, seed)?;
    let shells = active_shells(&d);
    Ok(match kind {
        CheckKind::Bernstein => worst(
            seed,
            shells
                .iter()
                .map(|&q| check_bernstein(&f, q, 2.0, f64::INFINITY))
                .collect::<Result<Vec<_>>>()?,
        ),
        CheckKind::BernsteinDerivative => {
            worst(seed, shells.iter().map(|&q| check_bernstein_derivative(&f, q, 2.0)))
        }
        CheckKind::Commutator => {
            let v = field(grid, seed.wrapping_add(0x5bd1_e995))?;
            worst(
                seed,
                shells
                    .iter()
                    .map(|&q| check_commutator(q, &f, &v))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        CheckKind::ProductLaw => {
            let b = field(grid, seed.wrapping_add(0x5bd1_e995))?;
            let (s, t) = opts.product_exponents;
            worst(seed, [check_product_law(&f, &b, s, t)?])
        }
        CheckKind::SqrtN => worst(
            seed,
            (1..=d.q_max().max(1))
                .map(|n| check_sqrt_n(&f, n))
                .collect::<Result<Vec<_>>>()?,
        ),
        CheckKind::L2p => worst(
            seed,
            [1.0, 2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|&p| check_l2p(&f, p))
                .collect::<Result<Vec<_>>>()?,
        ),
    })
}

/// Run `trials` independent trials with seeds `base_seed, base_seed + 1, …` in parallel.
pub fn run_ensemble(kind: CheckKind, grid: &Arc<Grid>, trials: usize, base_seed: u64) -> Result<EnsembleReport> {
    run_ensemble_with(kind, grid, trials, base_seed, &EnsembleOptions::default())
}

pub fn run_ensemble_with(
    kind: CheckKind,
    grid: &Arc<Grid>,
    trials: usize,
    base_seed: u64,
    opts: &EnsembleOptions,
) -> Result<EnsembleReport> {
    opts.validate(kind, grid)?;
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|t| trial(kind, grid, base_seed.wrapping_add(t), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleReport {
        kind,
        grid_n: grid.n(),
        dim: grid.dim(),
        trials: results,
    })
}

/// Relative change of the empirical constant between two ensembles.
pub fn stability(a: &EnsembleReport, b: &EnsembleReport) -> f64 {
    let (x, y) = (a.max_ratio(), b.max_ratio());
    (x - y).abs() / x.max(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{RealField, Shape};

    #[test]
    fn bernstein_exponent_arithmetic() {
        assert_eq!(bernstein_factor(2, 2.0, f64::INFINITY, 3), 8.0);
        let g = Grid::new(2, 32, 1.0).unwrap();
        let f = field(&g, 1).unwrap();
        assert!(check_bernstein(&f, 2, 4.0, 2.0).is_err());
        let r = check_bernstein(&f, 2, 2.0, 2.0).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_ratio_within_shell_geometry() {
        // In L² the ratio is an average of |k|/2^q over the shell (1/2, 9/5).
        let g = Grid::new(2, 64, 1.0).unwrap();
        for seed in 0..5 {
            let f = field(&g, seed).unwrap();
            for q in 0..4 {
                let r = check_bernstein_derivative(&f, q, 2.0).ratio.unwrap();
                assert!(r > 0.5 && r < 1.8, "{r}");
            }
        }
    }

    #[test]
    fn lowpass_version_vanishes_on_the_diagonal() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let f = field(&g, 3).unwrap();
        let r = check_bernstein_lowpass(&f, 2, 2, 2.0, 4.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(check_bernstein_lowpass(&f, 0, 6, 2.0, 4.0).is_err());
    }

    #[test]
    fn product_law_preconditions_and_degenerate() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let f = field(&g, 3).unwrap();
        assert!(check_product_law(&f, &f, -0.5, 0.25).is_err());
        assert!(check_product_law(&f, &f, 1.0, 0.5).is_err());
        let z = SpectralField::zeros(&g, Shape::scalar());
        assert_eq!(check_product_law(&f, &z, 0.5, 0.5).unwrap().ratio, None);
    }

    #[test]
    fn l2p_equality_at_p_one() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let f = field(&g, 4).unwrap();
        let r = check_l2p(&f, 1.0).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_n_constant_field() {
        // f = c: ‖Ṡ_N f‖_∞ = c and the right side is c √V.
        let g = Grid::new(2, 32, 1.0).unwrap();
        let c = RealField::scalar_from_fn(&g, |_| 2.0).to_spectral();
        let r = check_sqrt_n(&c, 2).unwrap();
        let v = g.volume();
        assert!((r.ratio.unwrap() - 1.0 / v.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ensembles_are_reproducible() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        for kind in CheckKind::ALL {
            let a = run_ensemble(kind, &g, 4, 17).unwrap();
            let b = run_ensemble(kind, &g, 4, 17).unwrap();
            assert_eq!(a.trials, b.trials, "{}", kind.name());
            assert!(a.all_finite() && a.max_ratio() > 0.0);
        }
    }

    #[test]
    fn bad_exponents_fail_before_any_trial() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let opts = EnsembleOptions { product_exponents: (1.0, 0.5) };
        assert!(matches!(
            run_ensemble_with(CheckKind::ProductLaw, &g, 0, 0, &opts),
            Err(Error::Precondition(_))
        ));
        assert!(run_ensemble_with(CheckKind::L2p, &g, 0, 0, &opts).unwrap().trials.is_empty());
    }
}
