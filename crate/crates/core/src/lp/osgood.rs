//! The double-logarithmic Osgood modulus and a comparison-ODE integrator.

use crate::error::{Error, Result};

/// `μ(r) = r + r ℓ + r ℓ ln ℓ` with `ℓ = ln(1 + e + 1/r)`; `μ(0) = 0`.
pub fn osgood_mu(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let l = (1.0 + std::f64::consts::E + 1.0 / r).ln();
    r + r * l + r * l * l.ln()
}

/// Forward-Euler solution of `y' = χ(t) μ(y)`, `y(0) = y0`, on the sample
/// times `t_j = j·dt`.
///
/// `chi[j]` is held constant on `[t_j, t_{j+1})` and each interval is split
/// into `substeps` Euler steps. The result has `chi.len() + 1` entries. Zero
/// is a fixed point: `y0 = 0` gives the zero envelope for every modulus with
/// `μ(0) = 0`.
pub fn osgood_integrate(
    y0: f64,
    chi: &[f64],
    dt: f64,
    substeps: usize,
    mu: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if !(y0 >= 0.0 && y0.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial value must be finite and nonnegative, got {y0}")));
    }
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::InvalidParameter("dt must be positive and substeps at least 1".into()));
    }
    if let Some(c) = chi.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidParameter(format!("χ samples must be finite and nonnegative, got {c}")));
    }
    let h = dt / substeps as f64;
    let mut out = Vec::with_capacity(chi.len() + 1);
    let mut y = y0;
    out.push(y);
    for &c in chi {
        if y > 0.0 {
            for _ in 0..substeps {
                y += h * c * mu(y);
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// `N(t) = ⌈ln(1 + e + 1/Φ)⌉`; infinite at `Φ = 0`.
pub fn frequency_threshold(phi: f64) -> f64 {
    if phi <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 + std::f64::consts::E + 1.0 / phi).ln().ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mu_at_one() {
        // Independent evaluation: ℓ = ln(2+e) and μ(1) = 1 + ℓ + ℓ ln ℓ, both from a 30-digit evaluation.
        let l = 1.551_444_713_932_051_1_f64;
        let expect = 1.0 + l + l * l.ln();
        assert!((osgood_mu(1.0) - expect).abs() < 1e-14);
        assert!((osgood_mu(1.0) - 3.232_818_396_892_600).abs() < 1e-12);
    }

    #[test]
    fn mu_small_argument() {
        assert!(osgood_mu(1e-12) <= 1e-9);
        assert_eq!(osgood_mu(0.0), 0.0);
    }

    proptest! {
        #[test]
        fn mu_exceeds_identity_and_is_monotone(a in 1e-200f64..1e10, b in 1e-200f64..1e10) {
            prop_assert!(osgood_mu(a) > a);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(osgood_mu(lo) <= osgood_mu(hi));
        }
    }

    #[test]
    fn trivial_envelopes() {
        let chi = vec![1.0; 100];
        assert!(osgood_integrate(0.0, &chi, 0.01, 4, osgood_mu).unwrap().iter().all(|&y| y == 0.0));
        let zero = vec![0.0; 100];
        assert!(osgood_integrate(0.3, &zero, 0.01, 4, osgood_mu).unwrap().iter().all(|&y| y == 0.3));
    }

    #[test]
    fn gronwall_case_is_exponential() {
        let chi = vec![1.0; 100];
        let env = osgood_integrate(1e-3, &chi, 0.01, 1000, |r| r).unwrap();
        for (j, y) in env.iter().enumerate() {
            let exact = 1e-3 * (0.01 * j as f64).exp();
            assert!((y - exact).abs() <= 1e-4 * exact);
        }
    }

    #[test]
    fn threshold() {
        assert_eq!(frequency_threshold(0.0), f64::INFINITY);
        assert_eq!(frequency_threshold(1.0), 2.0);
        assert!(osgood_integrate(-1.0, &[], 0.1, 1, osgood_mu).is_err());
    }
}
