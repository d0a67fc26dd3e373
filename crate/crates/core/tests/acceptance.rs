//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p qtf-core --test acceptance`. A single criterion can be
//! selected by number: `cargo test -p qtf-core --test acceptance -- 4`.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use qtf_core::audit::{
    audit_energy_balance, audit_lyapunov_cancellations, audit_scaling, audit_uniqueness_cancellations,
    compare_envelopes, convergence_order, negative_control_velocity, nonsymmetric_tracefree, uniqueness_monitor,
    Hypothesis, UniquenessControl, POWER_MIN,
};
use qtf_core::field::{RealField, Shape};
use qtf_core::init::{random_q, random_u, BandLimitedSpec};
use qtf_core::lp::inequalities::{run_ensemble, stability, CheckKind};
use qtf_core::lp::paraproduct::{localized_product, pointwise_product};
use qtf_core::lp::{block_dq, bony_decompose, jq_decompose, zero_mode, Dyadic};
use qtf_core::solver::{run, twin_run, Scheme, SimState, Stepper, StepperConfig, VecSink};
use qtf_core::{Grid, ModelParams, QTensorField, Result, SpectralField, VelocityField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn spec(seed: u64, kmax: f64, amplitude: f64) -> BandLimitedSpec {
    BandLimitedSpec { seed, kmax, slope: 1.0, amplitude }
}

fn random_state(g: &Arc<Grid>, m: usize, seed: u64, kmax: f64, amp: f64) -> Result<SimState> {
    SimState::new(0.0, random_q(g, m, &spec(seed, kmax, amp))?, random_u(g, m, &spec(seed + 1000, kmax, amp))?)
}

fn generic_run(scheme: Scheme, dt: f64) -> Result<(qtf_core::solver::RunSummary, Vec<qtf_core::solver::DiagnosticRow>)> {
    let g = Grid::new(2, 64, 1.0)?;
    let cfg = StepperConfig { dt, scheme, t_final: 1.0, cadence: 10, ..StepperConfig::default() };
    let mut st = Stepper::new(&g, ModelParams::default(), cfg)?;
    let mut sink = VecSink::default();
    let sum = run(&mut st, random_state(&g, 2, 7, 4.0, 0.5)?, &mut sink)?;
    Ok((sum, sink.rows))
}

fn c1_structure() -> Result<Outcome> {
    let t0 = Instant::now();
    let (sum, _) = generic_run(Scheme::Imex2, 1e-3)?;
    let secs = t0.elapsed().as_secs_f64();
    let d = sum.max_defects;
    let worst = d.trace.max(d.symmetry).max(d.divergence);
    Ok(Outcome {
        pass: worst <= 1e-11 && sum.steps == 1000,
        detail: format!(
            "max trace {:.1e}, symmetry {:.1e}, divergence {:.1e} over {} steps in {secs:.1}s (target < 60s)",
            d.trace, d.symmetry, d.divergence, sum.steps
        ),
    })
}

fn c2_energy() -> Result<Outcome> {
    let (s2, rows) = generic_run(Scheme::Imex2, 1e-3)?;
    let (s2h, _) = generic_run(Scheme::Imex2, 5e-4)?;
    let (s1, _) = generic_run(Scheme::Imex1, 1e-3)?;
    let (s1h, _) = generic_run(Scheme::Imex1, 5e-4)?;
    let rep = audit_energy_balance(&rows)?;
    // E_{n+1} − E_n = Δt (r_n − mean dissipation) ≤ Δt r_n.
    let monotone = s2.max_energy_increase <= 1e-3 * s2.max_abs_residual;
    let f2 = s2.max_abs_residual / s2h.max_abs_residual;
    let f1 = s1.max_abs_residual / s1h.max_abs_residual;
    let pass = monotone && (3.5..=4.5).contains(&f2) && (1.8..=2.2).contains(&f1) && rep.min_dissipation_balance >= 0.0;
    Ok(Outcome {
        pass,
        detail: format!(
            "max dE {:.2e} (budget {:.2e}); order-2 factor {f2:.3} (p={:.2}), order-1 factor {f1:.3} (p={:.2})",
            s2.max_energy_increase,
            1e-3 * s2.max_abs_residual,
            convergence_order(s2.max_abs_residual, s2h.max_abs_residual),
            convergence_order(s1.max_abs_residual, s1h.max_abs_residual)
        ),
    })
}

fn c3_heat_flow() -> Result<Outcome> {
    let g = Grid::new(2, 32, 1.0)?;
    let p = ModelParams { a: 0.0, b: 0.0, c: 0.0, xi: 0.0, ..ModelParams::default() };
    let k2 = 5.0;
    let shape = |x: &[f64]| (2.0 * x[0] + x[1]).cos();
    let q0 = RealField::from_fn(&g, Shape::matrix(2, 2), |c, x| match c {
        0 => 0.3 * shape(x),
        3 => -0.3 * shape(x),
        _ => 0.2 * shape(x),
    })
    .to_spectral();
    let state = SimState::new(0.0, QTensorField::project(q0.clone())?, VelocityField::zeros(&g, 2))?;
    let mut worst: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    let e0 = qtf_core::model::total_energy_e(&q0, &SpectralField::zeros(&g, Shape::vector(2)), &p);
    for scheme in [Scheme::Imex1, Scheme::Imex2] {
        let cfg = StepperConfig { dt: 1e-3, scheme, t_final: 1.0, ..StepperConfig::default() };
        let mut st = Stepper::new(&g, p, cfg)?;
        let mut s = state.clone();
        for _ in 0..cfg.n_steps() {
            s = st.step(&s)?;
            let decay = (-p.gamma * p.l * k2 * s.t).exp();
            let exact = q0.scale(decay);
            worst = worst.max(s.q.sub(&exact).l2_norm() / exact.l2_norm());
            let e = qtf_core::model::total_energy_e(&s.q, &s.u, &p);
            let e_exact = e0 * decay * decay;
            worst_e = worst_e.max((e - e_exact).abs() / e_exact);
        }
    }
    Ok(Outcome {
        pass: worst <= 1e-10 && worst_e <= 1e-8,
        detail: format!("max relative error {worst:.2e} (Q), {worst_e:.2e} (E), both schemes"),
    })
}

fn c4_lyapunov() -> Result<Outcome> {
    let g = Grid::new(2, 128, 1.0)?;
    let p2 = ModelParams::default();
    let p3 = ModelParams { d_target: 3, ..p2 };
    let results = (0..20u64)
        .into_par_iter()
        .map(|seed| -> Result<(f64, f64, f64)> {
            let mut worst: f64 = 0.0;
            for (p, m) in [(p2, 2), (p3, 3)] {
                let q = random_q(&g, m, &spec(100 + seed, 8.0, 0.5))?;
                let u = random_u(&g, m, &spec(200 + seed, 8.0, 1.0))?;
                let rep = audit_lyapunov_cancellations(&q, &u, &p)?;
                worst = worst.max(rep.checks.iter().map(|c| c.ratio).fold(0.0, f64::max));
            }
            let q = random_q(&g, 3, &spec(300 + seed, 8.0, 0.5))?;
            let qn = nonsymmetric_tracefree(&g, 3, &spec(500 + seed, 8.0, 0.5))?;
            let (mut div_ctrl, mut sym_ctrl) = (f64::INFINITY, f64::INFINITY);
            for id in ["I", "A+AA", "J3-JJ3", "II", "2B+BB", "2C+CC", "J1+J2-JJ1-JJ2"] {
                let sym = Hypothesis::of(id) == Some(Hypothesis::Symmetric);
                let qq = if sym { &qn } else { &q };
                let u = negative_control_velocity(qq, &p3, id)?;
                let r = audit_lyapunov_cancellations(qq, &u, &p3)?.check(id).unwrap().ratio;
                if sym {
                    sym_ctrl = sym_ctrl.min(r);
                } else {
                    div_ctrl = div_ctrl.min(r);
                }
            }
            Ok((worst, div_ctrl, sym_ctrl))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let div = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let sym = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        pass: worst <= 1e-10 && div > POWER_MIN && sym > POWER_MIN,
        detail: format!(
            "worst identity ratio {worst:.2e} over 20 seeds (d=2,3); weakest control: divergence {div:.2e}, symmetry {sym:.2e}"
        ),
    })
}

fn c5_uniqueness() -> Result<Outcome> {
    let g = Grid::new(2, 64, 1.0)?;
    let p = ModelParams { d_target: 3, ..ModelParams::default() };
    let labels = ["C1", "C2", "C3", "C4", "D1", "D2", "F1", "F2"];
    let per_seed = (0..10u64)
        .into_par_iter()
        .map(|seed| -> Result<(f64, Vec<f64>, f64)> {
            let q1 = random_q(&g, 3, &spec(700 + seed, 6.0, 0.5))?;
            let q2 = random_q(&g, 3, &spec(800 + seed, 6.0, 0.5))?;
            let u1 = random_u(&g, 3, &spec(900 + seed, 6.0, 1.0))?;
            let u2 = random_u(&g, 3, &spec(1000 + seed, 6.0, 1.0))?;
            let rep = audit_uniqueness_cancellations(&q1, &q2, &u1, &u2, &p, UniquenessControl::None)?;
            let sums = ["C1+C2+C3+C4", "D1+D2", "F1+F2"].iter().map(|n| rep.check(n).unwrap().ratio).fold(0.0, f64::max);
            let sizes = labels.iter().map(|l| rep.check(&format!("|{l}|")).unwrap().ratio).collect();
            let d = audit_uniqueness_cancellations(&q1, &q2, &u1, &u2, &p, UniquenessControl::StrainForRotation)?;
            let f = audit_uniqueness_cancellations(&q1, &q2, &u1, &u2, &p, UniquenessControl::MismatchedFactor)?;
            let qn = nonsymmetric_tracefree(&g, 3, &spec(1100 + seed, 6.0, 0.5))?;
            let c = audit_uniqueness_cancellations(&qn, &q2, &u1, &u2, &p, UniquenessControl::None)?;
            let ctrl = [
                d.check("D1+D2").unwrap().ratio,
                f.check("F1+F2").unwrap().ratio,
                c.check("C1+C2+C3+C4").unwrap().ratio,
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            Ok((sums, sizes, ctrl))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_sum = per_seed.iter().map(|r| r.0).fold(0.0, f64::max);
    let ctrl = per_seed.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let mut weakest = Vec::new();
    let mut sizes_ok = true;
    for (j, l) in labels.iter().enumerate() {
        let min = per_seed.iter().map(|r| r.1[j]).fold(f64::INFINITY, f64::min);
        sizes_ok &= min >= POWER_MIN;
        weakest.push(format!("{l} {min:.1e}"));
    }
    Ok(Outcome {
        pass: worst_sum <= 1e-9 && sizes_ok && ctrl > POWER_MIN,
        detail: format!(
            "worst sum ratio {worst_sum:.2e}; smallest constituent ratios: {}; weakest control {ctrl:.2e}",
            weakest.join(", ")
        ),
    })
}

fn c6_lp_reconstruction() -> Result<Outcome> {
    let g = Grid::new(2, 64, 1.0)?;
    let d = Dyadic::new(&g);
    let pu = d.partition_defect();
    let errs = (0..100u64)
        .into_par_iter()
        .map(|seed| -> Result<(f64, f64, f64)> {
            let f = random_q(&g, 2, &spec(seed, 10.0, 1.0))?.into_inner();
            let a = f.add(&zero_mode_shift(&f, 0.4));
            let b = random_q(&g, 2, &spec(seed + 5000, 10.0, 1.0))?.into_inner();
            let sum = d.shells().fold(zero_mode(&a), |acc, q| acc.add(&block_dq(&a, q)));
            let rec = sum.sub(&a).l2_norm() / a.l2_norm();
            let ab = pointwise_product(&a, &b)?;
            let bony = bony_decompose(&a, &b)?.sum().sub(&ab).l2_norm() / ab.l2_norm();
            let full = ab.l2_norm();
            let mut jq: f64 = 0.0;
            for q in d.shells() {
                let j = jq_decompose(&a, &b, q)?;
                jq = jq.max(j.sum().sub(&localized_product(&a, &b, q)).l2_norm() / full);
            }
            Ok((rec, bony, jq))
        })
        .collect::<Result<Vec<_>>>()?;
    let rec = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let bony = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let jq = errs.iter().map(|e| e.2).fold(0.0, f64::max);
    Ok(Outcome {
        pass: pu <= 1e-12 && rec <= 1e-12 && bony <= 1e-10 && jq <= 1e-10,
        detail: format!("partition defect {pu:.1e}; reconstruction {rec:.1e}; Bony {bony:.1e}; J_q {jq:.1e} (100 fields)"),
    })
}

/// Constant diagonal shift so the fields carry a mean.
fn zero_mode_shift(f: &SpectralField, v: f64) -> SpectralField {
    f.map_coeffs(|c, i, _| {
        if i == 0 && (c == 0 || c == 3) {
            num_complex::Complex64::new(if c == 0 { v } else { -v }, 0.0)
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    })
}

fn c7_inequalities() -> Result<Outcome> {
    let g64 = Grid::new(2, 64, 1.0)?;
    let g128 = Grid::new(2, 128, 1.0)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in CheckKind::ALL {
        let a = run_ensemble(kind, &g64, 100, 0)?;
        let b = run_ensemble(kind, &g128, 100, 0)?;
        let st = stability(&a, &b);
        let ok = a.all_finite() && b.all_finite() && st <= 0.2;
        pass &= ok;
        parts.push(format!("{} C={:.3}/{:.3} Δ={:.1}%{}", kind.name(), a.max_ratio(), b.max_ratio(), 100.0 * st, if ok { "" } else { " !" }));
    }
    Ok(Outcome { pass, detail: parts.join("; ") })
}

fn c8_twins() -> Result<Outcome> {
    let g = Grid::new(2, 32, 1.0)?;
    let p = ModelParams::default();
    let cfg = StepperConfig { dt: 1e-3, t_final: 1.0, ..StepperConfig::default() };
    let st = Stepper::new(&g, p, cfg)?;
    let a = random_state(&g, 2, 31, 4.0, 0.5)?;
    let same = twin_run(&st, a.clone(), a.clone(), 10)?;
    let max_same = same.rows.iter().map(|r| r.phi).fold(0.0, f64::max);
    let dq = random_q(&g, 2, &spec(41, 4.0, 1e-6))?;
    let du = random_u(&g, 2, &spec(42, 4.0, 1e-6))?;
    let b = SimState::new(0.0, QTensorField::project(a.q.add(&dq))?, VelocityField::project(a.u.add(&du))?)?;
    let pert = twin_run(&st, a, b, 10)?;
    let rep = uniqueness_monitor(&pert.rows, 16)?;
    let ok = max_same <= 1e-24 && rep.passed();
    Ok(Outcome {
        pass: ok,
        detail: format!(
            "identical max Φ {max_same:.1e}; perturbed Φ(0) {:.2e} → Φ(1) {:.2e}, envelope(1) {:.2e}, ∫χ_emp {:.3}, violations {}",
            pert.rows[0].phi,
            pert.rows.last().unwrap().phi,
            rep.rows.last().unwrap().envelope,
            rep.chi_integral,
            rep.violations.len()
        ),
    })
}

fn c9_scaling() -> Result<Outcome> {
    let g = Grid::new(2, 32, 1.0)?;
    let lin_p = ModelParams { xi: 0.0, ..ModelParams::default() };
    let lin_cfg = StepperConfig { dt: 1e-3, t_final: 0.05, fold_a: true, ..StepperConfig::default() };
    let lin = audit_scaling(&g, &lin_p, &lin_cfg, &random_state(&g, 2, 51, 3.0, 1e-6)?, 2, 10)?;
    let mut gen = Vec::new();
    for (n, dt) in [(16, 4e-3), (32, 2e-3), (64, 1e-3)] {
        let g = Grid::new(2, n, 1.0)?;
        let cfg = StepperConfig { dt, t_final: 0.04, ..StepperConfig::default() };
        let rep = audit_scaling(&g, &ModelParams::default(), &cfg, &random_state(&g, 2, 61, 3.0, 0.5)?, 2, 5)?;
        gen.push(rep.max_discrepancy);
    }
    let decreasing = gen.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome {
        pass: lin.max_discrepancy <= 1e-8 && decreasing,
        detail: format!(
            "linear {:.2e}; generic under refinement {}",
            lin.max_discrepancy,
            gen.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(" → ")
        ),
    })
}

fn c10_envelopes() -> Result<Outcome> {
    let chi = vec![1.0; 1000];
    let mut pass = true;
    let mut parts = Vec::new();
    for phi0 in [1e-12, 1e-6, 1e-2] {
        let (o, g) = compare_envelopes(phi0, &chi, 1e-3, 16)?;
        let ok = o.iter().zip(&g).all(|(a, b)| a >= b);
        pass &= ok;
        parts.push(format!("Φ₀={phi0:.0e}: {:.3e} ≥ {:.3e}", o.last().unwrap(), g.last().unwrap()));
    }
    Ok(Outcome { pass, detail: parts.join("; ") })
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 10] = [
    (1, "structure preservation", c1_structure),
    (2, "energy law", c2_energy),
    (3, "heat-flow oracle", c3_heat_flow),
    (4, "Lyapunov cancellations", c4_lyapunov),
    (5, "uniqueness cancellations", c5_uniqueness),
    (6, "LP reconstruction", c6_lp_reconstruction),
    (7, "inequality suite", c7_inequalities),
    (8, "twin runs and Osgood monitor", c8_twins),
    (9, "scaling", c9_scaling),
    (10, "Osgood vs Gronwall", c10_envelopes),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (n, name, f) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {n:>2} {:<30} {}  [{:.1}s] {detail}",
            name,
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
