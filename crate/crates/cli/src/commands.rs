//! Subcommand bodies. Each returns `Ok(())` on success and a [`CliError`]
//! carrying the exit status otherwise.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;

use qtf_core::audit::{
    audit_energy_balance, audit_lyapunov_cancellations, audit_scaling, audit_uniqueness_cancellations,
    negative_control_velocity, nonsymmetric_tracefree, uniqueness_monitor, Expect, Hypothesis, IdentityCheck,
    UniquenessControl, AUDIT_HEADER,
};
use qtf_core::init::{random_q, random_u, BandLimitedSpec};
use qtf_core::lp::inequalities::{run_ensemble_with, CheckKind, EnsembleOptions, EnsembleReport};
use qtf_core::lp::report::{write_report, write_thresholds};
use qtf_core::snapshot;
use qtf_core::solver::{run, twin_run, DiagnosticRow, SimState, Sink, Stepper, VecSink};
use qtf_core::{Grid, QTensorField, VelocityField};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

/// Frozen per-check ratio ceilings used when no threshold file is given.
pub const FROZEN_THRESHOLDS: &str = include_str!("../thresholds/lp.csv");

/// Seed offset of the second state in the uniqueness audit.
pub const SECOND_STATE_OFFSET: u64 = 1 << 32;

const LYAPUNOV_IDENTITIES: [&str; 7] = ["I", "II", "A+AA", "2B+BB", "2C+CC", "J1+J2-JJ1-JJ2", "J3-JJ3"];

struct DiagnosticsSink<'a, W: Write> {
    w: W,
    out: &'a OutDir,
    snapshot_every: usize,
    snapshots: usize,
}

impl<W: Write> Sink for DiagnosticsSink<'_, W> {
    fn row(&mut self, row: &DiagnosticRow) -> qtf_core::Result<()> {
        writeln!(self.w, "{}", row.to_csv())?;
        Ok(())
    }

    fn state(&mut self, step: usize, s: &SimState) -> qtf_core::Result<()> {
        if self.snapshot_every > 0 && step % self.snapshot_every == 0 {
            let threads = self.out.prov.threads.to_string();
            let step_s = step.to_string();
            let meta = [("config_hash", self.out.prov.config_hash.as_str()), ("threads", &threads), ("step", &step_s)];
            snapshot::save_with(&self.out.path(&format!("q_{step:06}.snap")), "Q", s.t, &s.q, &meta)?;
            snapshot::save_with(&self.out.path(&format!("u_{step:06}.snap")), "u", s.t, &s.u, &meta)?;
            self.snapshots += 1;
        }
        Ok(())
    }
}

pub fn simulate(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let grid = cfg.make_grid()?;
    let initial = cfg.initial_state(&grid, cfg.initial.seed)?;
    let mut stepper = Stepper::new(&grid, cfg.model, cfg.stepper)?;
    let mut w = out.csv("diagnostics.csv")?;
    writeln!(w, "{}", DiagnosticRow::CSV_HEADER)?;
    let mut sink = DiagnosticsSink { w, out, snapshot_every: cfg.output.snapshot_every, snapshots: 0 };
    let summary = run(&mut stepper, initial, &mut sink);
    sink.w.flush()?;
    let summary = summary?;
    let d = summary.max_defects;
    println!(
        "simulate: {} steps to t={:.6}, max |residual| {:.3e}, max energy increase {:.3e}, defects trace {:.1e} symmetry {:.1e} divergence {:.1e}, {} snapshots",
        summary.steps,
        summary.final_state.t,
        summary.max_abs_residual,
        summary.max_energy_increase,
        d.trace,
        d.symmetry,
        d.divergence,
        sink.snapshots
    );
    Ok(())
}

fn perturbed(cfg: &RunConfig, grid: &Arc<Grid>, a: &SimState) -> Result<SimState, CliError> {
    let tw = &cfg.twin;
    if tw.amplitude == 0.0 {
        return Ok(a.clone());
    }
    let m = cfg.m();
    let spec = BandLimitedSpec { seed: tw.seed, kmax: tw.kmax, slope: cfg.initial.slope, amplitude: tw.amplitude };
    let dq = random_q(grid, m, &spec)?;
    let du = random_u(grid, m, &BandLimitedSpec { seed: tw.seed.wrapping_add(1), ..spec })?;
    Ok(SimState::new(a.t, QTensorField::project(a.q.add(&dq))?, VelocityField::project(a.u.add(&du))?)?)
}

pub fn twin(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let grid = cfg.make_grid()?;
    let a = cfg.initial_state(&grid, cfg.initial.seed)?;
    let b = perturbed(cfg, &grid, &a)?;
    let stepper = Stepper::new(&grid, cfg.model, cfg.stepper)?;
    let series = twin_run(&stepper, a, b, cfg.twin.cadence)?;
    let rep = uniqueness_monitor(&series.rows, cfg.twin.substeps)?;
    let mut w = out.csv("twin.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    let max_phi = rep.rows.iter().map(|r| r.phi).fold(0.0, f64::max);
    println!(
        "twin: {} checkpoints, max Phi {:.3e}, integral of chi_emp {:.3e}, {} envelope violations",
        rep.rows.len(),
        max_phi,
        rep.chi_integral,
        rep.violations.len()
    );
    if !rep.passed() {
        return Err(CliError::AuditFailed(format!("Phi exceeds the Osgood envelope at rows {:?}", rep.violations)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AuditKind {
    Lyapunov,
    Uniqueness,
    Scaling,
    Energy,
}

/// Deliberately broken input for an audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Control {
    None,
    /// Lyapunov: gradient velocity aimed at each incompressibility identity.
    Incompressibility,
    /// Lyapunov and uniqueness: non-symmetric trace-free Q.
    Symmetry,
    /// Uniqueness: strain in place of rotation in the D terms.
    StrainForRotation,
    /// Uniqueness: mismatched factor in F2.
    MismatchedFactor,
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub kind: AuditKind,
    pub seeds: u64,
    pub control: Control,
    pub delta: u32,
    pub tol: f64,
}

fn check_row(w: &mut impl Write, seed: u64, c: &IdentityCheck) -> std::io::Result<()> {
    writeln!(w, "{seed},{},{:.16e},{:.16e},{:.16e},{}", c.name, c.value, c.scale, c.ratio, c.pass)
}

/// Identity checks decide the verdict; the constituent-size checks are informational.
fn is_identity(c: &IdentityCheck) -> bool {
    matches!(c.expect, Expect::Zero(_))
}

fn lyapunov_checks(cfg: &RunConfig, grid: &Arc<Grid>, seed: u64, control: Control) -> Result<Vec<IdentityCheck>, CliError> {
    let s = cfg.initial_state(grid, seed)?;
    let p = cfg.model;
    let wanted = match control {
        Control::None => return Ok(audit_lyapunov_cancellations(&s.q, &s.u, &p)?.checks),
        Control::Incompressibility => Hypothesis::Incompressible,
        Control::Symmetry => Hypothesis::Symmetric,
        other => return Err(CliError::Usage(format!("control {other:?} does not apply to the lyapunov audit"))),
    };
    let q = match wanted {
        Hypothesis::Incompressible => s.q.inner().clone(),
        Hypothesis::Symmetric => nonsymmetric_tracefree(grid, cfg.m(), &cfg.band(seed, cfg.initial.q_amplitude))?,
    };
    let mut checks = Vec::new();
    for id in LYAPUNOV_IDENTITIES.into_iter().filter(|id| Hypothesis::of(id) == Some(wanted)) {
        let u = negative_control_velocity(&q, &p, id)?;
        let rep = audit_lyapunov_cancellations(&q, &u, &p)?;
        checks.push(rep.check(id).expect("identity is audited").clone());
    }
    Ok(checks)
}

fn uniqueness_checks(cfg: &RunConfig, grid: &Arc<Grid>, seed: u64, control: Control) -> Result<Vec<IdentityCheck>, CliError> {
    let a = cfg.initial_state(grid, seed)?;
    let b = cfg.initial_state(grid, seed.wrapping_add(SECOND_STATE_OFFSET))?;
    let (mode, q1) = match control {
        Control::None => (UniquenessControl::None, a.q.inner().clone()),
        Control::StrainForRotation => (UniquenessControl::StrainForRotation, a.q.inner().clone()),
        Control::MismatchedFactor => (UniquenessControl::MismatchedFactor, a.q.inner().clone()),
        Control::Symmetry => (
            UniquenessControl::None,
            nonsymmetric_tracefree(grid, cfg.m(), &cfg.band(seed, cfg.initial.q_amplitude))?,
        ),
        Control::Incompressibility => {
            return Err(CliError::Usage("control incompressibility does not apply to the uniqueness audit".into()))
        }
    };
    Ok(audit_uniqueness_cancellations(&q1, &b.q, &a.u, &b.u, &cfg.model, mode)?.checks)
}

pub fn audit(cfg: &RunConfig, out: &OutDir, opts: &AuditOptions) -> Result<(), CliError> {
    let grid = cfg.make_grid()?;
    match opts.kind {
        AuditKind::Lyapunov | AuditKind::Uniqueness => {
            let name = if opts.kind == AuditKind::Lyapunov { "lyapunov" } else { "uniqueness" };
            let mut w = out.csv(&format!("audit_{name}.csv"))?;
            writeln!(w, "seed,{AUDIT_HEADER}")?;
            let (mut failures, mut worst, mut total) = (Vec::new(), 0.0f64, 0usize);
            for seed in (0..opts.seeds).map(|k| cfg.initial.seed.wrapping_add(k)) {
                let checks = match opts.kind {
                    AuditKind::Lyapunov => lyapunov_checks(cfg, &grid, seed, opts.control)?,
                    _ => uniqueness_checks(cfg, &grid, seed, opts.control)?,
                };
                for c in &checks {
                    check_row(&mut w, seed, c)?;
                    if is_identity(c) {
                        total += 1;
                        worst = worst.max(c.ratio);
                        if !c.pass {
                            failures.push(format!("seed {seed}: {} ratio {:.3e}", c.name, c.ratio));
                        }
                    }
                }
            }
            w.flush()?;
            println!(
                "{name} audit: {} seeds, {total} identity checks, worst ratio {worst:.3e}, {} failed",
                opts.seeds,
                failures.len()
            );
            for f in &failures {
                println!("  FAIL {f}");
            }
            if !failures.is_empty() {
                return Err(CliError::AuditFailed(format!("{} of {total} {name} identities failed", failures.len())));
            }
        }
        AuditKind::Scaling => {
            let initial = cfg.initial_state(&grid, cfg.initial.seed)?;
            let rep = audit_scaling(&grid, &cfg.model, &cfg.stepper, &initial, opts.delta, cfg.stepper.cadence)?;
            let mut w = out.csv("audit_scaling.csv")?;
            writeln!(w, "t,discrepancy")?;
            for (t, gap) in &rep.checkpoints {
                writeln!(w, "{t:.12e},{gap:.16e}")?;
            }
            w.flush()?;
            println!("scaling audit: delta {}, max discrepancy {:.3e} (tolerance {:.1e})", opts.delta, rep.max_discrepancy, opts.tol);
            if !(rep.max_discrepancy <= opts.tol) {
                return Err(CliError::AuditFailed(format!("scaling discrepancy {:.3e} exceeds {:.1e}", rep.max_discrepancy, opts.tol)));
            }
        }
        AuditKind::Energy => {
            let initial = cfg.initial_state(&grid, cfg.initial.seed)?;
            let mut stepper = Stepper::new(&grid, cfg.model, cfg.stepper)?;
            let mut sink = VecSink::default();
            run(&mut stepper, initial, &mut sink)?;
            let rep = audit_energy_balance(&sink.rows)?;
            let mut w = out.csv("audit_energy.csv")?;
            writeln!(w, "t,residual")?;
            for (t, r) in &rep.residuals {
                writeln!(w, "{t:.12e},{r:.16e}")?;
            }
            w.flush()?;
            // Between rows E changes by −∫D + ∫r with D ≥ 0.
            let span = cfg.stepper.dt * cfg.stepper.cadence as f64;
            let e0 = sink.rows[0].e.abs();
            let allowed = span * rep.max_abs_residual + 1e-14 * e0;
            println!(
                "energy audit: max |residual| {:.3e}, max energy increase {:.3e} (allowed {:.3e})",
                rep.max_abs_residual, rep.max_energy_increase, allowed
            );
            if rep.max_energy_increase > allowed {
                return Err(CliError::AuditFailed(format!(
                    "energy increased by {:.3e}, more than the residual allows",
                    rep.max_energy_increase
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub check: String,
    pub trials: usize,
    pub thresholds: Option<PathBuf>,
    pub product_exponents: Option<(f64, f64)>,
    pub freeze: Option<PathBuf>,
}

fn grid_label(g: &Grid) -> String {
    vec![g.n().to_string(); g.dim()].join("x")
}

/// `(check-name, grid) → max-ratio` from a threshold file.
pub fn parse_thresholds(text: &str) -> Result<HashMap<(String, String), f64>, CliError> {
    let mut out = HashMap::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == qtf_core::lp::report::THRESHOLD_HEADER => {}
        other => return Err(CliError::Config(format!("threshold file: unexpected header {other:?}"))),
    }
    for line in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(CliError::Config(format!("threshold file: malformed row '{line}'")));
        }
        let max: f64 = f[4].parse().map_err(|_| CliError::Config(format!("threshold file: bad max-ratio in '{line}'")))?;
        out.insert((f[0].to_string(), f[1].to_string()), max);
    }
    Ok(out)
}

fn ceiling(thresholds: &HashMap<(String, String), f64>, name: &str, grid: &str) -> Option<f64> {
    thresholds.get(&(name.to_string(), grid.to_string())).copied().or_else(|| {
        let fallback = thresholds.iter().filter(|((n, _), _)| n == name).map(|(_, v)| *v).reduce(f64::max);
        if fallback.is_some() {
            log::warn!("no frozen threshold for {name} on grid {grid}; using the largest one for {name}");
        }
        fallback
    })
}

pub fn lp_check(cfg: &RunConfig, out: &OutDir, opts: &LpOptions) -> Result<(), CliError> {
    let grid = cfg.make_grid()?;
    let kinds: Vec<CheckKind> = if opts.check == "all" {
        CheckKind::ALL.to_vec()
    } else {
        vec![opts.check.parse().map_err(|e: qtf_core::Error| CliError::Usage(e.to_string()))?]
    };
    let ens = EnsembleOptions { product_exponents: opts.product_exponents.unwrap_or(EnsembleOptions::default().product_exponents) };
    let custom_product = ens != EnsembleOptions::default();
    let text = match &opts.thresholds {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => FROZEN_THRESHOLDS.to_string(),
    };
    let thresholds = parse_thresholds(&text)?;
    let label = grid_label(&grid);

    let mut reports: Vec<EnsembleReport> = Vec::new();
    for kind in &kinds {
        ens.validate(*kind, &grid)?;
    }
    for kind in kinds {
        reports.push(run_ensemble_with(kind, &grid, opts.trials, cfg.initial.seed, &ens)?);
    }
    let mut w = out.csv("lp-report.csv")?;
    write_report(&mut w, &reports)?;
    w.flush()?;
    if let Some(p) = &opts.freeze {
        let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
        writeln!(f, "{}", out.prov.line())?;
        write_thresholds(&mut f, &reports)?;
        f.flush()?;
    }

    let mut failures = Vec::new();
    for r in &reports {
        let name = r.kind.name();
        if r.trials.is_empty() {
            println!("{name}: no trials");
            continue;
        }
        if custom_product && r.kind == CheckKind::ProductLaw {
            println!("{name}: max ratio {:.4e} (custom exponents, no frozen threshold)", r.max_ratio());
            continue;
        }
        let Some(limit) = ceiling(&thresholds, name, &label) else {
            return Err(CliError::Config(format!("no threshold for check '{name}'")));
        };
        let bad = r.trials.iter().filter(|t| !(t.ratio.is_finite() && t.ratio <= limit)).count();
        println!("{name}: max ratio {:.4e}, threshold {limit:.4e}, {bad} of {} trials over", r.max_ratio(), r.trials.len());
        if bad > 0 {
            failures.push(name);
        }
    }
    if !failures.is_empty() {
        return Err(CliError::AuditFailed(format!("ratios above threshold for {}", failures.join(", "))));
    }
    Ok(())
}

pub fn snapshot_info(path: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(path)?;
    let (h, _) = snapshot::read_header_bytes(&bytes)?;
    let snap = snapshot::read_snapshot(&bytes[..])?;
    println!("file: {}", path.display());
    println!("field-name: {}", h.field_name);
    println!("d: {}", h.dim);
    println!("N_axis: {}", h.n_axis);
    println!("L_box: {}", h.l_box);
    println!("time: {}", h.time);
    println!("component-shape: {}", h.shape);
    for (k, v) in &h.extra {
        println!("{k}: {v}");
    }
    let r = snap.field.to_real();
    println!("L2 norm: {:.16e}", snap.field.l2_norm());
    println!("max abs: {:.16e}", r.max_abs());
    Ok(())
}
