//! Run configuration: a sectioned `key = value` file.
//!
//! Grammar (one item per line, surrounding whitespace ignored):
//!
//! ```text
//! line    := blank | comment | section | entry
//! comment := ('#' | ';') any*
//! section := '[' name ']'
//! entry   := key '=' value
//! ```
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown sections, unknown keys, duplicate keys and entries before the first
//! section header are errors. Overrides of the form `section.key=value` are
//! applied on top of the file with the same rules.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use qtf_core::init::{random_q, random_u, taylor_green, uniaxial_stripe, BandLimitedSpec};
use qtf_core::snapshot;
use qtf_core::solver::{Regularization, Scheme, SimState, StepperConfig};
use qtf_core::{Grid, ModelParams, QTensorField, VelocityField};

use crate::error::CliError;

const SECTIONS: [&str; 7] = ["grid", "model", "stepper", "regularization", "initial", "output", "twin"];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: String,
}

/// Raw `section → key → value` table with the place each value came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let origin = format!("{source}:{}", i + 1);
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("{origin}: malformed section header '{line}'")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(CliError::Config(format!("{origin}: unknown section [{name}]")));
                }
                current = Some(name.to_string());
                continue;
            }
            let section = current
                .as_deref()
                .ok_or_else(|| CliError::Config(format!("{origin}: entry outside of any section")))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}: expected 'key = value', got '{line}'")))?;
            raw.insert(section, k.trim(), v.trim(), origin)?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, origin: String) -> Result<(), CliError> {
        if key.is_empty() {
            return Err(CliError::Config(format!("{origin}: empty key")));
        }
        let table = self.sections.entry(section.to_string()).or_default();
        if let Some(prev) = table.get(key) {
            return Err(CliError::Config(format!("{origin}: duplicate key '{key}' (first set at {})", prev.origin)));
        }
        table.insert(key.to_string(), Entry { value: value.to_string(), origin });
        Ok(())
    }

    /// Apply `section.key=value`, replacing any value from the file.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        let origin = format!("--override {spec}");
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}: expected section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::Config(format!("{origin}: expected section.key=value")))?;
        if !SECTIONS.contains(&section) {
            return Err(CliError::Config(format!("{origin}: unknown section [{section}]")));
        }
        if let Some(t) = self.sections.get_mut(section) {
            t.remove(key.trim());
        }
        self.insert(section, key.trim(), value.trim(), origin)
    }
}

/// Consumes the keys of one section; anything left over is rejected.
struct Table {
    name: &'static str,
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|err| {
                CliError::Config(format!("{}: bad value '{}' for {}.{key}: {err}", e.origin, e.value, self.name))
            }),
        }
    }

    fn take_bool(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(e) => match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(CliError::Config(format!("{}: bad boolean '{}' for {}.{key}", e.origin, e.value, self.name))),
            },
        }
    }

    fn take_opt(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    fn finish(self) -> Result<(), CliError> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(CliError::Config(format!("{}: unknown key '{k}' in [{}]", e.origin, self.name))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub d: usize,
    pub n_axis: usize,
    pub l_box: f64,
    pub dealias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QInit {
    Zero,
    RandomBandlimited,
    UniaxialStripe,
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UInit {
    Zero,
    RandomBandlimited,
    TaylorGreen,
    Snapshot,
}

impl FromStr for QInit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(QInit::Zero),
            "random-bandlimited" => Ok(QInit::RandomBandlimited),
            "uniaxial-stripe" => Ok(QInit::UniaxialStripe),
            "snapshot" => Ok(QInit::Snapshot),
            _ => Err("expected zero, random-bandlimited, uniaxial-stripe or snapshot".into()),
        }
    }
}

impl FromStr for UInit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(UInit::Zero),
            "random-bandlimited" => Ok(UInit::RandomBandlimited),
            "taylor-green" => Ok(UInit::TaylorGreen),
            "snapshot" => Ok(UInit::Snapshot),
            _ => Err("expected zero, random-bandlimited, taylor-green or snapshot".into()),
        }
    }
}

impl QInit {
    fn name(&self) -> &'static str {
        match self {
            QInit::Zero => "zero",
            QInit::RandomBandlimited => "random-bandlimited",
            QInit::UniaxialStripe => "uniaxial-stripe",
            QInit::Snapshot => "snapshot",
        }
    }
}

impl UInit {
    fn name(&self) -> &'static str {
        match self {
            UInit::Zero => "zero",
            UInit::RandomBandlimited => "random-bandlimited",
            UInit::TaylorGreen => "taylor-green",
            UInit::Snapshot => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub q: QInit,
    pub u: UInit,
    /// Seed of the Q draw; the velocity draw uses `seed + 1`.
    pub seed: u64,
    pub kmax: f64,
    pub slope: f64,
    pub q_amplitude: f64,
    pub u_amplitude: f64,
    pub stripe_order: f64,
    pub stripe_angle: f64,
    pub tg_amplitude: f64,
    pub q_snapshot: Option<PathBuf>,
    pub u_snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write state snapshots every this many steps; 0 disables them.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinConfig {
    /// RMS size of the perturbation added to the second state.
    pub amplitude: f64,
    pub seed: u64,
    pub kmax: f64,
    pub cadence: usize,
    pub substeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelParams,
    pub stepper: StepperConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
    pub twin: TwinConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn from_raw(mut raw: RawConfig) -> Result<Self, CliError> {
        let mut table = |name: &'static str| Table { name, entries: raw.sections.remove(name).unwrap_or_default() };

        let mut t = table("grid");
        let grid = GridConfig {
            d: t.take("d", 2)?,
            n_axis: t.take("n_axis", 64)?,
            l_box: t.take("l_box", 1.0)?,
            dealias: t.take("dealias", qtf_core::grid::DEFAULT_DEALIAS_FRACTION)?,
        };
        t.finish()?;

        let mut t = table("model");
        let dm = ModelParams::default();
        let model = ModelParams {
            a: t.take("a", dm.a)?,
            b: t.take("b", dm.b)?,
            c: t.take("c", dm.c)?,
            l: t.take("L", dm.l)?,
            gamma: t.take("Gamma", dm.gamma)?,
            nu: t.take("nu", dm.nu)?,
            lambda: t.take("lambda", dm.lambda)?,
            xi: t.take("xi", dm.xi)?,
            d_target: t.take("d_target", dm.d_target)?,
            xi0: t.take("xi0", dm.xi0)?,
        };
        t.finish()?;

        let mut t = table("stepper");
        let ds = StepperConfig::default();
        let stepper_partial = (
            t.take("dt", ds.dt)?,
            t.take::<Scheme>("scheme", ds.scheme)?,
            t.take("t_final", ds.t_final)?,
            t.take("cadence", ds.cadence)?,
            t.take_bool("fold_a", ds.fold_a)?,
        );
        t.finish()?;

        let mut t = table("regularization");
        let dr = Regularization::default();
        let regularization = Regularization {
            enabled: t.take_bool("enabled", dr.enabled)?,
            n: t.take("n", dr.n)?,
            eps: t.take("eps", dr.eps)?,
        };
        t.finish()?;
        let (dt, scheme, t_final, cadence, fold_a) = stepper_partial;
        let stepper = StepperConfig { dt, scheme, regularization, t_final, cadence, fold_a };

        let mut t = table("initial");
        let initial = InitialConfig {
            q: t.take("q", QInit::RandomBandlimited)?,
            u: t.take("u", UInit::RandomBandlimited)?,
            seed: t.take("seed", 0)?,
            kmax: t.take("kmax", 4.0)?,
            slope: t.take("slope", 1.0)?,
            q_amplitude: t.take("q_amplitude", 0.1)?,
            u_amplitude: t.take("u_amplitude", 0.1)?,
            stripe_order: t.take("stripe_order", 0.5)?,
            stripe_angle: t.take("stripe_angle", std::f64::consts::FRAC_PI_4)?,
            tg_amplitude: t.take("tg_amplitude", 1.0)?,
            q_snapshot: t.take_opt("q_snapshot").map(PathBuf::from),
            u_snapshot: t.take_opt("u_snapshot").map(PathBuf::from),
        };
        t.finish()?;

        let mut t = table("output");
        let output = OutputConfig { dir: PathBuf::from(t.take::<String>("dir", "qtf-out".into())?), snapshot_every: t.take("snapshot_every", 0)? };
        t.finish()?;

        let mut t = table("twin");
        let twin = TwinConfig {
            amplitude: t.take("amplitude", 1e-6)?,
            seed: t.take("seed", 1)?,
            kmax: t.take("kmax", 4.0)?,
            cadence: t.take("cadence", 10)?,
            substeps: t.take("substeps", 16)?,
        };
        t.finish()?;

        let cfg = RunConfig { grid, model, stepper, initial, output, twin };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read `path` (or start from defaults) and apply the overrides in order.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut raw = match path {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        for o in overrides {
            raw.apply_override(o)?;
        }
        Self::from_raw(raw)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.make_grid()?;
        self.model.validate()?;
        if self.model.d_target < self.grid.d {
            return bad(format!("model.d_target={} is smaller than grid.d={}", self.model.d_target, self.grid.d));
        }
        self.stepper.validate()?;
        let i = &self.initial;
        for (name, v) in [("kmax", i.kmax), ("q_amplitude", i.q_amplitude), ("u_amplitude", i.u_amplitude)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("initial.{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !i.slope.is_finite() {
            return bad(format!("initial.slope must be finite, got {}", i.slope));
        }
        if i.q == QInit::Snapshot && i.q_snapshot.is_none() {
            return bad("initial.q = snapshot needs initial.q_snapshot".into());
        }
        if i.u == UInit::Snapshot && i.u_snapshot.is_none() {
            return bad("initial.u = snapshot needs initial.u_snapshot".into());
        }
        let tw = &self.twin;
        if !(tw.amplitude.is_finite() && tw.amplitude >= 0.0) {
            return bad(format!("twin.amplitude must be finite and nonnegative, got {}", tw.amplitude));
        }
        if tw.cadence == 0 || tw.substeps == 0 {
            return bad("twin.cadence and twin.substeps must be at least 1".into());
        }
        if !(tw.kmax > 0.0 && tw.kmax.is_finite()) {
            return bad(format!("twin.kmax must be positive, got {}", tw.kmax));
        }
        Ok(())
    }

    pub fn make_grid(&self) -> Result<Arc<Grid>, CliError> {
        let g = &self.grid;
        Ok(Grid::with_dealias(g.d, g.n_axis, g.l_box, g.dealias)?)
    }

    /// Number of tensor components per axis.
    pub fn m(&self) -> usize {
        self.model.d_target
    }

    pub fn band(&self, seed: u64, amplitude: f64) -> BandLimitedSpec {
        BandLimitedSpec { seed, kmax: self.initial.kmax, slope: self.initial.slope, amplitude }
    }

    /// Initial state with the Q draw seeded by `seed` and the velocity draw by `seed + 1`.
    pub fn initial_state(&self, grid: &Arc<Grid>, seed: u64) -> Result<SimState, CliError> {
        let i = &self.initial;
        let m = self.m();
        let q = match i.q {
            QInit::Zero => QTensorField::zeros(grid, m),
            QInit::RandomBandlimited => random_q(grid, m, &self.band(seed, i.q_amplitude))?,
            QInit::UniaxialStripe => uniaxial_stripe(grid, m, i.stripe_order, i.stripe_angle)?,
            QInit::Snapshot => QTensorField::project(load_matching(grid, i.q_snapshot.as_deref().expect("validated"))?)?,
        };
        let u = match i.u {
            UInit::Zero => VelocityField::zeros(grid, m),
            UInit::RandomBandlimited => random_u(grid, m, &self.band(seed.wrapping_add(1), i.u_amplitude))?,
            UInit::TaylorGreen => taylor_green(grid, m, i.tg_amplitude)?,
            UInit::Snapshot => VelocityField::project(load_matching(grid, i.u_snapshot.as_deref().expect("validated"))?)?,
        };
        Ok(SimState::new(0.0, q, u)?)
    }

    /// Canonical text of every setting that can influence results. The output
    /// directory is left out so that runs differing only in where they write
    /// produce identical files.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "[grid]\nd={}\nn_axis={}\nl_box={:?}\ndealias={:?}", g.d, g.n_axis, g.l_box, g.dealias);
        let p = &self.model;
        let _ = writeln!(
            s,
            "[model]\na={:?}\nb={:?}\nc={:?}\nL={:?}\nGamma={:?}\nnu={:?}\nlambda={:?}\nxi={:?}\nd_target={}\nxi0={:?}",
            p.a, p.b, p.c, p.l, p.gamma, p.nu, p.lambda, p.xi, p.d_target, p.xi0
        );
        let st = &self.stepper;
        let _ = writeln!(
            s,
            "[stepper]\ndt={:?}\nscheme={}\nt_final={:?}\ncadence={}\nfold_a={}",
            st.dt, st.scheme, st.t_final, st.cadence, st.fold_a
        );
        let r = &st.regularization;
        let _ = writeln!(s, "[regularization]\nenabled={}\nn={}\neps={:?}", r.enabled, r.n, r.eps);
        let i = &self.initial;
        let _ = writeln!(
            s,
            "[initial]\nq={}\nu={}\nseed={}\nkmax={:?}\nslope={:?}\nq_amplitude={:?}\nu_amplitude={:?}\nstripe_order={:?}\nstripe_angle={:?}\ntg_amplitude={:?}",
            i.q.name(),
            i.u.name(),
            i.seed,
            i.kmax,
            i.slope,
            i.q_amplitude,
            i.u_amplitude,
            i.stripe_order,
            i.stripe_angle,
            i.tg_amplitude
        );
        for (k, v) in [("q_snapshot", &i.q_snapshot), ("u_snapshot", &i.u_snapshot)] {
            if let Some(p) = v {
                let _ = writeln!(s, "{k}={}", p.display());
            }
        }
        let _ = writeln!(s, "[output]\nsnapshot_every={}", self.output.snapshot_every);
        let t = &self.twin;
        let _ = writeln!(
            s,
            "[twin]\namplitude={:?}\nseed={}\nkmax={:?}\ncadence={}\nsubsteps={}",
            t.amplitude, t.seed, t.kmax, t.cadence, t.substeps
        );
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn load_matching(grid: &Arc<Grid>, path: &Path) -> Result<qtf_core::SpectralField, CliError> {
    let snap = snapshot::load(path)?;
    let g = snap.field.grid();
    if g.dim() != grid.dim() || g.n() != grid.n() || g.l_box() != grid.l_box() {
        return Err(CliError::Config(format!(
            "snapshot {} is on a {}-dimensional grid with N={} and L={}, the configuration asks for d={} N={} L={}",
            path.display(),
            g.dim(),
            g.n(),
            g.l_box(),
            grid.dim(),
            grid.n(),
            grid.l_box()
        )));
    }
    // Rebuild on the configured grid so the dealias fraction matches.
    Ok(qtf_core::SpectralField::from_coeffs(grid, snap.field.shape().clone(), snap.field.components().to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_raw(RawConfig::parse(text, "test")?)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.grid.n_axis, 64);
        assert_eq!(c.model, ModelParams::default());
    }

    #[test]
    fn values_and_comments() {
        let c = parse(
            "# comment\n[grid]\nn_axis = 32\n; other comment\n[model]\nxi = 0.5\nd_target = 3\n[stepper]\nscheme = imex1\nfold_a = yes\n",
        )
        .unwrap();
        assert_eq!(c.grid.n_axis, 32);
        assert_eq!(c.model.xi, 0.5);
        assert_eq!(c.model.d_target, 3);
        assert_eq!(c.stepper.scheme, Scheme::Imex1);
        assert!(c.stepper.fold_a);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        for text in [
            "[grid]\nwidth = 3\n",
            "[nope]\n",
            "n_axis = 32\n",
            "[grid]\nn_axis = 32\nn_axis = 64\n",
            "[grid]\nn_axis\n",
            "[grid\n",
        ] {
            assert!(matches!(parse(text), Err(CliError::Config(_))), "{text:?}");
        }
    }

    #[test]
    fn rejects_invalid_values() {
        for text in [
            "[grid]\nn_axis = 48\n",
            "[grid]\nn_axis = many\n",
            "[model]\nL = -1\n",
            "[model]\nd_target = 4\n",
            "[stepper]\ndt = 0\n",
            "[stepper]\nscheme = rk4\n",
            "[initial]\nq = snapshot\n",
            "[twin]\ncadence = 0\n",
            "[regularization]\nenabled = maybe\n",
        ] {
            assert!(matches!(parse(text), Err(CliError::Config(_) | CliError::Core(_))), "{text:?}");
        }
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut raw = RawConfig::parse("[grid]\nn_axis = 32\n", "test").unwrap();
        raw.apply_override("grid.n_axis=16").unwrap();
        raw.apply_override("model.xi = 0").unwrap();
        let c = RunConfig::from_raw(raw).unwrap();
        assert_eq!(c.grid.n_axis, 16);
        assert_eq!(c.model.xi, 0.0);
        let mut raw = RawConfig::default();
        assert!(raw.apply_override("grid.n_axis").is_err());
        assert!(raw.apply_override("nope.x=1").is_err());
        raw.apply_override("grid.bogus=1").unwrap();
        assert!(RunConfig::from_raw(raw).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = parse("[output]\ndir = one\n").unwrap();
        let b = parse("[output]\ndir = two\n").unwrap();
        let c = parse("[initial]\nseed = 3\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn generators_give_admissible_states() {
        let c = parse("[grid]\nn_axis = 16\n[initial]\nq = uniaxial-stripe\nu = taylor-green\n").unwrap();
        let g = c.make_grid().unwrap();
        let s = c.initial_state(&g, 0).unwrap();
        assert!(qtf_core::spectral::divergence_defect(&s.u) < 1e-14);
        assert!(s.q.l2_norm() > 0.0 && s.u.l2_norm() > 0.0);
    }
}
