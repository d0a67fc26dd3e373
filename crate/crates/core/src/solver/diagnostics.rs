use crate::error::Result;
use crate::model::{self, ModelParams};
use crate::spectral;
use crate::tensor;

use super::{SimState, Stepper};

/// One line of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub step: usize,
    pub t: f64,
    pub e: f64,
    pub kinetic: f64,
    pub free_energy: f64,
    pub visc: f64,
    pub rot: f64,
    /// `(E_{n+1} − E_n)/Δt + ½(D_n + D_{n+1})` with `D = visc + rot`. On the
    /// final row this is the residual of the step ending there.
    pub residual: f64,
    pub h1_q: f64,
    pub l2_u: f64,
    pub max_u: f64,
    pub e_plus_m_q2: f64,
}

impl DiagnosticRow {
    pub const CSV_HEADER: &'static str = "t,E,kinetic,free_energy,visc,rot,residual,H1_Q,L2_u,max_u,E_plus_M_Q2";

    pub fn to_csv(&self) -> String {
        format!(
            "{:.12e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.e,
            self.kinetic,
            self.free_energy,
            self.visc,
            self.rot,
            self.residual,
            self.h1_q,
            self.l2_u,
            self.max_u,
            self.e_plus_m_q2
        )
    }
}

/// Receives diagnostics rows and every intermediate state.
pub trait Sink {
    fn row(&mut self, row: &DiagnosticRow) -> Result<()>;

    fn state(&mut self, _step: usize, _state: &SimState) -> Result<()> {
        Ok(())
    }
}

/// Collects rows in memory.
#[derive(Debug, Default, Clone)]
pub struct VecSink {
    pub rows: Vec<DiagnosticRow>,
}

impl Sink for VecSink {
    fn row(&mut self, row: &DiagnosticRow) -> Result<()> {
        self.rows.push(*row);
        Ok(())
    }
}

/// Pointwise structure defects of a state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructureDefects {
    /// `‖tr Q‖ / ‖Q‖`.
    pub trace: f64,
    /// `‖Q − Qᵀ‖ / ‖Q‖`.
    pub symmetry: f64,
    /// `‖div u‖ / ‖∇u‖`.
    pub divergence: f64,
}

impl StructureDefects {
    fn max(self, o: StructureDefects) -> StructureDefects {
        StructureDefects {
            trace: self.trace.max(o.trace),
            symmetry: self.symmetry.max(o.symmetry),
            divergence: self.divergence.max(o.divergence),
        }
    }
}

pub fn structure_defects(s: &SimState) -> StructureDefects {
    let r = s.q.to_real();
    StructureDefects {
        trace: tensor::trace_defect(&r),
        symmetry: tensor::symmetry_defect(&r),
        divergence: spectral::divergence_defect(&s.u),
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: SimState,
    pub steps: usize,
    pub max_abs_residual: f64,
    /// Largest one-step energy change `max(E_{n+1} − E_n)`.
    pub max_energy_increase: f64,
    pub max_defects: StructureDefects,
}

#[derive(Debug, Clone, Copy)]
struct Energies {
    e: f64,
    kinetic: f64,
    free: f64,
    visc: f64,
    rot: f64,
}

impl Energies {
    fn of(s: &SimState, p: &ModelParams) -> Self {
        let kinetic = model::kinetic_energy(&s.u);
        let free = model::free_energy(&s.q, p);
        let (visc, rot) = model::dissipation_rate(&s.q, &s.u, p);
        Energies { e: kinetic + p.lambda * free, kinetic, free, visc, rot }
    }

    fn dissipation(&self) -> f64 {
        self.visc + self.rot
    }
}

fn row(step: usize, s: &SimState, en: &Energies, residual: f64, m_shift: f64) -> DiagnosticRow {
    let q_l2 = s.q.l2_norm();
    let h1_q = (q_l2 * q_l2 + model::grad_norm_sq(&s.q)).sqrt();
    let max_u = s.u.to_real().magnitude().into_iter().fold(0.0, f64::max);
    DiagnosticRow {
        step,
        t: s.t,
        e: en.e,
        kinetic: en.kinetic,
        free_energy: en.free,
        visc: en.visc,
        rot: en.rot,
        residual,
        h1_q,
        l2_u: s.u.l2_norm(),
        max_u,
        e_plus_m_q2: en.e + m_shift * q_l2 * q_l2,
    }
}

/// Integrate from `initial` to the configured final time, reporting to `sink`.
pub fn run(stepper: &mut Stepper, initial: SimState, sink: &mut dyn Sink) -> Result<RunSummary> {
    let p = *stepper.params();
    let cfg = *stepper.config();
    let n_steps = cfg.n_steps();
    let m_shift = p.shift_constant_m();
    let dt = cfg.dt;

    let mut state = initial;
    let mut en = Energies::of(&state, &p);
    let mut defects = structure_defects(&state);
    let mut max_res: f64 = 0.0;
    let mut max_inc = f64::NEG_INFINITY;
    sink.state(0, &state)?;
    let mut pending = (cfg.cadence > 0).then(|| (state.clone(), en));

    for n in 0..n_steps {
        let next = stepper.step(&state)?;
        let en_next = Energies::of(&next, &p);
        let residual = (en_next.e - en.e) / dt + 0.5 * (en.dissipation() + en_next.dissipation());
        max_res = max_res.max(residual.abs());
        max_inc = max_inc.max(en_next.e - en.e);
        defects = defects.max(structure_defects(&next));
        if let Some((s, e)) = pending.take() {
            sink.row(&row(n, &s, &e, residual, m_shift))?;
        }
        let k = n + 1;
        if k % cfg.cadence == 0 && k < n_steps {
            pending = Some((next.clone(), en_next));
        }
        if k == n_steps {
            sink.row(&row(k, &next, &en_next, residual, m_shift))?;
        }
        sink.state(k, &next)?;
        state = next;
        en = en_next;
    }
    if n_steps == 0 {
        if let Some((s, e)) = pending.take() {
            sink.row(&row(0, &s, &e, f64::NAN, m_shift))?;
        }
    }
    Ok(RunSummary {
        final_state: state,
        steps: n_steps,
        max_abs_residual: max_res,
        max_energy_increase: max_inc,
        max_defects: defects,
    })
}
