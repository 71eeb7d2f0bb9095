//! Strang-Verlet splitting for the Ehrenfest system
//!
//! ```text
//! i delta d_t psi = -(delta^2/2) psi'' + V(x, y(t)) psi
//! y' = eta,   eta' = -int d_y V(x, y) |psi|^2 dx
//! ```
//!
//! Both sub-steps are solved exactly, so the classical part is a
//! drift-kick-drift update and the only time error is the splitting error.

use crate::classical::check_step;
use crate::field::{FreeFlight, WaveField, WkbData};
use crate::observables::{current_density, ehrenfest_energy};
use crate::potential::{force_on_point, PotentialSpec};
use crate::ssp2::is_record_step;
use crate::steps::Schedule;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct EhrenfestState {
    pub t: f64,
    pub psi: WaveField,
    pub y: f64,
    pub eta: f64,
}

impl EhrenfestState {
    /// Takes `psi` as given; [`run_ehrenfest`] normalizes its initial data.
    pub fn new(psi: WaveField, y: f64, eta: f64) -> Self {
        Self { t: 0.0, psi, y, eta }
    }

    pub fn all_finite(&self) -> bool {
        self.psi.all_finite() && self.y.is_finite() && self.eta.is_finite()
    }
}

#[derive(Clone, Debug)]
pub struct Svsp2 {
    potential: PotentialSpec,
}

impl Svsp2 {
    pub fn new(potential: PotentialSpec) -> Self {
        Self { potential }
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Free flight of `psi` and drift of `y`. Does not advance `t`.
    pub fn kinetic_step(&self, state: &mut EhrenfestState, dt: f64) {
        FreeFlight::for_field(&state.psi, dt).apply(&mut state.psi);
        state.y += dt * state.eta;
    }

    /// Phase rotation of `psi` and momentum kick. Does not advance `t`.
    pub fn potential_step(&self, state: &mut EhrenfestState, dt: f64) -> Result<()> {
        let slice = self.potential.slice_at_y(state.psi.grid(), state.y)?;
        // |psi| is invariant under the phase rotation, so the force is too.
        let force = force_on_point(&state.psi, &self.potential, state.y)?;
        state.psi.apply_phase(&slice, dt / state.psi.scale());
        state.eta += dt * force;
        Ok(())
    }

    pub fn strang_step(&self, state: &mut EhrenfestState, dt: f64) -> Result<()> {
        self.kinetic_step(state, 0.5 * dt);
        self.potential_step(state, dt)?;
        self.kinetic_step(state, 0.5 * dt);
        state.t += dt;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EhrenfestConfig {
    pub potential: PotentialSpec,
    pub psi_init: WkbData,
    pub y0: f64,
    pub eta0: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Record every this many steps; 0 records only the initial and final states.
    pub record_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EhrenfestRecord {
    pub t: f64,
    pub m1: f64,
    pub energy: f64,
    pub y: f64,
    pub eta: f64,
    pub rho: Vec<f64>,
    pub current: Vec<f64>,
}

impl EhrenfestRecord {
    pub fn capture(state: &EhrenfestState, v: &PotentialSpec) -> Result<Self> {
        let rho = state.psi.density();
        Ok(Self {
            t: state.t,
            m1: state.psi.grid().quadrature(&rho),
            energy: ehrenfest_energy(&state.psi, v, state.y, state.eta)?,
            y: state.y,
            eta: state.eta,
            rho,
            current: current_density(&state.psi),
        })
    }
}

#[derive(Clone, Debug)]
pub struct EhrenfestRun {
    pub records: Vec<EhrenfestRecord>,
    pub final_state: EhrenfestState,
}

pub fn run_ehrenfest(cfg: &EhrenfestConfig) -> Result<EhrenfestRun> {
    check_step(cfg.dt, cfg.t_final)?;
    let mut state = EhrenfestState::new(cfg.psi_init.to_field()?, cfg.y0, cfg.eta0);
    let solver = Svsp2::new(cfg.potential.clone());
    let sched = Schedule::new(cfg.dt, cfg.t_final);
    let half = FreeFlight::for_field(&state.psi, 0.5 * cfg.dt);

    let mut records = vec![EhrenfestRecord::capture(&state, &cfg.potential)?];
    for i in 0..sched.steps {
        let h = sched.step_size(i);
        if sched.is_uniform_step(i) {
            half.apply(&mut state.psi);
            state.y += 0.5 * h * state.eta;
            solver.potential_step(&mut state, h)?;
            half.apply(&mut state.psi);
            state.y += 0.5 * h * state.eta;
        } else {
            solver.strang_step(&mut state, h)?;
        }
        state.t = sched.time(i + 1);
        if !state.all_finite() {
            return Err(Error::NonFinite {
                step: i + 1,
                t: state.t,
            });
        }
        if is_record_step(i + 1, sched.steps, cfg.record_every) {
            records.push(EhrenfestRecord::capture(&state, &cfg.potential)?);
        }
    }
    Ok(EhrenfestRun {
        records,
        final_state: state,
    })
}
