//! Strang splitting for the coupled self-consistent field pair
//!
//! ```text
//! i delta d_t psi = -(delta^2/2) psi'' + Upsilon(x, t) psi      on the x-grid
//! i eps   d_t phi = -(eps^2/2)   phi'' + Lambda(y, t) phi       on the y-grid
//! ```
//!
//! One step is `kinetic(dt/2) -> potential(dt) -> kinetic(dt/2)`. The kinetic
//! sub-step and the `psi` phase update are exact; the `phi` phase uses the
//! trapezoidal rule in time for `Lambda`.

use crate::classical::check_step;
use crate::field::{FreeFlight, WaveField, WkbData};
use crate::observables::ObservableRecord;
use crate::potential::{cal_v, theta, upsilon, PotentialSpec};
use crate::steps::Schedule;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct TdscfState {
    pub t: f64,
    /// x-subsystem, scale `delta`.
    pub psi: WaveField,
    /// y-subsystem, scale `eps`.
    pub phi: WaveField,
}

impl TdscfState {
    /// Normalizes both fields to unit mass.
    pub fn new(mut psi: WaveField, mut phi: WaveField) -> Result<Self> {
        psi.normalize()?;
        phi.normalize()?;
        Ok(Self { t: 0.0, psi, phi })
    }

    pub fn from_wkb(psi: &WkbData, phi: &WkbData) -> Result<Self> {
        Self::new(psi.sample()?, phi.sample()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ssp2Options {
    /// Keep the kinetic expectation `theta` inside `Lambda`. It only adds a
    /// global phase to `phi`.
    pub theta_in_lambda: bool,
    /// Merge the trailing and leading kinetic half-steps of consecutive steps
    /// inside `run_tdscf`.
    pub fuse_kinetic: bool,
}

impl Default for Ssp2Options {
    fn default() -> Self {
        Self {
            theta_in_lambda: true,
            fuse_kinetic: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ssp2 {
    potential: PotentialSpec,
    options: Ssp2Options,
}

impl Ssp2 {
    pub fn new(potential: PotentialSpec) -> Self {
        Self::with_options(potential, Ssp2Options::default())
    }

    pub fn with_options(potential: PotentialSpec, options: Ssp2Options) -> Self {
        Self { potential, options }
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn options(&self) -> Ssp2Options {
        self.options
    }

    /// Exact free flight of both fields. Does not advance `t`.
    pub fn kinetic_step(&self, state: &mut TdscfState, dt: f64) {
        FreeFlight::for_field(&state.psi, dt).apply(&mut state.psi);
        FreeFlight::for_field(&state.phi, dt).apply(&mut state.phi);
    }

    /// Mean-field phase rotations. Does not advance `t`.
    pub fn potential_step(&self, state: &mut TdscfState, dt: f64) -> Result<()> {
        let v = &self.potential;
        let ups = upsilon(&state.phi, v, state.psi.grid())?;
        let cal = cal_v(&state.psi, v, state.phi.grid())?;
        let theta_start = self.theta(&state.psi);

        state.psi.apply_phase(&ups, dt / state.psi.scale());

        // |psi| is unchanged, so cal_V at the end of the step equals `cal`;
        // only theta moves.
        let theta_end = self.theta(&state.psi);
        let mean_theta = 0.5 * (theta_start + theta_end);
        let lambda: Vec<f64> = cal.iter().map(|c| c + mean_theta).collect();
        state.phi.apply_phase(&lambda, dt / state.phi.scale());
        Ok(())
    }

    fn theta(&self, psi: &WaveField) -> f64 {
        if self.options.theta_in_lambda {
            theta(psi)
        } else {
            0.0
        }
    }

    pub fn strang_step(&self, state: &mut TdscfState, dt: f64) -> Result<()> {
        self.kinetic_step(state, 0.5 * dt);
        self.potential_step(state, dt)?;
        self.kinetic_step(state, 0.5 * dt);
        state.t += dt;
        Ok(())
    }
}

/// Everything needed for one coupled run.
#[derive(Clone, Debug)]
pub struct TdscfConfig {
    pub potential: PotentialSpec,
    pub psi_init: WkbData,
    pub phi_init: WkbData,
    pub dt: f64,
    pub t_final: f64,
    /// Record every this many steps; 0 records only the initial and final states.
    pub record_every: usize,
    pub options: Ssp2Options,
}

#[derive(Clone, Debug)]
pub struct TdscfRun {
    pub records: Vec<ObservableRecord>,
    pub final_state: TdscfState,
}

pub(crate) fn is_record_step(i: usize, steps: usize, every: usize) -> bool {
    i == 0 || i == steps || (every > 0 && i.is_multiple_of(every))
}

struct Propagators {
    psi: FreeFlight,
    phi: FreeFlight,
}

impl Propagators {
    fn new(state: &TdscfState, dt: f64) -> Self {
        Self {
            psi: FreeFlight::for_field(&state.psi, dt),
            phi: FreeFlight::for_field(&state.phi, dt),
        }
    }

    fn apply(&self, state: &mut TdscfState) {
        self.psi.apply(&mut state.psi);
        self.phi.apply(&mut state.phi);
    }
}

pub fn run_tdscf(cfg: &TdscfConfig) -> Result<TdscfRun> {
    check_step(cfg.dt, cfg.t_final)?;
    let mut state = TdscfState::from_wkb(&cfg.psi_init, &cfg.phi_init)?;
    let solver = Ssp2::with_options(cfg.potential.clone(), cfg.options);
    let sched = Schedule::new(cfg.dt, cfg.t_final);
    let half = Propagators::new(&state, 0.5 * cfg.dt);
    let full = Propagators::new(&state, cfg.dt);

    let mut records = vec![ObservableRecord::capture(0.0, &state.psi, &state.phi, &cfg.potential)?];
    let mut lead_applied = false;
    for i in 0..sched.steps {
        let h = sched.step_size(i);
        let uniform = sched.is_uniform_step(i);
        if !lead_applied {
            if uniform {
                half.apply(&mut state);
            } else {
                solver.kinetic_step(&mut state, 0.5 * h);
            }
        }
        solver.potential_step(&mut state, h)?;

        let record_next = is_record_step(i + 1, sched.steps, cfg.record_every);
        let fuse = cfg.options.fuse_kinetic
            && uniform
            && !record_next
            && i + 1 < sched.steps
            && sched.is_uniform_step(i + 1);
        if fuse {
            full.apply(&mut state);
        } else if uniform {
            half.apply(&mut state);
        } else {
            solver.kinetic_step(&mut state, 0.5 * h);
        }
        lead_applied = fuse;

        state.t = sched.time(i + 1);
        if !(state.psi.all_finite() && state.phi.all_finite()) {
            return Err(Error::NonFinite {
                step: i + 1,
                t: state.t,
            });
        }
        if record_next {
            records.push(ObservableRecord::capture(state.t, &state.psi, &state.phi, &cfg.potential)?);
        }
    }
    Ok(TdscfRun {
        records,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Amplitude, Phase};
    use crate::grid::Grid1D;
    use crate::observables::{density_error, wavefunction_error};
    use crate::potential::SeparablePotential;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn example1(k: u32, eps: f64, potential: PotentialSpec, dt: f64) -> TdscfConfig {
        let g = Grid1D::new(-PI, PI, k).unwrap();
        TdscfConfig {
            potential,
            psi_init: WkbData::from_profiles(&g, Amplitude::Gaussian { coeff: 2.0, center: -0.1 }, Phase::Sin, 1.0)
                .unwrap(),
            phi_init: WkbData::from_profiles(&g, Amplitude::Gaussian { coeff: 5.0, center: 0.1 }, Phase::Cos, eps)
                .unwrap(),
            dt,
            t_final: 0.4,
            record_every: 0,
            options: Ssp2Options::default(),
        }
    }

    fn state(cfg: &TdscfConfig) -> TdscfState {
        TdscfState::from_wkb(&cfg.psi_init, &cfg.phi_init).unwrap()
    }

    #[test]
    fn zero_steps_are_identity() {
        let cfg = example1(7, 1.0 / 16.0, PotentialSpec::HarmonicCoupling, 0.01);
        let s0 = state(&cfg);
        let solver = Ssp2::new(cfg.potential.clone());
        let mut s = s0.clone();
        solver.kinetic_step(&mut s, 0.0);
        solver.potential_step(&mut s, 0.0).unwrap();
        for (a, b) in s.psi.values.iter().zip(&s0.psi.values).chain(s.phi.values.iter().zip(&s0.phi.values)) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn kinetic_step_on_single_mode() {
        let g = Grid1D::new(-PI, PI, 5).unwrap();
        let delta = 0.3;
        let l = 4;
        let mu = g.wavenumber(l);
        let psi = WaveField::from_fn(&g, delta, |x| Complex64::from_polar(1.0, mu * (x - g.a()))).unwrap();
        let phi = WaveField::from_fn(&g, 0.1, |_| Complex64::new(1.0, 0.0)).unwrap();
        let mut s = TdscfState::new(psi, phi).unwrap();
        let before = g.analyze(&s.psi.values).unwrap().get(l);
        let m0 = s.psi.mass();
        let dt = 0.37;
        Ssp2::new(PotentialSpec::Constant(0.0)).kinetic_step(&mut s, dt);
        let after = g.analyze(&s.psi.values).unwrap().get(l);
        let want = before * Complex64::from_polar(1.0, -delta * dt * mu * mu / 2.0);
        assert!((after - want).norm() < 1e-10 * before.norm());
        assert!((s.psi.mass() - m0).abs() < 1e-13);
    }

    #[test]
    fn mean_fields_invariant_within_potential_step() {
        let cfg = example1(8, 1.0 / 32.0, PotentialSpec::HarmonicCoupling, 0.01);
        let mut s = state(&cfg);
        let solver = Ssp2::new(cfg.potential.clone());
        solver.kinetic_step(&mut s, 0.2);
        let ups0 = upsilon(&s.phi, &cfg.potential, s.psi.grid()).unwrap();
        let cal0 = cal_v(&s.psi, &cfg.potential, s.phi.grid()).unwrap();
        let th0 = theta(&s.psi);
        solver.potential_step(&mut s, 0.05).unwrap();
        let ups1 = upsilon(&s.phi, &cfg.potential, s.psi.grid()).unwrap();
        let cal1 = cal_v(&s.psi, &cfg.potential, s.phi.grid()).unwrap();
        for (a, b) in ups0.iter().zip(&ups1).chain(cal0.iter().zip(&cal1)) {
            assert!((a - b).abs() < 1e-14 * a.abs().max(1.0));
        }
        assert!((theta(&s.psi) - th0).abs() > 1e-6);
    }

    #[test]
    fn constant_potential_trapezoid_equals_single_point() {
        let cfg = example1(7, 1.0 / 16.0, PotentialSpec::Constant(1.0), 0.01);
        let mut s = state(&cfg);
        let mut single = s.clone();
        let dt = 0.03;
        Ssp2::new(PotentialSpec::Constant(1.0)).potential_step(&mut s, dt).unwrap();
        // Upsilon = 1 is x-independent, so theta is unchanged and Lambda(t2) = Lambda(t1).
        let lam = 1.0 + theta(&single.psi);
        single.psi.apply_phase(&vec![1.0; 128], dt / single.psi.scale());
        single.phi.apply_phase(&vec![lam; 128], dt / single.phi.scale());
        for (a, b) in s.phi.values.iter().zip(&single.phi.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn masses_conserved_over_run() {
        let mut cfg = example1(9, 1.0 / 64.0, PotentialSpec::HarmonicCoupling, 0.4 / 256.0);
        cfg.record_every = 64;
        let run = run_tdscf(&cfg).unwrap();
        assert_eq!(run.records.len(), 5);
        for r in &run.records {
            assert!((r.m1 - 1.0).abs() < 1e-12 && (r.m2 - 1.0).abs() < 1e-12);
        }
        assert_eq!(run.final_state.t, 0.4);
    }

    #[test]
    fn theta_only_changes_global_phase() {
        let cfg = example1(8, 1.0 / 32.0, PotentialSpec::HarmonicCoupling, 0.4 / 128.0);
        let mut off = cfg.clone();
        off.options.theta_in_lambda = false;
        let a = run_tdscf(&cfg).unwrap().final_state;
        let b = run_tdscf(&off).unwrap().final_state;
        assert!(density_error(&a.phi, &b.phi).unwrap() < 1e-12);
        assert!(density_error(&a.psi, &b.psi).unwrap() < 1e-12);
        assert!(wavefunction_error(&a.phi, &b.phi).unwrap() > 1e-6);
    }

    #[test]
    fn fused_kinetic_steps_agree() {
        let cfg = example1(8, 1.0 / 32.0, PotentialSpec::HarmonicCoupling, 0.4 / 100.0);
        let mut fused = cfg.clone();
        fused.options.fuse_kinetic = true;
        let a = run_tdscf(&cfg).unwrap().final_state;
        let b = run_tdscf(&fused).unwrap().final_state;
        assert!(wavefunction_error(&a.psi, &b.psi).unwrap() < 1e-11);
        assert!(wavefunction_error(&a.phi, &b.phi).unwrap() < 1e-11);
    }

    #[test]
    fn partial_last_step_reaches_final_time() {
        let cfg = example1(6, 1.0 / 8.0, PotentialSpec::HarmonicCoupling, 0.3);
        let run = run_tdscf(&cfg).unwrap();
        assert_eq!(run.final_state.t, 0.4);
        assert_eq!(run.records.last().unwrap().t, 0.4);
    }

    #[test]
    fn non_finite_potential_aborts_with_step() {
        let mut cfg = example1(6, 1.0 / 8.0, PotentialSpec::Constant(f64::NAN), 0.1);
        cfg.record_every = 0;
        match run_tdscf(&cfg) {
            Err(Error::NonFinite { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn separable_potential_decouples_densities() {
        let g = Grid1D::new(-PI, PI, 8).unwrap();
        let sep = SeparablePotential::from_fns(&g, f64::cos, &g, f64::sin).unwrap();
        let cfg = example1(8, 1.0 / 32.0, PotentialSpec::Separable(sep), 0.4 / 64.0);
        let coupled = run_tdscf(&cfg).unwrap().final_state;
        // Each density evolves under its own one-body potential.
        let lone = |wkb: &WkbData, pot: &dyn Fn(f64) -> f64| {
            let mut f = wkb.to_field().unwrap();
            let pot: Vec<f64> = g.nodes().into_iter().map(pot).collect();
            let half = FreeFlight::for_field(&f, cfg.dt / 2.0);
            for _ in 0..64 {
                half.apply(&mut f);
                f.apply_phase(&pot, cfg.dt / f.scale());
                half.apply(&mut f);
            }
            f
        };
        let psi = lone(&cfg.psi_init, &f64::cos);
        let phi = lone(&cfg.phi_init, &f64::sin);
        assert!(density_error(&coupled.psi, &psi).unwrap() < 1e-10);
        assert!(density_error(&coupled.phi, &phi).unwrap() < 1e-10);
    }

    #[test]
    fn halving_dt_is_second_order() {
        let run = |steps: usize| run_tdscf(&example1(8, 1.0 / 16.0, PotentialSpec::HarmonicCoupling, 0.4 / steps as f64))
            .unwrap()
            .final_state;
        let (a, b, c) = (run(16), run(32), run(64));
        let e1 = wavefunction_error(&a.phi, &b.phi).unwrap();
        let e2 = wavefunction_error(&b.phi, &c.phi).unwrap();
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}
