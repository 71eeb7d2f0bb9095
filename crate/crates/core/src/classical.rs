//! Classical reference dynamics.
//!
//! Phase-space measures are represented by weighted particle clouds moved
//! along characteristics with drift-kick-drift steps. Mean-field forces are
//! frozen during each kick; positions do not move during a kick, so this is
//! the exact solution of the kick sub-problem.

use std::f64::consts::PI;

use crate::field::{FreeFlight, WaveField, WkbData};
use crate::grid::Grid1D;
use crate::potential::{mean_field_forces, Axis, Masses, PotentialSpec, Targets};
use crate::steps::Schedule;
use crate::{Error, Result};

/// Tolerance on the total weight of an ensemble.
pub const WEIGHT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseParticle {
    pub q: f64,
    pub p: f64,
    pub w: f64,
}

/// Which subsystem an ensemble describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    particles: Vec<PhaseParticle>,
    side: Side,
    cell: Option<(f64, f64)>,
}

impl Ensemble {
    pub fn new(particles: Vec<PhaseParticle>, side: Side) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if particles.iter().any(|p| !(p.w >= 0.0 && p.w.is_finite())) {
            return Err(Error::InvalidEnsemble("weights must be finite and non-negative".into()));
        }
        let total: f64 = particles.iter().map(|p| p.w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            particles,
            side,
            cell: None,
        })
    }

    /// Wraps positions into `[a, b)` after every drift. Only meaningful for
    /// periodic potentials; analytic kinds see unwrapped positions otherwise.
    pub fn with_cell(mut self, a: f64, b: f64) -> Self {
        self.cell = Some((a, b));
        self
    }

    pub fn particles(&self) -> &[PhaseParticle] {
        &self.particles
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn cell(&self) -> Option<(f64, f64)> {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.w).sum()
    }

    fn drift(&mut self, dt: f64) {
        for p in &mut self.particles {
            p.q += dt * p.p;
            if let Some((a, b)) = self.cell {
                if p.q < a || p.q >= b {
                    p.q = a + (p.q - a).rem_euclid(b - a);
                }
            }
        }
    }

    fn kick(&mut self, forces: &[f64], dt: f64) {
        for (p, f) in self.particles.iter_mut().zip(forces) {
            p.p += dt * f;
        }
    }
}

/// Phase-space point of two classical particles interacting through `V(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoParticleState {
    pub x: f64,
    pub xi: f64,
    pub y: f64,
    pub eta: f64,
}

impl TwoParticleState {
    pub fn energy(&self, v: &PotentialSpec) -> Result<f64> {
        Ok(0.5 * self.xi * self.xi + 0.5 * self.eta * self.eta + v.value(self.x, self.y)?)
    }
}

/// One drift-kick-drift step of `x' = xi, y' = eta, xi' = -d_x V, eta' = -d_y V`.
pub fn two_particle_step(v: &PotentialSpec, s: &mut TwoParticleState, dt: f64) -> Result<()> {
    s.x += 0.5 * dt * s.xi;
    s.y += 0.5 * dt * s.eta;
    let (gx, gy) = v.gradient(s.x, s.y)?;
    s.xi -= dt * gx;
    s.eta -= dt * gy;
    s.x += 0.5 * dt * s.xi;
    s.y += 0.5 * dt * s.eta;
    Ok(())
}

/// Samples `(t, state)` at every step from `0` to `t_final`.
pub fn two_particle_trajectory(
    v: &PotentialSpec,
    init: TwoParticleState,
    dt: f64,
    t_final: f64,
) -> Result<Vec<(f64, TwoParticleState)>> {
    if !v.has_gradients() {
        return Err(Error::MissingGradient);
    }
    check_step(dt, t_final)?;
    let sched = Schedule::new(dt, t_final);
    let mut s = init;
    let mut out = Vec::with_capacity(sched.steps + 1);
    out.push((0.0, s));
    for i in 0..sched.steps {
        two_particle_step(v, &mut s, sched.step_size(i))?;
        out.push((sched.time(i + 1), s));
    }
    Ok(out)
}

pub(crate) fn check_step(dt: f64, t_final: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be positive, got {t_final}")));
    }
    Ok(())
}

/// Graph measure `|a|^2 delta(p - S')` of WKB data: one particle per node.
pub fn sample_wkb_measure(wkb: &WkbData, grid: &Grid1D, side: Side) -> Result<Ensemble> {
    wkb.grid().ensure_same(grid, "sample_wkb_measure")?;
    let total: f64 = wkb.amplitude.iter().map(|a| a * a).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroAmplitude);
    }
    let momenta = wkb.phase_derivative()?;
    let particles = grid
        .nodes()
        .into_iter()
        .zip(&wkb.amplitude)
        .zip(momenta)
        .map(|((q, a), p)| PhaseParticle { q, p, w: a * a / total })
        .collect();
    Ensemble::new(particles, side)
}

fn check_sides(ens_x: &Ensemble, ens_y: &Ensemble) -> Result<()> {
    if ens_x.side() != Side::X || ens_y.side() != Side::Y {
        return Err(Error::InvalidEnsemble("expected (x-side, y-side) ensembles".into()));
    }
    Ok(())
}

/// Drift-kick-drift step of the coupled Vlasov system; each kick uses the
/// mean-field force generated by the other ensemble.
pub fn vlasov_step(ens_x: &mut Ensemble, ens_y: &mut Ensemble, v: &PotentialSpec, dt: f64) -> Result<()> {
    check_sides(ens_x, ens_y)?;
    if !v.has_gradients() {
        return Err(Error::MissingGradient);
    }
    ens_x.drift(0.5 * dt);
    ens_y.drift(0.5 * dt);
    let fx = mean_field_forces(v, ens_x, &Masses::from_ensemble(ens_y))?;
    let fy = mean_field_forces(v, ens_y, &Masses::from_ensemble(ens_x))?;
    ens_x.kick(&fx, dt);
    ens_y.kick(&fy, dt);
    ens_x.drift(0.5 * dt);
    ens_y.drift(0.5 * dt);
    Ok(())
}

pub fn run_vlasov(
    mut ens_x: Ensemble,
    mut ens_y: Ensemble,
    v: &PotentialSpec,
    dt: f64,
    t_final: f64,
) -> Result<(Ensemble, Ensemble)> {
    check_step(dt, t_final)?;
    let sched = Schedule::new(dt, t_final);
    for i in 0..sched.steps {
        vlasov_step(&mut ens_x, &mut ens_y, v, sched.step_size(i))?;
        let finite = ens_x
            .particles()
            .iter()
            .chain(ens_y.particles())
            .all(|p| p.q.is_finite() && p.p.is_finite());
        if !finite {
            return Err(Error::NonFinite {
                step: i + 1,
                t: sched.time(i + 1),
            });
        }
    }
    Ok((ens_x, ens_y))
}

/// Strang step of the mixed quantum-classical system: `psi` (x-side, scale
/// `delta`) against a y-side particle measure.
pub fn mixed_step(psi: &mut WaveField, ens_y: &mut Ensemble, v: &PotentialSpec, dt: f64) -> Result<()> {
    let half = FreeFlight::for_field(psi, 0.5 * dt);
    mixed_step_with(psi, ens_y, v, dt, &half)
}

fn mixed_step_with(
    psi: &mut WaveField,
    ens_y: &mut Ensemble,
    v: &PotentialSpec,
    dt: f64,
    half: &FreeFlight,
) -> Result<()> {
    if ens_y.side() != Side::Y {
        return Err(Error::InvalidEnsemble("mixed_step needs a y-side ensemble".into()));
    }
    half.apply(psi);
    ens_y.drift(0.5 * dt);

    // Both mean fields are frozen: |psi| and the particle positions are
    // invariant under the potential sub-step.
    let ups = v.reduce(Axis::X, Targets::Grid(psi.grid()), &Masses::from_ensemble(ens_y), false)?;
    let forces = mean_field_forces(v, ens_y, &Masses::from_field(psi))?;
    psi.apply_phase(&ups, dt / psi.scale());
    ens_y.kick(&forces, dt);

    half.apply(psi);
    ens_y.drift(0.5 * dt);
    Ok(())
}

pub fn run_mixed(
    mut psi: WaveField,
    mut ens_y: Ensemble,
    v: &PotentialSpec,
    dt: f64,
    t_final: f64,
) -> Result<(WaveField, Ensemble)> {
    check_step(dt, t_final)?;
    let sched = Schedule::new(dt, t_final);
    let half = FreeFlight::for_field(&psi, 0.5 * dt);
    for i in 0..sched.steps {
        let h = sched.step_size(i);
        if sched.is_uniform_step(i) {
            mixed_step_with(&mut psi, &mut ens_y, v, h, &half)?;
        } else {
            mixed_step(&mut psi, &mut ens_y, v, h)?;
        }
        if !psi.all_finite() {
            return Err(Error::NonFinite {
                step: i + 1,
                t: sched.time(i + 1),
            });
        }
    }
    Ok((psi, ens_y))
}

/// Periodic Gaussian kernel estimate of the position marginal.
///
/// Each particle's kernel is renormalized on the grid so that the discrete
/// integral of the result equals the total weight exactly.
pub fn density_from_ensemble(ens: &Ensemble, grid: &Grid1D, bandwidth: f64) -> Result<Vec<f64>> {
    kernel_estimate(ens, grid, bandwidth, |_| 1.0)
}

/// Kernel estimate of the first momentum moment `int p mu(x, dp)`.
pub fn current_from_ensemble(ens: &Ensemble, grid: &Grid1D, bandwidth: f64) -> Result<Vec<f64>> {
    kernel_estimate(ens, grid, bandwidth, |p| p.p)
}

fn kernel_estimate(
    ens: &Ensemble,
    grid: &Grid1D,
    bandwidth: f64,
    moment: impl Fn(&PhaseParticle) -> f64,
) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let n = grid.n();
    let dx = grid.dx();
    let len = grid.length();
    let reach = 8.0 * bandwidth;
    let inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut out = vec![0.0; n];
    let mut kernel: Vec<(usize, f64)> = Vec::new();
    for particle in ens.particles() {
        let q = grid.wrap(particle.q);
        kernel.clear();
        if 2.0 * reach >= len {
            let images = (reach / len).ceil() as i64 + 1;
            for j in 0..n {
                let d0 = grid.node(j) - q;
                let k: f64 = (-images..=images)
                    .map(|m| {
                        let d = d0 + m as f64 * len;
                        (-d * d * inv2h2).exp()
                    })
                    .sum();
                kernel.push((j, k));
            }
        } else {
            let j0 = ((q - grid.a()) / dx).floor() as i64;
            let w = (reach / dx).ceil() as i64;
            for off in -w..=w + 1 {
                let jj = j0 + off;
                let d = grid.a() + jj as f64 * dx - q;
                kernel.push((jj.rem_euclid(n as i64) as usize, (-d * d * inv2h2).exp()));
            }
        }
        let norm: f64 = kernel.iter().map(|(_, k)| k).sum::<f64>() * dx;
        if norm <= 0.0 {
            continue;
        }
        let scale = particle.w * moment(particle) / norm;
        for &(j, k) in &kernel {
            out[j] += scale * k;
        }
    }
    Ok(out)
}

/// Continuum Gaussian normalization, `1 / (sqrt(2 pi) h)`; exposed for tests.
pub fn gaussian_peak(bandwidth: f64) -> f64 {
    1.0 / ((2.0 * PI).sqrt() * bandwidth)
}
