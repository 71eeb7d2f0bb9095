//! Quantum densities against their classical (Vlasov) limits.

use std::path::Path;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SolverKind};
use super::output::write_table;
use super::sweep::exponent_at_most;
use crate::classical::{current_from_ensemble, density_from_ensemble, run_vlasov, sample_wkb_measure, Ensemble, Side};
use crate::grid::Grid1D;
use crate::observables::{current_density, l1_distance};
use crate::ssp2::{run_tdscf, TdscfState};
use crate::{Error, Result};

/// One epsilon of a limit comparison. Distances are discrete `L^1` norms on
/// the run grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitRow {
    pub epsilon: f64,
    pub n: usize,
    pub dt_fine: f64,
    pub dt_coarse: f64,
    pub rho_psi_fine: f64,
    pub rho_phi_fine: f64,
    pub rho_psi_coarse: f64,
    pub rho_phi_coarse: f64,
    pub j_psi_fine: f64,
    pub j_phi_fine: f64,
    pub j_psi_coarse: f64,
    pub j_phi_coarse: f64,
    /// Largest density distance between the fine-step and coarse-step runs.
    pub quantum_gap: f64,
    /// Largest density distance between the classical reconstruction and one
    /// built from four times as many particles.
    pub classical_refinement: f64,
}

/// Config of the quantum run at `eps`: `dx <= eps / 8`, delta tracking if set.
pub fn limit_config(base: &ExperimentConfig, eps: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    let k = exponent_at_most(base.b - base.a, eps / 8.0);
    cfg.epsilon = eps;
    cfg.ky = k;
    if base.delta_tracks_epsilon {
        cfg.delta = eps;
        cfg.kx = k;
    }
    cfg
}

struct Classical {
    x: Ensemble,
    y: Ensemble,
}

fn classical_run(cfg: &ExperimentConfig, refine: u32, dt: f64) -> Result<Classical> {
    let mut c = cfg.clone();
    c.kx += refine;
    c.ky += refine;
    let ex = sample_wkb_measure(&c.psi_data()?, &c.x_grid()?, Side::X)?;
    let ey = sample_wkb_measure(&c.phi_data()?, &c.y_grid()?, Side::Y)?;
    let (x, y) = run_vlasov(ex, ey, &c.potential_spec()?, dt, c.t_final)?;
    Ok(Classical { x, y })
}

struct Profiles {
    rho: Vec<f64>,
    j: Vec<f64>,
}

fn ensemble_profiles(ens: &Ensemble, grid: &Grid1D, cells: f64) -> Result<Profiles> {
    let h = cells * grid.dx();
    Ok(Profiles {
        rho: density_from_ensemble(ens, grid, h)?,
        j: current_from_ensemble(ens, grid, h)?,
    })
}

fn quantum_profiles(state: &TdscfState) -> (Profiles, Profiles) {
    let p = |f: &crate::field::WaveField| Profiles {
        rho: f.density(),
        j: current_density(f),
    };
    (p(&state.psi), p(&state.phi))
}

fn one_epsilon(base: &ExperimentConfig, eps: f64) -> Result<LimitRow> {
    let cfg = limit_config(base, eps);
    cfg.validate()?;
    let steps = (4.0 / eps).ceil();
    let dt_fine = cfg.t_final / steps;
    let dt_coarse = cfg.dt;

    let run = |dt: f64| -> Result<TdscfState> {
        let mut c = cfg.clone();
        c.dt = dt;
        Ok(run_tdscf(&c.tdscf()?)?.final_state)
    };
    let (fine, coarse) = rayon::join(|| run(dt_fine), || run(dt_coarse));
    let (fine, coarse) = (fine?, coarse?);
    let (classical, refined) = rayon::join(
        || classical_run(&cfg, 0, dt_fine),
        || classical_run(&cfg, 2, dt_fine),
    );
    let (classical, refined) = (classical?, refined?);

    let (xg, yg) = (cfg.x_grid()?, cfg.y_grid()?);
    let cx = ensemble_profiles(&classical.x, &xg, cfg.bandwidth_cells)?;
    let cy = ensemble_profiles(&classical.y, &yg, cfg.bandwidth_cells)?;
    let rx = ensemble_profiles(&refined.x, &xg, cfg.bandwidth_cells)?;
    let ry = ensemble_profiles(&refined.y, &yg, cfg.bandwidth_cells)?;
    let (fpsi, fphi) = quantum_profiles(&fine);
    let (cpsi, cphi) = quantum_profiles(&coarse);

    Ok(LimitRow {
        epsilon: eps,
        n: yg.n(),
        dt_fine,
        dt_coarse,
        rho_psi_fine: l1_distance(&fpsi.rho, &cx.rho, &xg)?,
        rho_phi_fine: l1_distance(&fphi.rho, &cy.rho, &yg)?,
        rho_psi_coarse: l1_distance(&cpsi.rho, &cx.rho, &xg)?,
        rho_phi_coarse: l1_distance(&cphi.rho, &cy.rho, &yg)?,
        j_psi_fine: l1_distance(&fpsi.j, &cx.j, &xg)?,
        j_phi_fine: l1_distance(&fphi.j, &cy.j, &yg)?,
        j_psi_coarse: l1_distance(&cpsi.j, &cx.j, &xg)?,
        j_phi_coarse: l1_distance(&cphi.j, &cy.j, &yg)?,
        quantum_gap: l1_distance(&fpsi.rho, &cpsi.rho, &xg)?.max(l1_distance(&fphi.rho, &cphi.rho, &yg)?),
        classical_refinement: l1_distance(&cx.rho, &rx.rho, &xg)?.max(l1_distance(&cy.rho, &ry.rho, &yg)?),
    })
}

/// For each epsilon: SSP2 with `dt ~ eps / 4` and with the config's `dt`, the
/// Vlasov ensembles of the initial WKB measures, and their `L^1` distances
/// at the final time.
pub fn limit_compare(base: &ExperimentConfig, epsilons: &[f64]) -> Result<Vec<LimitRow>> {
    if base.solver != SolverKind::Tdscf {
        return Err(Error::Config("limit comparison runs the tdscf solver".into()));
    }
    if epsilons.is_empty() {
        return Err(Error::Config("limit comparison needs at least one epsilon".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::Config("epsilons must lie in (0, 1]".into()));
    }
    if !base.potential_spec()?.has_gradients() {
        return Err(Error::MissingGradient);
    }
    epsilons.par_iter().map(|e| one_epsilon(base, *e)).collect()
}

pub const LIMIT_COLUMNS: [&str; 14] = [
    "epsilon",
    "n",
    "dt_fine",
    "dt_coarse",
    "rho_psi_fine",
    "rho_phi_fine",
    "rho_psi_coarse",
    "rho_phi_coarse",
    "j_psi_fine",
    "j_phi_fine",
    "j_psi_coarse",
    "j_phi_coarse",
    "quantum_gap",
    "classical_refinement",
];

pub fn write_limit(path: &Path, rows: &[LimitRow]) -> Result<()> {
    write_table(
        path,
        &LIMIT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.epsilon,
                r.n as f64,
                r.dt_fine,
                r.dt_coarse,
                r.rho_psi_fine,
                r.rho_phi_fine,
                r.rho_psi_coarse,
                r.rho_phi_coarse,
                r.j_psi_fine,
                r.j_phi_fine,
                r.j_psi_coarse,
                r.j_phi_coarse,
                r.quantum_gap,
                r.classical_refinement,
            ]
        }),
    )
}
