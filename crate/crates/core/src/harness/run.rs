use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, SolverKind};
use super::output::{ensure_parent, write_profile, write_snapshot, write_table, SnapshotBlock};
use super::presets::preset;
use crate::classical::{
    current_from_ensemble, density_from_ensemble, run_mixed, run_vlasov, sample_wkb_measure, Ensemble, Side,
};
use crate::field::WaveField;
use crate::grid::Grid1D;
use crate::observables::current_density;
use crate::ssp2::{run_tdscf, TdscfRun};
use crate::svsp2::{run_ehrenfest, EhrenfestRun};
use crate::{Error, Result};

/// Result of one configured run.
#[derive(Clone, Debug)]
pub enum RunOutcome {
    Tdscf(TdscfRun),
    Ehrenfest(EhrenfestRun),
    Classical { ens_x: Ensemble, ens_y: Ensemble },
    Mixed { psi: WaveField, ens_y: Ensemble },
}

/// The quantities compared across runs at the final time.
#[derive(Clone, Debug)]
pub struct FinalState {
    pub psi: WaveField,
    pub phi: Option<WaveField>,
    pub classical: Option<(f64, f64)>,
}

impl FinalState {
    pub fn blocks(&self, t: f64) -> Vec<SnapshotBlock> {
        let mut out = vec![SnapshotBlock {
            t,
            field: self.psi.clone(),
            classical: self.classical,
        }];
        if let Some(phi) = &self.phi {
            out.push(SnapshotBlock {
                t,
                field: phi.clone(),
                classical: None,
            });
        }
        out
    }

    pub fn from_blocks(mut blocks: Vec<SnapshotBlock>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() > 2 {
            return Err(Error::Config(format!(
                "reference snapshot must hold one or two fields, found {}",
                blocks.len()
            )));
        }
        let phi = (blocks.len() == 2).then(|| blocks.pop().expect("two blocks").field);
        let first = blocks.pop().expect("one block");
        Ok(Self {
            psi: first.field,
            phi,
            classical: first.classical,
        })
    }
}

impl RunOutcome {
    pub fn final_state(&self) -> Option<FinalState> {
        match self {
            RunOutcome::Tdscf(r) => Some(FinalState {
                psi: r.final_state.psi.clone(),
                phi: Some(r.final_state.phi.clone()),
                classical: None,
            }),
            RunOutcome::Ehrenfest(r) => Some(FinalState {
                psi: r.final_state.psi.clone(),
                phi: None,
                classical: Some((r.final_state.y, r.final_state.eta)),
            }),
            _ => None,
        }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    match cfg.solver {
        SolverKind::Tdscf => Ok(RunOutcome::Tdscf(run_tdscf(&cfg.tdscf()?)?)),
        SolverKind::Ehrenfest => Ok(RunOutcome::Ehrenfest(run_ehrenfest(&cfg.ehrenfest()?)?)),
        SolverKind::Classical => {
            let ens_x = sample_wkb_measure(&cfg.psi_data()?, &cfg.x_grid()?, Side::X)?;
            let ens_y = sample_wkb_measure(&cfg.phi_data()?, &cfg.y_grid()?, Side::Y)?;
            let (ens_x, ens_y) = run_vlasov(ens_x, ens_y, &cfg.potential_spec()?, cfg.dt, cfg.t_final)?;
            Ok(RunOutcome::Classical { ens_x, ens_y })
        }
        SolverKind::Mixed => {
            let psi = cfg.psi_data()?.to_field()?;
            let ens_y = sample_wkb_measure(&cfg.phi_data()?, &cfg.y_grid()?, Side::Y)?;
            let (psi, ens_y) = run_mixed(psi, ens_y, &cfg.potential_spec()?, cfg.dt, cfg.t_final)?;
            Ok(RunOutcome::Mixed { psi, ens_y })
        }
    }
}

fn write_ensemble(path: &Path, ens: &Ensemble) -> Result<()> {
    write_table(path, &["q", "p", "w"], ens.particles().iter().map(|p| vec![p.q, p.p, p.w]))
}

fn write_field_profile(path: &Path, f: &WaveField) -> Result<()> {
    write_profile(path, f.grid(), &f.density(), &current_density(f))
}

fn write_ensemble_profile(path: &Path, ens: &Ensemble, grid: &Grid1D, cfg: &ExperimentConfig) -> Result<()> {
    let h = cfg.bandwidth_cells * grid.dx();
    write_profile(
        path,
        grid,
        &density_from_ensemble(ens, grid, h)?,
        &current_from_ensemble(ens, grid, h)?,
    )
}

/// Writes the trajectory, final profiles, final snapshot and the resolved
/// config into `dir`. Returns the files written.
pub fn write_artifacts(cfg: &ExperimentConfig, outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut put = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    match outcome {
        RunOutcome::Tdscf(run) => {
            write_table(
                &put("trajectory.csv"),
                &["t", "m1", "m2", "E"],
                run.records.iter().map(|r| vec![r.t, r.m1, r.m2, r.energy]),
            )?;
            write_field_profile(&put("psi_profile.csv"), &run.final_state.psi)?;
            write_field_profile(&put("phi_profile.csv"), &run.final_state.phi)?;
        }
        RunOutcome::Ehrenfest(run) => {
            write_table(
                &put("trajectory.csv"),
                &["t", "m1", "E", "y", "eta"],
                run.records.iter().map(|r| vec![r.t, r.m1, r.energy, r.y, r.eta]),
            )?;
            write_field_profile(&put("psi_profile.csv"), &run.final_state.psi)?;
        }
        RunOutcome::Classical { ens_x, ens_y } => {
            write_ensemble(&put("ensemble_x.csv"), ens_x)?;
            write_ensemble(&put("ensemble_y.csv"), ens_y)?;
            write_ensemble_profile(&put("x_profile.csv"), ens_x, &cfg.x_grid()?, cfg)?;
            write_ensemble_profile(&put("y_profile.csv"), ens_y, &cfg.y_grid()?, cfg)?;
        }
        RunOutcome::Mixed { psi, ens_y } => {
            write_field_profile(&put("psi_profile.csv"), psi)?;
            write_ensemble(&put("ensemble_y.csv"), ens_y)?;
            write_ensemble_profile(&put("y_profile.csv"), ens_y, &cfg.y_grid()?, cfg)?;
            write_snapshot(
                &put("final.bin"),
                &[SnapshotBlock {
                    t: cfg.t_final,
                    field: psi.clone(),
                    classical: None,
                }],
            )?;
        }
    }
    if let Some(fin) = outcome.final_state() {
        write_snapshot(&put("final.bin"), &fin.blocks(cfg.t_final))?;
    }
    let cfg_path = put("config.json");
    ensure_parent(&cfg_path)?;
    let json = serde_json::to_string_pretty(cfg).expect("config serializes");
    std::fs::write(&cfg_path, json + "\n").map_err(|e| Error::io(&cfg_path, e))?;
    Ok(files)
}

/// Resolves a preset with `key = value` overrides, runs it and writes its
/// artifacts to `out_dir` (default: `output/<preset>`).
pub fn run_preset(
    name: &str,
    paper_scale: bool,
    overrides: &[(String, String)],
    out_dir: Option<&Path>,
) -> Result<(ExperimentConfig, RunOutcome, Vec<PathBuf>)> {
    let mut cfg = preset(name, paper_scale)?;
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("output").join(name));
    cfg.output = Some(dir.clone());
    let outcome = execute(&cfg)?;
    let files = write_artifacts(&cfg, &outcome, &dir)?;
    Ok((cfg, outcome, files))
}
