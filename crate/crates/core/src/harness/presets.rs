//! The four reference experiments.
//!
//! Desk-scale defaults keep every qualitative regime but shrink the smallest
//! semiclassical scales; `paper_scale` restores the published settings.

use std::f64::consts::PI;

use super::config::{ExperimentConfig, SolverKind};
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = ["example1", "example2", "example3", "example4"];

pub fn preset(name: &str, paper_scale: bool) -> Result<ExperimentConfig> {
    let cfg = match name {
        // delta = 1 fixed; phi oscillates on scale epsilon.
        "example1" => {
            let (eps, ky, dt) = if paper_scale {
                (1.0 / 1024.0, 14, 0.4 / 4096.0)
            } else {
                (1.0 / 256.0, 12, 0.4 / 256.0)
            };
            ExperimentConfig {
                name: name.into(),
                solver: SolverKind::Tdscf,
                a: -PI,
                b: PI,
                kx: 9,
                ky,
                epsilon: eps,
                delta: 1.0,
                potential: "harmonic".into(),
                psi_amplitude: "gauss:2:-0.1".into(),
                psi_phase: "sin".into(),
                phi_amplitude: "gauss:5:0.1".into(),
                phi_phase: "cos".into(),
                dt,
                t_final: 0.4,
                ..ExperimentConfig::default()
            }
        }
        // Constant coupling on [0, 1]; caustics form before T = 0.54.
        "example2" => {
            let (eps, k) = if paper_scale { (1.0 / 512.0, 12) } else { (1.0 / 256.0, 11) };
            ExperimentConfig {
                name: name.into(),
                solver: SolverKind::Tdscf,
                a: 0.0,
                b: 1.0,
                kx: k,
                ky: k,
                epsilon: eps,
                delta: eps,
                delta_tracks_epsilon: true,
                potential: "constant:1".into(),
                psi_amplitude: "gauss:25:0.58".into(),
                psi_phase: "logcosh:0.6".into(),
                phi_amplitude: "gauss:25:0.5".into(),
                phi_phase: "logcosh:0.5".into(),
                dt: 0.54 / 64.0,
                t_final: 0.54,
                ..ExperimentConfig::default()
            }
        }
        // epsilon = delta, both subsystems oscillatory.
        "example3" => {
            let (eps, k, dt) = if paper_scale {
                (1.0 / 1024.0, 14, 0.4 / 1024.0)
            } else {
                (1.0 / 256.0, 12, 0.4 / 256.0)
            };
            ExperimentConfig {
                name: name.into(),
                solver: SolverKind::Tdscf,
                a: -PI,
                b: PI,
                kx: k,
                ky: k,
                epsilon: eps,
                delta: eps,
                delta_tracks_epsilon: true,
                potential: "harmonic".into(),
                psi_amplitude: "gauss:5:-0.1".into(),
                psi_phase: "sin".into(),
                phi_amplitude: "gauss:5:0.1".into(),
                phi_phase: "cos".into(),
                dt,
                t_final: 0.4,
                ..ExperimentConfig::default()
            }
        }
        // Ehrenfest: quantum x, classical y.
        "example4" => {
            let (delta, k) = if paper_scale { (1.0 / 1024.0, 14) } else { (1.0 / 256.0, 12) };
            ExperimentConfig {
                name: name.into(),
                solver: SolverKind::Ehrenfest,
                a: -PI,
                b: PI,
                kx: k,
                ky: k,
                epsilon: delta,
                delta,
                delta_tracks_epsilon: true,
                potential: "harmonic".into(),
                psi_amplitude: "gauss:5:-0.1".into(),
                psi_phase: "sin".into(),
                y0: 0.0,
                eta0: 0.1,
                dt: 0.4 / 64.0,
                t_final: 0.4,
                ..ExperimentConfig::default()
            }
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}` (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}
