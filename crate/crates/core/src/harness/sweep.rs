//! Convergence sweeps against a reference solution.
//!
//! Every sweep point is rebuilt from the base config, run independently and
//! compared at the final time with the reference restricted spectrally onto
//! the point's grid.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SolverKind};
use super::output::{read_snapshot, write_snapshot, write_table};
use super::run::{execute, FinalState};
use crate::field::WaveField;
use crate::observables::{current_error, density_error, wavefunction_error};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vary {
    Dt,
    /// Values are spacings of the x-grid; they must be `(b - a) / 2^k`.
    Dx,
    /// Values are spacings of the y-grid.
    Dy,
    /// Each value gets its own resolved grid and its own reference. For the
    /// Ehrenfest solver the quantum scale is `delta`, so that is what varies.
    Epsilon,
}

impl FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dt" => Ok(Vary::Dt),
            "dx" => Ok(Vary::Dx),
            "dy" => Ok(Vary::Dy),
            "epsilon" | "eps" => Ok(Vary::Epsilon),
            _ => Err(Error::Config(format!("cannot vary `{s}` (expected dt, dx, dy or epsilon)"))),
        }
    }
}

impl fmt::Display for Vary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vary::Dt => "dt",
            Vary::Dx => "dx",
            Vary::Dy => "dy",
            Vary::Epsilon => "epsilon",
        })
    }
}

#[derive(Clone, Debug)]
pub enum ReferencePolicy {
    /// Base config refined past the finest value: `dt / 8`, or two more
    /// grid doublings. For epsilon sweeps, a per-point run with `dt ~ eps / 10`.
    Refined,
    /// The finest value of the list is the reference and is not reported.
    FinestRun,
    Config(Box<ExperimentConfig>),
    /// Final state read from a snapshot file.
    Snapshot(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    /// Least-squares slope of `log10 err` against `log10 param`.
    pub order: f64,
    /// RMS residual of that fit, in `log10` units.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub err_wf: f64,
    pub err_rho: f64,
    pub err_j: f64,
    /// `sqrt(dy^2 + deta^2)` for the Ehrenfest solver.
    pub err_classical: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub vary: Vary,
    pub rows: Vec<SweepRow>,
    pub fit_wf: Option<OrderFit>,
    pub fit_rho: Option<OrderFit>,
    pub fit_j: Option<OrderFit>,
    pub fit_classical: Option<OrderFit>,
}

fn exponent_for_spacing(length: f64, spacing: f64) -> Result<u32> {
    let k = (length / spacing).log2();
    let r = k.round();
    if spacing.is_nan() || spacing <= 0.0 || (k - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::Config(format!(
            "spacing {spacing} is not the cell length {length} over a power of two"
        )));
    }
    Ok(r as u32)
}

/// Smallest `k` with `(b - a) / 2^k <= target`.
pub(crate) fn exponent_at_most(length: f64, target: f64) -> u32 {
    (length / target).log2().ceil().max(1.0) as u32
}

fn resolved_epsilon_point(base: &ExperimentConfig, eps: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    let len = base.b - base.a;
    let k = exponent_at_most(len, 2.0 * std::f64::consts::PI * eps / 16.0);
    if base.solver == SolverKind::Ehrenfest {
        cfg.delta = eps;
        cfg.kx = k;
        if base.delta_tracks_epsilon {
            cfg.epsilon = eps;
        }
    } else {
        cfg.epsilon = eps;
        cfg.ky = k;
        if base.delta_tracks_epsilon {
            cfg.delta = eps;
            cfg.kx = k;
        }
    }
    cfg
}

/// Config of one sweep point.
pub fn point_config(base: &ExperimentConfig, vary: Vary, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match vary {
        Vary::Dt => cfg.dt = value,
        Vary::Dx => cfg.kx = exponent_for_spacing(base.b - base.a, value)?,
        Vary::Dy => cfg.ky = exponent_for_spacing(base.b - base.a, value)?,
        Vary::Epsilon => cfg = resolved_epsilon_point(base, value),
    }
    cfg.sweep = None;
    cfg.validate()?;
    Ok(cfg)
}

fn epsilon_reference(point: &ExperimentConfig) -> ExperimentConfig {
    let scale = if point.solver == SolverKind::Ehrenfest {
        point.delta
    } else {
        point.epsilon.min(point.delta)
    };
    let mut r = point.clone();
    let steps = (10.0 * point.t_final / scale).ceil();
    r.dt = point.t_final / steps;
    r
}

fn refined_reference(base: &ExperimentConfig, vary: Vary, values: &[f64]) -> Result<ExperimentConfig> {
    let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut r = point_config(base, vary, finest)?;
    match vary {
        Vary::Dt => r.dt = finest / 8.0,
        Vary::Dx => r.kx += 2,
        Vary::Dy => r.ky += 2,
        Vary::Epsilon => unreachable!("epsilon references are per point"),
    }
    Ok(r)
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Config("sweep values must be positive".into()));
    }
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(Error::Config("sweep values must be strictly sorted".into()));
    }
    Ok(())
}

/// Rejects a reference that is not at least as fine as every sweep point.
fn check_reference(reference: &FinalState, ref_dt: Option<f64>, points: &[ExperimentConfig]) -> Result<()> {
    for p in points {
        let coarser = |what: &str| Err(Error::Config(format!("reference is coarser than the run at {what}")));
        if reference.psi.grid().n() < p.x_grid()?.n() {
            return coarser("x-grid");
        }
        if let Some(phi) = &reference.phi {
            if phi.grid().n() < p.y_grid()?.n() {
                return coarser("y-grid");
            }
        }
        if ref_dt.is_some_and(|dt| dt > p.dt) {
            return coarser("dt");
        }
    }
    Ok(())
}

/// Snapshot store keyed by config content hash. Files are placed atomically,
/// so concurrent sweeps can share a directory.
#[derive(Clone, Debug)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.dir.join(format!("{}.bin", cfg.content_hash()))
    }

    pub fn get_or_compute(&self, cfg: &ExperimentConfig) -> Result<FinalState> {
        let path = self.path_for(cfg);
        if path.exists() {
            log::info!("reference cache hit {}", path.display());
            return FinalState::from_blocks(read_snapshot(&path)?);
        }
        let fin = final_state_of(cfg)?;
        write_snapshot(&path, &fin.blocks(cfg.t_final))?;
        Ok(fin)
    }
}

fn final_state_of(cfg: &ExperimentConfig) -> Result<FinalState> {
    execute(cfg)?.final_state().ok_or_else(|| {
        Error::Config(format!(
            "convergence sweeps need a wave solver, not `{}`",
            cfg.solver
        ))
    })
}

fn reference_for(cfg: &ExperimentConfig, cache: Option<&ReferenceCache>) -> Result<FinalState> {
    match cache {
        Some(c) => c.get_or_compute(cfg),
        None => final_state_of(cfg),
    }
}

fn restrict(reference: &WaveField, onto: &WaveField) -> Result<WaveField> {
    let values = reference.grid().resample(&reference.values, onto.grid())?;
    WaveField::new(values, onto.grid(), onto.scale())
}

fn compare(run: &FinalState, reference: &FinalState) -> Result<SweepRow> {
    let mut wf = 0.0;
    let mut rho = 0.0;
    let mut j = 0.0;
    let mut pairs = vec![(&run.psi, &reference.psi)];
    match (&run.phi, &reference.phi) {
        (Some(a), Some(b)) => pairs.push((a, b)),
        (None, None) => {}
        _ => return Err(Error::Config("reference and run solve different systems".into())),
    }
    for (u, r) in pairs {
        let r = restrict(r, u)?;
        wf += wavefunction_error(u, &r)?.powi(2);
        rho += density_error(u, &r)?.powi(2);
        j += current_error(u, &r)?.powi(2);
    }
    let err_classical = match (run.classical, reference.classical) {
        (Some((y, e)), Some((yr, er))) => Some(((y - yr).powi(2) + (e - er).powi(2)).sqrt()),
        _ => None,
    };
    Ok(SweepRow {
        param: f64::NAN,
        err_wf: wf.sqrt(),
        err_rho: rho.sqrt(),
        err_j: j.sqrt(),
        err_classical,
    })
}

/// Least-squares order over the points with positive error.
pub fn fit_order(params: &[f64], errors: &[f64]) -> Option<OrderFit> {
    let pts: Vec<(f64, f64)> = params
        .iter()
        .zip(errors)
        .filter(|(p, e)| **p > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(p, e)| (p.log10(), e.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let order = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - my - order * (p.0 - mx)).powi(2)).sum();
    Some(OrderFit {
        order,
        residual: (rss / n).sqrt(),
    })
}

/// Runs the sweep. Points run in parallel; rows keep the order of `values`.
pub fn converge(
    base: &ExperimentConfig,
    vary: Vary,
    values: &[f64],
    policy: &ReferencePolicy,
    cache: Option<&ReferenceCache>,
) -> Result<SweepResult> {
    check_values(values)?;
    base.validate()?;
    if matches!(base.solver, SolverKind::Classical | SolverKind::Mixed) {
        return Err(Error::Config(format!("cannot sweep the `{}` solver", base.solver)));
    }
    let mut run_values = values.to_vec();
    if matches!(policy, ReferencePolicy::FinestRun) && vary != Vary::Epsilon {
        let finest = run_values.iter().copied().fold(f64::INFINITY, f64::min);
        run_values.retain(|v| *v != finest);
        if run_values.is_empty() {
            return Err(Error::Config("finest-run reference leaves no points to compare".into()));
        }
    }
    let points = run_values
        .iter()
        .map(|v| point_config(base, vary, *v))
        .collect::<Result<Vec<_>>>()?;

    let shared = if vary == Vary::Epsilon {
        if matches!(policy, ReferencePolicy::Config(_) | ReferencePolicy::Snapshot(_)) {
            return Err(Error::Config("epsilon sweeps need one reference per point".into()));
        }
        None
    } else {
        let (fin, dt) = match policy {
            ReferencePolicy::Refined => {
                let r = refined_reference(base, vary, values)?;
                (reference_for(&r, cache)?, Some(r.dt))
            }
            ReferencePolicy::FinestRun => {
                let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
                let r = point_config(base, vary, finest)?;
                (reference_for(&r, cache)?, Some(r.dt))
            }
            ReferencePolicy::Config(r) => (reference_for(r, cache)?, Some(r.dt)),
            ReferencePolicy::Snapshot(p) => (FinalState::from_blocks(read_snapshot(p)?)?, None),
        };
        check_reference(&fin, dt, &points)?;
        Some(fin)
    };

    let rows = points
        .par_iter()
        .zip(&run_values)
        .map(|(cfg, value)| {
            let run = final_state_of(cfg)?;
            let mut row = match &shared {
                Some(reference) => compare(&run, reference)?,
                None => compare(&run, &reference_for(&epsilon_reference(cfg), cache)?)?,
            };
            row.param = *value;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let params: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let fit_classical = rows
        .iter()
        .map(|r| r.err_classical)
        .collect::<Option<Vec<_>>>()
        .and_then(|e| fit_order(&params, &e));
    Ok(SweepResult {
        vary,
        fit_wf: fit_order(&params, &col(|r| r.err_wf)),
        fit_rho: fit_order(&params, &col(|r| r.err_rho)),
        fit_j: fit_order(&params, &col(|r| r.err_j)),
        fit_classical,
        rows,
    })
}

/// Order between neighbouring rows, `NaN` for the first row.
pub fn local_orders(params: &[f64], errors: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; params.len()];
    for i in 1..params.len() {
        out[i] = (errors[i] / errors[i - 1]).log10() / (params[i] / params[i - 1]).log10();
    }
    out
}

/// Writes `sweep.csv` (one row per point, `order_fit` is the local order of
/// the wavefunction error) and `sweep_fit.csv` (least-squares orders).
pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<(PathBuf, PathBuf)> {
    let classical = result.rows.iter().all(|r| r.err_classical.is_some());
    let params: Vec<f64> = result.rows.iter().map(|r| r.param).collect();
    let wf: Vec<f64> = result.rows.iter().map(|r| r.err_wf).collect();
    let local = local_orders(&params, &wf);
    let mut header = vec!["param", "err_wf", "err_rho", "err_J"];
    if classical {
        header.push("err_classical");
    }
    header.push("order_fit");
    let rows = result.rows.iter().zip(&local).map(|(r, o)| {
        let mut v = vec![r.param, r.err_wf, r.err_rho, r.err_j];
        if let Some(c) = r.err_classical.filter(|_| classical) {
            v.push(c);
        }
        v.push(*o);
        v
    });
    let sweep_path = dir.join("sweep.csv");
    write_table(&sweep_path, &header, rows)?;

    let fit_path = dir.join("sweep_fit.csv");
    let mut w = csv::Writer::from_path(&fit_path).map_err(|e| Error::Parse {
        path: fit_path.clone(),
        message: e.to_string(),
    })?;
    let fits = [
        ("wf", result.fit_wf),
        ("rho", result.fit_rho),
        ("J", result.fit_j),
        ("classical", result.fit_classical),
    ];
    let io = |e: csv::Error| Error::Parse {
        path: fit_path.clone(),
        message: e.to_string(),
    };
    w.write_record(["quantity", "order", "residual"]).map_err(io)?;
    for (name, fit) in fits {
        if let Some(f) = fit {
            w.write_record([
                name.to_string(),
                super::output::format_float(f.order),
                super::output::format_float(f.residual),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::io(&fit_path, e))?;
    Ok((sweep_path, fit_path))
}
