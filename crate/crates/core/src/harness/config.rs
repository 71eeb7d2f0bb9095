use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::expr::{parse_list, parse_value};
use crate::field::{Amplitude, Phase, WkbData};
use crate::grid::Grid1D;
use crate::potential::PotentialSpec;
use crate::ssp2::{Ssp2Options, TdscfConfig};
use crate::svsp2::EhrenfestConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Tdscf,
    Ehrenfest,
    Classical,
    Mixed,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tdscf" => Ok(SolverKind::Tdscf),
            "ehrenfest" => Ok(SolverKind::Ehrenfest),
            "classical" => Ok(SolverKind::Classical),
            "mixed" => Ok(SolverKind::Mixed),
            _ => Err(Error::Config(format!("unknown solver `{s}`"))),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverKind::Tdscf => "tdscf",
            SolverKind::Ehrenfest => "ehrenfest",
            SolverKind::Classical => "classical",
            SolverKind::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// Fully resolved parameters of one experiment.
///
/// The x-subsystem (`psi`, scale `delta`) lives on `[a, b]` with `2^kx`
/// nodes, the y-subsystem (`phi`, scale `epsilon`) on the same cell with
/// `2^ky` nodes. Profiles are ids such as `gauss:5:0.1` and `logcosh:0.5`,
/// or `file:<path>` naming a one-row CSV of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub solver: SolverKind,
    pub a: f64,
    pub b: f64,
    pub kx: u32,
    pub ky: u32,
    pub epsilon: f64,
    pub delta: f64,
    /// Sweeps over `epsilon` also set `delta = epsilon` (and refine the x-grid).
    pub delta_tracks_epsilon: bool,
    pub potential: String,
    pub psi_amplitude: String,
    pub psi_phase: String,
    pub phi_amplitude: String,
    pub phi_phase: String,
    pub y0: f64,
    pub eta0: f64,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    /// Kernel bandwidth for classical densities, in cells of the comparison grid.
    pub bandwidth_cells: f64,
    pub fuse_kinetic: bool,
    pub output: Option<PathBuf>,
    pub sweep: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            solver: SolverKind::Tdscf,
            a: -std::f64::consts::PI,
            b: std::f64::consts::PI,
            kx: 8,
            ky: 8,
            epsilon: 1.0 / 64.0,
            delta: 1.0,
            delta_tracks_epsilon: false,
            potential: "harmonic".into(),
            psi_amplitude: "gauss:2:-0.1".into(),
            psi_phase: "sin".into(),
            phi_amplitude: "gauss:5:0.1".into(),
            phi_phase: "cos".into(),
            y0: 0.0,
            eta0: 0.0,
            dt: 0.4 / 256.0,
            t_final: 0.4,
            record_every: 0,
            bandwidth_cells: 2.0,
            fuse_kinetic: false,
            output: None,
            sweep: None,
        }
    }
}

fn number(key: &str, value: &str) -> Result<f64> {
    parse_value(value).map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn integer<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got `{value}`")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "name" => self.name = v.to_string(),
            "solver" => self.solver = v.parse()?,
            "a" => self.a = number(key, v)?,
            "b" => self.b = number(key, v)?,
            "kx" => self.kx = integer(key, v)?,
            "ky" => self.ky = integer(key, v)?,
            "epsilon" => self.epsilon = number(key, v)?,
            "delta" => self.delta = number(key, v)?,
            "delta_tracks_epsilon" => self.delta_tracks_epsilon = boolean(key, v)?,
            "potential" => self.potential = v.to_string(),
            "psi_amplitude" => self.psi_amplitude = v.to_string(),
            "psi_phase" => self.psi_phase = v.to_string(),
            "phi_amplitude" => self.phi_amplitude = v.to_string(),
            "phi_phase" => self.phi_phase = v.to_string(),
            "y0" => self.y0 = number(key, v)?,
            "eta0" => self.eta0 = number(key, v)?,
            "dt" => self.dt = number(key, v)?,
            "t_final" | "tfinal" | "T" => self.t_final = number(key, v)?,
            "record_every" => self.record_every = integer(key, v)?,
            "bandwidth_cells" => self.bandwidth_cells = number(key, v)?,
            "fuse_kinetic" => self.fuse_kinetic = boolean(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            "sweep" => self.sweep = Some(parse_list(v)?),
            _ => return Err(Error::Config(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Reads a JSON or `key = value` file. Keys absent from the file keep the
    /// values of `base`.
    pub fn load(path: &Path, base: ExperimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim_start().starts_with('{') {
            let mut value = serde_json::to_value(&base).expect("config serializes");
            let patch: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })?;
            let obj = patch.as_object().ok_or_else(|| Error::Parse {
                path: path.into(),
                message: "expected a JSON object".into(),
            })?;
            for (k, v) in obj {
                value[k] = v.clone();
            }
            serde_json::from_value(value).map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })
        } else {
            let mut cfg = base;
            cfg.apply_kv_text(&text).map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })?;
            Ok(cfg)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.a.is_finite() && self.b.is_finite() && self.b > self.a) {
            return bad(format!("domain [{}, {}] is empty", self.a, self.b));
        }
        for (k, name) in [(self.kx, "kx"), (self.ky, "ky")] {
            if !(2..=20).contains(&k) {
                return bad(format!("{name} = {k} outside 2..=20"));
            }
        }
        for (s, name) in [(self.epsilon, "epsilon"), (self.delta, "delta")] {
            if !(s > 0.0 && s <= 1.0) {
                return bad(format!("{name} = {s} outside (0, 1]"));
            }
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_final) {
            return bad(format!("dt = {} must lie in (0, t_final]", self.dt));
        }
        if self.bandwidth_cells.is_nan() || self.bandwidth_cells <= 0.0 {
            return bad("bandwidth_cells must be positive".into());
        }
        Ok(())
    }

    pub fn x_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.a, self.b, self.kx).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn y_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.a, self.b, self.ky).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        PotentialSpec::from_config(&self.potential, &self.x_grid()?, &self.y_grid()?)
    }

    pub fn psi_data(&self) -> Result<WkbData> {
        wkb(&self.x_grid()?, &self.psi_amplitude, &self.psi_phase, self.delta)
    }

    pub fn phi_data(&self) -> Result<WkbData> {
        wkb(&self.y_grid()?, &self.phi_amplitude, &self.phi_phase, self.epsilon)
    }

    pub fn tdscf(&self) -> Result<TdscfConfig> {
        self.validate()?;
        Ok(TdscfConfig {
            potential: self.potential_spec()?,
            psi_init: self.psi_data()?,
            phi_init: self.phi_data()?,
            dt: self.dt,
            t_final: self.t_final,
            record_every: self.record_every,
            options: Ssp2Options {
                fuse_kinetic: self.fuse_kinetic,
                ..Ssp2Options::default()
            },
        })
    }

    pub fn ehrenfest(&self) -> Result<EhrenfestConfig> {
        self.validate()?;
        Ok(EhrenfestConfig {
            potential: self.potential_spec()?,
            psi_init: self.psi_data()?,
            y0: self.y0,
            eta0: self.eta0,
            dt: self.dt,
            t_final: self.t_final,
            record_every: self.record_every,
        })
    }

    /// Content hash of everything that influences the numerical result.
    pub fn content_hash(&self) -> String {
        let mut key = self.clone();
        key.name = String::new();
        key.output = None;
        key.sweep = None;
        key.record_every = 0;
        let json = serde_json::to_string(&key).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn wkb(grid: &Grid1D, amplitude: &str, phase: &str, scale: f64) -> Result<WkbData> {
    let amp = profile_samples(grid, amplitude, |s| s.parse::<Amplitude>().map(|a| move |x| a.eval(x)))?;
    if let Some(path) = phase.strip_prefix("file:") {
        let samples = read_samples(grid, Path::new(path.trim()))?;
        return WkbData::new(grid, amp, samples, scale);
    }
    let phase: Phase = phase.parse()?;
    let mut data = WkbData::from_profiles(grid, Amplitude::Unit, phase, scale)?;
    data.amplitude = amp;
    Ok(data)
}

fn profile_samples<F: Fn(f64) -> f64>(
    grid: &Grid1D,
    id: &str,
    parse: impl Fn(&str) -> Result<F>,
) -> Result<Vec<f64>> {
    match id.strip_prefix("file:") {
        Some(path) => read_samples(grid, Path::new(path.trim())),
        None => {
            let f = parse(id)?;
            Ok(grid.nodes().into_iter().map(f).collect())
        }
    }
}

fn read_samples(grid: &Grid1D, path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let samples = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
    if samples.len() != grid.n() {
        return Err(Error::Parse {
            path: path.into(),
            message: format!("expected {} samples, found {}", grid.n(), samples.len()),
        });
    }
    Ok(samples)
}
