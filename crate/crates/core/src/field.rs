//! Wavefunctions sampled on a grid, and WKB initial data `a(x) exp(i S(x) / scale)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::Grid1D;
use crate::{Error, Result};

/// Complex samples of a wavefunction together with its semiclassical scale.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub values: Vec<Complex64>,
    grid: Grid1D,
    scale: f64,
}

impl WaveField {
    pub fn new(values: Vec<Complex64>, grid: &Grid1D, scale: f64) -> Result<Self> {
        grid.check_len(values.len())?;
        check_scale(scale)?;
        Ok(Self {
            values,
            grid: grid.clone(),
            scale,
        })
    }

    pub fn from_fn(grid: &Grid1D, scale: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(values, grid, scale)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn mass(&self) -> f64 {
        self.grid.quadrature(&self.density())
    }

    /// Rescales to unit mass.
    pub fn normalize(&mut self) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::ZeroAmplitude);
        }
        let s = 1.0 / m.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    /// Pointwise multiplication by `exp(-i coeff * phase_j)`.
    pub(crate) fn apply_phase(&mut self, phase: &[f64], coeff: f64) {
        for (v, p) in self.values.iter_mut().zip(phase) {
            *v *= Complex64::from_polar(1.0, -coeff * p);
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Exact free-flight propagator `f^_l <- exp(-i scale dt mu_l^2 / 2) f^_l`.
#[derive(Clone, Debug)]
pub struct FreeFlight {
    grid: Grid1D,
    multipliers: Vec<Complex64>,
}

impl FreeFlight {
    pub fn new(grid: &Grid1D, scale: f64, dt: f64) -> Self {
        let multipliers = grid
            .fft_wavenumbers()
            .into_iter()
            .map(|mu| Complex64::from_polar(1.0, -0.5 * scale * dt * mu * mu))
            .collect();
        Self {
            grid: grid.clone(),
            multipliers,
        }
    }

    pub fn for_field(field: &WaveField, dt: f64) -> Self {
        Self::new(field.grid(), field.scale(), dt)
    }

    pub fn apply(&self, field: &mut WaveField) {
        debug_assert!(self.grid.same_as(field.grid()));
        self.grid.forward_in_place(&mut field.values);
        for (v, m) in field.values.iter_mut().zip(&self.multipliers) {
            *v *= m;
        }
        self.grid.inverse_in_place(&mut field.values);
    }
}

pub(crate) fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "semiclassical scale must lie in (0, 1], got {scale}"
        )))
    }
}

/// Built-in amplitude profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Amplitude {
    /// `exp(-coeff (x - center)^2)`
    Gaussian { coeff: f64, center: f64 },
    Unit,
}

impl Amplitude {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Amplitude::Gaussian { coeff, center } => (-coeff * (x - center).powi(2)).exp(),
            Amplitude::Unit => 1.0,
        }
    }
}

/// Built-in phase profiles `S(x)`, each with its exact derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Phase {
    Zero,
    Sin,
    Cos,
    Linear { slope: f64 },
    /// `-ln(2 cosh(5 (x - center))) / 5`, with `S' = -tanh(5 (x - center))`.
    LogCosh { center: f64 },
}

impl Phase {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Phase::Zero => 0.0,
            Phase::Sin => x.sin(),
            Phase::Cos => x.cos(),
            Phase::Linear { slope } => slope * x,
            Phase::LogCosh { center } => {
                let u = (5.0 * (x - center)).abs();
                // ln(2 cosh u) = u + ln(1 + e^{-2u})
                -(u + (-2.0 * u).exp().ln_1p()) / 5.0
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Phase::Zero => 0.0,
            Phase::Sin => x.cos(),
            Phase::Cos => -x.sin(),
            Phase::Linear { slope } => slope,
            Phase::LogCosh { center } => -(5.0 * (x - center)).tanh(),
        }
    }
}

fn parse_args(id: &str, rest: &str, count: usize) -> Result<Vec<f64>> {
    let args: Vec<f64> = rest
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("profile `{id}`: {e}")))?;
    if args.len() != count {
        return Err(Error::Config(format!(
            "profile `{id}` expects {count} numeric argument(s)"
        )));
    }
    Ok(args)
}

impl FromStr for Amplitude {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head.trim() {
            "one" | "unit" => Ok(Amplitude::Unit),
            "gauss" => {
                let a = parse_args(s, rest, 2)?;
                Ok(Amplitude::Gaussian {
                    coeff: a[0],
                    center: a[1],
                })
            }
            _ => Err(Error::Config(format!("unknown amplitude profile `{s}`"))),
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head.trim() {
            "zero" => Ok(Phase::Zero),
            "sin" => Ok(Phase::Sin),
            "cos" => Ok(Phase::Cos),
            "linear" => Ok(Phase::Linear {
                slope: parse_args(s, rest, 1)?[0],
            }),
            "logcosh" => Ok(Phase::LogCosh {
                center: parse_args(s, rest, 1)?[0],
            }),
            _ => Err(Error::Config(format!("unknown phase profile `{s}`"))),
        }
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::Gaussian { coeff, center } => write!(f, "gauss:{coeff}:{center}"),
            Amplitude::Unit => write!(f, "one"),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Zero => write!(f, "zero"),
            Phase::Sin => write!(f, "sin"),
            Phase::Cos => write!(f, "cos"),
            Phase::Linear { slope } => write!(f, "linear:{slope}"),
            Phase::LogCosh { center } => write!(f, "logcosh:{center}"),
        }
    }
}

macro_rules! string_conversions {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
    };
}

string_conversions!(Amplitude);
string_conversions!(Phase);

/// WKB data `a(x) exp(i S(x) / scale)` sampled on a grid.
#[derive(Clone, Debug)]
pub struct WkbData {
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    /// Exact `S'` at the nodes when known; otherwise the spectral derivative is used.
    pub phase_gradient: Option<Vec<f64>>,
    pub scale: f64,
    grid: Grid1D,
}

impl WkbData {
    pub fn new(grid: &Grid1D, amplitude: Vec<f64>, phase: Vec<f64>, scale: f64) -> Result<Self> {
        grid.check_len(amplitude.len())?;
        grid.check_len(phase.len())?;
        check_scale(scale)?;
        Ok(Self {
            amplitude,
            phase,
            phase_gradient: None,
            scale,
            grid: grid.clone(),
        })
    }

    pub fn from_profiles(grid: &Grid1D, amplitude: Amplitude, phase: Phase, scale: f64) -> Result<Self> {
        let nodes = grid.nodes();
        let mut data = Self::new(
            grid,
            nodes.iter().map(|&x| amplitude.eval(x)).collect(),
            nodes.iter().map(|&x| phase.eval(x)).collect(),
            scale,
        )?;
        data.phase_gradient = Some(nodes.iter().map(|&x| phase.derivative(x)).collect());
        Ok(data)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn phase_derivative(&self) -> Result<Vec<f64>> {
        match &self.phase_gradient {
            Some(g) => Ok(g.clone()),
            None => self.grid.spectral_derivative_real(&self.phase),
        }
    }

    /// Samples `a e^{iS/scale}` without normalizing.
    pub fn sample(&self) -> Result<WaveField> {
        let values = self
            .amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &s)| Complex64::from_polar(a, s / self.scale))
            .collect();
        WaveField::new(values, &self.grid, self.scale)
    }

    /// Samples and normalizes to unit mass.
    pub fn to_field(&self) -> Result<WaveField> {
        let mut f = self.sample()?;
        f.normalize()?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wkb_field_is_normalized() {
        let g = Grid1D::new(-PI, PI, 9).unwrap();
        let wkb = WkbData::from_profiles(
            &g,
            Amplitude::Gaussian { coeff: 2.0, center: -0.1 },
            Phase::Sin,
            1.0,
        )
        .unwrap();
        let f = wkb.to_field().unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        let raw = wkb.sample().unwrap();
        // int e^{-4 x^2} dx = sqrt(pi / 4)
        assert!((raw.mass() - (PI / 4.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_amplitude_rejected() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let wkb = WkbData::new(&g, vec![0.0; 16], vec![0.0; 16], 0.5).unwrap();
        assert!(matches!(wkb.to_field(), Err(Error::ZeroAmplitude)));
    }

    #[test]
    fn scale_out_of_range_rejected() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        assert!(WkbData::new(&g, vec![1.0; 16], vec![0.0; 16], 0.0).is_err());
        assert!(WkbData::new(&g, vec![1.0; 16], vec![0.0; 16], 1.5).is_err());
    }

    #[test]
    fn logcosh_phase_and_derivative() {
        let p = Phase::LogCosh { center: 0.5 };
        for x in [0.0, 0.3, 0.5, 0.77, 1.0] {
            let direct = -(2.0 * (5.0 * (x - 0.5_f64)).cosh()).ln() / 5.0;
            assert!((p.eval(x) - direct).abs() < 1e-14);
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            assert!((p.derivative(x) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn profile_ids_round_trip() {
        for s in ["gauss:25:0.58", "one"] {
            let a: Amplitude = s.parse().unwrap();
            assert_eq!(a.to_string().parse::<Amplitude>().unwrap(), a);
        }
        for s in ["sin", "cos", "zero", "linear:1.5", "logcosh:0.6"] {
            let p: Phase = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<Phase>().unwrap(), p);
        }
        assert!("gauss:1".parse::<Amplitude>().is_err());
        assert!("tan".parse::<Phase>().is_err());
    }
}
