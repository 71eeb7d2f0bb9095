//! Coupling potentials `V(x, y)` and the mean-field quantities built from them.
//!
//! Every mean-field functional in this crate is a weighted sum of `V` (or one
//! of its partial derivatives) over a discrete measure on one axis, evaluated
//! at targets on the other axis. A wavefunction contributes the measure
//! `dx |psi_j|^2` on its grid nodes; a particle ensemble contributes its
//! weights at the particle positions. [`PotentialSpec::reduce`] implements that
//! single contraction for every potential kind.

use std::path::Path;

use log::warn;

use crate::classical::{Ensemble, Side};
use crate::field::WaveField;
use crate::grid::Grid1D;
use crate::{Error, Result};

/// Mass deviation above which the mean-field operations log a warning.
const MASS_WARN: f64 = 1e-6;

/// `V(x, y)` for the supported kinds.
#[derive(Clone, Debug)]
pub enum PotentialSpec {
    Constant(f64),
    /// `V = (x + y)^2 / 2`, used as-is on the truncated cell.
    HarmonicCoupling,
    Separable(SeparablePotential),
    Tabulated(TabulatedPotential),
}

/// `V = V1(x) + V2(y)` from samples on the two grids.
#[derive(Clone, Debug)]
pub struct SeparablePotential {
    x_grid: Grid1D,
    y_grid: Grid1D,
    v1: Vec<f64>,
    v2: Vec<f64>,
    dv1: Vec<f64>,
    dv2: Vec<f64>,
}

impl SeparablePotential {
    /// Gradients are the spectral derivatives of the samples.
    pub fn new(x_grid: &Grid1D, v1: Vec<f64>, y_grid: &Grid1D, v2: Vec<f64>) -> Result<Self> {
        let dv1 = x_grid.spectral_derivative_real(&v1)?;
        let dv2 = y_grid.spectral_derivative_real(&v2)?;
        Ok(Self {
            x_grid: x_grid.clone(),
            y_grid: y_grid.clone(),
            v1,
            v2,
            dv1,
            dv2,
        })
    }

    pub fn from_fns(
        x_grid: &Grid1D,
        v1: impl Fn(f64) -> f64,
        y_grid: &Grid1D,
        v2: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let s1 = x_grid.nodes().into_iter().map(v1).collect();
        let s2 = y_grid.nodes().into_iter().map(v2).collect();
        Self::new(x_grid, s1, y_grid, s2)
    }

    pub fn v1(&self) -> &[f64] {
        &self.v1
    }

    pub fn v2(&self) -> &[f64] {
        &self.v2
    }
}

/// `V` sampled on an `n_x x n_y` product grid, row-major with row = x index.
#[derive(Clone, Debug)]
pub struct TabulatedPotential {
    x_grid: Grid1D,
    y_grid: Grid1D,
    v: Vec<f64>,
    dvdx: Option<Vec<f64>>,
    dvdy: Option<Vec<f64>>,
}

impl TabulatedPotential {
    /// Table without gradients; classical dynamics will reject it.
    pub fn new(x_grid: &Grid1D, y_grid: &Grid1D, v: Vec<f64>) -> Result<Self> {
        let want = x_grid.n() * y_grid.n();
        if v.len() != want {
            return Err(Error::LengthMismatch {
                expected: want,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("potential table has non-finite entries".into()));
        }
        Ok(Self {
            x_grid: x_grid.clone(),
            y_grid: y_grid.clone(),
            v,
            dvdx: None,
            dvdy: None,
        })
    }

    pub fn with_gradients(mut self, dvdx: Vec<f64>, dvdy: Vec<f64>) -> Result<Self> {
        for g in [&dvdx, &dvdy] {
            if g.len() != self.v.len() {
                return Err(Error::LengthMismatch {
                    expected: self.v.len(),
                    got: g.len(),
                });
            }
        }
        self.dvdx = Some(dvdx);
        self.dvdy = Some(dvdy);
        Ok(self)
    }

    /// Fills both gradient tables by spectral differentiation along rows and columns.
    pub fn with_spectral_gradients(self) -> Result<Self> {
        let (nx, ny) = (self.x_grid.n(), self.y_grid.n());
        let mut dvdx = vec![0.0; nx * ny];
        let mut dvdy = vec![0.0; nx * ny];
        for j in 0..nx {
            let row = &self.v[j * ny..(j + 1) * ny];
            let d = self.y_grid.spectral_derivative_real(row)?;
            dvdy[j * ny..(j + 1) * ny].copy_from_slice(&d);
        }
        for k in 0..ny {
            let col: Vec<f64> = (0..nx).map(|j| self.v[j * ny + k]).collect();
            let d = self.x_grid.spectral_derivative_real(&col)?;
            for j in 0..nx {
                dvdx[j * ny + k] = d[j];
            }
        }
        self.with_gradients(dvdx, dvdy)
    }

    pub fn x_grid(&self) -> &Grid1D {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &Grid1D {
        &self.y_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn dvdx(&self) -> Option<&[f64]> {
        self.dvdx.as_deref()
    }

    pub fn dvdy(&self) -> Option<&[f64]> {
        self.dvdy.as_deref()
    }

    pub fn has_gradients(&self) -> bool {
        self.dvdx.is_some() && self.dvdy.is_some()
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.v[j * self.y_grid.n() + k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Where a reduction is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    Grid(&'a Grid1D),
    Points(&'a [f64]),
}

impl Targets<'_> {
    fn positions(&self) -> Vec<f64> {
        match self {
            Targets::Grid(g) => g.nodes(),
            Targets::Points(p) => p.to_vec(),
        }
    }
}

/// A discrete measure on one axis.
#[derive(Clone, Debug)]
pub struct Masses<'a> {
    positions: Vec<f64>,
    weights: Vec<f64>,
    grid: Option<&'a Grid1D>,
}

impl<'a> Masses<'a> {
    /// `dx |f_j|^2` at the nodes of the field's grid.
    pub fn from_field(field: &'a WaveField) -> Self {
        let dx = field.grid().dx();
        Self {
            positions: field.grid().nodes(),
            weights: field.values.iter().map(|v| dx * v.norm_sqr()).collect(),
            grid: Some(field.grid()),
        }
    }

    pub fn points(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: positions.len(),
                got: weights.len(),
            });
        }
        Ok(Self {
            positions,
            weights,
            grid: None,
        })
    }

    pub fn from_ensemble(ens: &Ensemble) -> Self {
        Self {
            positions: ens.particles().iter().map(|p| p.q).collect(),
            weights: ens.particles().iter().map(|p| p.w).collect(),
            grid: None,
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn moment(&self, power: i32) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * x.powi(power))
            .sum()
    }
}

impl PotentialSpec {
    /// `V(x_j, y_k)` on a product grid, with analytic gradients for built-in kinds.
    pub fn tabulate(&self, x_grid: &Grid1D, y_grid: &Grid1D) -> Result<TabulatedPotential> {
        if let PotentialSpec::Tabulated(t) = self {
            x_grid.ensure_same(&t.x_grid, "tabulate (x)")?;
            y_grid.ensure_same(&t.y_grid, "tabulate (y)")?;
            return Ok(t.clone());
        }
        let (nx, ny) = (x_grid.n(), y_grid.n());
        let xs = x_grid.nodes();
        let ys = y_grid.nodes();
        let mut v = Vec::with_capacity(nx * ny);
        let mut dvdx = Vec::with_capacity(nx * ny);
        let mut dvdy = Vec::with_capacity(nx * ny);
        for (j, &x) in xs.iter().enumerate() {
            for (k, &y) in ys.iter().enumerate() {
                let (val, gx, gy) = match self {
                    PotentialSpec::Constant(c) => (*c, 0.0, 0.0),
                    PotentialSpec::HarmonicCoupling => (0.5 * (x + y) * (x + y), x + y, x + y),
                    PotentialSpec::Separable(s) => {
                        x_grid.ensure_same(&s.x_grid, "tabulate (x)")?;
                        y_grid.ensure_same(&s.y_grid, "tabulate (y)")?;
                        (s.v1[j] + s.v2[k], s.dv1[j], s.dv2[k])
                    }
                    PotentialSpec::Tabulated(_) => unreachable!(),
                };
                v.push(val);
                dvdx.push(gx);
                dvdy.push(gy);
            }
        }
        TabulatedPotential::new(x_grid, y_grid, v)?.with_gradients(dvdx, dvdy)
    }

    /// Whether pointwise gradients are available (required by classical dynamics).
    pub fn has_gradients(&self) -> bool {
        match self {
            PotentialSpec::Tabulated(t) => t.has_gradients(),
            _ => true,
        }
    }

    /// The core contraction
    ///
    /// ```text
    /// R(t) = sum_m w_m V(t, s_m)          (derivative = false)
    /// R(t) = sum_m w_m d_t V(t, s_m)      (derivative = true)
    /// ```
    ///
    /// where `t` runs over `targets` on `target_axis` and `(s_m, w_m)` is the
    /// measure on the other axis. Argument order of `V` follows the axes.
    pub fn reduce(
        &self,
        target_axis: Axis,
        targets: Targets<'_>,
        masses: &Masses<'_>,
        derivative: bool,
    ) -> Result<Vec<f64>> {
        let total = masses.total();
        match self {
            PotentialSpec::Constant(c) => {
                let n = match targets {
                    Targets::Grid(g) => g.n(),
                    Targets::Points(p) => p.len(),
                };
                Ok(vec![if derivative { 0.0 } else { c * total }; n])
            }
            PotentialSpec::HarmonicCoupling => {
                // (t + s)^2 / 2 = t^2/2 + t s + s^2/2 expanded against the measure's moments.
                let m1 = masses.moment(1);
                let m2 = masses.moment(2);
                Ok(targets
                    .positions()
                    .into_iter()
                    .map(|t| {
                        if derivative {
                            t * total + m1
                        } else {
                            0.5 * t * t * total + t * m1 + 0.5 * m2
                        }
                    })
                    .collect())
            }
            PotentialSpec::Separable(s) => {
                let (t_grid, t_val, t_der, m_grid, m_val) = match target_axis {
                    Axis::X => (&s.x_grid, &s.v1, &s.dv1, &s.y_grid, &s.v2),
                    Axis::Y => (&s.y_grid, &s.v2, &s.dv2, &s.x_grid, &s.v1),
                };
                let own = if derivative { t_der } else { t_val };
                let at_targets = sample_at_targets(t_grid, own, targets)?;
                if derivative {
                    return Ok(at_targets.into_iter().map(|v| v * total).collect());
                }
                let w = project_masses(m_grid, masses)?;
                let shift: f64 = w.iter().zip(m_val).map(|(w, v)| w * v).sum();
                Ok(at_targets.into_iter().map(|v| v * total + shift).collect())
            }
            PotentialSpec::Tabulated(tab) => {
                let matrix = match (derivative, target_axis) {
                    (false, _) => &tab.v,
                    (true, Axis::X) => tab.dvdx.as_ref().ok_or(Error::MissingGradient)?,
                    (true, Axis::Y) => tab.dvdy.as_ref().ok_or(Error::MissingGradient)?,
                };
                let (t_grid, m_grid) = match target_axis {
                    Axis::X => (&tab.x_grid, &tab.y_grid),
                    Axis::Y => (&tab.y_grid, &tab.x_grid),
                };
                let w = project_masses(m_grid, masses)?;
                let ny = tab.y_grid.n();
                let on_grid: Vec<f64> = match target_axis {
                    Axis::X => (0..tab.x_grid.n())
                        .map(|j| {
                            let row = &matrix[j * ny..(j + 1) * ny];
                            row.iter().zip(&w).map(|(v, w)| v * w).sum()
                        })
                        .collect(),
                    Axis::Y => {
                        let mut out = vec![0.0; ny];
                        for (j, wj) in w.iter().enumerate() {
                            let row = &matrix[j * ny..(j + 1) * ny];
                            for (o, v) in out.iter_mut().zip(row) {
                                *o += wj * v;
                            }
                        }
                        out
                    }
                };
                sample_at_targets(t_grid, &on_grid, targets)
            }
        }
    }

    /// `V(x, y)` at a single point.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        let m = Masses::points(vec![y], vec![1.0])?;
        Ok(self.reduce(Axis::X, Targets::Points(&[x]), &m, false)?[0])
    }

    /// `(d_x V, d_y V)` at a single point.
    pub fn gradient(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let my = Masses::points(vec![y], vec![1.0])?;
        let mx = Masses::points(vec![x], vec![1.0])?;
        let gx = self.reduce(Axis::X, Targets::Points(&[x]), &my, true)?[0];
        let gy = self.reduce(Axis::Y, Targets::Points(&[y]), &mx, true)?[0];
        Ok((gx, gy))
    }

    /// `V(x_j, y)` along the x-grid for a fixed classical coordinate `y`.
    pub fn slice_at_y(&self, x_grid: &Grid1D, y: f64) -> Result<Vec<f64>> {
        let m = Masses::points(vec![y], vec![1.0])?;
        self.reduce(Axis::X, Targets::Grid(x_grid), &m, false)
    }

    /// Parses `constant:c`, `harmonic`, `separable:<file>` or `table:<file>`.
    ///
    /// Separable files hold two lines, the `V1` samples on the x-grid then the
    /// `V2` samples on the y-grid. Table files are CSV matrices with one row per
    /// x node and one column per y node; gradients are computed spectrally.
    pub fn from_config(spec: &str, x_grid: &Grid1D, y_grid: &Grid1D) -> Result<Self> {
        let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
        match kind.trim() {
            "constant" => {
                let c = arg
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("potential `{spec}`: {e}")))?;
                Ok(PotentialSpec::Constant(c))
            }
            "harmonic" => Ok(PotentialSpec::HarmonicCoupling),
            "separable" => {
                let rows = read_csv_rows(Path::new(arg.trim()))?;
                if rows.len() != 2 {
                    return Err(Error::Config(format!(
                        "separable potential file must have 2 rows, found {}",
                        rows.len()
                    )));
                }
                let mut it = rows.into_iter();
                let v1 = it.next().unwrap();
                let v2 = it.next().unwrap();
                Ok(PotentialSpec::Separable(SeparablePotential::new(x_grid, v1, y_grid, v2)?))
            }
            "table" => {
                let rows = read_csv_rows(Path::new(arg.trim()))?;
                if rows.len() != x_grid.n() || rows.iter().any(|r| r.len() != y_grid.n()) {
                    return Err(Error::GridMismatch(format!(
                        "table must be {} x {}",
                        x_grid.n(),
                        y_grid.n()
                    )));
                }
                let v = rows.into_iter().flatten().collect();
                Ok(PotentialSpec::Tabulated(
                    TabulatedPotential::new(x_grid, y_grid, v)?.with_spectral_gradients()?,
                ))
            }
            _ => Err(Error::Config(format!("unknown potential kind `{spec}`"))),
        }
    }
}

/// Values of a grid function at the targets: the samples themselves on the
/// same grid, the trigonometric interpolant at free points.
fn sample_at_targets(grid: &Grid1D, samples: &[f64], targets: Targets<'_>) -> Result<Vec<f64>> {
    match targets {
        Targets::Grid(g) => {
            g.ensure_same(grid, "potential grid")?;
            Ok(samples.to_vec())
        }
        Targets::Points(p) => p
            .iter()
            .map(|&x| grid.interpolate_real(samples, grid.wrap(x)))
            .collect(),
    }
}

/// Nodal weights on `grid` equivalent to the measure under trigonometric
/// interpolation: `sum_m w_m f(s_m) = sum_k W_k f_k` for every band-limited `f`.
fn project_masses(grid: &Grid1D, masses: &Masses<'_>) -> Result<Vec<f64>> {
    if let Some(g) = masses.grid {
        g.ensure_same(grid, "potential grid")?;
        return Ok(masses.weights.clone());
    }
    let mut out = vec![0.0; grid.n()];
    for (&s, &w) in masses.positions.iter().zip(&masses.weights) {
        for (o, d) in out.iter_mut().zip(grid.interpolation_weights(grid.wrap(s))) {
            *o += w * d;
        }
    }
    Ok(out)
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        let row = rec
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })?;
        rows.push(row);
    }
    Ok(rows)
}

fn check_unit_mass(what: &str, mass: f64) {
    if (mass - 1.0).abs() > MASS_WARN {
        warn!("{what}: mass {mass} deviates from 1");
    }
}

/// `Upsilon(x_j) = int V(x_j, y) |phi(y)|^2 dy` on the x-grid.
pub fn upsilon(phi: &WaveField, v: &PotentialSpec, x_grid: &Grid1D) -> Result<Vec<f64>> {
    let m = Masses::from_field(phi);
    check_unit_mass("upsilon", m.total());
    v.reduce(Axis::X, Targets::Grid(x_grid), &m, false)
}

/// `(scale^2 / 2) ||grad f||^2`, evaluated in Fourier space.
pub fn theta(f: &WaveField) -> f64 {
    let s = f.scale();
    0.5 * s * s * f.grid().gradient_norm_sq(&f.values).expect("field length matches its grid")
}

/// `cal_V(y_k) = <psi, V(., y_k) psi>` on the y-grid.
pub fn cal_v(psi: &WaveField, v: &PotentialSpec, y_grid: &Grid1D) -> Result<Vec<f64>> {
    let m = Masses::from_field(psi);
    check_unit_mass("cal_v", m.total());
    v.reduce(Axis::Y, Targets::Grid(y_grid), &m, false)
}

/// `Lambda = theta + cal_V`, returned together with `theta`.
pub fn lambda_potential(psi: &WaveField, v: &PotentialSpec, y_grid: &Grid1D) -> Result<(Vec<f64>, f64)> {
    let th = theta(psi);
    let mut lam = cal_v(psi, v, y_grid)?;
    lam.iter_mut().for_each(|l| *l += th);
    Ok((lam, th))
}

/// `-int d_y V(x, y) |psi(x)|^2 dx`.
pub fn force_on_point(psi: &WaveField, v: &PotentialSpec, y: f64) -> Result<f64> {
    let m = Masses::from_field(psi);
    check_unit_mass("force_on_point", m.total());
    Ok(-v.reduce(Axis::Y, Targets::Points(&[y]), &m, true)?[0])
}

fn check_side(ens: &Ensemble, side: Side) -> Result<()> {
    if ens.side() == side {
        Ok(())
    } else {
        Err(Error::InvalidEnsemble(format!(
            "expected an ensemble on the {side:?} side, got {:?}",
            ens.side()
        )))
    }
}

/// `Upsilon(x_j) = sum_p w_p V(x_j, y_p)` for a y-side ensemble.
pub fn ensemble_upsilon(ens_y: &Ensemble, v: &PotentialSpec, x_grid: &Grid1D) -> Result<Vec<f64>> {
    check_side(ens_y, Side::Y)?;
    v.reduce(Axis::X, Targets::Grid(x_grid), &Masses::from_ensemble(ens_y), false)
}

/// `F(y) = -sum_p w_p d_y V(x_p, y)` for an x-side ensemble.
pub fn ensemble_force(ens_x: &Ensemble, v: &PotentialSpec, y: f64) -> Result<f64> {
    check_side(ens_x, Side::X)?;
    Ok(-v.reduce(Axis::Y, Targets::Points(&[y]), &Masses::from_ensemble(ens_x), true)?[0])
}

/// Forces on the particles of one ensemble from the measure of the other:
/// `-sum_m w_m d_t V(t, s_m)` at each particle position `t`.
pub(crate) fn mean_field_forces(
    v: &PotentialSpec,
    on: &Ensemble,
    from: &Masses<'_>,
) -> Result<Vec<f64>> {
    let axis = match on.side() {
        Side::X => Axis::X,
        Side::Y => Axis::Y,
    };
    let pos: Vec<f64> = on.particles().iter().map(|p| p.q).collect();
    Ok(v.reduce(axis, Targets::Points(&pos), from, true)?
        .into_iter()
        .map(|g| -g)
        .collect())
}
