//! Physical diagnostics and error norms.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::WaveField;
use crate::grid::Grid1D;
use crate::potential::{theta, Axis, Masses, PotentialSpec, Targets};
use crate::Result;

/// `quadrature(|f|^2)`.
pub fn mass(f: &WaveField) -> f64 {
    f.mass()
}

/// `(scale^2 / 2) ||grad f||^2`; the same quantity enters the mean field `Lambda`.
pub fn kinetic_energy(f: &WaveField) -> f64 {
    theta(f)
}

/// `int int V(x, y) |psi(x)|^2 |phi(y)|^2 dx dy` by the product rectangle rule.
pub fn interaction_energy(psi: &WaveField, phi: &WaveField, v: &PotentialSpec) -> Result<f64> {
    let cal_v = v.reduce(Axis::Y, Targets::Grid(phi.grid()), &Masses::from_field(psi), false)?;
    Ok(phi.grid().dx() * cal_v.iter().zip(&phi.values).map(|(c, p)| c * p.norm_sqr()).sum::<f64>())
}

/// Total energy of the coupled pair.
pub fn energy(psi: &WaveField, phi: &WaveField, v: &PotentialSpec) -> Result<f64> {
    Ok(kinetic_energy(psi) + kinetic_energy(phi) + interaction_energy(psi, phi, v)?)
}

/// `(delta^2 / 2) ||grad psi||^2 + eta^2 / 2 + int V(x, y) |psi|^2 dx`.
pub fn ehrenfest_energy(psi: &WaveField, v: &PotentialSpec, y: f64, eta: f64) -> Result<f64> {
    let pot = v.reduce(Axis::Y, Targets::Points(&[y]), &Masses::from_field(psi), false)?[0];
    Ok(kinetic_energy(psi) + 0.5 * eta * eta + pot)
}

/// `scale * Im(conj(f) f')` with the spectral derivative.
pub fn current_density(f: &WaveField) -> Vec<f64> {
    let df = f
        .grid()
        .spectral_derivative(&f.values)
        .expect("field length matches its grid");
    f.values
        .iter()
        .zip(df)
        .map(|(v, d)| f.scale() * (v.conj() * d).im)
        .collect()
}

/// `<x>` and `<p> = int J dx`.
pub fn position_momentum(f: &WaveField) -> (f64, f64) {
    let g = f.grid();
    let xr: Vec<f64> = g.nodes().iter().zip(&f.values).map(|(x, v)| x * v.norm_sqr()).collect();
    (g.quadrature(&xr), g.quadrature(&current_density(f)))
}

/// Discrete Wigner transform on the phase-space grid `(x_j, xi_k)`.
#[derive(Clone, Debug)]
pub struct WignerGrid {
    /// Row-major, one row per `x_j`.
    pub values: Vec<f64>,
    grid: Grid1D,
    momenta: Vec<f64>,
    dxi: f64,
    max_imag_residue: f64,
}

impl WignerGrid {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `xi_k = k * dxi`, `k = -n/2 .. n/2 - 1`.
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn max_imag_residue(&self) -> f64 {
        self.max_imag_residue
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.momenta.len() + k]
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.momenta.len())
    }

    /// `sum_k w(x_j, xi_k) dxi`.
    pub fn position_marginal(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum::<f64>() * self.dxi).collect()
    }

    /// `sum_k xi_k w(x_j, xi_k) dxi`.
    pub fn first_moment(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().zip(&self.momenta).map(|(w, xi)| w * xi).sum::<f64>() * self.dxi)
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.grid.quadrature(&self.position_marginal())
    }
}

/// Wigner transform `(2 pi)^{-1} int f(x - scale z/2) conj f(x + scale z/2) e^{i z xi} dz`.
///
/// The `z` step is `2 dx / scale`, so every half-shift lands on a grid node
/// and no interpolation is needed. The conjugate momentum spacing is then
/// `pi scale / (b - a)`. With `n` nodes the marginal identity is exact, and
/// the first moment reproduces the current exactly for fields band-limited
/// below `n / 4`.
pub fn wigner(f: &WaveField) -> WignerGrid {
    let grid = f.grid().clone();
    let n = grid.n();
    let eps = f.scale();
    let dz = 2.0 * grid.dx() / eps;
    let dxi = PI * eps / grid.length();
    let half = n as i64 / 2;
    let momenta: Vec<f64> = (-half..half).map(|k| k as f64 * dxi).collect();
    let norm = dz / (2.0 * PI);
    let vals = &f.values;

    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            // buf[m mod n] = f_{j-m} conj f_{j+m}
            let mut buf: Vec<Complex64> = (0..n)
                .map(|m| vals[(j + n - m) % n] * vals[(j + m) % n].conj())
                .collect();
            // sum_m buf_m e^{+2 pi i m k / n}, which is n times the normalized inverse.
            grid.inverse_in_place(&mut buf);
            let mut row = Vec::with_capacity(n);
            let mut resid: f64 = 0.0;
            for k in -half..half {
                let c = buf[k.rem_euclid(n as i64) as usize] * (n as f64 * norm);
                resid = resid.max(c.im.abs());
                row.push(c.re);
            }
            (row, resid)
        })
        .collect();

    let max_imag_residue = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    WignerGrid {
        values: rows.into_iter().flat_map(|r| r.0).collect(),
        grid,
        momenta,
        dxi,
        max_imag_residue,
    }
}

/// `(dx sum_j |u_j - v_j|^2)^{1/2}`.
pub fn l2_error(u: &[f64], v: &[f64], grid: &Grid1D) -> Result<f64> {
    grid.check_len(u.len())?;
    grid.check_len(v.len())?;
    Ok((grid.dx() * u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt())
}

/// `dx sum_j |u_j - v_j|`.
pub fn l1_distance(u: &[f64], v: &[f64], grid: &Grid1D) -> Result<f64> {
    grid.check_len(u.len())?;
    grid.check_len(v.len())?;
    Ok(grid.dx() * u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Discrete `l^2` distance between two wavefunctions on the same grid.
pub fn wavefunction_error(u: &WaveField, v: &WaveField) -> Result<f64> {
    u.grid().ensure_same(v.grid(), "wavefunction_error")?;
    let sq: f64 = u.values.iter().zip(&v.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((u.grid().dx() * sq).sqrt())
}

pub fn density_error(u: &WaveField, v: &WaveField) -> Result<f64> {
    u.grid().ensure_same(v.grid(), "density_error")?;
    l2_error(&u.density(), &v.density(), u.grid())
}

pub fn current_error(u: &WaveField, v: &WaveField) -> Result<f64> {
    u.grid().ensure_same(v.grid(), "current_error")?;
    l2_error(&current_density(u), &current_density(v), u.grid())
}

/// Diagnostics of the coupled pair at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
    pub energy: f64,
    pub rho_psi: Vec<f64>,
    pub rho_phi: Vec<f64>,
    pub current_psi: Vec<f64>,
    pub current_phi: Vec<f64>,
}

impl ObservableRecord {
    pub fn capture(t: f64, psi: &WaveField, phi: &WaveField, v: &PotentialSpec) -> Result<Self> {
        let rho_psi = psi.density();
        let rho_phi = phi.density();
        Ok(Self {
            t,
            m1: psi.grid().quadrature(&rho_psi),
            m2: phi.grid().quadrature(&rho_phi),
            energy: energy(psi, phi, v)?,
            rho_psi,
            rho_phi,
            current_psi: current_density(psi),
            current_phi: current_density(phi),
        })
    }
}
