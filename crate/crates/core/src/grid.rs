//! Periodic uniform grids and discrete Fourier analysis on them.
//!
//! Coefficients follow the phase convention anchored at the left endpoint:
//!
//! ```text
//! U^_l = sum_j U_j exp(-i mu_l (x_j - a)),     mu_l = 2 pi l / (b - a)
//! U_j  = (1/n) sum_l U^_l exp(i mu_l (x_j - a)),  l = -n/2 .. n/2 - 1
//! ```
//!
//! Since `x_j - a = j dx`, this is the plain unnormalized DFT, so the FFT
//! does the work; only the index bookkeeping differs (`SpectralCoeffs`
//! stores modes in ascending `l`, the FFT buffers use wrap-around order).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

pub const MIN_EXPONENT: u32 = 2;
pub const MAX_EXPONENT: u32 = 20;

#[derive(Clone)]
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[a, b)` with `n = 2^k` nodes.
///
/// The node at `b` is not stored. Cloning is cheap: FFT plans are shared.
#[derive(Clone)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
    dx: f64,
    plans: Plans,
}

impl Grid1D {
    /// Grid with `2^k` nodes on `[a, b)`.
    pub fn new(a: f64, b: f64, k: u32) -> Result<Self> {
        if !(MIN_EXPONENT..=MAX_EXPONENT).contains(&k) {
            return Err(Error::InvalidGrid(format!(
                "exponent k = {k} outside {MIN_EXPONENT}..={MAX_EXPONENT}"
            )));
        }
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!("need a < b, got a = {a}, b = {b}")));
        }
        let n = 1usize << k;
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            a,
            b,
            n,
            dx: (b - a) / n as f64,
            plans,
        })
    }

    /// Grid with `n` nodes; `n` must be a power of two in the supported range.
    pub fn with_points(a: f64, b: f64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} is not a power of two")));
        }
        Self::new(a, b, n.trailing_zeros())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponent(&self) -> u32 {
        self.n.trailing_zeros()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// `mu_l = 2 pi l / (b - a)`.
    pub fn wavenumber(&self, l: i64) -> f64 {
        2.0 * PI * l as f64 / self.length()
    }

    /// Wavenumbers in ascending mode order `l = -n/2 .. n/2 - 1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.modes().map(|l| self.wavenumber(l)).collect()
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let half = (self.n / 2) as i64;
        -half..half
    }

    /// Mode number stored at FFT buffer index `idx`.
    pub fn mode_at(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Wavenumbers in FFT buffer order.
    pub fn fft_wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(self.mode_at(i))).collect()
    }

    /// Wraps `x` into the periodic cell `[a, b)`.
    pub fn wrap(&self, x: f64) -> f64 {
        if x >= self.a && x < self.b {
            x
        } else {
            self.a + (x - self.a).rem_euclid(self.length())
        }
    }

    /// True when both grids discretize the same cell with the same nodes.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n && self.a == other.a && self.b == other.b
    }

    pub(crate) fn ensure_same(&self, other: &Grid1D, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{what}: {self:?} vs {other:?}")))
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            })
        }
    }

    /// Unnormalized forward DFT in place, FFT order.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.plans.forward.process(buf);
    }

    /// Inverse DFT in place including the `1/n` factor.
    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.plans.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// Fourier coefficients of `values`.
    pub fn analyze(&self, values: &[Complex64]) -> Result<SpectralCoeffs> {
        self.check_len(values.len())?;
        let mut buf = values.to_vec();
        self.forward_in_place(&mut buf);
        // FFT order -> ascending l: rotate by n/2.
        buf.rotate_left(self.n / 2);
        Ok(SpectralCoeffs {
            values: buf,
            grid: self.clone(),
        })
    }

    /// Field values from coefficients; inverse of [`Grid1D::analyze`].
    pub fn synthesize(&self, coeffs: &SpectralCoeffs) -> Result<Vec<Complex64>> {
        self.ensure_same(&coeffs.grid, "synthesize")?;
        let mut buf = coeffs.values.clone();
        buf.rotate_right(self.n / 2);
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }

    /// `synthesize(i mu_l U^_l)`; the `l = -n/2` mode keeps its own wavenumber.
    pub fn spectral_derivative(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        let mut buf = values.to_vec();
        self.forward_in_place(&mut buf);
        for (idx, v) in buf.iter_mut().enumerate() {
            let mu = self.wavenumber(self.mode_at(idx));
            *v *= Complex64::new(0.0, mu);
        }
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }

    /// Real part of the spectral derivative of a real field.
    pub fn spectral_derivative_real(&self, values: &[f64]) -> Result<Vec<f64>> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.spectral_derivative(&c)?.into_iter().map(|v| v.re).collect())
    }

    /// Rectangle rule `dx * sum_j u_j` over the periodic cell.
    pub fn quadrature(&self, values: &[f64]) -> f64 {
        self.dx * values.iter().sum::<f64>()
    }

    pub fn quadrature_complex(&self, values: &[Complex64]) -> Complex64 {
        values.iter().sum::<Complex64>() * self.dx
    }

    /// Squared L2 norm of the gradient via Parseval: `(dx/n) sum_l mu_l^2 |U^_l|^2`.
    pub fn gradient_norm_sq(&self, values: &[Complex64]) -> Result<f64> {
        self.check_len(values.len())?;
        let mut buf = values.to_vec();
        self.forward_in_place(&mut buf);
        let sum: f64 = buf
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let mu = self.wavenumber(self.mode_at(idx));
                mu * mu * v.norm_sqr()
            })
            .sum();
        Ok(sum * self.dx / self.n as f64)
    }

    /// Spectral resampling onto `target`, which must cover the same cell.
    ///
    /// Modes `-m/2 .. m/2 - 1` with `m = min(n, target.n)` are kept; the rest
    /// are dropped (restriction) or zero-filled (prolongation).
    pub fn resample(&self, values: &[Complex64], target: &Grid1D) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        if self.a != target.a || self.b != target.b {
            return Err(Error::GridMismatch(format!(
                "resample needs a common cell: {self:?} vs {target:?}"
            )));
        }
        if self.n == target.n {
            return Ok(values.to_vec());
        }
        let mut src = values.to_vec();
        self.forward_in_place(&mut src);
        let scale = target.n as f64 / self.n as f64;
        let keep = (self.n.min(target.n) / 2) as i64;
        let mut dst = vec![Complex64::new(0.0, 0.0); target.n];
        for l in -keep..keep {
            let si = l.rem_euclid(self.n as i64) as usize;
            let ti = l.rem_euclid(target.n as i64) as usize;
            dst[ti] = src[si] * scale;
        }
        target.inverse_in_place(&mut dst);
        Ok(dst)
    }

    /// Real part of the trigonometric interpolation kernel `D_j(x)`, so that
    /// the interpolant of real samples is `sum_j u_j D_j(x)`.
    pub fn interpolation_weights(&self, x: f64) -> Vec<f64> {
        let half = self.n / 2;
        let inv_n = 1.0 / self.n as f64;
        (0..self.n)
            .map(|j| {
                let theta = 2.0 * PI * (x - self.node(j)) / self.length();
                let mut s = 1.0;
                for l in 1..half {
                    s += 2.0 * (l as f64 * theta).cos();
                }
                s += (half as f64 * theta).cos();
                s * inv_n
            })
            .collect()
    }

    /// Trigonometric interpolant of real samples evaluated at `x`.
    pub fn interpolate_real(&self, values: &[f64], x: f64) -> Result<f64> {
        self.check_len(values.len())?;
        let w = self.interpolation_weights(x);
        Ok(w.iter().zip(values).map(|(w, v)| w * v).sum())
    }
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Fourier coefficients in ascending mode order `l = -n/2 .. n/2 - 1`.
#[derive(Clone, Debug)]
pub struct SpectralCoeffs {
    values: Vec<Complex64>,
    grid: Grid1D,
}

impl SpectralCoeffs {
    pub fn new(values: Vec<Complex64>, grid: &Grid1D) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            values,
            grid: grid.clone(),
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Coefficient of mode `l`, for `-n/2 <= l < n/2`.
    pub fn get(&self, l: i64) -> Complex64 {
        let half = (self.grid.n / 2) as i64;
        assert!((-half..half).contains(&l), "mode {l} out of range");
        self.values[(l + half) as usize]
    }
}
