//! Periodic grids, Fourier-space calculus and the discrete `L²` / Sobolev
//! norms used by every other module.
//!
//! Conventions: positions are `x_j = j·h` with `h = L/M`, the forward
//! transform is the unnormalized DFT and the inverse carries `1/M^d`. Inner
//! products are Riemann sums `h^d Σ conj(a)·b`, so Parseval reads
//! `‖f‖² = h^d/M^d · Σ_k |f̂_k|²`.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a uniform periodic grid on the box `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Parameter(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if points < 4 || !points.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "points per axis must be even and at least 4, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Parameter(format!(
                "box length must be positive, got {length}"
            )));
        }
        Ok(Self {
            dim,
            points,
            length,
        })
    }

    pub fn line(points: usize, length: f64) -> Result<Self> {
        Self::new(1, points, length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Total number of grid points `M^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis indices of flat index `i` (row-major, last axis fastest).
    pub fn axis_indices(&self, i: usize) -> [usize; 2] {
        match self.dim {
            1 => [i, 0],
            _ => [i / self.points, i % self.points],
        }
    }

    /// Position of flat index `i`; unused axes are zero.
    pub fn coordinate(&self, i: usize) -> [f64; 2] {
        let h = self.spacing();
        let [a, b] = self.axis_indices(i);
        [a as f64 * h, b as f64 * h]
    }

    /// Signed Fourier index for an axis index: `0..M/2` then `-M/2+1..-1`,
    /// with the Nyquist index reported as `M/2`.
    pub fn signed_mode(&self, j: usize) -> i64 {
        let m = self.points as i64;
        let j = j as i64;
        if j <= m / 2 {
            j
        } else {
            j - m
        }
    }

    /// Shortest periodic displacement along one axis for index difference `j`.
    pub fn folded_displacement(&self, j: usize) -> f64 {
        let j = j % self.points;
        let folded = j.min(self.points - j);
        folded as f64 * self.spacing()
    }

    /// `|k|²` for every flat Fourier index, `k = 2π·mode/L`.
    pub fn k_squared(&self) -> Vec<f64> {
        let scale = 2.0 * PI / self.length;
        (0..self.len())
            .map(|i| {
                let [a, b] = self.axis_indices(i);
                let ka = scale * self.signed_mode(a) as f64;
                let kb = if self.dim == 2 {
                    scale * self.signed_mode(b) as f64
                } else {
                    0.0
                };
                ka * ka + kb * kb
            })
            .collect()
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::Dimension(format!(
                "grid {self:?} does not match {other:?}"
            )));
        }
        Ok(())
    }
}

/// Complex samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NumericalConsistency(format!(
                "non-finite field value at index {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coordinate(i))).collect();
        Self::from_raw(grid, values)
    }

    /// Plane wave `e^{2πi (m·x)/L}` for integer mode numbers (second entry
    /// ignored in one dimension), scaled to unit norm.
    pub fn plane_wave(grid: GridSpec, mode: [i64; 2]) -> Self {
        let k = 2.0 * PI / grid.length();
        let amp = 1.0 / grid.length().powi(grid.dim() as i32).sqrt();
        Self::from_fn(grid, |x| {
            let phase = k * (mode[0] as f64 * x[0] + mode[1] as f64 * x[1]);
            Complex64::from_polar(amp, phase)
        })
    }

    /// Normalized Gaussian centred at `center` with standard width `width`
    /// (`|φ|² ∝ exp(-|x-c|²/(2 width²))`), using periodic distance.
    pub fn gaussian(grid: GridSpec, center: [f64; 2], width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Parameter(format!("gaussian width must be positive, got {width}")));
        }
        let l = grid.length();
        let dim = grid.dim();
        let wrap = |d: f64| d - l * (d / l).round();
        let mut field = Self::from_fn(grid, |x| {
            let mut r2 = 0.0;
            for axis in 0..dim {
                let d = wrap(x[axis] - center[axis]);
                r2 += d * d;
            }
            Complex64::new((-r2 / (4.0 * width * width)).exp(), 0.0)
        });
        field.normalize()?;
        Ok(field)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Discrete `L²` norm `sqrt(h^d Σ|f|²)`.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::NumericalConsistency("cannot normalize a zero field".into()));
        }
        self.scale_mut(Complex64::new(1.0 / n, 0.0));
        Ok(())
    }

    pub fn scale_mut(&mut self, c: Complex64) {
        self.values.iter_mut().for_each(|z| *z *= c);
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.scale_mut(c);
        out
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: Complex64, other: &ComplexField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn conj(&self) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|z| z.conj()).collect())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ComplexField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self::from_raw(self.grid, values)
    }

    pub fn mul_real(&self, g: &[f64]) -> Self {
        debug_assert_eq!(self.values.len(), g.len());
        let values = self.values.iter().zip(g).map(|(a, b)| a * b).collect();
        Self::from_raw(self.grid, values)
    }

    /// `|f|²` as a real density.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn distance(&self, other: &ComplexField) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (self.grid.cell_volume() * s).sqrt()
    }

    /// Unnormalized forward DFT coefficients.
    pub fn fourier_coefficients(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft_forward(&self.grid, &mut buf);
        buf
    }

    pub fn from_fourier(grid: GridSpec, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Dimension("coefficient count does not match grid".into()));
        }
        fft_inverse(&grid, &mut coeffs);
        Ok(Self::from_raw(grid, coeffs))
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    (p.plan_fft_forward(n), p.plan_fft_inverse(n))
}

fn transform(grid: &GridSpec, buf: &mut [Complex64], inverse: bool) {
    let m = grid.points();
    let (fwd, inv) = plans(m);
    let plan = if inverse { inv } else { fwd };
    match grid.dim() {
        1 => plan.process(buf),
        _ => {
            plan.process(buf);
            let mut column = vec![Complex64::new(0.0, 0.0); m];
            for c in 0..m {
                for r in 0..m {
                    column[r] = buf[r * m + c];
                }
                plan.process(&mut column);
                for r in 0..m {
                    buf[r * m + c] = column[r];
                }
            }
        }
    }
}

/// In-place unnormalized forward DFT over all axes.
pub fn fft_forward(grid: &GridSpec, buf: &mut [Complex64]) {
    transform(grid, buf, false);
}

/// In-place inverse DFT including the `1/M^d` factor.
pub fn fft_inverse(grid: &GridSpec, buf: &mut [Complex64]) {
    transform(grid, buf, true);
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
}

/// `⟨a, b⟩ = h^d Σ conj(a)·b`.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    a.grid.check_same(&b.grid)?;
    Ok(inner_unchecked(a, b))
}

pub(crate) fn inner_unchecked(a: &ComplexField, b: &ComplexField) -> Complex64 {
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    s * a.grid.cell_volume()
}

/// Applies a real Fourier multiplier `symbol[k]` to `f`.
pub fn apply_multiplier(f: &ComplexField, symbol: &[f64]) -> ComplexField {
    let mut buf = f.values.clone();
    fft_forward(&f.grid, &mut buf);
    for (z, s) in buf.iter_mut().zip(symbol) {
        *z *= s;
    }
    fft_inverse(&f.grid, &mut buf);
    ComplexField::from_raw(f.grid, buf)
}

/// Spectral kinetic operator `−Δ f` (mode `k` multiplied by `|k|²`).
pub fn neg_laplacian_apply(f: &ComplexField) -> ComplexField {
    apply_multiplier(f, &f.grid.k_squared())
}

/// Circular convolution `(kernel ∗ density)(x_i) = h^d Σ_j kernel(x_i − x_j) density(x_j)`.
///
/// `kernel` is indexed by displacement (flat index of `x_i − x_j` modulo the box).
pub fn convolve(grid: &GridSpec, kernel: &[f64], density: &[f64]) -> Result<Vec<f64>> {
    if kernel.len() != grid.len() || density.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "convolution inputs of length {} and {} on a grid of {} points",
            kernel.len(),
            density.len(),
            grid.len()
        )));
    }
    let spectrum = kernel_spectrum(grid, kernel);
    let density: Vec<Complex64> = density.iter().map(|&d| Complex64::new(d, 0.0)).collect();
    Ok(convolve_with_spectrum(grid, &spectrum, density)
        .into_iter()
        .map(|z| z.re)
        .collect())
}

/// `h^d · DFT(kernel)`, ready for [`convolve_with_spectrum`].
pub fn kernel_spectrum(grid: &GridSpec, kernel: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = kernel.iter().map(|&k| Complex64::new(k, 0.0)).collect();
    fft_forward(grid, &mut buf);
    let w = grid.cell_volume();
    buf.iter_mut().for_each(|z| *z *= w);
    buf
}

/// Convolution of a complex sample vector against a precomputed kernel spectrum.
pub fn convolve_with_spectrum(
    grid: &GridSpec,
    spectrum: &[Complex64],
    mut values: Vec<Complex64>,
) -> Vec<Complex64> {
    fft_forward(grid, &mut values);
    for (z, s) in values.iter_mut().zip(spectrum) {
        *z *= s;
    }
    fft_inverse(grid, &mut values);
    values
}

/// Sobolev norm `‖f‖_{H^k}` for `k ∈ {0, 1, 2}` with weight `(1+|k|²)^k`.
pub fn sobolev_norm(f: &ComplexField, k: u32) -> Result<f64> {
    if k > 2 {
        return Err(Error::Parameter(format!(
            "Sobolev order must be 0, 1 or 2, got {k}"
        )));
    }
    Ok(sobolev_norm_unchecked(f, k))
}

pub(crate) fn sobolev_norm_unchecked(f: &ComplexField, k: u32) -> f64 {
    let coeffs = f.fourier_coefficients();
    let weight = f.grid.cell_volume() / f.grid.len() as f64;
    let s: f64 = coeffs
        .iter()
        .zip(f.grid.k_squared())
        .map(|(c, k2)| (1.0 + k2).powi(k as i32) * c.norm_sqr())
        .sum();
    (weight * s).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 6, 1.0).is_ok());
        assert!(GridSpec::new(1, 5, 1.0).is_err());
        assert!(GridSpec::new(1, 2, 1.0).is_err());
        assert!(GridSpec::new(3, 8, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 0.0).is_err());
        let g = GridSpec::new(2, 8, 2.0).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.cell_volume(), 0.0625);
    }

    #[test]
    fn constant_field_inner_product() {
        let g = GridSpec::line(8, 1.0).unwrap();
        let a = ComplexField::from_fn(g, |_| c(1.0, 0.0));
        let ip = inner_product(&a, &a).unwrap();
        assert!((ip - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn plane_waves_are_orthogonal() {
        let g = GridSpec::line(16, 3.0).unwrap();
        let a = ComplexField::plane_wave(g, [1, 0]);
        let b = ComplexField::plane_wave(g, [2, 0]);
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-14);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = ComplexField::zeros(GridSpec::line(8, 1.0).unwrap());
        let b = ComplexField::zeros(GridSpec::line(8, 2.0).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn plane_wave_is_kinetic_eigenfunction() {
        let l = 2.5;
        let g = GridSpec::line(32, l).unwrap();
        let f = ComplexField::plane_wave(g, [1, 0]);
        let lf = neg_laplacian_apply(&f);
        let e = (2.0 * PI / l).powi(2);
        assert!(lf.distance(&f.scaled(c(e, 0.0))) < 1e-12);
    }

    #[test]
    fn laplacian_of_constant_and_cosine() {
        let g = GridSpec::line(64, 2.0 * PI).unwrap();
        let one = ComplexField::from_fn(g, |_| c(1.0, 0.0));
        assert!(neg_laplacian_apply(&one).norm() < 1e-13);
        let cosine = ComplexField::from_fn(g, |x| c((2.0 * x[0]).cos(), 0.0));
        let lc = neg_laplacian_apply(&cosine);
        assert!(lc.distance(&cosine.scaled(c(4.0, 0.0))) < 1e-12);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = GridSpec::line(32, 4.0).unwrap();
        let mut kernel = vec![0.0; 32];
        kernel[0] = 1.0 / g.cell_volume();
        let density: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).sin() + 2.0).collect();
        let out = convolve(&g, &kernel, &density).unwrap();
        for (a, b) in out.iter().zip(&density) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_kernel_integrates() {
        let g = GridSpec::line(16, 3.0).unwrap();
        let kernel = vec![0.7; 16];
        let density: Vec<f64> = (0..16).map(|i| (i as f64).cos().abs()).collect();
        let total: f64 = density.iter().sum::<f64>() * g.cell_volume() * 0.7;
        for v in convolve(&g, &kernel, &density).unwrap() {
            assert!((v - total).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_convolution_matches_direct_sum() {
        let m = 128;
        let l = 20.0;
        let g = GridSpec::line(m, l).unwrap();
        let (s1, s2) = (0.8_f64, 1.1_f64);
        let kernel: Vec<f64> = (0..m)
            .map(|j| {
                let d = g.folded_displacement(j);
                (-d * d / (2.0 * s1 * s1)).exp()
            })
            .collect();
        let density: Vec<f64> = (0..m)
            .map(|j| {
                let d = j as f64 * g.spacing() - l / 2.0;
                (-d * d / (2.0 * s2 * s2)).exp()
            })
            .collect();
        let fast = convolve(&g, &kernel, &density).unwrap();
        // direct O(M²) periodic sum
        for i in 0..m {
            let direct: f64 = (0..m)
                .map(|j| kernel[(i + m - j) % m] * density[j])
                .sum::<f64>()
                * g.cell_volume();
            assert!((fast[i] - direct).abs() < 1e-10, "i={i}");
        }
        // and the continuum answer: Gaussian with summed variances
        let s = (s1 * s1 + s2 * s2).sqrt();
        let amp = 2.0 * PI * s1 * s2 / (2.0 * PI * s * s).sqrt();
        let mid = m / 2;
        let expected = amp * 1.0;
        assert!((fast[mid] - expected).abs() < 1e-8);
    }

    #[test]
    fn sobolev_norms() {
        let l = 3.0;
        let g = GridSpec::line(32, l).unwrap();
        let f = ComplexField::gaussian(g, [1.5, 0.0], 0.4).unwrap();
        assert!((sobolev_norm(&f, 0).unwrap() - f.norm()).abs() < 1e-14);
        let one = ComplexField::from_fn(g, |_| c(0.5, 0.0));
        for k in 0..=2 {
            assert!((sobolev_norm(&one, k).unwrap() - one.norm()).abs() < 1e-14);
        }
        let w = ComplexField::plane_wave(g, [3, 0]);
        let k2 = (2.0 * PI * 3.0 / l).powi(2);
        let h1 = sobolev_norm(&w, 1).unwrap().powi(2);
        assert!((h1 - (1.0 + k2) * w.norm_sqr()).abs() < 1e-11);
        assert!(matches!(sobolev_norm(&f, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn two_dimensional_plane_wave() {
        let l = 2.0;
        let g = GridSpec::new(2, 16, l).unwrap();
        let f = ComplexField::plane_wave(g, [1, -2]);
        assert!((f.norm() - 1.0).abs() < 1e-13);
        let e = (2.0 * PI / l).powi(2) * 5.0;
        assert!(neg_laplacian_apply(&f).distance(&f.scaled(c(e, 0.0))) < 1e-11);
    }
}
