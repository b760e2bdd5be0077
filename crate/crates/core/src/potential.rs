//! Pair interaction potentials sampled on the displacement table of a grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{convolve_with_spectrum, kernel_spectrum, GridSpec};
use crate::linalg::multiplier_matrix;

/// Analytic form of `v`. Distances are periodic (shortest image).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    Constant { value: f64 },
    /// `α exp(−|x|²/(2σ²))`
    Gaussian { amplitude: f64, width: f64 },
    /// `α / sqrt(|x|² + ε²)`
    SoftCoulomb { amplitude: f64, regularizer: f64 },
    /// `α cos(2π k₀ x/L)`, averaged over axes in two dimensions.
    Cosine { amplitude: f64, wavenumber: i64 },
}

impl PotentialKind {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        match *self {
            PotentialKind::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !(width > 0.0) {
                    return bad(format!("gaussian potential needs finite amplitude and width > 0 (got {amplitude}, {width})"));
                }
            }
            PotentialKind::SoftCoulomb {
                amplitude,
                regularizer,
            } => {
                if !amplitude.is_finite() || !(regularizer > 0.0) {
                    return bad(format!(
                        "soft-coulomb potential needs a regularizer ε > 0 (got {regularizer})"
                    ));
                }
            }
            PotentialKind::Constant { value } if !value.is_finite() => {
                return bad("constant potential must be finite".into());
            }
            PotentialKind::Cosine { amplitude, .. } if !amplitude.is_finite() => {
                return bad("cosine amplitude must be finite".into());
            }
            _ => {}
        }
        Ok(())
    }

    fn radial(&self, r2: f64) -> f64 {
        match *self {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant { value } => value,
            PotentialKind::Gaussian { amplitude, width } => {
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            PotentialKind::SoftCoulomb {
                amplitude,
                regularizer,
            } => amplitude / (r2 + regularizer * regularizer).sqrt(),
            PotentialKind::Cosine { .. } => unreachable!("cosine is not radial"),
        }
    }
}

/// A potential together with its displacement table and cached convolution spectrum.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    grid: GridSpec,
    table: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl Potential {
    pub fn new(kind: PotentialKind, grid: GridSpec) -> Result<Self> {
        kind.validate()?;
        let m = grid.points();
        let l = grid.length();
        let table: Vec<f64> = (0..grid.len())
            .map(|i| {
                let [a, b] = grid.axis_indices(i);
                // fold indices so that v(−x) = v(x) holds bit-for-bit
                let fa = a.min(m - a) % m;
                let fb = b.min(m - b) % m;
                match kind {
                    PotentialKind::Cosine {
                        amplitude,
                        wavenumber,
                    } => {
                        let arg = |j: usize| (2.0 * PI * wavenumber as f64 * j as f64 / m as f64).cos();
                        if grid.dim() == 1 {
                            amplitude * arg(fa)
                        } else {
                            0.5 * amplitude * (arg(fa) + arg(fb))
                        }
                    }
                    _ => {
                        let h = l / m as f64;
                        let (da, db) = (fa as f64 * h, fb as f64 * h);
                        let r2 = if grid.dim() == 1 { da * da } else { da * da + db * db };
                        kind.radial(r2)
                    }
                }
            })
            .collect();
        let spectrum = kernel_spectrum(&grid, &table);
        Ok(Self {
            kind,
            grid,
            table,
            spectrum,
        })
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self::new(PotentialKind::Zero, grid).expect("zero potential is valid")
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `v` at flat displacement index.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|&v| v == 0.0)
    }

    /// `v(x_i − x_j)` for flat point indices.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        let m = self.grid.points();
        let [ia, ib] = self.grid.axis_indices(i);
        let [ja, jb] = self.grid.axis_indices(j);
        let da = (ia + m - ja) % m;
        let idx = if self.grid.dim() == 1 {
            da
        } else {
            da * m + (ib + m - jb) % m
        };
        self.table[idx]
    }

    /// Mean field `v ∗ ρ` for a real density.
    pub fn mean_field(&self, density: &[f64]) -> Vec<f64> {
        let values = density.iter().map(|&d| Complex64::new(d, 0.0)).collect();
        convolve_with_spectrum(&self.grid, &self.spectrum, values)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// `v ∗ g` for complex samples.
    pub fn convolve_complex(&self, values: Vec<Complex64>) -> Vec<Complex64> {
        convolve_with_spectrum(&self.grid, &self.spectrum, values)
    }

    /// Displacement table of `v²`.
    pub fn squared(&self) -> Vec<f64> {
        self.table.iter().map(|v| v * v).collect()
    }
}

/// Smallest `C` with `v² ≤ C(1 − Δ)` on the grid.
///
/// Computed as the top eigenvalue of `(1−Δ)^{-1/2} v(·)² (1−Δ)^{-1/2}`. By
/// translation invariance on the torus a single translate of `v²` suffices.
pub fn potential_bound_constant(v: &Potential) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let grid = v.grid();
    let n = grid.len();
    let s = multiplier_matrix(grid, |k2| 1.0 / (1.0 + k2).sqrt());
    let s = DMatrix::from_fn(n, n, |r, c| s[(r, c)].re);
    let v2 = v.squared();
    let scaled = DMatrix::from_fn(n, n, |r, c| v2[r] * s[(r, c)]);
    let a = &s * scaled;
    let a = (&a + a.transpose()) * 0.5;
    a.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}
