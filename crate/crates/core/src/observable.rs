//! Bounded self-adjoint one-particle observables and their norms.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{inner_unchecked, ComplexField, GridSpec};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, hermiticity_defect, mat_vec, multiplier_matrix, CMatrix};

const HERMITIAN_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
enum Structure {
    Identity,
    /// Multiplication by a bounded real function.
    Multiplication(Vec<f64>),
    /// `c·|u⟩⟨u|` with `‖u‖ = 1`.
    RankOne { vector: ComplexField, weight: f64 },
    Dense,
}

/// Eigen-decomposition in the ℓ²-orthonormal (mode) convention.
#[derive(Debug, Clone)]
pub struct ObservableSpectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// A Hermitian operator on grid functions. Acts on sample vectors as
/// `(Of)_i = Σ_j O_ij f_j`; the matrix is Hermitian in the ordinary sense
/// because the grid inner product is a scalar multiple of the Euclidean one.
#[derive(Debug, Clone)]
pub struct Observable {
    grid: GridSpec,
    structure: Structure,
    matrix: CMatrix,
    operator_norm: f64,
    triple_norm: f64,
    spectrum: OnceLock<ObservableSpectrum>,
}

impl Observable {
    fn build(grid: GridSpec, structure: Structure, matrix: CMatrix) -> Self {
        let operator_norm = match &structure {
            Structure::Identity => 1.0,
            Structure::Multiplication(g) => g.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Structure::RankOne { weight, .. } => weight.abs(),
            Structure::Dense => hermitian_eigenvalues(matrix.clone())
                .into_iter()
                .fold(0.0_f64, |m, v| m.max(v.abs())),
        };
        let triple_norm = triple_norm_of(&grid, &matrix);
        Self {
            grid,
            structure,
            matrix,
            operator_norm,
            triple_norm,
            spectrum: OnceLock::new(),
        }
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::build(grid, Structure::Identity, CMatrix::identity(grid.len(), grid.len()))
    }

    /// Multiplication by the real function `g` sampled at the grid points.
    pub fn multiplication(grid: GridSpec, g: Vec<f64>) -> Result<Self> {
        if g.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "multiplier has {} samples, grid needs {}",
                g.len(),
                grid.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("multiplier must be finite".into()));
        }
        let matrix = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            g.len(),
            g.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        Ok(Self::build(grid, Structure::Multiplication(g), matrix))
    }

    /// Multiplication by `amplitude·cos(2π mode x₁/L)`.
    pub fn cosine(grid: GridSpec, amplitude: f64, mode: i64) -> Result<Self> {
        let k = 2.0 * PI * mode as f64 / grid.length();
        let g = (0..grid.len())
            .map(|i| amplitude * (k * grid.coordinate(i)[0]).cos())
            .collect();
        Self::multiplication(grid, g)
    }

    /// `weight·|u⟩⟨u|` with `u` normalized first.
    pub fn projector(u: &ComplexField, weight: f64) -> Result<Self> {
        let mut u = u.clone();
        u.normalize()?;
        let grid = *u.grid();
        let h = grid.cell_volume();
        let n = grid.len();
        let vals = u.values();
        let matrix = CMatrix::from_fn(n, n, |r, c| vals[r] * vals[c].conj() * (h * weight));
        Ok(Self::build(
            grid,
            Structure::RankOne {
                vector: u,
                weight,
            },
            matrix,
        ))
    }

    /// Fourier multiplier `f(|k|²)`; commutes with `−Δ`.
    pub fn fourier_multiplier(grid: GridSpec, symbol: impl Fn(f64) -> f64) -> Self {
        let matrix = multiplier_matrix(&grid, symbol);
        let matrix = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Self::build(grid, Structure::Dense, matrix)
    }

    /// General Hermitian matrix; rejected if `‖A − A†‖_max > 1e−13`.
    pub fn from_matrix(grid: GridSpec, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(Error::Dimension(format!(
                "observable matrix is {}x{}, grid needs {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                grid.len(),
                grid.len()
            )));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::NumericalConsistency(format!(
                "observable matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self::build(grid, Structure::Dense, matrix))
    }

    /// Reads `n²` rows of `re,im` (row-major), optional `re,im` header.
    pub fn from_csv(grid: GridSpec, path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())?;
        let mut entries = Vec::with_capacity(grid.len() * grid.len());
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if line == 0 && record.get(0).is_some_and(|f| f.eq_ignore_ascii_case("re")) {
                continue;
            }
            if record.len() != 2 {
                return Err(Error::Config(format!(
                    "matrix CSV line {}: expected 2 columns, found {}",
                    line + 1,
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::Config(format!("matrix CSV line {}: {e}", line + 1))
                })
            };
            entries.push(Complex64::new(parse(&record[0])?, parse(&record[1])?));
        }
        let n = grid.len();
        if entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "matrix CSV has {} entries, expected {}",
                entries.len(),
                n * n
            )));
        }
        Self::from_matrix(grid, CMatrix::from_row_slice(n, n, &entries))
    }

    /// `α·O`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let structure = match &self.structure {
            Structure::Identity => Structure::Dense,
            Structure::Multiplication(g) => Structure::Multiplication(g.iter().map(|v| alpha * v).collect()),
            Structure::RankOne { vector, weight } => Structure::RankOne {
                vector: vector.clone(),
                weight: alpha * weight,
            },
            Structure::Dense => Structure::Dense,
        };
        Self::build(self.grid, structure, &self.matrix * Complex64::new(alpha, 0.0))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    /// `|||O||| = ‖(1−Δ) O (1−Δ)^{-1}‖`.
    pub fn triple_norm(&self) -> f64 {
        self.triple_norm
    }

    pub fn apply(&self, f: &ComplexField) -> ComplexField {
        debug_assert_eq!(f.grid(), &self.grid);
        match &self.structure {
            Structure::Identity => f.clone(),
            Structure::Multiplication(g) => f.mul_real(g),
            Structure::RankOne { vector, weight } => {
                let c = inner_unchecked(vector, f) * weight;
                vector.scaled(c)
            }
            Structure::Dense => ComplexField::from_raw(self.grid, mat_vec(&self.matrix, f.values())),
        }
    }

    /// Eigenvalues ascending with ℓ²-orthonormal eigenvectors, computed once.
    pub fn spectrum(&self) -> &ObservableSpectrum {
        self.spectrum.get_or_init(|| {
            let (values, vectors) = hermitian_eigen(self.matrix.clone());
            ObservableSpectrum { values, vectors }
        })
    }

    /// Spectral measure of `O` in the state `φ`: atoms `o_k` with weights `|⟨u_k, φ⟩|²`.
    pub fn spectral_weights(&self, phi: &ComplexField) -> Vec<(f64, f64)> {
        let spec = self.spectrum();
        let h = self.grid.cell_volume();
        spec.values
            .iter()
            .enumerate()
            .map(|(k, &o)| {
                let overlap: Complex64 = spec
                    .vectors
                    .column(k)
                    .iter()
                    .zip(phi.values())
                    .map(|(u, p)| u.conj() * p)
                    .sum();
                (o, overlap.norm_sqr() * h)
            })
            .collect()
    }
}

fn triple_norm_of(grid: &GridSpec, matrix: &CMatrix) -> f64 {
    let p = multiplier_matrix(grid, |k2| 1.0 + k2);
    let p_inv = multiplier_matrix(grid, |k2| 1.0 / (1.0 + k2));
    let b = &p * matrix * &p_inv;
    let gram = b.adjoint() * &b;
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    let top = hermitian_eigenvalues(gram).last().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// Free-function form of [`Observable::triple_norm`].
pub fn triple_norm(o: &Observable) -> f64 {
    o.triple_norm()
}

fn check_normalized(phi: &ComplexField) -> Result<()> {
    let n = phi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("state must be normalized, ‖φ‖ = {n}")));
    }
    Ok(())
}

/// `⟨φ, Oφ⟩` for normalized `φ`; errors if the imaginary part exceeds `1e−10`.
pub fn expectation(o: &Observable, phi: &ComplexField) -> Result<f64> {
    check_normalized(phi)?;
    if phi.grid() != o.grid() {
        return Err(Error::Dimension("observable and state live on different grids".into()));
    }
    let z = inner_unchecked(phi, &o.apply(phi));
    if z.im.abs() > 1e-10 {
        return Err(Error::NumericalConsistency(format!(
            "⟨φ, Oφ⟩ has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `Var_φ(O) = ⟨φ, O²φ⟩ − ⟨φ, Oφ⟩² = ‖q O φ‖²`.
pub fn variance(o: &Observable, phi: &ComplexField) -> Result<f64> {
    let mean = expectation(o, phi)?;
    Ok(o.apply(phi).norm_sqr() - mean * mean)
}
