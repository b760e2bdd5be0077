//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, ComplexField, GridSpec};

pub type CMatrix = DMatrix<Complex64>;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(matrix: CMatrix) -> (Vec<f64>, CMatrix) {
    let n = matrix.nrows();
    let eig = matrix.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(matrix: CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = matrix.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest `|A_ij − conj(A_ji)|`.
pub fn hermiticity_defect(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest `|A_ij − A_ji|`.
pub fn symmetry_defect(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)]).norm());
        }
    }
    worst
}

/// Dense position-space matrix of a real Fourier multiplier `symbol(|k|²)`.
pub fn multiplier_matrix(grid: &GridSpec, symbol: impl Fn(f64) -> f64) -> CMatrix {
    let n = grid.len();
    let sym: Vec<f64> = grid.k_squared().into_iter().map(symbol).collect();
    let mut out = CMatrix::zeros(n, n);
    let mut unit = ComplexField::zeros(*grid);
    for col in 0..n {
        unit.values_mut()[col] = Complex64::new(1.0, 0.0);
        let image = apply_multiplier(&unit, &sym);
        for (row, z) in image.values().iter().enumerate() {
            out[(row, col)] = *z;
        }
        unit.values_mut()[col] = Complex64::new(0.0, 0.0);
    }
    out
}

pub fn mat_vec(matrix: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let n = matrix.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (c, &x) in v.iter().enumerate().take(matrix.ncols()) {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        let column = matrix.column(c);
        for (o, a) in out.iter_mut().zip(column.iter()) {
            *o += a * x;
        }
    }
    out
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Parameter("linear fit needs at least two paired samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("linear fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Least-squares polynomial in `x` of the given degree, returning its value at `x = 0`.
///
/// With as many samples as coefficients this is exact polynomial (Richardson)
/// extrapolation.
pub fn polynomial_intercept(x: &[f64], y: &[f64], degree: usize) -> Result<f64> {
    if x.len() != y.len() || x.len() < degree + 1 {
        return Err(Error::Parameter(format!(
            "degree-{degree} extrapolation needs at least {} samples, got {}",
            degree + 1,
            x.len()
        )));
    }
    let vander = DMatrix::from_fn(x.len(), degree + 1, |r, c| x[r].powi(c as i32));
    let rhs = DVector::from_column_slice(y);
    let svd = vander.svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NumericalConsistency(format!("extrapolation solve failed: {e}")))?;
    Ok(coeffs[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, i) = linear_fit(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14);
        let y2: Vec<f64> = x.iter().map(|v| 0.5 + v * v - 3.0 * v).collect();
        assert!((polynomial_intercept(&x, &y2, 2).unwrap() - 0.5).abs() < 1e-12);
        assert!(polynomial_intercept(&x[..2], &y2[..2], 2).is_err());
    }

    #[test]
    fn multiplier_matrix_is_hermitian() {
        let g = GridSpec::line(8, 2.0).unwrap();
        let m = multiplier_matrix(&g, |k2| 1.0 + k2);
        assert!(hermiticity_defect(&m) < 1e-12);
        let eig = hermitian_eigenvalues(m);
        assert!((eig[0] - 1.0).abs() < 1e-12);
    }
}
