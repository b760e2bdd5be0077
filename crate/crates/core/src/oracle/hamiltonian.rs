use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{build_basis, FockBasis};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{multiplier_matrix, CMatrix};
use crate::potential::Potential;

/// Below this dimension the parallel split costs more than it saves.
const PAR_THRESHOLD: usize = 2048;

/// `out = Σ_{pq} A_pq a†_p a_q ψ`, row by row: each output amplitude gathers
/// from the states reachable by one hop, so rows are independent.
pub fn apply_one_body(basis: &FockBasis, a: &CMatrix, psi: &[Complex64]) -> Vec<Complex64> {
    let m = basis.modes();
    debug_assert_eq!(a.nrows(), m);
    let row = |i: usize, scratch: &mut Vec<u8>| -> Complex64 {
        let occ = basis.occupation(i);
        scratch.clear();
        scratch.extend_from_slice(occ);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut diag = Complex64::new(0.0, 0.0);
        for p in 0..m {
            if occ[p] == 0 {
                continue;
            }
            let np = occ[p] as f64;
            diag += a[(p, p)] * np;
            for q in 0..m {
                if q == p {
                    continue;
                }
                let apq = a[(p, q)];
                if apq == Complex64::new(0.0, 0.0) {
                    continue;
                }
                // |i⟩ = a†_p a_q |j⟩ with n_j = n_i − e_p + e_q
                scratch[p] -= 1;
                scratch[q] += 1;
                let j = basis.rank(scratch);
                let amp = (np * (occ[q] as f64 + 1.0)).sqrt();
                acc += apq * amp * psi[j];
                scratch[p] += 1;
                scratch[q] -= 1;
            }
        }
        acc + diag * psi[i]
    };
    let dim = basis.dim();
    if dim < PAR_THRESHOLD {
        let mut scratch = Vec::with_capacity(m);
        (0..dim).map(|i| row(i, &mut scratch)).collect()
    } else {
        (0..dim)
            .into_par_iter()
            .map_init(|| Vec::with_capacity(m), |scratch, i| row(i, scratch))
            .collect()
    }
}

/// Second-quantized `Σ_j −Δ_j + N⁻¹ Σ_{i<j} v(x_i − x_j)` on the `N`-boson
/// sector over the grid sites.
///
/// In the ℓ²-normalized mode convention the two-body matrix element between
/// position modes is `v(x−y)` itself, which reproduces the Hartree mean field
/// `h Σ_y v(x−y)|φ(y)|²` of the field convention.
#[derive(Debug, Clone)]
pub struct SecondQuantizedHamiltonian {
    basis: Arc<FockBasis>,
    one_body: CMatrix,
    interaction: Vec<f64>,
}

pub fn build_hamiltonian(grid: &GridSpec, v: &Potential, n: usize) -> Result<SecondQuantizedHamiltonian> {
    if grid.dim() != 1 {
        return Err(Error::Dimension("the many-body oracle is one-dimensional".into()));
    }
    if v.grid() != grid {
        return Err(Error::Dimension("potential and oracle grid differ".into()));
    }
    let basis = Arc::new(build_basis(grid.points(), n)?);
    Ok(SecondQuantizedHamiltonian::new(basis, multiplier_matrix(grid, |k2| k2), v))
}

impl SecondQuantizedHamiltonian {
    pub(crate) fn new(basis: Arc<FockBasis>, one_body: CMatrix, v: &Potential) -> Self {
        let m = basis.modes();
        let coupling = 1.0 / (2.0 * basis.particles() as f64);
        let pair: Vec<f64> = (0..m * m).map(|k| v.pair(k / m, k % m)).collect();
        let interaction = (0..basis.dim())
            .map(|i| {
                if v.is_zero() {
                    return 0.0;
                }
                let occ = basis.occupation(i);
                let mut e = 0.0;
                for x in 0..m {
                    let nx = occ[x] as f64;
                    if nx == 0.0 {
                        continue;
                    }
                    for y in 0..m {
                        let ny = occ[y] as f64;
                        let nn = if x == y { nx * (nx - 1.0) } else { nx * ny };
                        e += pair[x * m + y] * nn;
                    }
                }
                coupling * e
            })
            .collect();
        Self {
            basis,
            one_body,
            interaction,
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn one_body(&self) -> &CMatrix {
        &self.one_body
    }

    /// Diagonal interaction energy of each occupation vector.
    pub fn interaction_diagonal(&self) -> &[f64] {
        &self.interaction
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = apply_one_body(&self.basis, &self.one_body, psi);
        for ((o, &w), p) in out.iter_mut().zip(&self.interaction).zip(psi) {
            *o += w * p;
        }
        out
    }

    pub fn energy(&self, psi: &[Complex64]) -> f64 {
        let h = self.apply(psi);
        psi.iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense matrix of the action, for small sectors and tests.
    pub fn to_dense(&self) -> CMatrix {
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        let mut e = vec![Complex64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.apply(&e);
            for (i, z) in col.into_iter().enumerate() {
                out[(i, j)] = z;
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, hermiticity_defect};
    use crate::potential::PotentialKind;
    use rand::{Rng, SeedableRng};

    fn random_state(dim: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn single_particle_spectrum() {
        let g = GridSpec::line(6, 5.0).unwrap();
        let h = build_hamiltonian(&g, &Potential::zero(g), 1).unwrap();
        let ev = hermitian_eigenvalues(h.to_dense());
        let mut expected = g.k_squared();
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn free_two_particle_spectrum_is_pair_sums() {
        let g = GridSpec::line(4, 3.0).unwrap();
        let h = build_hamiltonian(&g, &Potential::zero(g), 2).unwrap();
        let ev = hermitian_eigenvalues(h.to_dense());
        let k2 = g.k_squared();
        let mut expected = Vec::new();
        for a in 0..4 {
            for b in a..4 {
                expected.push(k2[a] + k2[b]);
            }
        }
        expected.sort_by(f64::total_cmp);
        assert_eq!(ev.len(), expected.len());
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_potential_shift() {
        let g = GridSpec::line(6, 2.0).unwrap();
        let c = 0.7;
        let n = 4;
        let v = Potential::new(PotentialKind::Constant { value: c }, g).unwrap();
        let h = build_hamiltonian(&g, &v, n).unwrap();
        let expected = c / (2.0 * n as f64) * ((n * n - n) as f64);
        for &w in h.interaction_diagonal() {
            assert!((w - expected).abs() < 1e-12);
        }
        let h0 = build_hamiltonian(&g, &Potential::zero(g), n).unwrap();
        let psi = random_state(h.dim(), 3);
        let (a, b) = (h.apply(&psi), h0.apply(&psi));
        for ((x, y), p) in a.iter().zip(&b).zip(&psi) {
            assert!((x - y - expected * p).norm() < 1e-10);
        }
    }

    #[test]
    fn hermitian_action() {
        let g = GridSpec::line(6, 6.0).unwrap();
        let v = Potential::new(PotentialKind::Gaussian { amplitude: 0.5, width: 1.0 }, g).unwrap();
        let h = build_hamiltonian(&g, &v, 4).unwrap();
        let a = random_state(h.dim(), 1);
        let b = random_state(h.dim(), 2);
        let ha = h.apply(&a);
        let hb = h.apply(&b);
        let lhs: Complex64 = a.iter().zip(&hb).map(|(x, y)| x.conj() * y).sum();
        let rhs: Complex64 = ha.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
        assert!(hermiticity_defect(&h.to_dense()) < 1e-10);
    }
}
