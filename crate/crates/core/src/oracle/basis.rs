use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexField;

/// Largest sector dimension the oracle will enumerate.
pub const BASIS_CAP: usize = 200_000;

/// Occupation-number basis of `N` bosons in `M` modes, in descending
/// lexicographic order: `(N,0,…,0)` first, `(0,…,0,N)` last.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    particles: usize,
    occupations: Vec<u8>,
    /// `cumulative[r][k]` = number of vectors over `r` modes with fewer than `k` particles.
    cumulative: Vec<Vec<usize>>,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// `binomial(N+M−1, N)`, saturating.
pub fn sector_dimension(modes: usize, particles: usize) -> u128 {
    if modes == 0 {
        return u128::from(particles == 0);
    }
    binomial((particles + modes - 1) as u128, particles as u128)
}

pub fn build_basis(modes: usize, particles: usize) -> Result<FockBasis> {
    if modes == 0 {
        return Err(Error::Parameter("need at least one mode".into()));
    }
    if particles == 0 || particles > u8::MAX as usize {
        return Err(Error::Parameter(format!("particle number must be in 1..=255, got {particles}")));
    }
    let dim = sector_dimension(modes, particles);
    if dim > BASIS_CAP as u128 {
        return Err(Error::Size {
            what: "Fock sector",
            dimension: usize::try_from(dim).unwrap_or(usize::MAX),
            cap: BASIS_CAP,
            hint: "",
        });
    }
    let dim = dim as usize;
    let mut occupations = Vec::with_capacity(dim * modes);
    let mut current = vec![0u8; modes];
    enumerate(&mut current, 0, particles, &mut occupations);
    debug_assert_eq!(occupations.len(), dim * modes);

    let cumulative = (0..=modes)
        .map(|r| {
            let mut acc = vec![0usize; particles + 2];
            for k in 0..=particles {
                acc[k + 1] = acc[k] + sector_dimension(r, k) as usize;
            }
            acc
        })
        .collect();
    Ok(FockBasis {
        modes,
        particles,
        occupations,
        cumulative,
    })
}

fn enumerate(current: &mut [u8], pos: usize, remaining: usize, out: &mut Vec<u8>) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u8;
        out.extend_from_slice(current);
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n as u8;
        enumerate(current, pos + 1, remaining - n, out);
    }
}

impl FockBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.modes
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.occupations[i * self.modes..(i + 1) * self.modes]
    }

    /// Position of an occupation vector, `None` if it is not in this sector.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.modes || occ.iter().map(|&n| n as usize).sum::<usize>() != self.particles {
            return None;
        }
        Some(self.rank(occ))
    }

    /// Rank of a valid occupation vector: vectors that precede it share a
    /// prefix and carry more particles at the first differing mode.
    pub(crate) fn rank(&self, occ: &[u8]) -> usize {
        let mut remaining = self.particles;
        let mut idx = 0;
        for (j, &n) in occ.iter().enumerate().take(self.modes - 1) {
            let n = n as usize;
            let rest_modes = self.modes - j - 1;
            idx += self.cumulative[rest_modes][remaining - n];
            remaining -= n;
        }
        idx
    }
}

/// Amplitudes over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    basis: Arc<FockBasis>,
    amplitudes: Vec<Complex64>,
}

impl ManyBodyState {
    pub fn new(basis: Arc<FockBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a sector of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    /// Single occupation vector.
    pub fn basis_state(basis: Arc<FockBasis>, occ: &[u8]) -> Result<Self> {
        let i = basis
            .index_of(occ)
            .ok_or_else(|| Error::Parameter(format!("{occ:?} is not in the sector")))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ManyBodyState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &ManyBodyState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// `φ^{⊗N}`: amplitude `sqrt(N!/Π n_x!) Π φ_x^{n_x}` with `φ` converted to
/// the ℓ²-normalized mode convention (`φ_x·sqrt(h)`).
pub fn product_state(phi: &ComplexField, basis: &Arc<FockBasis>) -> Result<ManyBodyState> {
    if phi.grid().dim() != 1 || phi.grid().points() != basis.modes() {
        return Err(Error::Dimension(format!(
            "product state needs a 1-d field with {} points",
            basis.modes()
        )));
    }
    let n = phi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("product state needs a normalized orbital, ‖φ‖ = {n}")));
    }
    let scale = phi.grid().cell_volume().sqrt();
    let modes: Vec<Complex64> = phi.values().iter().map(|z| z * scale).collect();
    let ln_fact: Vec<f64> = (0..=basis.particles())
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let amplitudes = (0..basis.dim())
        .map(|i| {
            let occ = basis.occupation(i);
            let mut log_mult = ln_fact[basis.particles()];
            let mut prod = Complex64::new(1.0, 0.0);
            for (x, &k) in occ.iter().enumerate() {
                log_mult -= ln_fact[k as usize];
                prod *= modes[x].powu(k as u32);
            }
            prod * (0.5 * log_mult).exp()
        })
        .collect();
    ManyBodyState::new(basis.clone(), amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn small_sectors() {
        let b = build_basis(2, 2).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(b.occupation(0), &[2, 0]);
        assert_eq!(b.occupation(1), &[1, 1]);
        assert_eq!(b.occupation(2), &[0, 2]);
        assert_eq!(build_basis(6, 4).unwrap().dim(), 126);
        assert_eq!(build_basis(8, 5).unwrap().dim(), 792);
    }

    #[test]
    fn rank_inverts_enumeration() {
        for (m, n) in [(3, 4), (6, 5), (8, 3), (1, 4)] {
            let b = build_basis(m, n).unwrap();
            for i in 0..b.dim() {
                assert_eq!(b.index_of(b.occupation(i)), Some(i));
            }
            // ordering is strictly descending lexicographic
            for i in 1..b.dim() {
                assert!(b.occupation(i - 1) > b.occupation(i));
            }
        }
        let b = build_basis(3, 2).unwrap();
        assert_eq!(b.index_of(&[1, 1, 1]), None);
    }

    #[test]
    fn cap_enforced() {
        match build_basis(20, 20) {
            Err(Error::Size { dimension, .. }) => assert!(dimension > BASIS_CAP),
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn product_states() {
        let g = GridSpec::line(4, 4.0).unwrap();
        let b = Arc::new(build_basis(4, 3).unwrap());
        let mut vals = vec![Complex64::new(0.0, 0.0); 4];
        vals[0] = Complex64::new(1.0, 0.0);
        let phi = ComplexField::new(g, vals).unwrap();
        let psi = product_state(&phi, &b).unwrap();
        assert!((psi.amplitudes()[0] - 1.0).norm() < 1e-15);
        assert!((psi.norm() - 1.0).abs() < 1e-15);

        let g2 = GridSpec::line(4, 1.0).unwrap();
        let h = g2.cell_volume().sqrt();
        let b2 = Arc::new(build_basis(4, 2).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2 / h;
        let phi2 = ComplexField::new(
            g2,
            vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let psi2 = product_state(&phi2, &b2).unwrap();
        let amp = |occ: &[u8]| psi2.amplitudes()[b2.index_of(occ).unwrap()].re;
        assert!((amp(&[2, 0, 0, 0]) - 0.5).abs() < 1e-15);
        assert!((amp(&[1, 1, 0, 0]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((amp(&[0, 2, 0, 0]) - 0.5).abs() < 1e-15);
    }
}
