use num_complex::Complex64;

use super::basis::{FockBasis, ManyBodyState};
use super::hamiltonian::apply_one_body;
use crate::error::{Error, Result};
use crate::ldp::{log_sum_exp, SpectralMeasure};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::observable::Observable;

/// Largest sector on which `dΓ(O)` is diagonalized densely.
pub const STATISTICS_CAP: usize = 5000;

/// One-body matrix in the ℓ²-normalized mode basis. The grid matrix of an
/// observable is already in that basis, since the inner product weights
/// every site by the same `h`.
fn mode_matrix(basis: &FockBasis, o: &Observable) -> Result<CMatrix> {
    if o.grid().dim() != 1 || o.grid().points() != basis.modes() {
        return Err(Error::Dimension(format!(
            "observable on {} points, sector over {} modes",
            o.grid().len(),
            basis.modes()
        )));
    }
    Ok(o.matrix().clone())
}

/// Sector matrix of `dΓ(O) = Σ_{pq} O_pq a†_p a_q`.
pub fn second_quantize(basis: &FockBasis, o: &Observable) -> Result<CMatrix> {
    let dim = basis.dim();
    if dim > STATISTICS_CAP {
        return Err(Error::Size {
            what: "dΓ(O) diagonalization",
            dimension: dim,
            cap: STATISTICS_CAP,
            hint: "use observable_moments instead",
        });
    }
    let a = mode_matrix(basis, o)?;
    let mut out = CMatrix::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = Complex64::new(1.0, 0.0);
        for (i, z) in apply_one_body(basis, &a, &e).into_iter().enumerate() {
            out[(i, j)] = z;
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Exact law of `N⁻¹ dΓ(O) − mean_ref` in the state `ψ`.
///
/// Weights are `|⟨e_k, ψ⟩|² / ‖ψ‖²`; near-coincident eigenvalues are kept as
/// separate atoms.
pub fn observable_statistics(psi: &ManyBodyState, o: &Observable, mean_ref: f64) -> Result<SpectralMeasure> {
    let basis = psi.basis();
    let d_gamma = second_quantize(basis, o)?;
    let (values, vectors) = hermitian_eigen(d_gamma);
    let n = basis.particles() as f64;
    let norm_sqr = psi.norm().powi(2);
    let amps = psi.amplitudes();
    let atoms = values
        .iter()
        .enumerate()
        .map(|(k, &ev)| {
            let c: Complex64 = vectors.column(k).iter().zip(amps).map(|(e, a)| e.conj() * a).sum();
            (ev / n - mean_ref, c.norm_sqr() / norm_sqr)
        })
        .collect();
    SpectralMeasure::new(atoms)
}

/// Raw moments `⟨ψ, (N⁻¹ dΓ(O) − mean_ref)^k ψ⟩` for `k = 1..=order`, by
/// repeated sparse application. Works beyond [`STATISTICS_CAP`].
pub fn observable_moments(psi: &ManyBodyState, o: &Observable, mean_ref: f64, order: usize) -> Result<Vec<f64>> {
    let basis = psi.basis();
    let a = mode_matrix(basis, o)?;
    let n = basis.particles() as f64;
    let amps = psi.amplitudes();
    let norm_sqr = psi.norm().powi(2);
    let mut cur = amps.to_vec();
    let mut out = Vec::with_capacity(order);
    for _ in 0..order {
        let next = apply_one_body(basis, &a, &cur);
        cur = next.iter().zip(&cur).map(|(x, c)| x / n - mean_ref * c).collect();
        let m: Complex64 = amps.iter().zip(&cur).map(|(p, c)| p.conj() * c).sum();
        out.push(m.re / norm_sqr);
    }
    Ok(out)
}

/// `Λ_N(λ) = N⁻¹ log Σ w_k e^{λ N o_k}`.
pub fn empirical_lmgf(measure: &SpectralMeasure, n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    log_sum_exp(measure.atoms().iter().map(|&(o, w)| (lambda * n * o, w))) / n
}

/// `P[O > x] = Σ_{o_k > x} w_k`.
pub fn tail_probability(measure: &SpectralMeasure, x: f64) -> f64 {
    measure.atoms().iter().filter(|a| a.0 > x).map(|a| a.1).sum::<f64>().min(1.0)
}

/// One-particle reduced density `γ[p,q] = ⟨ψ, a†_q a_p ψ⟩ / N` in the mode
/// basis; trace one for a normalized state.
pub fn reduced_density(psi: &ManyBodyState) -> CMatrix {
    let basis = psi.basis();
    let m = basis.modes();
    let amps = psi.amplitudes();
    let mut gamma = CMatrix::zeros(m, m);
    let mut scratch = Vec::with_capacity(m);
    for j in 0..basis.dim() {
        let pj = amps[j];
        if pj == Complex64::new(0.0, 0.0) {
            continue;
        }
        let occ = basis.occupation(j);
        for p in 0..m {
            if occ[p] == 0 {
                continue;
            }
            let np = occ[p] as f64;
            gamma[(p, p)] += pj.norm_sqr() * np;
            scratch.clear();
            scratch.extend_from_slice(occ);
            for q in 0..m {
                if q == p {
                    continue;
                }
                // a†_q a_p |j⟩ = sqrt(n_p (n_q + 1)) |i⟩
                scratch[p] -= 1;
                scratch[q] += 1;
                let i = basis.rank(&scratch);
                let amp = (np * (occ[q] as f64 + 1.0)).sqrt();
                gamma[(p, q)] += amps[i].conj() * pj * amp;
                scratch[p] += 1;
                scratch[q] -= 1;
            }
        }
    }
    gamma / Complex64::new(basis.particles() as f64, 0.0)
}

/// `⟨φ, γ φ⟩` with `φ` given in the field convention.
pub fn condensate_fraction(gamma: &CMatrix, phi: &crate::grid::ComplexField) -> f64 {
    let s = phi.grid().cell_volume().sqrt();
    let u: Vec<Complex64> = phi.values().iter().map(|z| z * s).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..u.len() {
        for q in 0..u.len() {
            acc += u[p].conj() * gamma[(p, q)] * u[q];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{ComplexField, GridSpec};
    use crate::ldp::iid_lmgf;
    use crate::linalg::{hermitian_eigenvalues, hermiticity_defect};
    use crate::observable::expectation;
    use crate::oracle::basis::{build_basis, product_state};
    use rand::{Rng, SeedableRng};

    fn random_orbital(g: &GridSpec, seed: u64) -> ComplexField {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut f = ComplexField::from_fn(*g, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        f.normalize().unwrap();
        f
    }

    fn random_observable(g: &GridSpec, seed: u64) -> Observable {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let m = g.len();
        let a = CMatrix::from_fn(m, m, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        Observable::from_matrix(*g, (&a + a.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
    }

    #[test]
    fn product_state_expectation() {
        let g = GridSpec::line(4, 3.0).unwrap();
        let basis = Arc::new(build_basis(4, 3).unwrap());
        for seed in 0..3 {
            let phi = random_orbital(&g, seed);
            let o = random_observable(&g, 100 + seed);
            let psi = product_state(&phi, &basis).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-10);
            let dg = second_quantize(&basis, &o).unwrap();
            let v = crate::linalg::mat_vec(&dg, psi.amplitudes());
            let lhs: Complex64 = psi.amplitudes().iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            let rhs = 3.0 * expectation(&o, &phi).unwrap();
            assert!((lhs.re - rhs).abs() < 1e-9, "{} vs {rhs}", lhs.re);
        }
    }

    #[test]
    fn identity_law() {
        let g = GridSpec::line(4, 3.0).unwrap();
        let basis = Arc::new(build_basis(4, 3).unwrap());
        let psi = product_state(&random_orbital(&g, 7), &basis).unwrap();
        let mu = observable_statistics(&psi, &Observable::identity(g), 0.25).unwrap();
        for &(o, _) in mu.atoms() {
            assert!((o - 0.75).abs() < 1e-12);
        }
        assert!((mu.total_weight() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn product_law_is_convolution() {
        let g = GridSpec::line(4, 3.0).unwrap();
        let n = 3;
        let basis = Arc::new(build_basis(4, n).unwrap());
        let phi = random_orbital(&g, 11);
        let o = Observable::cosine(g, 1.0, 1).unwrap();
        let psi = product_state(&phi, &basis).unwrap();
        let mu = observable_statistics(&psi, &o, 0.0).unwrap();
        // one-particle law, convolved three times, rescaled by 1/N
        let one = o.spectral_weights(&phi);
        let mut conv = vec![(0.0, 1.0)];
        for _ in 0..n {
            conv = conv
                .iter()
                .flat_map(|&(a, wa)| one.iter().map(move |&(b, wb)| (a + b, wa * wb)))
                .collect();
        }
        for x in [-0.9, -0.5, -0.1, 0.05, 0.2, 0.45, 0.8] {
            let p_exact = tail_probability(&mu, x);
            let p_conv: f64 = conv.iter().filter(|a| a.0 / n as f64 > x).map(|a| a.1).sum();
            assert!((p_exact - p_conv).abs() < 1e-10, "x={x}: {p_exact} vs {p_conv}");
        }
        for lambda in [0.3, 1.0, 2.5] {
            let m_exact: f64 = mu.atoms().iter().map(|(o, w)| w * (lambda * o).exp()).sum();
            let m_conv: f64 = conv.iter().map(|(o, w)| w * (lambda * o / n as f64).exp()).sum();
            assert!((m_exact - m_conv).abs() < 1e-10);
        }
    }

    #[test]
    fn lmgf_and_tail_edges() {
        let mu = SpectralMeasure::new(vec![(-0.5, 0.25), (0.1, 0.5), (0.7, 0.25)]).unwrap();
        assert_eq!(empirical_lmgf(&mu, 4, 0.0), 0.0);
        assert_eq!(tail_probability(&mu, -1.0), 1.0);
        assert_eq!(tail_probability(&mu, 1.0), 0.0);
        for lambda in [0.1, 0.5, 2.0] {
            for x in [-0.4, 0.0, 0.3, 0.6] {
                let p = tail_probability(&mu, x);
                let lhs = p.ln() / 4.0;
                assert!(lhs <= empirical_lmgf(&mu, 4, lambda) - lambda * x + 1e-12);
            }
        }
    }

    #[test]
    fn free_product_lmgf_factorizes() {
        let g = GridSpec::line(6, 4.0).unwrap();
        let phi = random_orbital(&g, 5);
        let o = Observable::cosine(g, 1.0, 1).unwrap();
        let mean = expectation(&o, &phi).unwrap();
        for n in 2..=4 {
            let basis = Arc::new(build_basis(6, n).unwrap());
            let psi = product_state(&phi, &basis).unwrap();
            let mu = observable_statistics(&psi, &o, mean).unwrap();
            for lambda in [0.1, 0.7, 1.5] {
                let a = empirical_lmgf(&mu, n, lambda);
                let b = iid_lmgf(&phi, &o, lambda).unwrap();
                assert!((a - b).abs() < 1e-8, "N={n} λ={lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn moments_match_measure() {
        let g = GridSpec::line(4, 3.0).unwrap();
        let basis = Arc::new(build_basis(4, 3).unwrap());
        let psi = product_state(&random_orbital(&g, 2), &basis).unwrap();
        let o = random_observable(&g, 9);
        let mu = observable_statistics(&psi, &o, 0.1).unwrap();
        let moments = observable_moments(&psi, &o, 0.1, 4).unwrap();
        for (k, m) in moments.iter().enumerate() {
            let from_measure: f64 = mu.atoms().iter().map(|(x, w)| w * x.powi(k as i32 + 1)).sum();
            assert!((m - from_measure).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_densities() {
        let g = GridSpec::line(4, 3.0).unwrap();
        let basis = Arc::new(build_basis(4, 3).unwrap());
        let phi = random_orbital(&g, 4);
        let psi = product_state(&phi, &basis).unwrap();
        let gamma = reduced_density(&psi);
        let s = g.cell_volume().sqrt();
        for p in 0..4 {
            for q in 0..4 {
                let expected = phi.values()[p] * s * (phi.values()[q] * s).conj();
                assert!((gamma[(p, q)] - expected).norm() < 1e-12);
            }
        }
        assert!((condensate_fraction(&gamma, &phi) - 1.0).abs() < 1e-12);

        let occ = ManyBodyState::basis_state(basis.clone(), &[1, 0, 2, 0]).unwrap();
        let gamma = reduced_density(&occ);
        let expected = [1.0 / 3.0, 0.0, 2.0 / 3.0, 0.0];
        for p in 0..4 {
            for q in 0..4 {
                let e = if p == q { expected[p] } else { 0.0 };
                assert!((gamma[(p, q)] - e).norm() < 1e-15);
            }
        }

        let mixed = ManyBodyState::new(
            basis.clone(),
            (0..basis.dim()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect(),
        )
        .unwrap();
        let norm = mixed.norm();
        let mixed = ManyBodyState::new(basis, mixed.amplitudes().iter().map(|z| z / norm).collect()).unwrap();
        let gamma = reduced_density(&mixed);
        assert!(hermiticity_defect(&gamma) < 1e-12);
        assert!((gamma.trace().re - 1.0).abs() < 1e-10);
        assert!(hermitian_eigenvalues(gamma).iter().all(|&e| e > -1e-10));
    }

    #[test]
    fn size_cap_suggests_moments() {
        let basis = Arc::new(build_basis(8, 8).unwrap());
        assert!(basis.dim() > STATISTICS_CAP);
        let g = GridSpec::line(8, 1.0).unwrap();
        let psi = ManyBodyState::basis_state(basis.clone(), &[8, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        match observable_statistics(&psi, &Observable::identity(g), 0.0) {
            Err(Error::Size { hint, .. }) => assert!(hint.contains("moments")),
            other => panic!("expected size error, got {other:?}"),
        }
        let m = observable_moments(&psi, &Observable::identity(g), 0.0, 2).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-12 && (m[1] - 1.0).abs() < 1e-12);
    }
}
