use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuation::{build_kernels, solve_backward, solve_backward_with, SolverOptions};
use crate::grid::{inner_product, neg_laplacian_apply, ComplexField, GridSpec};
use crate::hartree::evolve_hartree;
use crate::ldp::{legendre_fenchel, tilted_measure, MgfCurve, Provenance, SpectralMeasure};
use crate::linalg::polynomial_intercept;
use crate::observable::{expectation, variance, Observable};
use crate::oracle::{
    build_hamiltonian, empirical_lmgf, evolve_exact, observable_statistics, product_state, tail_probability,
};
use crate::potential::{Potential, PotentialKind};

/// Deliberate faults for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    /// Perturbs one off-diagonal entry of `K2` so that `K2 ≠ K2ᵀ`.
    K2Symmetry,
}

#[derive(Debug, Clone, Default)]
pub struct SelfTestOptions {
    pub corrupt: Option<Corruption>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn ensure(name: &str, ok: bool, detail: String) -> Result<String> {
    if ok {
        Ok(detail)
    } else {
        Err(Error::invariant(name, detail))
    }
}

fn line(m: usize, l: f64) -> GridSpec {
    GridSpec::line(m, l).expect("valid self-test grid")
}

fn gaussian_v(g: GridSpec, alpha: f64) -> Result<Potential> {
    Potential::new(PotentialKind::Gaussian { amplitude: alpha, width: 1.0 }, g)
}

fn check_fft(seed: u64) -> Result<String> {
    let g = line(64, 10.0);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let f = ComplexField::from_fn(g, |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let coeffs = f.fourier_coefficients();
    let parseval: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.cell_volume() / g.len() as f64;
    let back = ComplexField::from_fourier(g, coeffs)?;
    let err = back.distance(&f);
    let p_err = (parseval - f.norm_sqr()).abs();
    ensure("fft-roundtrip", err <= 1e-12 && p_err <= 1e-12, format!("round trip {err:.2e}, Parseval {p_err:.2e}"))
}

fn check_laplacian(seed: u64) -> Result<String> {
    let g = line(64, 10.0);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut random = || ComplexField::from_fn(g, |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let (a, b) = (random(), random());
    let lhs = inner_product(&a, &neg_laplacian_apply(&b))?;
    let rhs = inner_product(&neg_laplacian_apply(&a), &b)?;
    let d = (lhs - rhs).norm() / lhs.norm().max(1.0);
    ensure("laplacian-hermitian", d <= 1e-10, format!("relative defect {d:.2e}"))
}

fn check_hartree() -> Result<String> {
    let g = line(64, 12.0);
    let phi = ComplexField::gaussian(g, [6.0, 0.0], 1.0)?;
    let v = gaussian_v(g, 1.0)?;
    let traj = evolve_hartree(&phi, &v, 0.2, 1e-3)?;
    let d = traj.diagnostics();
    let rel = d.max_energy_drift / traj.initial_energy().abs().max(1.0);
    ensure(
        "hartree-conservation",
        d.max_norm_defect <= 1e-9 && rel <= 1e-6,
        format!("norm defect {:.2e}, relative energy drift {rel:.2e}", d.max_norm_defect),
    )
}

fn check_kernels(corrupt: Option<Corruption>) -> Vec<(&'static str, Result<String>)> {
    let build = || -> Result<_> {
        let g = line(32, 10.0);
        let phi = ComplexField::gaussian(g, [5.0, 0.0], 1.0)?;
        let traj = evolve_hartree(&phi, &gaussian_v(g, 1.0)?, 0.1, 1e-3)?;
        let mut k = build_kernels(traj.final_state(), traj.potential(), 0.1)?;
        if corrupt == Some(Corruption::K2Symmetry) {
            k.k2[(0, 1)] += Complex64::new(1e-3, 0.0);
        }
        Ok(k)
    };
    match build() {
        Ok(k) => {
            let h = k.k1_hermiticity_defect();
            let s = k.k2_symmetry_defect();
            vec![
                ("k1-hermiticity", ensure("k1-hermiticity", h <= 1e-12, format!("‖K1 − K1†‖ = {h:.2e}"))),
                ("k2-symmetry", ensure("k2-symmetry", s <= 1e-12, format!("‖K2 − K2ᵀ‖ = {s:.2e}"))),
            ]
        }
        Err(e) => vec![("k1-hermiticity", Err(e))],
    }
}

fn check_variance_identity() -> Result<String> {
    let g = line(64, 12.0);
    let phi = ComplexField::gaussian(g, [5.0, 0.0], 0.9)?;
    let traj = evolve_hartree(&phi, &gaussian_v(g, 1.0)?, 1e-3, 1e-3)?;
    let mut worst = 0.0_f64;
    for o in [
        Observable::cosine(g, 1.0, 1)?,
        Observable::cosine(g, 0.5, 2)?,
        Observable::fourier_multiplier(g, |k2| 1.0 / (1.0 + k2)),
    ] {
        let sol = solve_backward(&traj, &o, 0.0)?;
        worst = worst.max((sol.variance - variance(&o, &phi)?).abs());
    }
    ensure("variance-identity", worst <= 1e-10, format!("max |σ₀² − Var| = {worst:.2e}"))
}

fn check_orthogonality() -> Result<String> {
    let g = line(64, 12.0);
    let phi = ComplexField::gaussian(g, [6.0, 0.0], 1.0)?;
    let traj = evolve_hartree(&phi, &gaussian_v(g, 1.0)?, 0.3, 1e-3)?;
    let sol = solve_backward(&traj, &Observable::cosine(g, 1.0, 1)?, 0.3)?;
    let d = sol.diagnostics.max_orthogonality_defect;
    ensure("fluctuation-orthogonality", d <= 1e-7, format!("max |⟨φ_s, f_s⟩| = {d:.2e}"))
}

fn check_free_norm() -> Result<String> {
    let g = line(64, 12.0);
    let phi = ComplexField::gaussian(g, [6.0, 0.0], 1.0)?;
    let traj = evolve_hartree(&phi, &Potential::zero(g), 0.3, 1e-3)?;
    let sol = solve_backward_with(&traj, &Observable::cosine(g, 1.0, 1)?, 0.3, SolverOptions::default())?;
    let n0 = sol.diagnostics.norms[0];
    let spread = sol.diagnostics.norms.iter().fold(0.0_f64, |m, n| m.max((n - n0).abs()));
    ensure("free-norm", spread <= 1e-9, format!("max ‖f_s‖ spread {spread:.2e}"))
}

fn check_free_oracle() -> Result<String> {
    let g = line(6, 2.0 * PI);
    let v = Potential::zero(g);
    let phi = ComplexField::gaussian(g, [PI, 0.0], 1.0)?;
    let o = Observable::cosine(g, 1.0, 1)?;
    let t = 0.5;
    let free = evolve_hartree(&phi, &v, t, 1e-3)?;
    let phi_t = free.final_state();
    let mean = expectation(&o, phi_t)?;
    let iid = crate::ldp::iid_measure(phi_t, &o)?;
    let h = build_hamiltonian(&g, &v, 3)?;
    let psi = evolve_exact(&product_state(&phi, h.basis())?, &h, t, 0.05)?;
    let dist = psi.distance(&product_state(phi_t, h.basis())?);
    let mu = observable_statistics(&psi, &o, mean)?;
    let gap = [0.1, 0.5, 1.0]
        .iter()
        .map(|&l| (empirical_lmgf(&mu, 3, l) - iid.log_mgf(l)).abs())
        .fold(0.0, f64::max);
    ensure(
        "free-factorization",
        dist <= 1e-8 && gap <= 1e-8,
        format!("product-state distance {dist:.2e}, |Λ_N − Λ_iid| {gap:.2e}"),
    )
}

fn check_krylov_reversal() -> Result<String> {
    let g = line(6, 2.0 * PI);
    let h = build_hamiltonian(&g, &gaussian_v(g, 0.25)?, 3)?;
    let psi = product_state(&ComplexField::gaussian(g, [PI, 0.0], 1.0)?, h.basis())?;
    let fwd = evolve_exact(&psi, &h, 0.5, 0.05)?;
    let back = evolve_exact(&fwd, &h, -0.5, 0.05)?;
    let err = back.distance(&psi);
    ensure("krylov-reversal", err <= 1e-7, format!("‖ψ − e^{{iHT}}e^{{−iHT}}ψ‖ = {err:.2e}"))
}

/// Weak-coupling CLT at reduced size, then the Chebyshev audit on the same laws.
fn check_clt_and_chebyshev() -> Vec<(&'static str, Result<String>)> {
    let run = || -> Result<(f64, f64, usize)> {
        let g = line(6, 2.0 * PI);
        let v = gaussian_v(g, 0.25)?;
        let phi = ComplexField::gaussian(g, [PI, 0.0], 1.0)?;
        let o = Observable::cosine(g, 1.0, 1)?;
        let t = 0.5;
        let traj = evolve_hartree(&phi, &v, t, 1e-3)?;
        let sigma2 = solve_backward_with(&traj, &o, t, SolverOptions { stride: 2, ..Default::default() })?.variance;
        let mean = expectation(&o, traj.final_state())?;
        let ns = [2usize, 3, 4];
        let mut n_var = Vec::new();
        let mut violations = 0;
        for &n in &ns {
            let h = build_hamiltonian(&g, &v, n)?;
            let psi = evolve_exact(&product_state(&phi, h.basis())?, &h, t, 0.05)?;
            let mu = observable_statistics(&psi, &o, mean)?;
            n_var.push(n as f64 * mu.variance());
            for x in [0.05, 0.1, 0.2, 0.3] {
                let lhs = tail_probability(&mu, x).ln() / n as f64;
                for l in [0.1, 0.3, 1.0, 3.0] {
                    if lhs > empirical_lmgf(&mu, n, l) - l * x + 1e-12 {
                        violations += 1;
                    }
                }
            }
        }
        let inv: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        let clt = polynomial_intercept(&inv, &n_var, 2)?;
        Ok(((clt - sigma2).abs() / sigma2, sigma2, violations))
    };
    match run() {
        Ok((rel, sigma2, violations)) => vec![
            ("clt", ensure("clt", rel <= 0.05, format!("σ² = {sigma2:.6}, relative gap {rel:.2e}"))),
            ("chebyshev", ensure("chebyshev", violations == 0, format!("{violations} violations"))),
        ],
        Err(e) => vec![("clt", Err(e))],
    }
}

fn check_conjugates() -> Result<String> {
    let lambdas: Vec<f64> = (0..=400).map(|k| 4.0 * k as f64 / 400.0).collect();
    let s2 = 0.6;
    let gauss = MgfCurve::from_fn(lambdas.clone(), Provenance::BogoliubovQuadratic, |l| 0.5 * s2 * l * l)?;
    let mut worst = 0.0_f64;
    for x in [0.1, 0.5, 1.5] {
        worst = worst.max((legendre_fenchel(&gauss, x)? - x * x / (2.0 * s2)).abs());
    }
    let p = 0.35;
    let m = 2.0 * p - 1.0;
    let bern = SpectralMeasure::new(vec![(1.0 - m, p), (-1.0 - m, 1.0 - p)])?;
    let curve = MgfCurve::from_fn(lambdas, Provenance::AnalyticIid, |l| bern.log_mgf(l))?;
    for x in [0.1, 0.4, 0.8] {
        let q = (m + x + 1.0) / 2.0;
        let kl = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
        worst = worst.max((legendre_fenchel(&curve, x)? - kl).abs());
    }
    ensure("convex-conjugates", worst <= 1e-8, format!("max error {worst:.2e}"))
}

fn check_tilting() -> Result<String> {
    let mu = SpectralMeasure::new(vec![(-0.7, 0.2), (-0.1, 0.3), (0.25, 0.4), (0.9, 0.1)])?;
    let mut worst_norm = 0.0_f64;
    let mut worst_mean = 0.0_f64;
    for l in [0.0, 0.3, 1.0, 4.0, 20.0] {
        let tilted = tilted_measure(mu.atoms(), l)?;
        worst_norm = worst_norm.max((tilted.iter().map(|a| a.1).sum::<f64>() - 1.0).abs());
        let mean: f64 = tilted.iter().map(|(o, w)| o * w).sum();
        let h = 1e-5;
        let fd = (mu.log_mgf(l + h) - mu.log_mgf(l - h)) / (2.0 * h);
        worst_mean = worst_mean.max((mean - fd).abs());
    }
    ensure(
        "tilted-normalization",
        worst_norm <= 1e-12 && worst_mean <= 1e-8,
        format!("Σw − 1 = {worst_norm:.2e}, mean vs Λ' {worst_mean:.2e}"),
    )
}

/// Runs the reduced-size invariant suite. Every check runs even after a failure.
pub fn self_test(options: &SelfTestOptions) -> SelfTestReport {
    type Check<'a> = Box<dyn FnOnce() -> Vec<(&'static str, Result<String>)> + 'a>;
    let seed = options.seed;
    let corrupt = options.corrupt;
    let single = |name: &'static str, f: fn() -> Result<String>| -> Check { Box::new(move || vec![(name, f())]) };
    let checks: Vec<Check> = vec![
        Box::new(move || vec![("fft-roundtrip", check_fft(seed))]),
        Box::new(move || vec![("laplacian-hermitian", check_laplacian(seed))]),
        single("hartree-conservation", check_hartree),
        Box::new(move || check_kernels(corrupt)),
        single("variance-identity", check_variance_identity),
        single("fluctuation-orthogonality", check_orthogonality),
        single("free-norm", check_free_norm),
        single("free-factorization", check_free_oracle),
        single("krylov-reversal", check_krylov_reversal),
        Box::new(check_clt_and_chebyshev),
        single("convex-conjugates", check_conjugates),
        single("tilted-normalization", check_tilting),
    ];
    let mut out = Vec::new();
    for check in checks {
        let start = Instant::now();
        let results = check();
        let seconds = start.elapsed().as_secs_f64() / results.len() as f64;
        for (name, r) in results {
            let (passed, detail) = match r {
                Ok(d) => (true, d),
                Err(e) => (false, e.to_string()),
            };
            out.push(CheckOutcome {
                name,
                passed,
                detail,
                seconds,
            });
        }
    }
    SelfTestReport { checks: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_k2_is_named() {
        let report = check_kernels(Some(Corruption::K2Symmetry));
        let k2 = report.iter().find(|r| r.0 == "k2-symmetry").unwrap();
        match &k2.1 {
            Err(Error::Invariant { name, .. }) => assert_eq!(name, "k2-symmetry"),
            other => panic!("expected named failure, got {other:?}"),
        }
        assert!(check_kernels(None).iter().all(|r| r.1.is_ok()));
    }
}
