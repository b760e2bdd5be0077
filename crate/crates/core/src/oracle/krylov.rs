use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::basis::ManyBodyState;
use super::hamiltonian::SecondQuantizedHamiltonian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrylovOptions {
    pub subspace: usize,
    /// A posteriori error bound accepted per step.
    pub tolerance: f64,
    /// How many times a step may be halved before giving up.
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            subspace: 20,
            tolerance: 1e-10,
            max_halvings: 12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KrylovReport {
    pub steps: usize,
    /// Steps that had to be split because the error estimate was too large.
    pub refined_steps: usize,
    pub max_error_estimate: f64,
    pub norm_drift: f64,
    pub energy_drift: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// One Lanczos approximation of `e^{−iHδ}ψ`; returns the result and the
/// error estimate `β_m |[e^{−iTδ}]_{m,1}|`.
fn lanczos_step(
    h: &SecondQuantizedHamiltonian,
    psi: &[Complex64],
    delta: f64,
    m: usize,
) -> (Vec<Complex64>, f64) {
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return (psi.to_vec(), 0.0);
    }
    let mut vs: Vec<Vec<Complex64>> = vec![psi.iter().map(|z| z / beta0).collect()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut tail = 0.0;
    for j in 0..m {
        let mut w = h.apply(&vs[j]);
        let a = dot(&vs[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, twice for safety
        for _ in 0..2 {
            for v in &vs {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = norm(&w);
        let scale = a.abs().max(beta.last().copied().unwrap_or(0.0)).max(1.0);
        if b <= 1e-13 * scale {
            // invariant subspace, the projection is exact
            tail = 0.0;
            break;
        }
        if j + 1 == m {
            tail = b;
            break;
        }
        beta.push(b);
        vs.push(w.into_iter().map(|z| z / b).collect());
    }
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    // y = Q e^{−iΛδ} Qᵀ e₁
    let y: Vec<Complex64> = (0..k)
        .map(|r| {
            (0..k)
                .map(|c| {
                    let phase = Complex64::from_polar(1.0, -eig.eigenvalues[c] * delta);
                    eig.eigenvectors[(r, c)] * eig.eigenvectors[(0, c)] * phase
                })
                .sum()
        })
        .collect();
    let estimate = tail * y[k - 1].norm() * beta0;
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (v, &c) in vs.iter().zip(&y) {
        let c = c * beta0;
        for (o, vi) in out.iter_mut().zip(v) {
            *o += c * vi;
        }
    }
    (out, estimate)
}

fn advance(
    h: &SecondQuantizedHamiltonian,
    psi: Vec<Complex64>,
    delta: f64,
    opts: &KrylovOptions,
    depth: u32,
    report: &mut KrylovReport,
) -> Result<Vec<Complex64>> {
    let (next, err) = lanczos_step(h, &psi, delta, opts.subspace);
    if err <= opts.tolerance {
        report.max_error_estimate = report.max_error_estimate.max(err);
        return Ok(next);
    }
    if depth >= opts.max_halvings {
        return Err(Error::Propagation {
            step: report.steps,
            reason: format!("Krylov error estimate {err:.3e} above tolerance after {depth} halvings"),
        });
    }
    if depth == 0 {
        report.refined_steps += 1;
    }
    let half = advance(h, psi, delta / 2.0, opts, depth + 1, report)?;
    advance(h, half, delta / 2.0, opts, depth + 1, report)
}

/// `e^{−iHT}ψ` by Lanczos steps of size `τ`. `T` may be negative.
pub fn evolve_exact(
    psi: &ManyBodyState,
    h: &SecondQuantizedHamiltonian,
    t: f64,
    tau: f64,
) -> Result<ManyBodyState> {
    Ok(evolve_exact_with(psi, h, t, tau, &KrylovOptions::default())?.0)
}

pub fn evolve_exact_with(
    psi: &ManyBodyState,
    h: &SecondQuantizedHamiltonian,
    t: f64,
    tau: f64,
    opts: &KrylovOptions,
) -> Result<(ManyBodyState, KrylovReport)> {
    if !(tau > 0.0) || !tau.is_finite() || !t.is_finite() {
        return Err(Error::Parameter(format!("need τ > 0 and finite T, got τ = {tau}, T = {t}")));
    }
    if opts.subspace < 2 {
        return Err(Error::Parameter("Krylov subspace must have at least two vectors".into()));
    }
    if psi.basis().dim() != h.dim() || psi.basis().particles() != h.basis().particles() {
        return Err(Error::Dimension("state and Hamiltonian live on different sectors".into()));
    }
    let steps = ((t.abs() / tau).round() as usize).max(usize::from(t != 0.0));
    let delta = if steps == 0 { 0.0 } else { t / steps as f64 };
    let n0 = psi.norm();
    let e0 = h.energy(psi.amplitudes());
    let mut report = KrylovReport::default();
    let mut cur = psi.amplitudes().to_vec();
    for k in 0..steps {
        report.steps = k;
        cur = advance(h, cur, delta, opts, 0, &mut report)?;
    }
    report.steps = steps;
    report.norm_drift = (norm(&cur) - n0).abs();
    report.energy_drift = (h.energy(&cur) - e0).abs() / e0.abs().max(1.0);
    Ok((ManyBodyState::new(psi.basis().clone(), cur)?, report))
}
