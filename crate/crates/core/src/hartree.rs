//! Condensate dynamics `i∂_t φ = (−Δ + v∗|φ|²) φ` by Strang splitting.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, inner_unchecked, neg_laplacian_apply, sobolev_norm_unchecked, ComplexField, GridSpec};
use crate::linalg::linear_fit;
use crate::potential::Potential;

const NORM_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-6;
const MEAN_FIELD_GROWTH_LIMIT: f64 = 10.0;

/// `⟨φ, −Δφ⟩ + ½⟨φ, (v∗|φ|²) φ⟩`.
pub fn hartree_energy(phi: &ComplexField, v: &Potential) -> Result<f64> {
    let n = phi.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Parameter(format!("energy needs a normalized field, ‖φ‖ = {n}")));
    }
    Ok(energy_unchecked(phi, v))
}

fn energy_unchecked(phi: &ComplexField, v: &Potential) -> f64 {
    let kinetic = inner_unchecked(phi, &neg_laplacian_apply(phi));
    let density = phi.density();
    let field = v.mean_field(&density);
    let interaction: f64 = field.iter().zip(&density).map(|(a, b)| a * b).sum::<f64>() * phi.grid().cell_volume();
    kinetic.re + 0.5 * interaction
}

/// Reusable Strang integrator for a fixed potential and step.
#[derive(Debug, Clone)]
pub struct HartreeStepper<'a> {
    potential: &'a Potential,
    tau: f64,
    half_kinetic: Vec<Complex64>,
}

impl<'a> HartreeStepper<'a> {
    /// `tau` may be negative (backward in time) but not zero.
    pub fn new(potential: &'a Potential, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau != 0.0) {
            return Err(Error::Parameter(format!("time step must be non-zero, got {tau}")));
        }
        let half_kinetic = potential
            .grid()
            .k_squared()
            .into_iter()
            .map(|k2| Complex64::from_polar(1.0, -0.5 * tau * k2))
            .collect();
        Ok(Self {
            potential,
            tau,
            half_kinetic,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Half kinetic, full mean-field phase from the mid-step density, half kinetic.
    pub fn step(&self, phi: &ComplexField) -> ComplexField {
        let grid = *phi.grid();
        let mut buf = phi.values().to_vec();
        self.kinetic_half(&grid, &mut buf);
        if !self.potential.is_zero() {
            let density: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
            let field = self.potential.mean_field(&density);
            for (z, w) in buf.iter_mut().zip(field) {
                *z *= Complex64::from_polar(1.0, -self.tau * w);
            }
        }
        self.kinetic_half(&grid, &mut buf);
        ComplexField::from_raw(grid, buf)
    }

    fn kinetic_half(&self, grid: &GridSpec, buf: &mut [Complex64]) {
        fft_forward(grid, buf);
        for (z, p) in buf.iter_mut().zip(&self.half_kinetic) {
            *z *= p;
        }
        fft_inverse(grid, buf);
    }
}

/// One Strang step of size `tau` (negative values step backward).
pub fn hartree_step(phi: &ComplexField, v: &Potential, tau: f64) -> Result<ComplexField> {
    if phi.grid() != v.grid() {
        return Err(Error::Dimension("field and potential grids differ".into()));
    }
    Ok(HartreeStepper::new(v, tau)?.step(phi))
}

#[derive(Debug, Clone, Serialize)]
pub struct HartreeDiagnostics {
    pub max_norm_defect: f64,
    pub max_energy_drift: f64,
    /// `sup |v∗|φ_t|²|` at every stored time.
    pub mean_field_sup: Vec<f64>,
    /// `‖φ_t‖_{H²}` at every stored time.
    pub h2_norms: Vec<f64>,
}

/// Condensate snapshots at every solver time `t_k = k·τ`.
#[derive(Debug, Clone)]
pub struct HartreeTrajectory {
    grid: GridSpec,
    potential: Potential,
    tau: f64,
    snapshots: Vec<ComplexField>,
    initial_energy: f64,
    diagnostics: HartreeDiagnostics,
}

impl HartreeTrajectory {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    pub fn snapshot(&self, k: usize) -> &ComplexField {
        &self.snapshots[k]
    }

    pub fn snapshots(&self) -> &[ComplexField] {
        &self.snapshots
    }

    pub fn final_state(&self) -> &ComplexField {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn diagnostics(&self) -> &HartreeDiagnostics {
        &self.diagnostics
    }

    /// Index of a stored time, accepting rounding at the `1e−9·τ` level.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.tau).round();
        if k < 0.0 || (k * self.tau - t).abs() > 1e-9 * self.tau.max(t.abs()) || k as usize >= self.len() {
            return Err(Error::Parameter(format!(
                "time {t} is not a stored trajectory time (τ = {}, T = {})",
                self.tau,
                self.final_time()
            )));
        }
        Ok(k as usize)
    }

    /// `Ĉ` of a least-squares fit `log ‖φ_t‖_{H²} ≈ log a + Ĉ t`. Reported, not asserted.
    pub fn h2_growth_rate(&self) -> f64 {
        let t: Vec<f64> = (0..self.len()).map(|k| self.time(k)).collect();
        let y: Vec<f64> = self.diagnostics.h2_norms.iter().map(|v| v.ln()).collect();
        linear_fit(&t, &y).map(|(s, _)| s).unwrap_or(0.0)
    }
}

/// Number of steps `T/τ`, requiring `τ` to divide `T`.
pub(crate) fn step_count(t: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("time step must be positive, got {tau}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Parameter(format!("final time must be non-negative, got {t}")));
    }
    let n = (t / tau).round();
    if (n * tau - t).abs() > 1e-9 * t.max(tau) {
        return Err(Error::Parameter(format!("τ = {tau} does not divide T = {t}")));
    }
    Ok(n as usize)
}

/// Integrates the Hartree equation on `[0, T]`, storing every step and
/// checking norm, energy and mean-field bounds as it goes.
pub fn evolve_hartree(phi0: &ComplexField, v: &Potential, t: f64, tau: f64) -> Result<HartreeTrajectory> {
    if phi0.grid() != v.grid() {
        return Err(Error::Dimension("initial field and potential grids differ".into()));
    }
    let norm0 = phi0.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("initial field must be normalized, ‖φ₀‖ = {norm0}")));
    }
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("final time must be positive, got {t}")));
    }
    let steps = step_count(t, tau)?;
    let stepper = HartreeStepper::new(v, tau)?;
    let grid = *phi0.grid();
    let e0 = energy_unchecked(phi0, v);
    let e_scale = e0.abs().max(1.0);
    let sup = |phi: &ComplexField| v.mean_field(&phi.density()).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sup0 = sup(phi0);

    let mut snapshots = Vec::with_capacity(steps + 1);
    let mut diagnostics = HartreeDiagnostics {
        max_norm_defect: 0.0,
        max_energy_drift: 0.0,
        mean_field_sup: vec![sup0],
        h2_norms: vec![sobolev_norm_unchecked(phi0, 2)],
    };
    snapshots.push(phi0.clone());
    for step in 1..=steps {
        let next = stepper.step(snapshots.last().expect("non-empty"));
        let norm_defect = (next.norm() - 1.0).abs();
        if norm_defect > NORM_TOL {
            return Err(Error::Propagation {
                step,
                reason: format!("norm defect {norm_defect:.3e}"),
            });
        }
        let drift = (energy_unchecked(&next, v) - e0).abs();
        if drift > ENERGY_TOL * e_scale {
            return Err(Error::Propagation {
                step,
                reason: format!("energy drift {drift:.3e} exceeds {:.1e}; reduce τ", ENERGY_TOL * e_scale),
            });
        }
        let s = sup(&next);
        if sup0 > 0.0 && s > MEAN_FIELD_GROWTH_LIMIT * sup0 {
            return Err(Error::Propagation {
                step,
                reason: format!("mean field sup {s:.3e} exceeds ten times its initial value {sup0:.3e}"),
            });
        }
        diagnostics.max_norm_defect = diagnostics.max_norm_defect.max(norm_defect);
        diagnostics.max_energy_drift = diagnostics.max_energy_drift.max(drift);
        diagnostics.mean_field_sup.push(s);
        diagnostics.h2_norms.push(sobolev_norm_unchecked(&next, 2));
        snapshots.push(next);
    }
    Ok(HartreeTrajectory {
        grid,
        potential: v.clone(),
        tau,
        snapshots,
        initial_energy: e0,
        diagnostics,
    })
}

/// Final state only, without the per-step checks.
pub(crate) fn propagate(phi0: &ComplexField, v: &Potential, t: f64, tau: f64) -> Result<ComplexField> {
    let steps = step_count(t, tau)?;
    let stepper = HartreeStepper::new(v, tau)?;
    let mut phi = phi0.clone();
    for _ in 0..steps {
        phi = stepper.step(&phi);
    }
    Ok(phi)
}

/// Observed convergence order from runs at `τ`, `τ/2`, `τ/4`:
/// `log₂(‖φ^τ − φ^{τ/2}‖ / ‖φ^{τ/2} − φ^{τ/4}‖)`.
pub fn richardson_order(phi0: &ComplexField, v: &Potential, t: f64, tau: f64) -> Result<f64> {
    let a = propagate(phi0, v, t, tau)?;
    let b = propagate(phi0, v, t, tau / 2.0)?;
    let c = propagate(phi0, v, t, tau / 4.0)?;
    Ok((a.distance(&b) / b.distance(&c)).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialKind;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn energy_of_plane_wave_and_constant_potential() {
        let l = 5.0;
        let g = GridSpec::line(32, l).unwrap();
        let w = ComplexField::plane_wave(g, [2, 0]);
        let e = hartree_energy(&w, &Potential::zero(g)).unwrap();
        assert!((e - (4.0 * PI / l).powi(2)).abs() < 1e-11);

        let phi = ComplexField::gaussian(g, [2.5, 0.0], 0.6).unwrap();
        let cst = Potential::new(PotentialKind::Constant { value: 0.8 }, g).unwrap();
        let kinetic = hartree_energy(&phi, &Potential::zero(g)).unwrap();
        assert!((hartree_energy(&phi, &cst).unwrap() - (kinetic + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn energy_matches_double_sum() {
        let g = GridSpec::line(64, 10.0).unwrap();
        let phi = ComplexField::gaussian(g, [5.0, 0.0], 0.9).unwrap();
        let v = Potential::new(PotentialKind::Gaussian { amplitude: 0.7, width: 1.2 }, g).unwrap();
        let h = g.spacing();
        let rho = phi.density();
        let mut inter = 0.0;
        for i in 0..g.len() {
            for j in 0..g.len() {
                inter += v.pair(i, j) * rho[i] * rho[j];
            }
        }
        inter *= 0.5 * h * h;
        let kinetic = hartree_energy(&phi, &Potential::zero(g)).unwrap();
        assert!((hartree_energy(&phi, &v).unwrap() - kinetic - inter).abs() < 1e-9);
    }

    #[test]
    fn free_step_phases_plane_wave() {
        let l = 4.0;
        let g = GridSpec::line(16, l).unwrap();
        let w = ComplexField::plane_wave(g, [3, 0]);
        let tau = 0.01;
        let out = hartree_step(&w, &Potential::zero(g), tau).unwrap();
        let e = (6.0 * PI / l).powi(2);
        assert!(out.distance(&w.scaled(Complex64::from_polar(1.0, -tau * e))) < 1e-13);
    }

    #[test]
    fn step_preserves_norm_and_reverses() {
        let g = GridSpec::line(64, 12.0).unwrap();
        let phi = ComplexField::gaussian(g, [6.0, 0.0], 1.0).unwrap();
        let v = Potential::new(PotentialKind::Gaussian { amplitude: 1.0, width: 0.8 }, g).unwrap();
        let a = hartree_step(&phi, &v, 0.01).unwrap();
        assert!((a.norm() - phi.norm()).abs() < 1e-13);
        let back = hartree_step(&a, &v, -0.01).unwrap();
        assert!(back.distance(&phi) < 1e-13);
    }

    #[test]
    fn step_is_first_order_close_to_identity() {
        let g = GridSpec::line(64, 12.0).unwrap();
        let phi = ComplexField::gaussian(g, [6.0, 0.0], 1.0).unwrap();
        let v = Potential::new(PotentialKind::Gaussian { amplitude: 0.5, width: 1.0 }, g).unwrap();
        let d: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&tau| hartree_step(&phi, &v, tau).unwrap().distance(&phi) / tau)
            .collect();
        // ‖step − id‖/τ stays bounded and approaches ‖h_H φ‖
        assert!(d.windows(2).all(|w| (w[0] - w[1]).abs() < 0.05 * w[1]), "{d:?}");
    }

    #[test]
    fn constant_potential_adds_global_phase() {
        let g = GridSpec::line(64, 16.0).unwrap();
        let phi = ComplexField::gaussian(g, [8.0, 0.0], 1.0).unwrap();
        let cval = 0.6;
        let free = evolve_hartree(&phi, &Potential::zero(g), 0.5, 0.01).unwrap();
        let cst = Potential::new(PotentialKind::Constant { value: cval }, g).unwrap();
        let traj = evolve_hartree(&phi, &cst, 0.5, 0.01).unwrap();
        let expected = free.final_state().scaled(Complex64::from_polar(1.0, -cval * 0.5));
        assert!(traj.final_state().distance(&expected) < 1e-12);
    }

    #[test]
    fn trajectory_shape_and_errors() {
        let g = GridSpec::line(32, 10.0).unwrap();
        let phi = ComplexField::gaussian(g, [5.0, 0.0], 1.0).unwrap();
        let v = Potential::zero(g);
        let traj = evolve_hartree(&phi, &v, 0.1, 0.01).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.index_of(0.05).unwrap(), 5);
        assert!(traj.index_of(0.055).is_err());
        assert!(evolve_hartree(&phi, &v, 0.1, 0.03).is_err());
        assert!(evolve_hartree(&phi.scaled(c(1.1, 0.0)), &v, 0.1, 0.01).is_err());
    }
}
