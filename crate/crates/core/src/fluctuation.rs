//! Bogoliubov fluctuation function `f_{s;t}`.
//!
//! `f` solves, backward from `s = t` to `s = 0`,
//!
//! ```text
//! i ∂_s f = (h_H(s) + q_s K₁ q_s − q_s K₂ q_s J) f,    f_{t;t} = q_t O φ_t,
//! ```
//!
//! where `J` is complex conjugation, `q_s = 1 − |φ_s⟩⟨φ_s|` and the kernels are
//! `K₁(x,y) = v(x−y) φ_s(x) conj(φ_s(y))`, `K₂(x,y) = v(x−y) φ_s(x) φ_s(y)`.
//! Because of `J` the generator is only real-linear; RK4 with real stage
//! weights applied to complex samples is the same scheme as RK4 on the pair
//! `(re f, im f)`, which is how it is integrated here.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{inner_unchecked, neg_laplacian_apply, ComplexField};
use crate::hartree::HartreeTrajectory;
use crate::linalg::{hermiticity_defect, mat_vec, symmetry_defect, CMatrix};
use crate::observable::Observable;
use crate::potential::Potential;

/// Orthogonality defect above which the backward solve is abandoned.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// Action of the two integral operators on grid functions.
pub trait KernelAction {
    fn apply_k1(&self, g: &ComplexField) -> ComplexField;
    fn apply_k2(&self, g: &ComplexField) -> ComplexField;
}

/// Dense kernel matrices at one time, quadrature weight `h^d` folded in.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub time: f64,
    pub k1: CMatrix,
    pub k2: CMatrix,
}

impl KernelPair {
    /// Hilbert–Schmidt norms `(‖K₁‖_HS, ‖K₂‖_HS)` of the integral operators.
    pub fn hilbert_schmidt(&self) -> (f64, f64) {
        (self.k1.norm(), self.k2.norm())
    }

    pub fn k1_hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.k1)
    }

    pub fn k2_symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.k2)
    }
}

impl KernelAction for KernelPair {
    fn apply_k1(&self, g: &ComplexField) -> ComplexField {
        ComplexField::from_raw(*g.grid(), mat_vec(&self.k1, g.values()))
    }

    fn apply_k2(&self, g: &ComplexField) -> ComplexField {
        ComplexField::from_raw(*g.grid(), mat_vec(&self.k2, g.values()))
    }
}

/// `K[x,y] = h^d v(x−y) φ(x) conj(φ(y))` and `h^d v(x−y) φ(x) φ(y)`.
pub fn build_kernels(phi: &ComplexField, v: &Potential, s: f64) -> Result<KernelPair> {
    if phi.grid() != v.grid() {
        return Err(Error::Dimension("field and potential grids differ".into()));
    }
    let n = phi.grid().len();
    let h = phi.grid().cell_volume();
    let p = phi.values();
    let k1 = CMatrix::from_fn(n, n, |x, y| p[x] * p[y].conj() * (h * v.pair(x, y)));
    let k2 = CMatrix::from_fn(n, n, |x, y| p[x] * p[y] * (h * v.pair(x, y)));
    Ok(KernelPair { time: s, k1, k2 })
}

/// Matrix-free kernels: `K₁g = φ·(v ∗ (conj φ·g))`, `K₂g = φ·(v ∗ (φ·g))`.
#[derive(Debug, Clone)]
pub struct ConvolutionKernels<'a> {
    phi: &'a ComplexField,
    v: &'a Potential,
}

impl<'a> ConvolutionKernels<'a> {
    pub fn new(phi: &'a ComplexField, v: &'a Potential) -> Self {
        Self { phi, v }
    }
}

impl KernelAction for ConvolutionKernels<'_> {
    fn apply_k1(&self, g: &ComplexField) -> ComplexField {
        let prod = self.phi.conj().mul(g);
        let conv = self.v.convolve_complex(prod.into_values());
        ComplexField::from_raw(*g.grid(), conv).mul(self.phi)
    }

    fn apply_k2(&self, g: &ComplexField) -> ComplexField {
        let prod = self.phi.mul(g);
        let conv = self.v.convolve_complex(prod.into_values());
        ComplexField::from_raw(*g.grid(), conv).mul(self.phi)
    }
}

/// `q_φ g = g − ⟨φ, g⟩ φ` for normalized `φ`.
pub fn project_out(phi: &ComplexField, g: &ComplexField) -> Result<ComplexField> {
    let n = phi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("projector needs a normalized field, ‖φ‖ = {n}")));
    }
    if phi.grid() != g.grid() {
        return Err(Error::Dimension("projector and field grids differ".into()));
    }
    Ok(project_unchecked(phi, g))
}

fn project_unchecked(phi: &ComplexField, g: &ComplexField) -> ComplexField {
    let mut out = g.clone();
    out.axpy(-inner_unchecked(phi, g), phi);
    out
}

/// Generator of the backward equation at one time `s`.
struct Generator<'a, K> {
    phi: &'a ComplexField,
    mean_field: Vec<f64>,
    kernels: K,
}

impl<'a, K: KernelAction> Generator<'a, K> {
    fn new(phi: &'a ComplexField, v: &Potential, kernels: K) -> Self {
        let mean_field = if v.is_zero() {
            vec![0.0; phi.grid().len()]
        } else {
            v.mean_field(&phi.density())
        };
        Self {
            phi,
            mean_field,
            kernels,
        }
    }

    /// `(h_H f + q K₁ q f, −q K₂ q conj f)`; the sum is the bracket of the equation.
    fn parts(&self, f: &ComplexField) -> (ComplexField, ComplexField) {
        let mut linear = neg_laplacian_apply(f);
        linear.axpy(Complex64::new(1.0, 0.0), &f.mul_real(&self.mean_field));
        let qf = project_unchecked(self.phi, f);
        let k1 = self.kernels.apply_k1(&qf);
        linear.axpy(Complex64::new(1.0, 0.0), &project_unchecked(self.phi, &k1));
        let k2 = self.kernels.apply_k2(&qf.conj());
        let conjugate = project_unchecked(self.phi, &k2).scaled(Complex64::new(-1.0, 0.0));
        (linear, conjugate)
    }

    /// `∂_s f = −i [h_H f + q K₁ q f − q K₂ q conj f]`.
    fn rhs(&self, f: &ComplexField) -> ComplexField {
        let (mut a, b) = self.parts(f);
        a.axpy(Complex64::new(1.0, 0.0), &b);
        a.scale_mut(Complex64::new(0.0, -1.0));
        a
    }
}

/// `∂_s f` of the backward equation at time `s`, with `f ⟂ φ_s` required (to `1e−6`).
pub fn rhs_backward(
    f: &ComplexField,
    phi_s: &ComplexField,
    v: &Potential,
    kernels: &impl KernelAction,
) -> Result<ComplexField> {
    if f.grid() != phi_s.grid() || f.grid() != v.grid() {
        return Err(Error::Dimension("fluctuation, condensate and potential grids differ".into()));
    }
    let overlap = inner_unchecked(phi_s, f).norm();
    if overlap > DRIFT_LIMIT {
        return Err(Error::Parameter(format!(
            "fluctuation is not orthogonal to the condensate (|⟨φ_s, f⟩| = {overlap:.3e})"
        )));
    }
    Ok(rhs_unguarded(f, phi_s, v, kernels))
}

/// [`rhs_backward`] without the orthogonality guard.
pub fn rhs_unguarded(f: &ComplexField, phi_s: &ComplexField, v: &Potential, kernels: &impl KernelAction) -> ComplexField {
    Generator::new(phi_s, v, KernelRef(kernels)).rhs(f)
}

/// The two real-linear pieces of [`rhs_unguarded`]: `rhs(αf) = α·first + conj(α)·second`.
pub fn rhs_parts(
    f: &ComplexField,
    phi_s: &ComplexField,
    v: &Potential,
    kernels: &impl KernelAction,
) -> (ComplexField, ComplexField) {
    let (a, b) = Generator::new(phi_s, v, KernelRef(kernels)).parts(f);
    let mi = Complex64::new(0.0, -1.0);
    (a.scaled(mi), b.scaled(mi))
}

struct KernelRef<'a, K: ?Sized>(&'a K);

impl<K: KernelAction + ?Sized> KernelAction for KernelRef<'_, K> {
    fn apply_k1(&self, g: &ComplexField) -> ComplexField {
        self.0.apply_k1(g)
    }
    fn apply_k2(&self, g: &ComplexField) -> ComplexField {
        self.0.apply_k2(g)
    }
}

/// Step control for [`solve_backward_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// RK4 step as a multiple of the trajectory step. With an even stride
    /// every stage time is a stored snapshot; stride 1 interpolates the
    /// midpoints linearly, which caps the overall order at two.
    pub stride: usize,
    /// Orthogonality defect that aborts the solve.
    pub drift_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            drift_limit: DRIFT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluctuationDiagnostics {
    pub max_orthogonality_defect: f64,
    /// `|⟨φ_s, f_{s;t}⟩|` at each solver time (ascending `s`).
    pub orthogonality_defects: Vec<f64>,
    /// `‖f_{s;t}‖` at each solver time (ascending `s`).
    pub norms: Vec<f64>,
    /// Smallest `Ĉ ≥ 0` with `log‖f_s‖ − log‖f_t‖ ≤ Ĉ (t − s)` on the solver times.
    pub growth_rate: f64,
}

#[derive(Debug, Clone)]
pub struct FluctuationSolution {
    pub t: f64,
    /// Solver times, ascending from `0` to `t`.
    pub times: Vec<f64>,
    /// `f_{s;t}` at each entry of `times`.
    pub fields: Vec<ComplexField>,
    /// `σ_t² = ‖f_{0;t}‖²`.
    pub variance: f64,
    pub diagnostics: FluctuationDiagnostics,
}

impl FluctuationSolution {
    pub fn terminal(&self) -> &ComplexField {
        self.fields.last().expect("solution has at least the terminal field")
    }

    pub fn initial(&self) -> &ComplexField {
        &self.fields[0]
    }
}

fn interpolate(a: &ComplexField, b: &ComplexField) -> ComplexField {
    let mut mid = a.scaled(Complex64::new(0.5, 0.0));
    mid.axpy(Complex64::new(0.5, 0.0), b);
    let n = mid.norm();
    mid.scale_mut(Complex64::new(1.0 / n, 0.0));
    mid
}

/// Backward solve with default options (RK4 at the trajectory step).
pub fn solve_backward(traj: &HartreeTrajectory, o: &Observable, t: f64) -> Result<FluctuationSolution> {
    solve_backward_with(traj, o, t, SolverOptions::default())
}

pub fn solve_backward_with(
    traj: &HartreeTrajectory,
    o: &Observable,
    t: f64,
    options: SolverOptions,
) -> Result<FluctuationSolution> {
    if o.grid() != traj.grid() {
        return Err(Error::Dimension("observable and trajectory grids differ".into()));
    }
    if options.stride == 0 {
        return Err(Error::Parameter("solver stride must be positive".into()));
    }
    let k_end = traj.index_of(t)?;
    if k_end % options.stride != 0 {
        return Err(Error::Parameter(format!(
            "stride {} does not divide the {} trajectory steps up to t = {t}",
            options.stride, k_end
        )));
    }
    let v = traj.potential();
    let stride = options.stride;
    let dt = stride as f64 * traj.tau();

    let phi_t = traj.snapshot(k_end);
    let terminal = project_unchecked(phi_t, &o.apply(phi_t));
    let steps = k_end / stride;

    let mut fields = Vec::with_capacity(steps + 1);
    let mut defects = Vec::with_capacity(steps + 1);
    fields.push(terminal.clone());
    defects.push(inner_unchecked(phi_t, &terminal).norm());

    let mut f = terminal;
    for step in 1..=steps {
        let k_hi = k_end - (step - 1) * stride;
        let k_lo = k_hi - stride;
        let phi_hi = traj.snapshot(k_hi);
        let phi_lo = traj.snapshot(k_lo);
        let interpolated;
        let phi_mid = if stride.is_multiple_of(2) {
            traj.snapshot(k_hi - stride / 2)
        } else if stride == 1 {
            interpolated = interpolate(phi_hi, phi_lo);
            &interpolated
        } else {
            interpolated = interpolate(traj.snapshot(k_hi - stride / 2), traj.snapshot(k_hi - stride / 2 - 1));
            &interpolated
        };
        let g_hi = Generator::new(phi_hi, v, ConvolutionKernels::new(phi_hi, v));
        let g_mid = Generator::new(phi_mid, v, ConvolutionKernels::new(phi_mid, v));
        let g_lo = Generator::new(phi_lo, v, ConvolutionKernels::new(phi_lo, v));

        let h = Complex64::new(-dt, 0.0);
        let half = Complex64::new(-0.5 * dt, 0.0);
        let r1 = g_hi.rhs(&f);
        let mut y = f.clone();
        y.axpy(half, &r1);
        let r2 = g_mid.rhs(&y);
        let mut y = f.clone();
        y.axpy(half, &r2);
        let r3 = g_mid.rhs(&y);
        let mut y = f.clone();
        y.axpy(h, &r3);
        let r4 = g_lo.rhs(&y);

        let sixth = h / 6.0;
        f.axpy(sixth, &r1);
        f.axpy(sixth * 2.0, &r2);
        f.axpy(sixth * 2.0, &r3);
        f.axpy(sixth, &r4);

        if f.values().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Propagation {
                step,
                reason: "fluctuation field became non-finite".into(),
            });
        }
        let defect = inner_unchecked(phi_lo, &f).norm();
        if defect > options.drift_limit {
            return Err(Error::SolverDrift {
                step,
                s: traj.time(k_lo),
                defect,
                limit: options.drift_limit,
            });
        }
        defects.push(defect);
        fields.push(f.clone());
    }

    fields.reverse();
    defects.reverse();
    let times: Vec<f64> = (0..=steps).map(|j| traj.time(j * stride)).collect();
    let norms: Vec<f64> = fields.iter().map(|f| f.norm()).collect();
    let variance = fields[0].norm_sqr();
    let terminal_norm = *norms.last().expect("non-empty");
    let growth_rate = if terminal_norm > 0.0 {
        times
            .iter()
            .zip(&norms)
            .filter(|(s, _)| **s < t)
            .map(|(s, n)| (n / terminal_norm).ln() / (t - s))
            .fold(0.0_f64, f64::max)
    } else {
        0.0
    };
    let max_orthogonality_defect = defects.iter().copied().fold(0.0_f64, f64::max);
    Ok(FluctuationSolution {
        t,
        times,
        fields,
        variance,
        diagnostics: FluctuationDiagnostics {
            max_orthogonality_defect,
            orthogonality_defects: defects,
            norms,
            growth_rate,
        },
    })
}

/// `(t, σ_t²)` for each requested time, solved concurrently against one trajectory.
pub fn variance_curve(traj: &HartreeTrajectory, o: &Observable, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    variance_curve_with(traj, o, times, SolverOptions::default())
}

pub fn variance_curve_with(
    traj: &HartreeTrajectory,
    o: &Observable,
    times: &[f64],
    options: SolverOptions,
) -> Result<Vec<(f64, f64)>> {
    times
        .par_iter()
        .map(|&t| solve_backward_with(traj, o, t, options).map(|s| (t, s.variance)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::hartree::evolve_hartree;
    use crate::observable::variance;
    use crate::potential::PotentialKind;

    fn setup(alpha: f64) -> (GridSpec, ComplexField, Potential) {
        let g = GridSpec::line(64, 12.0).unwrap();
        let phi = ComplexField::gaussian(g, [6.0, 0.0], 1.0).unwrap();
        let v = Potential::new(PotentialKind::Gaussian { amplitude: alpha, width: 1.0 }, g).unwrap();
        (g, phi, v)
    }

    #[test]
    fn kernels_zero_and_constant() {
        let (g, phi, _) = setup(0.0);
        let k = build_kernels(&phi, &Potential::zero(g), 0.0).unwrap();
        assert_eq!(k.hilbert_schmidt(), (0.0, 0.0));

        let cval = 0.7;
        let v = Potential::new(PotentialKind::Constant { value: cval }, g).unwrap();
        let k = build_kernels(&phi, &v, 0.0).unwrap();
        let eig = crate::linalg::hermitian_eigenvalues(k.k1.clone());
        let top = *eig.last().unwrap();
        assert!((top - cval).abs() < 1e-12);
        assert!(eig[..eig.len() - 1].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn kernel_symmetries_and_hs_norm() {
        let (g, phi, v) = setup(0.5);
        let phi = phi.mul(&ComplexField::plane_wave(g, [1, 0])).scaled(Complex64::new(12f64.sqrt(), 0.0));
        let k = build_kernels(&phi, &v, 0.0).unwrap();
        assert!(k.k1_hermiticity_defect() < 1e-12);
        assert!(k.k2_symmetry_defect() < 1e-12);
        // ‖K₁‖²_HS = ⟨φ, (v² ∗ |φ|²) φ⟩
        let v2 = crate::grid::convolve(&g, &v.squared(), &phi.density()).unwrap();
        let rhs: f64 = v2.iter().zip(phi.density()).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume();
        assert!((k.hilbert_schmidt().0.powi(2) - rhs).abs() < 1e-9);
    }

    #[test]
    fn matrix_free_kernels_match_dense() {
        let (g, phi, v) = setup(0.4);
        let dense = build_kernels(&phi, &v, 0.0).unwrap();
        let fast = ConvolutionKernels::new(&phi, &v);
        let f = ComplexField::from_fn(g, |x| Complex64::new((x[0]).sin(), (0.3 * x[0]).cos()));
        assert!(dense.apply_k1(&f).distance(&fast.apply_k1(&f)) < 1e-12);
        assert!(dense.apply_k2(&f).distance(&fast.apply_k2(&f)) < 1e-12);
    }

    #[test]
    fn projector_properties() {
        let (g, phi, _) = setup(0.0);
        assert!(project_out(&phi, &phi).unwrap().norm() < 1e-14);
        let w = ComplexField::from_fn(g, |x| Complex64::new((x[0] * 0.7).cos(), x[0].sin()));
        let once = project_out(&phi, &w).unwrap();
        let twice = project_out(&phi, &once).unwrap();
        assert!(once.distance(&twice) < 1e-13);
        assert!(inner_unchecked(&phi, &once).norm() < 1e-12);
        assert!(project_out(&phi, &twice).unwrap().distance(&twice) < 1e-13);
    }

    #[test]
    fn rhs_free_and_guard() {
        let (g, phi, _) = setup(0.0);
        let v0 = Potential::zero(g);
        let w = ComplexField::plane_wave(g, [2, 0]);
        let w = project_out(&phi, &w).unwrap();
        let r = rhs_backward(&w, &phi, &v0, &ConvolutionKernels::new(&phi, &v0)).unwrap();
        let expected = neg_laplacian_apply(&w).scaled(Complex64::new(0.0, -1.0));
        assert!(r.distance(&expected) < 1e-12);

        let (_, phi, v) = setup(0.5);
        let kern = ConvolutionKernels::new(&phi, &v);
        assert!(rhs_backward(&phi, &phi, &v, &kern).is_err());
        let r = rhs_unguarded(&phi, &phi, &v, &kern);
        let mut h = neg_laplacian_apply(&phi);
        h.axpy(Complex64::new(1.0, 0.0), &phi.mul_real(&v.mean_field(&phi.density())));
        assert!(r.distance(&h.scaled(Complex64::new(0.0, -1.0))) < 1e-12);
    }

    #[test]
    fn rhs_is_real_linear() {
        let (g, phi, v) = setup(0.6);
        let n = g.len();
        let kern = build_kernels(&phi, &v, 0.0).unwrap();
        let f = project_out(&phi, &ComplexField::from_fn(g, |x| Complex64::new((x[0]).cos(), 0.2 * x[0].sin()))).unwrap();
        // explicit dense decomposition: L = −i(H + Q K₁ Q), A = i Q K₂ Q ∘ conj
        let hm = crate::linalg::multiplier_matrix(&g, |k2| k2);
        let mf = v.mean_field(&phi.density());
        let hq = g.cell_volume();
        let q = CMatrix::from_fn(n, n, |r, c| {
            let d = if r == c { 1.0 } else { 0.0 };
            Complex64::new(d, 0.0) - phi.values()[r] * phi.values()[c].conj() * hq
        });
        let hh = CMatrix::from_fn(n, n, |r, c| hm[(r, c)] + if r == c { Complex64::new(mf[r], 0.0) } else { Complex64::new(0.0, 0.0) });
        let lin = (&hh + &q * &kern.k1 * &q) * Complex64::new(0.0, -1.0);
        let anti = (&q * &kern.k2 * &q) * Complex64::new(0.0, 1.0);
        let alpha = Complex64::new(0.0, 1.0);
        let af = f.scaled(alpha);
        let got = rhs_unguarded(&af, &phi, &v, &kern);
        let lf = mat_vec(&lin, f.values());
        let cf = mat_vec(&anti, f.conj().values());
        let want: Vec<Complex64> = lf.iter().zip(&cf).map(|(a, b)| alpha * a + alpha.conj() * b).collect();
        let want = ComplexField::from_raw(g, want);
        assert!(got.distance(&want) < 1e-11);
        let (p1, p2) = rhs_parts(&f, &phi, &v, &kern);
        assert!(p1.distance(&ComplexField::from_raw(g, lf)) < 1e-11);
        assert!(p2.distance(&ComplexField::from_raw(g, cf)) < 1e-11);
    }

    #[test]
    fn t_zero_variance_identity() {
        let (g, phi, v) = setup(0.5);
        let traj = evolve_hartree(&phi, &v, 0.01, 0.001).unwrap();
        let o = Observable::cosine(g, 1.0, 1).unwrap();
        let sol = solve_backward(&traj, &o, 0.0).unwrap();
        assert!((sol.variance - variance(&o, &phi).unwrap()).abs() < 1e-10);
        assert_eq!(sol.fields.len(), 1);
    }

    #[test]
    fn free_flow_preserves_norm() {
        let (g, phi, _) = setup(0.0);
        let traj = evolve_hartree(&phi, &Potential::zero(g), 0.5, 0.001).unwrap();
        let o = Observable::cosine(g, 1.0, 1).unwrap();
        let sol = solve_backward(&traj, &o, 0.5).unwrap();
        let n0 = sol.diagnostics.norms.last().copied().unwrap();
        for n in &sol.diagnostics.norms {
            assert!((n - n0).abs() < 1e-9);
        }
        let var_t = variance(&o, traj.final_state()).unwrap();
        assert!((sol.variance - var_t).abs() < 1e-9);
    }

    #[test]
    fn stride_must_divide() {
        let (g, phi, v) = setup(0.3);
        let traj = evolve_hartree(&phi, &v, 0.01, 0.001).unwrap();
        let o = Observable::cosine(g, 1.0, 1).unwrap();
        let opts = SolverOptions { stride: 3, ..Default::default() };
        assert!(solve_backward_with(&traj, &o, 0.01, opts).is_err());
        assert!(solve_backward(&traj, &o, 0.0105).is_err());
    }
}
