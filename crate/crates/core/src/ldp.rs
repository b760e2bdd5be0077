//! Log-moment generating functions, convex conjugation and the rate-function
//! envelopes.
//!
//! Sign convention: rates are non-negative, `I(x) = −lim N⁻¹ log P[O_N > x]`,
//! so the Gaussian prediction is `I(x) ≈ x²/(2σ²)` and
//! `I = sup_λ [λx − Λ(λ)]`. The Chebyshev envelope is reported in the
//! log-probability convention, i.e. it is `≤ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::linalg::linear_fit;
use crate::observable::{expectation, Observable};

/// Finite probability measure on the real line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    /// Requires non-negative weights summing to one within `1e−10`.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        check_weights(&atoms)?;
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(o, w)| o * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|(o, w)| w * (o - m) * (o - m)).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        self.atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a.0), hi.max(a.0)))
    }

    /// `log Σ w e^{s·o}`, max-shifted.
    pub fn log_mgf(&self, s: f64) -> f64 {
        log_sum_exp(self.atoms.iter().map(|&(o, w)| (s * o, w)))
    }

    /// Shift every atom by `−c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(o, w)| (o - c, w)).collect(),
        }
    }
}

fn check_weights(atoms: &[(f64, f64)]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::Parameter("empty measure".into()));
    }
    if let Some(a) = atoms.iter().find(|a| !(a.1 >= 0.0) || !a.0.is_finite()) {
        return Err(Error::Parameter(format!("invalid atom {a:?}: weights must be ≥ 0 and values finite")));
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// `log Σ w_k e^{a_k}` for `(a_k, w_k)` with `w_k ≥ 0`.
pub(crate) fn log_sum_exp(terms: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let max = terms
        .clone()
        .filter(|t| t.1 > 0.0)
        .map(|t| t.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = terms.filter(|t| t.1 > 0.0).map(|(a, w)| w * (a - max).exp()).sum();
    max + s.ln()
}

/// Where a curve's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticIid,
    Oracle { n: usize },
    BogoliubovQuadratic,
    Extrapolated,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::AnalyticIid => write!(f, "analytic-iid"),
            Provenance::Oracle { n } => write!(f, "oracle-{n}"),
            Provenance::BogoliubovQuadratic => write!(f, "bogoliubov-quadratic"),
            Provenance::Extrapolated => write!(f, "extrapolated"),
        }
    }
}

/// Sampled `Λ(λ)` on a non-negative increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgfCurve {
    lambdas: Vec<f64>,
    values: Vec<f64>,
    provenance: Provenance,
}

impl MgfCurve {
    pub fn new(lambdas: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if lambdas.len() != values.len() || lambdas.len() < 3 {
            return Err(Error::Parameter("a curve needs at least three paired samples".into()));
        }
        if lambdas[0] < 0.0 || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("λ grid must be non-negative and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalConsistency("non-finite Λ value".into()));
        }
        Ok(Self {
            lambdas,
            values,
            provenance,
        })
    }

    pub fn from_fn(lambdas: Vec<f64>, provenance: Provenance, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = lambdas.iter().map(|&l| f(l)).collect();
        Self::new(lambdas, values, provenance)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Smallest divided second difference (convexity margin).
    pub fn min_second_difference(&self) -> f64 {
        let (l, v) = (&self.lambdas, &self.values);
        (1..l.len() - 1)
            .map(|i| {
                let d1 = (v[i] - v[i - 1]) / (l[i] - l[i - 1]);
                let d2 = (v[i + 1] - v[i]) / (l[i + 1] - l[i]);
                2.0 * (d2 - d1) / (l[i + 1] - l[i - 1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `Λ(0) = 0` (if `0` is on the grid) and convexity with `1e−9` slack.
    pub fn check_invariants(&self) -> Result<()> {
        if self.lambdas[0] == 0.0 && self.values[0].abs() > 1e-12 {
            return Err(Error::invariant("mgf-origin", format!("Λ(0) = {:e}", self.values[0])));
        }
        let m = self.min_second_difference();
        if m < -1e-9 {
            return Err(Error::invariant("mgf-convexity", format!("second difference {m:e}")));
        }
        Ok(())
    }

    /// Value and first two derivatives of the local degree-5 interpolant.
    pub fn interpolate(&self, lambda: f64) -> (f64, f64, f64) {
        let n = self.lambdas.len();
        let width = n.min(6);
        let i = match self.lambdas.binary_search_by(|p| p.total_cmp(&lambda)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let start = i.saturating_sub(2).min(n - width);
        newton_eval(&self.lambdas[start..start + width], &self.values[start..start + width], lambda)
    }

    /// `[Λ'(λ_min), Λ'(λ_max)]` of the interpolant.
    pub fn derivative_range(&self) -> (f64, f64) {
        let lo = self.interpolate(self.lambdas[0]).1;
        let hi = self.interpolate(*self.lambdas.last().expect("non-empty")).1;
        (lo, hi)
    }
}

/// Newton divided-difference interpolation with value, first and second derivative.
fn newton_eval(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64, f64) {
    let n = xs.len();
    let mut c = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    let (mut p, mut dp, mut d2p) = (c[n - 1], 0.0, 0.0);
    for j in (0..n - 1).rev() {
        let dx = x - xs[j];
        d2p = d2p * dx + 2.0 * dp;
        dp = dp * dx + p;
        p = p * dx + c[j];
    }
    (p, dp, d2p)
}

/// `λ_min·r^k` for `k = 0..count`, optionally preceded by `0`.
pub fn geometric_grid(min: f64, ratio: f64, count: usize, include_zero: bool) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(ratio > 1.0) || count == 0 {
        return Err(Error::Parameter(format!(
            "geometric grid needs min > 0, ratio > 1, count > 0 (got {min}, {ratio}, {count})"
        )));
    }
    let mut out = Vec::with_capacity(count + 1);
    if include_zero {
        out.push(0.0);
    }
    out.extend((0..count).map(|k| min * ratio.powi(k as i32)));
    Ok(out)
}

/// Law of a single `O` measurement in `φ`, centred at `⟨φ, Oφ⟩`.
pub fn iid_measure(phi: &ComplexField, o: &Observable) -> Result<SpectralMeasure> {
    let mean = expectation(o, phi)?;
    let atoms = o.spectral_weights(phi).into_iter().map(|(v, w)| (v - mean, w)).collect::<Vec<_>>();
    // renormalize away the ~1e−15 rounding in Σw so the measure validates
    let total: f64 = atoms.iter().map(|a: &(f64, f64)| a.1).sum();
    SpectralMeasure::new(atoms.into_iter().map(|(v, w)| (v, w / total)).collect())
}

/// `log ⟨φ, e^{λ(O − ⟨φ,Oφ⟩)} φ⟩`.
pub fn iid_lmgf(phi: &ComplexField, o: &Observable, lambda: f64) -> Result<f64> {
    Ok(iid_measure(phi, o)?.log_mgf(lambda))
}

/// `sup_λ [λx − Λ(λ)]`, attained where `Λ'(λ*) = x`.
pub fn legendre_fenchel(curve: &MgfCurve, x: f64) -> Result<f64> {
    let (lo_d, hi_d) = curve.derivative_range();
    // interpolation rounding at the grid ends
    let slack = 1e-10 * (1.0 + (hi_d - lo_d).abs());
    if !(x >= lo_d - slack && x <= hi_d + slack) {
        return Err(Error::OutOfDomain { x, lo: lo_d, hi: hi_d });
    }
    let lambdas = curve.lambdas();
    let (mut a, mut b) = (lambdas[0], *lambdas.last().expect("non-empty"));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if curve.interpolate(mid).1 < x {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-13 * (1.0 + b.abs()) {
            break;
        }
    }
    let mut star = 0.5 * (a + b);
    for _ in 0..8 {
        let (_, d1, d2) = curve.interpolate(star);
        if d2 <= 0.0 {
            break;
        }
        let next = star - (d1 - x) / d2;
        if !(next >= a && next <= b) {
            break;
        }
        star = next;
    }
    let (value, _, _) = curve.interpolate(star);
    Ok(star * x - value)
}

/// `x²/(2σ²)`.
pub fn quadratic_rate(variance: f64, x: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::DegenerateObservable(variance));
    }
    Ok(x * x / (2.0 * variance))
}

/// `min_λ [Λ(λ) − λx]` over the grid: the best exponential bound on
/// `N⁻¹ log P[O_N > x]` available from the sampled curve.
pub fn chebyshev_envelope(curve: &MgfCurve, x: f64) -> f64 {
    curve
        .lambdas()
        .iter()
        .zip(curve.values())
        .map(|(l, v)| v - l * x)
        .fold(f64::INFINITY, f64::min)
}

/// Exponentially tilted weights `w_k e^{λo_k} / Σ_j w_j e^{λo_j}`.
pub fn tilted_measure(atoms: &[(f64, f64)], lambda: f64) -> Result<Vec<(f64, f64)>> {
    check_weights(atoms)?;
    let log_z = log_sum_exp(atoms.iter().map(|&(o, w)| (lambda * o, w)));
    Ok(atoms
        .iter()
        .map(|&(o, w)| (o, if w > 0.0 { w * (lambda * o - log_z).exp() } else { 0.0 }))
        .collect())
}

/// `e^{e^{Ct}}`.
fn double_exp(c: f64, t: f64) -> f64 {
    (c * t).exp().exp()
}

/// Rate-function predictions on an `x` grid (non-negative rate convention).
#[derive(Debug, Clone, Serialize)]
pub struct RateEnvelope {
    pub xs: Vec<f64>,
    /// `x²/(2σ²)`.
    pub quadratic: Vec<f64>,
    /// From the upper bound on `log P`: `x²/(2σ²) − x³ C₁e^{e^{C₁t}}|||O|||³/σ⁶`.
    pub rate_lower: Vec<f64>,
    /// From the lower bound on `log P`: `x²/(2σ²) + x^{5/2} C₂e^{e^{C₂t}}|||O|||^{3/2}/σ⁴`.
    pub rate_upper: Vec<f64>,
    /// `e^{−e^{C₁t}} σ²/|||O|||`.
    pub upper_window: f64,
    /// `e^{−e^{C₂t}} σ⁴/(C₂|||O|||³)`.
    pub lower_window: f64,
}

impl RateEnvelope {
    pub fn joint_window(&self) -> f64 {
        self.upper_window.min(self.lower_window)
    }
}

pub fn theorem_envelopes(
    variance: f64,
    triple_norm: f64,
    c1: f64,
    c2: f64,
    t: f64,
    xs: &[f64],
) -> Result<RateEnvelope> {
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::Parameter(format!("envelope constants must be positive (C₁ = {c1}, C₂ = {c2})")));
    }
    if !(triple_norm > 0.0) {
        return Err(Error::Parameter(format!("|||O||| must be positive, got {triple_norm}")));
    }
    if !(variance > 0.0) {
        return Err(Error::DegenerateObservable(variance));
    }
    let a1 = c1 * double_exp(c1, t) * triple_norm.powi(3) / variance.powi(3);
    let a2 = c2 * double_exp(c2, t) * triple_norm.powf(1.5) / variance.powi(2);
    let quadratic: Vec<f64> = xs.iter().map(|x| x * x / (2.0 * variance)).collect();
    let rate_lower = xs.iter().zip(&quadratic).map(|(x, q)| q - a1 * x.abs().powi(3)).collect();
    let rate_upper = xs.iter().zip(&quadratic).map(|(x, q)| q + a2 * x.abs().powf(2.5)).collect();
    Ok(RateEnvelope {
        xs: xs.to_vec(),
        quadratic,
        rate_lower,
        rate_upper,
        upper_window: variance / (double_exp(c1, t) * triple_norm),
        lower_window: variance * variance / (double_exp(c2, t) * c2 * triple_norm.powi(3)),
    })
}

/// Largest `λ` covered by the log-MGF bounds: `e^{−e^{Ct}}/|||O|||`.
pub fn lmgf_window(c: f64, t: f64, triple_norm: f64) -> f64 {
    1.0 / (double_exp(c, t) * triple_norm)
}

/// Smallest `C > 0` with `C e^{e^{Ct}} ≥ target`.
pub fn smallest_constant(target: f64, t: f64) -> f64 {
    if !(target > 0.0) {
        return 0.0;
    }
    let g = |c: f64| c * double_exp(c, t) - target;
    let (mut a, mut b) = (0.0, 1.0);
    while g(b) < 0.0 {
        b *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

/// Log–log least-squares fit `|y| ≈ A x^p`, returning `(p, A)`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    if lx.iter().chain(&ly).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("power-law fit needs positive x and non-zero y".into()));
    }
    let (p, c) = linear_fit(&lx, &ly)?;
    Ok((p, c.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn uniform(max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
    }

    fn bernoulli(p: f64) -> SpectralMeasure {
        let m = 2.0 * p - 1.0;
        SpectralMeasure::new(vec![(1.0 - m, p), (-1.0 - m, 1.0 - p)]).unwrap()
    }

    #[test]
    fn gaussian_conjugate() {
        let s2 = 0.7;
        let c = MgfCurve::from_fn(uniform(5.0, 501), Provenance::BogoliubovQuadratic, |l| s2 * l * l / 2.0).unwrap();
        for x in [0.0, 0.1, 0.5, 2.0, 3.4] {
            assert!((legendre_fenchel(&c, x).unwrap() - x * x / (2.0 * s2)).abs() < 1e-8);
        }
        assert!(matches!(legendre_fenchel(&c, 4.0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(legendre_fenchel(&c, -0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn bernoulli_conjugate_is_kl() {
        let p = 0.3;
        let mu = bernoulli(p);
        let m = 2.0 * p - 1.0;
        let c = MgfCurve::from_fn(uniform(4.0, 2001), Provenance::AnalyticIid, |l| mu.log_mgf(l)).unwrap();
        for x in [0.0, 0.2, 0.5, 0.9] {
            // KL(q‖p) with q the Bernoulli of mean m + x
            let q = (m + x + 1.0) / 2.0;
            let kl = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
            assert!((legendre_fenchel(&c, x).unwrap() - kl).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn bernoulli_lmgf_closed_form() {
        let g = GridSpec::line(4, 1.0).unwrap();
        let p: f64 = 0.35;
        // O = diag(1, −1, −1, −1), φ chosen so P[O = 1] = p
        let o = Observable::multiplication(g, vec![1.0, -1.0, -1.0, -1.0]).unwrap();
        let h = g.cell_volume();
        let rest = ((1.0 - p) / 3.0 / h).sqrt();
        let phi = ComplexField::new(
            g,
            vec![(p / h).sqrt(), rest, rest, rest].into_iter().map(|v| num_complex::Complex64::new(v, 0.0)).collect(),
        )
        .unwrap();
        let m = 2.0 * p - 1.0;
        for l in [0.0, 0.3, 1.0, 2.5, -0.7] {
            let want = (p * (l * (1.0 - m)).exp() + (1.0 - p) * (l * (-1.0 - m)).exp()).ln();
            assert!((iid_lmgf(&phi, &o, l).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn small_lambda_expansion() {
        let mu = bernoulli(0.2).shifted(0.0);
        let var = mu.variance();
        let ls: Vec<f64> = (1..=10).map(|k| k as f64 * 1e-3).collect();
        // least-squares fit Λ ≈ a λ² + b λ³
        let (mut s22, mut s23, mut s33, mut s2y, mut s3y) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &l in &ls {
            let y = mu.log_mgf(l);
            let (a, b) = (l * l, l * l * l);
            s22 += a * a;
            s23 += a * b;
            s33 += b * b;
            s2y += a * y;
            s3y += b * y;
        }
        let det = s22 * s33 - s23 * s23;
        let a = (s2y * s33 - s3y * s23) / det;
        assert!((a - var / 2.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_rate_cases() {
        assert_eq!(quadratic_rate(1.0, 0.0).unwrap(), 0.0);
        assert!((quadratic_rate(1.0, 0.1).unwrap() - 0.005).abs() < 1e-15);
        assert_eq!(quadratic_rate(2.0, -0.3).unwrap(), quadratic_rate(2.0, 0.3).unwrap());
        assert!(matches!(quadratic_rate(0.0, 0.1), Err(Error::DegenerateObservable(_))));
    }

    #[test]
    fn envelope_arithmetic() {
        let env = theorem_envelopes(1.0, 1.0, 1.0, 1.0, 0.0, &[0.0, 0.1]).unwrap();
        assert_eq!(env.rate_lower[0], 0.0);
        assert_eq!(env.rate_upper[0], 0.0);
        let e = std::f64::consts::E;
        assert!((env.quadratic[1] - env.rate_lower[1] - 1e-3 * e).abs() < 1e-15);
        assert!((env.rate_upper[1] - env.quadratic[1] - 0.1f64.powf(2.5) * e).abs() < 1e-15);
        assert!((env.upper_window - 1.0 / e).abs() < 1e-15);
        assert!(theorem_envelopes(1.0, 1.0, 0.0, 1.0, 0.0, &[0.1]).is_err());
    }

    #[test]
    fn chebyshev_and_duality() {
        let s2 = 0.5;
        let c = MgfCurve::from_fn(uniform(4.0, 40001), Provenance::BogoliubovQuadratic, |l| s2 * l * l / 2.0).unwrap();
        assert_eq!(chebyshev_envelope(&c, 0.0), 0.0);
        for x in [0.1, 0.4, 1.3] {
            let ch = chebyshev_envelope(&c, x);
            assert!((ch + x * x / (2.0 * s2)).abs() < 1e-8);
            assert!((ch.abs() - legendre_fenchel(&c, x).unwrap().abs()).abs() < 1e-8);
        }
    }

    #[test]
    fn tilting() {
        let atoms = vec![(-1.0, 0.25), (0.5, 0.5), (2.0, 0.25)];
        assert_eq!(tilted_measure(&atoms, 0.0).unwrap(), atoms);
        let big = tilted_measure(&atoms, 40.0).unwrap();
        assert!(big[2].1 > 1.0 - 1e-12);
        let mu = SpectralMeasure::new(atoms.clone()).unwrap();
        for l in [-1.0, 0.3, 2.0] {
            let t = tilted_measure(&atoms, l).unwrap();
            let total: f64 = t.iter().map(|a| a.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mean: f64 = t.iter().map(|a| a.0 * a.1).sum();
            let h = 1e-4;
            let fd = (mu.log_mgf(l + h) - mu.log_mgf(l - h)) / (2.0 * h);
            assert!((mean - fd).abs() < 1e-8);
        }
        assert!(tilted_measure(&[(0.0, 0.5)], 1.0).is_err());
    }

    #[test]
    fn curve_invariants() {
        let c = MgfCurve::from_fn(geometric_grid(1e-3, 1.5, 20, true).unwrap(), Provenance::AnalyticIid, |l| {
            bernoulli(0.4).log_mgf(l)
        })
        .unwrap();
        c.check_invariants().unwrap();
        let bad = MgfCurve::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5], Provenance::AnalyticIid).unwrap();
        assert!(bad.check_invariants().is_err());
        assert!(MgfCurve::new(vec![0.0, 0.0, 1.0], vec![0.0; 3], Provenance::AnalyticIid).is_err());
    }

    #[test]
    fn constants_and_fits() {
        let c = smallest_constant(5.0, 0.5);
        assert!((c * (c * 0.5f64).exp().exp() - 5.0).abs() < 1e-9);
        let xs: Vec<f64> = (1..10).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x * x * x).collect();
        let (p, a) = power_law_fit(&xs, &ys).unwrap();
        assert!((p - 3.0).abs() < 1e-12 && (a - 2.0).abs() < 1e-12);
    }
}
