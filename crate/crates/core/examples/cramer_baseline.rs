//! Independent-particle baseline: the log-MGF of one measurement, its convex
//! conjugate (Cramér rate), the quadratic approximation and the tilted laws.

use bosonic_ldp::ldp::{
    chebyshev_envelope, geometric_grid, iid_measure, legendre_fenchel, quadratic_rate, tilted_measure, MgfCurve,
    Provenance,
};
use bosonic_ldp::{ComplexField, GridSpec, Observable};

fn main() -> bosonic_ldp::Result<()> {
    let grid = GridSpec::line(64, 12.0)?;
    let phi = ComplexField::gaussian(grid, [5.0, 0.0], 1.0)?;
    let o = Observable::cosine(grid, 1.0, 1)?;
    let mu = iid_measure(&phi, &o)?;
    println!("one-particle law: {} atoms, variance {:.8}", mu.atoms().len(), mu.variance());

    let lambdas = geometric_grid(0.01, 1.1, 70, true)?;
    let curve = MgfCurve::from_fn(lambdas, Provenance::AnalyticIid, |l| mu.log_mgf(l))?;
    curve.check_invariants()?;
    let (lo, hi) = curve.derivative_range();
    println!("conjugate defined for x in [{lo:.4}, {hi:.4}]\n");

    println!("    x      Cramér    quadratic   −Chebyshev");
    for x in [0.01, 0.05, 0.1, 0.2, 0.3] {
        println!(
            "{x:6.3}  {:.8}  {:.8}  {:.8}",
            legendre_fenchel(&curve, x)?,
            quadratic_rate(mu.variance(), x)?,
            -chebyshev_envelope(&curve, x)
        );
    }

    let tilted = tilted_measure(mu.atoms(), 2.0)?;
    let mass: f64 = tilted.iter().map(|a| a.1).sum();
    let mean: f64 = tilted.iter().map(|(v, w)| v * w).sum();
    println!("\ntilt λ = 2: total mass {mass:.15}, mean {mean:.10}, Λ'(2) {:.10}", curve.interpolate(2.0).1);
    Ok(())
}
