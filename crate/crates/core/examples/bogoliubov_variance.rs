//! Backward fluctuation solve: the variance σ_t² = ‖f_{0;t}‖² of the limiting
//! Gaussian, along with the orthogonality and growth diagnostics.

use bosonic_ldp::fluctuation::{solve_backward_with, variance_curve_with, SolverOptions};
use bosonic_ldp::hartree::evolve_hartree;
use bosonic_ldp::observable::variance;
use bosonic_ldp::{ComplexField, GridSpec, Observable, Potential, PotentialKind};

fn main() -> bosonic_ldp::Result<()> {
    let grid = GridSpec::line(64, 12.0)?;
    let phi0 = ComplexField::gaussian(grid, [6.0, 0.0], 1.0)?;
    let v = Potential::new(PotentialKind::Gaussian { amplitude: 1.0, width: 1.0 }, grid)?;
    let o = Observable::cosine(grid, 1.0, 1)?;
    let traj = evolve_hartree(&phi0, &v, 1.0, 1e-3)?;

    let sol = solve_backward_with(&traj, &o, 1.0, SolverOptions::default())?;
    println!("σ_1²                      = {:.12}", sol.variance);
    println!("max |<φ_s, f_s>|          = {:.3e}", sol.diagnostics.max_orthogonality_defect);
    println!("norm growth rate          = {:.4}", sol.diagnostics.growth_rate);
    println!("one-particle Var at t = 1 = {:.12}", variance(&o, traj.final_state())?);

    // exact snapshots at every RK4 stage: fourth order in τ
    let options = SolverOptions { stride: 2, ..SolverOptions::default() };
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    println!("\n   t        σ_t²");
    for (t, s2) in variance_curve_with(&traj, &o, &times, options)? {
        println!("{t:5.2}  {s2:.12}");
    }
    Ok(())
}
