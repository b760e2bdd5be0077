//! Operator constants entering the error bounds: the potential bound
//! sup (1−Δ)^{-1/2} v² (1−Δ)^{-1/2} and the triple norm of observables.

use bosonic_ldp::observable::triple_norm;
use bosonic_ldp::potential::potential_bound_constant;
use bosonic_ldp::{GridSpec, Observable, Potential, PotentialKind};

fn main() -> bosonic_ldp::Result<()> {
    let grid = GridSpec::line(128, 16.0)?;
    println!("soft-coulomb bound constant as the regularizer shrinks:");
    for eps in [0.8, 0.4, 0.2, 0.1, 0.05] {
        let v = Potential::new(PotentialKind::SoftCoulomb { amplitude: 1.0, regularizer: eps }, grid)?;
        println!("  ε = {eps:<5} D = {:.8}", potential_bound_constant(&v));
    }
    let g = Potential::new(PotentialKind::Gaussian { amplitude: 1.0, width: 1.0 }, grid)?;
    println!("gaussian:          D = {:.8}", potential_bound_constant(&g));

    println!("\ntriple norms (‖O‖ ≤ |||O|||):");
    let observables = [
        ("cos mode 1", Observable::cosine(grid, 1.0, 1)?),
        ("cos mode 4", Observable::cosine(grid, 1.0, 4)?),
        ("(1−Δ)^-1", Observable::fourier_multiplier(grid, |k2| 1.0 / (1.0 + k2))),
    ];
    for (name, o) in observables {
        println!("  {name:<11} ‖O‖ = {:.6}  |||O||| = {:.6}", o.operator_norm(), triple_norm(&o));
    }
    Ok(())
}
