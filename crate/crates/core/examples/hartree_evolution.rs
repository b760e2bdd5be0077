//! Split-step Hartree evolution of a Gaussian condensate on a 256-point
//! periodic grid, with conservation diagnostics and a step-halving order estimate.

use bosonic_ldp::hartree::{evolve_hartree, richardson_order};
use bosonic_ldp::observable::expectation;
use bosonic_ldp::{ComplexField, GridSpec, Observable, Potential, PotentialKind};

fn main() -> bosonic_ldp::Result<()> {
    let grid = GridSpec::line(256, 20.0)?;
    let phi0 = ComplexField::gaussian(grid, [10.0, 0.0], 1.0)?;
    let position = Observable::cosine(grid, 1.0, 1)?;

    for kind in [
        PotentialKind::Gaussian { amplitude: 1.0, width: 1.0 },
        PotentialKind::SoftCoulomb { amplitude: 1.0, regularizer: 0.5 },
    ] {
        let v = Potential::new(kind.clone(), grid)?;
        let traj = evolve_hartree(&phi0, &v, 1.0, 1e-3)?;
        let d = traj.diagnostics();
        println!("{kind:?}");
        println!("  E(0) = {:.10}", traj.initial_energy());
        println!("  max norm defect        {:.3e}", d.max_norm_defect);
        println!("  max energy drift       {:.3e}", d.max_energy_drift);
        println!("  H² growth rate         {:.4}", traj.h2_growth_rate());
        for k in [0, 250, 500, 1000] {
            println!("  t = {:.2}  <cos> = {:+.8}", traj.time(k), expectation(&position, traj.snapshot(k))?);
        }
        println!("  observed order         {:.3}", richardson_order(&phi0, &v, 0.5, 0.01)?);
    }
    Ok(())
}
