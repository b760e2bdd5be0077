//! Exact N-boson dynamics on six modes: Lanczos propagation, the law of the
//! centred empirical average, its log-MGF, tails and the reduced density.

use bosonic_ldp::hartree::evolve_hartree;
use bosonic_ldp::observable::expectation;
use bosonic_ldp::oracle::{
    build_hamiltonian, condensate_fraction, empirical_lmgf, evolve_exact_with, observable_statistics,
    product_state, reduced_density, tail_probability, KrylovOptions,
};
use bosonic_ldp::{ComplexField, GridSpec, Observable, Potential, PotentialKind};

fn main() -> bosonic_ldp::Result<()> {
    let l = 2.0 * std::f64::consts::PI;
    let grid = GridSpec::line(6, l)?;
    let v = Potential::new(PotentialKind::Gaussian { amplitude: 0.25, width: 1.0 }, grid)?;
    let phi0 = ComplexField::gaussian(grid, [l / 2.0, 0.0], 1.0)?;
    let o = Observable::cosine(grid, 1.0, 1)?;
    let t = 1.0;
    let traj = evolve_hartree(&phi0, &v, t, 1e-3)?;
    let mean = expectation(&o, traj.final_state())?;

    println!(" N   dim   N·Var     Λ_N(0.5)    P[O_N > 0.2]  condensate   energy drift");
    for n in 2..=6 {
        let h = build_hamiltonian(&grid, &v, n)?;
        let psi0 = product_state(&phi0, h.basis())?;
        let (psi, report) = evolve_exact_with(&psi0, &h, t, 0.02, &KrylovOptions::default())?;
        let mu = observable_statistics(&psi, &o, mean)?;
        let gamma = reduced_density(&psi);
        println!(
            "{n:2} {:5}  {:.6}  {:.8}  {:.8}    {:.8}   {:.2e}",
            h.dim(),
            n as f64 * mu.variance(),
            empirical_lmgf(&mu, n, 0.5),
            tail_probability(&mu, 0.2),
            condensate_fraction(&gamma, traj.final_state()),
            report.energy_drift
        );
    }
    Ok(())
}
