//! The nonlinear collision term on a tensor grid: `Gamma(f, f)` has no
//! component along the collision invariants, and the full collision integral
//! conserves mass, momentum and energy up to discretisation error.

use rvml::equilibria::PlasmaPair;
use rvml::kernel::KernelParams;
use rvml::landau::{
    apply_gamma, build_basis, collision_integral, conservation_report, BasisNormalization, CollisionSetup,
};

fn main() -> rvml::Result<()> {
    for n in [8, 12] {
        let setup = CollisionSetup::from_grid_params(n, 6.0, PlasmaPair::default(), KernelParams::default())?;
        let f = setup.tabulate(|s, p| {
            let weight = if s == 0 { 1.0 } else { 1.5 };
            setup.juttner(s).sqrt(p) * (0.3 + 0.5 * p.x - 0.2 * p.y * p.z) * weight
        });
        let gamma = apply_gamma(&setup, &f, &f)?;
        let basis = build_basis(&setup, BasisNormalization::Grid)?;
        let grid = setup.grid();
        let along: Vec<String> = basis
            .chis()
            .iter()
            .map(|chi| format!("{:+.2e}", gamma.inner(chi, grid) / (gamma.norm(grid) * chi.norm(grid))))
            .collect();
        println!("{n}^3: <Gamma, chi_i> relative [{}]", along.join(", "));

        let mut big = f.clone();
        for s in 0..2 {
            let w = setup.sqrt_j_nodes(s).to_vec();
            big.species_mut(s).iter_mut().zip(w).for_each(|(a, b)| *a *= b);
        }
        let rep = conservation_report(&setup, &collision_integral(&setup, &big, &big)?);
        println!("      conservation {rep:?}");
    }
    Ok(())
}
