//! Evaluates the relativistic Landau kernel and its algebraic properties at
//! a handful of momentum pairs.

use rvml::equilibria::{Sign, SpeciesParams};
use rvml::kernel::{kappa, s_matrix, Kernel, KernelParams};
use rvml::Vec3;

fn main() -> rvml::Result<()> {
    let sp = SpeciesParams::unit(Sign::Plus);
    let k = Kernel::new(&sp, &sp, &KernelParams::default());
    let pairs = [
        (Vec3::new(0.3, 0.0, 0.0), Vec3::new(-0.2, 0.4, 0.1)),
        (Vec3::new(2.0, -1.0, 0.5), Vec3::new(0.0, 0.0, 3.0)),
        (Vec3::new(5.0, 5.0, 5.0), Vec3::new(4.9, 5.1, 5.0)),
    ];
    for (p, q) in pairs {
        let phi = k.phi(&p, &q)?;
        let w = p / sp.p0(&p) - q / sp.p0(&q);
        let eig = phi.symmetric_eigenvalues();
        println!("p = {p:?}, q = {q:?}");
        println!("  eigenvalues of Phi {:?}", eig.as_slice());
        println!("  |Phi (p/p0 - q/q0)| / |Phi| = {:.2e}", (phi * w).norm() / phi.norm());
        println!("  |S(p, q)| = {:.6e}", s_matrix(&p, &q, 1.0, 1.0).norm());
    }
    for r in [0.0, 1.0, 3.0] {
        println!("kappa(|p| = {r}) = {:.10}", kappa(&Vec3::new(r, 0.0, 0.0), 1e-10)?);
    }
    Ok(())
}
