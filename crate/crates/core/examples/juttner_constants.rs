//! Species constants, Juttner equilibria and the Bessel function K2.
//!
//! Run with `cargo run --release --example juttner_constants`.

use rvml::equilibria::{bessel_k2, check_neutrality, mass_constant, Juttner, PlasmaPair};
use rvml::Vec3;

fn main() -> rvml::Result<()> {
    let pair = PlasmaPair::default();
    for sp in pair.species() {
        let j = Juttner::new(sp)?;
        let mass = j.radial_moment(|_| 1.0, 0, 1e-12)?;
        println!(
            "{:?} species: M = {:.12} (+- {:.1e}), e M = {:.12}, J(0) = {:.6e}, J(1, 0, 0) = {:.6e}",
            sp.sign,
            mass.value,
            mass.error,
            sp.charge * mass.value,
            j.eval(&Vec3::zeros()),
            j.eval(&Vec3::new(1.0, 0.0, 0.0)),
        );
        println!("  normalising constant {:.12}", mass_constant(&sp, 1e-12)?);
    }
    println!("neutrality residual {:.3e}", check_neutrality(&pair, 1e-12)?);
    for s in [0.5, 1.0, 2.0, 5.0, 10.0] {
        println!("K2({s:>4}) = {:.15e}", bessel_k2(s, 1e-13)?);
    }
    Ok(())
}
