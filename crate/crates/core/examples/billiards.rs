//! Free streaming with specular reflection in a disk and in a ball.
//! Speed is conserved exactly by the reflection, angular momentum about the
//! symmetry axis up to rounding, and running the flow backwards returns the
//! particles to their start.

use rvml::scenarios::{random_particles, run_billiard, BilliardConfig, Domain};

fn main() -> rvml::Result<()> {
    for domain in [Domain::Disk { radius: 1.0 }, Domain::Ball { radius: 1.0 }] {
        let cfg = BilliardConfig {
            domain,
            particles: random_particles(&domain, 100, 2.0, 3),
            t_end: 1e9,
            max_reflections: 2_000,
        };
        let r = run_billiard(&cfg)?;
        println!("{domain:?}");
        println!("  reflections          {}", r.total_reflections);
        println!("  max | |p| - |p0| |   {:.2e}", r.max_dp_norm);
        println!("  max |L_axis drift|   {:.2e}", r.max_dl_axial);
        println!("  max |L drift|        {:.2e}", r.max_dl);
        println!("  reversal error       {:.2e}", r.max_reversal_error);
    }
    Ok(())
}
