//! Compares both sides of the weighted divergence identity for the
//! linearised operator applied to a smooth compactly supported test
//! function, with the pointwise coefficient as stated and rescaled.

use rvml::landau::{divergence_identity, IdentityVariant, PolyBump};
use rvml::Vec3;

fn main() -> rvml::Result<()> {
    let g = PolyBump {
        centre: Vec3::new(0.2, -0.1, 0.1),
        radius: 2.5,
    };
    let samples = [Vec3::zeros(), Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.3, -0.6, 0.4)];
    for variant in [IdentityVariant::AsStated, IdentityVariant::RescaledKappa] {
        for n in [12, 16] {
            let r = divergence_identity(n, 6.0, &samples, &g, variant)?;
            println!("{variant:?} at {n}^3: max relative mismatch {:.3e}", r.max_relative());
            for (l, rhs) in r.lhs.iter().zip(&r.rhs) {
                println!("    lhs {l:+.6}  rhs {rhs:+.6}");
            }
        }
    }
    Ok(())
}
