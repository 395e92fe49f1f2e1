//! Splits the cavity fields into divergence-free and gradient parts after a
//! static charge has been placed in the box.

use rvml::maxwell::{helmholtz_split, BoxGeometry, CavityMode, EMFieldState};
use rvml::Vec3;

fn main() -> rvml::Result<()> {
    let g = BoxGeometry::cube(16, 1.0);
    let mut s = EMFieldState::new(g, g.stable_dt(0.5))?;
    let mode = CavityMode::new(&g, [1, 1, 2], Vec3::new(0.4, 0.3, -0.2))?;
    s.set_fields_from_potential(|x| mode.e(x, 0.0), |x| mode.vector_potential(x, 0.0));
    let r = helmholtz_split(&s, 1e-12)?;
    println!("pure mode: {r:#?}");

    s.set_electrostatic(|x| (-((x - Vec3::new(0.5, 0.5, 0.5)).norm_squared()) / 0.02).exp());
    let r = helmholtz_split(&s, 1e-12)?;
    println!("electrostatic field: {r:#?}");
    Ok(())
}
