//! Momentum and angular momentum balance of the Maxwell field, checked on
//! manufactured solutions at increasing resolution.

use rvml::maxwell::{
    angular_momentum_rate_check, momentum_identity_residual, sample_patch, Axis, Manufactured, PatchGrid,
};
use rvml::Vec3;

fn main() {
    let smooth = Manufactured::smooth();
    println!("momentum identity residual");
    for n in [8, 16, 32] {
        let r = momentum_identity_residual(&smooth, Vec3::zeros(), Vec3::new(1.0, 1.2, 0.9), n, 0.3);
        println!("  {n:>3} cells  {r:.3e}");
    }

    let compact = Manufactured::compact(Vec3::new(0.5, 0.5, 0.5), 0.35);
    let axis = Axis {
        origin: Vec3::new(0.5, 0.5, 0.5),
        direction: Vec3::new(0.0, 0.0, 1.0),
    };
    println!("angular momentum identity mismatch");
    for n in [12, 24, 48] {
        let grid = PatchGrid {
            lo: Vec3::zeros(),
            side: 1.0,
            n,
        };
        let h = grid.spacing();
        let series: Vec<_> = [-h, 0.0, h]
            .iter()
            .map(|dt| sample_patch(&compact, &grid, 0.4 + dt))
            .collect();
        let r = angular_momentum_rate_check(&grid, &series, &axis);
        println!("  {n:>3} cells  {:.3e}", r.relative_mismatch());
    }
}
