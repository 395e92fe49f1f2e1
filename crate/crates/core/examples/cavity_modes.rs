//! A standing mode in a perfectly conducting cube, advanced with the Yee
//! scheme. Prints energy, divergence and the error against the exact mode,
//! and writes the diagnostics time series.

use rvml::maxwell::{mode_error, write_diagnostics_csv, BoxGeometry, CavityMode, EMFieldState};
use rvml::Vec3;

fn main() -> rvml::Result<()> {
    let g = BoxGeometry::cube(16, 1.0);
    let mut s = EMFieldState::new(g, g.stable_dt(0.5))?;
    let mode = CavityMode::new(&g, [1, 2, 1], Vec3::new(1.0, 0.2, -0.4))?;
    s.set_fields_from_potential(|x| mode.e(x, 0.0), |x| mode.vector_potential(x, 0.0));
    println!("mode frequency {:.6}, dt {:.4e}", mode.omega(), s.dt());

    let mut series = vec![s.diagnostics()];
    for n in 1..=400 {
        s.step(None);
        if n % 50 == 0 {
            let d = s.diagnostics();
            println!(
                "t = {:.3}  W = {:.15e}  |div B| = {:.1e}  PEC {}  error {:.3e}",
                d.t,
                d.discrete_energy,
                d.div_b_residual,
                s.pec_holds(),
                mode_error(&s, &mode)
            );
            series.push(d);
        }
    }
    let path = std::env::temp_dir().join("rvml-cavity.csv");
    write_diagnostics_csv(&path, &series)?;
    println!("wrote {}", path.display());
    Ok(())
}
