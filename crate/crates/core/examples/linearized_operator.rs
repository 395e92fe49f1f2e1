//! Assembles the linearised collision operator on a small momentum grid,
//! inspects its null space and spectral gap, and writes the spectrum to CSV.
//!
//! `cargo run --release --example linearized_operator -- 10 6.0`

use rvml::equilibria::PlasmaPair;
use rvml::kernel::KernelParams;
use rvml::landau::{coercivity_gap, write_spectrum_csv, BasisNormalization, CollisionSetup, LinearizedOperator};

fn main() -> rvml::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let p_max: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(6.0);

    let setup = CollisionSetup::from_grid_params(n, p_max, PlasmaPair::default(), KernelParams::default())?;
    let op = LinearizedOperator::from_setup(setup, BasisNormalization::Grid)?;
    println!(
        "grid {n}^3 on [-{p_max}, {p_max}]^3, ||L - L^T|| / ||L|| = {:.2e}",
        op.asymmetry()
    );

    let gap = coercivity_gap(&op, 1e-3)?;
    println!(
        "||L|| = {:.4}, near-zero eigenvalues: {}",
        gap.norm_l, gap.near_zero_count
    );
    println!("smallest eigenvalues {:?}", gap.smallest);
    println!("null residuals {:?}", gap.null_residuals);
    println!("spectral gap on the microscopic part: {:.5}", gap.delta_hat);

    let path = std::env::temp_dir().join("rvml-spectrum.csv");
    write_spectrum_csv(&path, &gap)?;
    println!("wrote {}", path.display());
    Ok(())
}
