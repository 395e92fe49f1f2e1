//! Builds the exact Gaussian moment tables, solves for the polynomial
//! coefficients of the moment functions and checks their orthogonality.

use rvml::momentfn::{check_bij, i_tables, solve_k, MomentProfile};

fn main() -> rvml::Result<()> {
    let tables = i_tables(1e-10)?;
    println!("m_n = {:?}", &tables.m[..8]);
    println!("i_0 = {:.14}, i_1 = {:.14}", tables.i0.value, tables.i1.value);
    for (j, c) in tables.i.iter().enumerate() {
        println!("i_{j} = {} i_0 + {} i_1 = {:.12}", c.on_i0, c.on_i1, tables.i_value(j));
    }
    let coeffs = solve_k(&tables)?;
    println!(
        "det C = {:.6e} (closed form {:.6e})",
        coeffs.det_c, coeffs.det_c_closed_form
    );
    println!("k = {:?}", coeffs.k);
    let checks = check_bij(&MomentProfile::new(coeffs.k)?, 1e-10, 1e-6)?;
    println!("lambda = {:?}", checks.lambda);
    for r in &checks.residuals {
        println!("  {:<40} {:+.3e}", r.name, r.value);
    }
    Ok(())
}
