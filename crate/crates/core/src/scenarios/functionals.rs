//! Truncated instant energy and dissipation,
//!
//! ```text
//! I(t) = sum_{k <= k_max} ||d_t^k f||^2 + ||d_t^k [E, B]||^2
//! D(t) = sum_{k <= k_max} ||(1 - P) d_t^k f||^2   (l^2 plus corner gradients)
//! ```
//!
//! with time derivatives replaced by centred differences of equally spaced
//! snapshots. Only `k_max <= 2` is supported.

use serde::Serialize;

use crate::landau::{project, sobolev_norm, CollisionSetup, DistributionVector, ProjectionBasis};
use crate::maxwell::{EMFieldState, StaggeredVector};
use crate::{Error, Result};

pub const MAX_TIME_DERIVATIVES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub t: f64,
    pub i_parallel: f64,
    pub d_parallel: f64,
}

/// Centred difference of order `k <= 2` at index `n` with spacing `h`.
fn stencil(k: usize, h: f64) -> [f64; 3] {
    match k {
        0 => [0.0, 1.0, 0.0],
        1 => [-0.5 / h, 0.0, 0.5 / h],
        _ => [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)],
    }
}

fn combine_f(f: &[DistributionVector], n: usize, w: [f64; 3]) -> DistributionVector {
    let mut out = DistributionVector::zeros(f[n].nodes());
    for (o, c) in w.iter().enumerate() {
        if *c != 0.0 {
            out.axpy(*c, &f[n + o - 1]);
        }
    }
    out
}

fn combine_field(s: &[EMFieldState], n: usize, w: [f64; 3], pick: impl Fn(&EMFieldState) -> &StaggeredVector) -> f64 {
    let mut out = pick(&s[n]).clone();
    for c in out.comp.iter_mut() {
        c.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
    }
    for (o, c) in w.iter().enumerate() {
        if *c != 0.0 {
            out.axpy(*c, pick(&s[n + o - 1]));
        }
    }
    out.norm_sq() * s[n].geometry().cell_volume()
}

/// Evaluates `I` and `D` at every snapshot that has `k_max` neighbours on
/// each side.
pub fn functionals(
    setup: &CollisionSetup,
    basis: &ProjectionBasis,
    times: &[f64],
    f: &[DistributionVector],
    fields: Option<&[EMFieldState]>,
    k_max: usize,
) -> Result<Vec<FunctionalValue>> {
    if k_max > MAX_TIME_DERIVATIVES {
        return Err(Error::config(format!("k_max = {k_max} exceeds {MAX_TIME_DERIVATIVES}")));
    }
    if times.len() != f.len() || fields.is_some_and(|s| s.len() != f.len()) {
        return Err(Error::config("snapshot series have different lengths"));
    }
    if f.len() < 2 * k_max + 1 {
        return Err(Error::config(format!(
            "{} snapshots are too few for k_max = {k_max}",
            f.len()
        )));
    }
    let h = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
    {
        return Err(Error::config("snapshot times are not equally spaced"));
    }
    let grid = setup.grid();
    let mut out = Vec::new();
    for n in k_max..f.len() - k_max {
        let (mut i_par, mut d_par) = (0.0, 0.0);
        for k in 0..=k_max {
            let w = stencil(k, h);
            let dk = if k == 0 { f[n].clone() } else { combine_f(f, n, w) };
            i_par += dk.inner(&dk, grid);
            if let Some(s) = fields {
                if k == 0 {
                    i_par += (s[n].e.norm_sq() + s[n].b.norm_sq()) * s[n].geometry().cell_volume();
                } else {
                    i_par += combine_field(s, n, w, |x| &x.e) + combine_field(s, n, w, |x| &x.b);
                }
            }
            let (pf, _) = project(&dk, basis, grid);
            let micro = DistributionVector::linear_combination(1.0, &dk, -1.0, &pf);
            d_par += sobolev_norm(setup, &micro).powi(2);
        }
        out.push(FunctionalValue {
            t: times[n],
            i_parallel: i_par,
            d_parallel: d_par,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::PlasmaPair;
    use crate::kernel::KernelParams;
    use crate::landau::{build_basis, BasisNormalization};

    #[test]
    fn zeroth_order_is_plain_norms() {
        let setup = CollisionSetup::from_grid_params(5, 3.0, PlasmaPair::default(), KernelParams::default()).unwrap();
        let basis = build_basis(&setup, BasisNormalization::Grid).unwrap();
        let f: Vec<_> = (0..3)
            .map(|k| setup.tabulate(|s, p| (k as f64 + 1.0) * (s as f64 + p.x) * (-p.norm_squared()).exp()))
            .collect();
        let v = functionals(&setup, &basis, &[0.0, 0.5, 1.0], &f, None, 0).unwrap();
        assert_eq!(v.len(), 3);
        for (k, fv) in v.iter().enumerate() {
            let direct = f[k].inner(&f[k], setup.grid());
            assert!((fv.i_parallel - direct).abs() < 1e-12 * direct);
        }
        assert!(functionals(&setup, &basis, &[0.0, 0.5, 1.0], &f, None, 3).is_err());
        assert!(functionals(&setup, &basis, &[0.0, 0.5, 1.1], &f, None, 1).is_err());
    }

    #[test]
    fn stationary_null_element_has_no_dissipation() {
        let setup = CollisionSetup::from_grid_params(5, 3.0, PlasmaPair::default(), KernelParams::default()).unwrap();
        let basis = build_basis(&setup, BasisNormalization::Grid).unwrap();
        let f = vec![basis.chi(3).clone(); 5];
        let v = functionals(&setup, &basis, &[0.0, 1.0, 2.0, 3.0, 4.0], &f, None, 2).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0].i_parallel - 1.0).abs() < 1e-12);
        assert!(v[0].d_parallel < 1e-20);
    }
}
