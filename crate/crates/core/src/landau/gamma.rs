//! The bilinear collision term on the corner lattice.
//!
//! `C_s(G, H)` is discretised in flux form. At every corner the flux is
//!
//! ```text
//! F_s(c) = sigma_s(c) grad G_s(c) - G_s(c) a_s(c),
//! sigma_s(c) = sum_t sum_{c' != c} W Phi_st(c, c') H_t(c'),
//! a_s(c)     = sum_t sum_{c' != c} W Phi_st(c, c') grad H_t(c'),
//! ```
//!
//! and the node value is the adjoint of the corner gradient applied to it, so
//! that `sum_n w psi(n) C_s(n) = -sum_c W grad psi(c) . F_s(c)` holds exactly.
//! Mass of each species is therefore conserved to rounding, and so is total
//! momentum of `C(G, G)`, because the flux pairs `(s, c)` and `(t, c')` cancel
//! under the swap symmetry of the kernel.

use rayon::prelude::*;
use serde::Serialize;

use super::{CollisionSetup, DistributionVector};
use crate::{Mat3, Result, Vec3};

/// Relative conservation residuals `|int psi C| / int |psi| |C|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationReport {
    pub mass: [f64; 2],
    pub momentum: [f64; 3],
    pub energy: f64,
}

impl ConservationReport {
    pub fn worst_exact(&self) -> f64 {
        self.mass
            .iter()
            .chain(&self.momentum)
            .fold(0.0f64, |a, b| a.max(b.abs()))
    }
}

/// `C(G, H)` for raw (not `sqrt J`-weighted) node fields.
pub fn collision_integral(
    setup: &CollisionSetup,
    g: &DistributionVector,
    h: &DistributionVector,
) -> Result<DistributionVector> {
    let nodes = setup.nodes();
    let w = setup.grid().cell_volume();
    let pos = setup.corner_positions();
    let gc = [0, 1].map(|s| setup.corner_values(g.species(s)));
    let hc = [0, 1].map(|s| setup.corner_values(h.species(s)));
    let fluxes: Vec<[Vec3; 2]> = (0..setup.corners())
        .into_par_iter()
        .map(|c| {
            let mut sig = [Mat3::zeros(); 2];
            let mut drift = [Vec3::zeros(); 2];
            for (cp, q) in pos.iter().enumerate() {
                if cp == c {
                    continue;
                }
                for s in 0..2 {
                    for t in 0..2 {
                        let Some(phi) = setup.phi_punctured(s, t, &pos[c], q)? else {
                            continue;
                        };
                        let phi = phi * w;
                        sig[s] += phi * hc[t].0[cp];
                        drift[s] += phi * hc[t].1[cp];
                    }
                }
            }
            Ok([0, 1].map(|s| sig[s] * gc[s].1[c] - drift[s] * gc[s].0[c]))
        })
        .collect::<Result<_>>()?;
    let beta = setup.gradient_weights();
    let mut out = DistributionVector::zeros(nodes);
    for (c, flux) in fluxes.iter().enumerate() {
        let ids = setup.corner_nodes(c);
        for s in 0..2 {
            let dst = out.species_mut(s);
            for (o, &n) in ids.iter().enumerate() {
                // Corner and node weights are both h^3, so the adjoint carries no factor.
                dst[n] -= beta[o].dot(&flux[s]);
            }
        }
    }
    Ok(out)
}

/// `Gamma(f, h) = J^{-1/2} C(sqrt J f, sqrt J h)`.
pub fn apply_gamma(
    setup: &CollisionSetup,
    f: &DistributionVector,
    h: &DistributionVector,
) -> Result<DistributionVector> {
    let weight = |v: &DistributionVector| {
        let mut out = v.clone();
        for s in 0..2 {
            let sq = setup.sqrt_j_nodes(s);
            out.species_mut(s).iter_mut().zip(sq).for_each(|(a, b)| *a *= b);
        }
        out
    };
    let mut c = collision_integral(setup, &weight(f), &weight(h))?;
    for s in 0..2 {
        let sq = setup.sqrt_j_nodes(s).to_vec();
        c.species_mut(s).iter_mut().zip(sq).for_each(|(a, b)| *a /= b);
    }
    Ok(c)
}

/// Conservation residuals of a collision integral `C` (not divided by `sqrt J`).
pub fn conservation_report(setup: &CollisionSetup, c: &DistributionVector) -> ConservationReport {
    let grid = setup.grid();
    let nodes = grid.nodes();
    let ratio = |num: f64, den: f64| if den > 0.0 { num.abs() / den } else { 0.0 };
    let mass = [0, 1].map(|s| {
        let cs = c.species(s);
        ratio(
            grid.quad(cs),
            grid.quad(&cs.iter().map(|v| v.abs()).collect::<Vec<_>>()),
        )
    });
    let momentum = [0, 1, 2].map(|i| {
        let (mut num, mut den) = (0.0, 0.0);
        for s in 0..2 {
            for (p, v) in nodes.iter().zip(c.species(s)) {
                num += p[i] * v;
                den += (p[i] * v).abs();
            }
        }
        ratio(num, den)
    });
    let (mut num, mut den) = (0.0, 0.0);
    for s in 0..2 {
        let sp = setup.juttner(s).species();
        for (p, v) in nodes.iter().zip(c.species(s)) {
            let e = sp.p0(p);
            num += e * v;
            den += (e * v).abs();
        }
    }
    ConservationReport {
        mass,
        momentum,
        energy: ratio(num, den),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{PlasmaPair, Sign, SpeciesParams};
    use crate::kernel::KernelParams;

    fn bump(setup: &CollisionSetup) -> DistributionVector {
        setup.tabulate(|s, p| {
            let shift = Vec3::new(0.4, -0.2, 0.1) * if s == 0 { 1.0 } else { -0.5 };
            (1.0 + 0.3 * s as f64) * (-(p - shift).norm_squared()).exp()
        })
    }

    #[test]
    fn mass_and_momentum_conserved_exactly() {
        let setup = CollisionSetup::from_grid_params(8, 4.0, PlasmaPair::default(), KernelParams::default()).unwrap();
        let f = bump(&setup);
        let c = collision_integral(&setup, &f, &f).unwrap();
        let r = conservation_report(&setup, &c);
        assert!(r.worst_exact() < 1e-12, "{r:?}");
        assert!(r.energy < 0.2);
    }

    #[test]
    fn unequal_masses_conserve_momentum() {
        let pair = PlasmaPair::new(
            SpeciesParams::new(3.0, 1.0, Sign::Plus, 1.0).unwrap(),
            SpeciesParams::unit(Sign::Minus),
        )
        .unwrap();
        let setup = CollisionSetup::from_grid_params(7, 4.0, pair, KernelParams::default()).unwrap();
        let f = bump(&setup);
        let r = conservation_report(&setup, &collision_integral(&setup, &f, &f).unwrap());
        assert!(r.worst_exact() < 1e-12, "{r:?}");
    }

    #[test]
    fn juttner_is_a_stationary_point() {
        // C(J, J) vanishes up to discretisation error; check it is small
        // relative to C evaluated on a perturbed state.
        let setup = CollisionSetup::from_grid_params(8, 4.0, PlasmaPair::default(), KernelParams::default()).unwrap();
        let j = setup.tabulate(|s, p| setup.juttner(s).eval(p));
        let cj = collision_integral(&setup, &j, &j).unwrap();
        let f = bump(&setup);
        let cf = collision_integral(&setup, &f, &f).unwrap();
        assert!(cj.norm(setup.grid()) < 0.1 * cf.norm(setup.grid()));
    }

    #[test]
    fn gamma_is_bilinear() {
        let setup = CollisionSetup::from_grid_params(5, 3.0, PlasmaPair::default(), KernelParams::default()).unwrap();
        let f = bump(&setup);
        let h = setup.tabulate(|_, p| p.y * (-p.norm_squared()).exp());
        let a = apply_gamma(&setup, &DistributionVector::linear_combination(2.0, &f, 1.0, &h), &h).unwrap();
        let b = DistributionVector::linear_combination(
            2.0,
            &apply_gamma(&setup, &f, &h).unwrap(),
            1.0,
            &apply_gamma(&setup, &h, &h).unwrap(),
        );
        let mut d = a.clone();
        d.axpy(-1.0, &b);
        assert!(d.norm(setup.grid()) < 1e-12 * b.norm(setup.grid()));
    }
}
