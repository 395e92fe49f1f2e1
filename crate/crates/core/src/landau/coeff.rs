//! Coefficient fields of the nonlinear equation written in divergence form
//! around `f`:
//!
//! ```text
//! sigma_f   = sum_t int Phi_st (J_t + sqrt(J_t) f_t)
//! a_f^i     = -sum_t int Phi_st^{ij} sqrt(J_t) (q_j / 2 q_0 f_t + d_j f_t)
//! C_f       = -1/2 p.sigma_f.p / p_0^2 + d_i(sigma_f^{ij} p_j / p_0)
//!             - sum_t int (d_{p_i} - p_i / 2 p_0) Phi_st^{ij} sqrt(J_t) d_j f_t
//! ```
//!
//! `p` runs over the nodes and `q` over the corner lattice (never equal to a
//! node). Divergences of the kernel in `p` use central differences.

use rayon::prelude::*;
use serde::Serialize;

use super::operator::LinearizedOperator;
use super::{CollisionSetup, DistributionVector};
use crate::{Mat3, Result, Vec3};

/// Relative step for kernel differences in `p`.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub sigma: [Vec<Mat3>; 2],
    pub a: [Vec<Vec3>; 2],
    pub c: [Vec<f64>; 2],
}

impl CoefficientFields {
    /// Smallest eigenvalue of `sigma_f` over all nodes and both species.
    pub fn min_sigma_eigenvalue(&self) -> f64 {
        self.sigma
            .iter()
            .flatten()
            .map(|m| m.symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_p |a_f| + |C_f|`.
    pub fn sup_a_plus_c(&self) -> f64 {
        (0..2)
            .flat_map(|s| self.a[s].iter().zip(&self.c[s]).map(|(a, c)| a.norm() + c.abs()))
            .fold(0.0, f64::max)
    }
}

struct Accum {
    sigma: Mat3,
    div_sigma: Vec3,
    a: Vec3,
    tail: f64,
}

/// `(∂_{p_i} Phi^{ij})_j` by central differences.
fn kernel_divergence(setup: &CollisionSetup, s: usize, t: usize, p: &Vec3, q: &Vec3) -> Result<Vec3> {
    let step = FD_STEP * p.norm().max(1.0);
    let mut d = Vec3::zeros();
    for i in 0..3 {
        let mut e = Vec3::zeros();
        e[i] = step;
        let diff = (setup.kernel(s, t).phi(&(p + e), q)? - setup.kernel(s, t).phi(&(p - e), q)?) / (2.0 * step);
        d += diff.row(i).transpose();
    }
    Ok(d)
}

pub fn coeff_fields(setup: &CollisionSetup, f: &DistributionVector) -> Result<CoefficientFields> {
    let grid = setup.grid();
    let w = grid.cell_volume();
    let pos = setup.corner_positions();
    let corner_f = [0, 1].map(|t| setup.corner_values(f.species(t)));
    let sqrt_jc: [Vec<f64>; 2] = [0, 1].map(|t| setup.j_corners(t).iter().map(|v| v.sqrt()).collect());
    let per_species = |s: usize| -> Result<Vec<(Mat3, Vec3, f64)>> {
        let sp = *setup.juttner(s).species();
        grid.nodes()
            .par_iter()
            .map(|p| {
                let mut acc = Accum {
                    sigma: Mat3::zeros(),
                    div_sigma: Vec3::zeros(),
                    a: Vec3::zeros(),
                    tail: 0.0,
                };
                let p0 = sp.p0(p);
                for t in 0..2 {
                    let spt = *setup.juttner(t).species();
                    let (fv, fg) = &corner_f[t];
                    for (c, q) in pos.iter().enumerate() {
                        let Some(phi) = setup.phi_punctured(s, t, p, q)? else {
                            continue;
                        };
                        let div = kernel_divergence(setup, s, t, p, q)?;
                        let sj = sqrt_jc[t][c];
                        let density = w * (setup.j_corners(t)[c] + sj * fv[c]);
                        acc.sigma += phi * density;
                        acc.div_sigma += div * density;
                        acc.a -= phi * (q * (fv[c] / (2.0 * spt.p0(q))) + fg[c]) * (w * sj);
                        let drift = div - phi.transpose() * p / (2.0 * p0);
                        acc.tail += w * sj * drift.dot(&fg[c]);
                    }
                }
                let sp_p = acc.sigma * p;
                let c = -0.5 * p.dot(&sp_p) / (p0 * p0) + acc.div_sigma.dot(p) / p0 + acc.sigma.trace() / p0
                    - p.dot(&sp_p) / (p0 * p0 * p0)
                    - acc.tail;
                Ok((acc.sigma, acc.a, c))
            })
            .collect()
    };
    let parts = [per_species(0)?, per_species(1)?];
    Ok(CoefficientFields {
        sigma: [0, 1].map(|s| parts[s].iter().map(|v| v.0).collect()),
        a: [0, 1].map(|s| parts[s].iter().map(|v| v.1).collect()),
        c: [0, 1].map(|s| parts[s].iter().map(|v| v.2).collect()),
    })
}

/// Discrete `W^1_2` norm: nodal `l^2` plus corner gradients.
pub fn sobolev_norm(setup: &CollisionSetup, f: &DistributionVector) -> f64 {
    let w = setup.grid().cell_volume();
    let mut acc = f.inner(f, setup.grid());
    for s in 0..2 {
        let (_, grads) = setup.corner_values(f.species(s));
        acc += w * grads.iter().map(|g| g.norm_squared()).sum::<f64>();
    }
    acc.sqrt()
}

/// Pointwise envelope `|K f|(p) <= C J^{1/4}(p) ||f||`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayEnvelope {
    /// Smallest `C` valid on every node.
    pub constant: f64,
    /// `|p|` of the node attaining it.
    pub attained_at: f64,
}

pub fn decay_envelope(op: &LinearizedOperator, f: &DistributionVector) -> DecayEnvelope {
    let setup = op.setup();
    let kf = op.apply_k(f);
    let norm = f.norm(op.grid());
    let mut best = DecayEnvelope {
        constant: 0.0,
        attained_at: 0.0,
    };
    for s in 0..2 {
        for (k, p) in op.grid().nodes().iter().enumerate() {
            let quarter = setup.sqrt_j_nodes(s)[k].sqrt();
            let r = kf.species(s)[k].abs() / (quarter * norm);
            if r > best.constant {
                best = DecayEnvelope {
                    constant: r,
                    attained_at: p.norm(),
                };
            }
        }
    }
    best
}
