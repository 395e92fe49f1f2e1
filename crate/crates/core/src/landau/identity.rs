//! Numerical check of the divergence identity
//!
//! ```text
//! d_{p_i} int Phi^{ij} sqrt(J) d_j g dq
//!   = d_{p_i} int Phi^{ij} sqrt(J) q_j / (2 q_0) g dq
//!     - 4 int (P.Q) / (p_0 q_0) ((P.Q)^2 - 1)^{-1/2} sqrt(J) g dq
//!     - kappa(p) sqrt(J(p)) g(p)
//! ```
//!
//! for unit masses and kernel constant 1. The derivative in `p` is taken
//! inside the integral (the differentiated kernel is locally integrable) by
//! central differences; `q` runs over the half-staggered grid, so `p != q`.
//! `g` is supplied analytically together with its gradient.

use serde::Serialize;

use crate::equilibria::{Juttner, Sign, SpeciesParams};
use crate::kernel::{gamma_minus_one, kappa, Kernel};
use crate::vgrid::VelocityGrid;
use crate::{Result, Vec3};

const FD_STEP: f64 = 1e-5;

/// Which coefficient multiplies the pointwise term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdentityVariant {
    /// `kappa(p) = 2^{7/2} pi p_0 int_0^pi (1 + |p|^2 sin^2)^{-3/2} sin`.
    AsStated,
    /// `kappa(p) / 2^{3/2}`.
    RescaledKappa,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceIdentity {
    pub n_per_axis: usize,
    pub variant: IdentityVariant,
    pub samples: Vec<[f64; 3]>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// The three right-hand terms per sample: drift, principal, pointwise.
    pub rhs_terms: Vec<[f64; 3]>,
}

impl DivergenceIdentity {
    /// `max_k |lhs - rhs| / |lhs|`.
    pub fn max_relative(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(l, r)| (l - r).abs() / l.abs())
            .fold(0.0, f64::max)
    }
}

/// A smooth compactly supported test function with its gradient.
pub trait TestFunction: Sync {
    fn value(&self, q: &Vec3) -> f64;
    fn gradient(&self, q: &Vec3) -> Vec3;
}

/// `(1 - |q - c|^2 / R^2)^4` inside the ball, zero outside.
#[derive(Debug, Clone, Copy)]
pub struct PolyBump {
    pub centre: Vec3,
    pub radius: f64,
}

impl TestFunction for PolyBump {
    fn value(&self, q: &Vec3) -> f64 {
        let s = 1.0 - (q - self.centre).norm_squared() / (self.radius * self.radius);
        if s > 0.0 {
            s.powi(4)
        } else {
            0.0
        }
    }

    fn gradient(&self, q: &Vec3) -> Vec3 {
        let d = q - self.centre;
        let s = 1.0 - d.norm_squared() / (self.radius * self.radius);
        if s > 0.0 {
            d * (-8.0 * s.powi(3) / (self.radius * self.radius))
        } else {
            Vec3::zeros()
        }
    }
}

fn kernel_divergence(k: &Kernel, p: &Vec3, q: &Vec3) -> Result<Vec3> {
    let step = FD_STEP * p.norm().max(1.0);
    let mut d = Vec3::zeros();
    for i in 0..3 {
        let mut e = Vec3::zeros();
        e[i] = step;
        let diff = (k.phi(&(p + e), q)? - k.phi(&(p - e), q)?) / (2.0 * step);
        d += diff.row(i).transpose();
    }
    Ok(d)
}

pub fn divergence_identity(
    n: usize,
    p_max: f64,
    samples: &[Vec3],
    g: &dyn TestFunction,
    variant: IdentityVariant,
) -> Result<DivergenceIdentity> {
    let p_grid = VelocityGrid::centered(n, p_max)?;
    let q_grid = p_grid.staggered_companion();
    let w = q_grid.cell_volume();
    let juttner = Juttner::new(SpeciesParams::unit(Sign::Plus))?;
    let kernel = Kernel::unit(1.0);
    // Only nodes where g is nonzero contribute.
    let support: Vec<(Vec3, f64, f64, Vec3)> = q_grid
        .nodes()
        .iter()
        .filter_map(|q| {
            let v = g.value(q);
            let gr = g.gradient(q);
            (v != 0.0 || gr.norm() != 0.0).then(|| (*q, juttner.sqrt(q), v, gr))
        })
        .collect();
    let snap = |p: &Vec3| p_grid.nodes()[nearest(&p_grid, p)];
    let points: Vec<Vec3> = samples.iter().map(snap).collect();
    let mut out = DivergenceIdentity {
        n_per_axis: n,
        variant,
        samples: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        rhs_terms: Vec::new(),
    };
    for p in &points {
        let p0 = (1.0 + p.norm_squared()).sqrt();
        let (mut lhs, mut drift, mut principal) = (0.0, 0.0, 0.0);
        for (q, sj, gv, gg) in &support {
            let q0 = (1.0 + q.norm_squared()).sqrt();
            let div = kernel_divergence(&kernel, p, q)?;
            lhs += w * sj * div.dot(gg);
            drift += w * sj * gv * div.dot(q) / (2.0 * q0);
            let gm1 = gamma_minus_one(p, q, p0, q0);
            let pq = 1.0 + gm1;
            principal += w * sj * gv * pq / (p0 * q0 * (gm1 * (gm1 + 2.0)).sqrt());
        }
        let mut k = kappa(p, 1e-12)?;
        if variant == IdentityVariant::RescaledKappa {
            k /= 2f64.powf(1.5);
        }
        let local = k * juttner.sqrt(p) * g.value(p);
        let terms = [drift, -4.0 * principal, -local];
        out.samples.push([p.x, p.y, p.z]);
        out.lhs.push(lhs);
        out.rhs.push(terms.iter().sum());
        out.rhs_terms.push(terms);
    }
    Ok(out)
}

fn nearest(grid: &VelocityGrid, p: &Vec3) -> usize {
    grid.nodes()
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - p).norm_squared().total_cmp(&(b.1 - p).norm_squared()))
        .map(|(i, _)| i)
        .expect("grid is nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_gradient_matches_differences() {
        let g = PolyBump {
            centre: Vec3::new(0.2, -0.1, 0.3),
            radius: 2.0,
        };
        let q = Vec3::new(0.7, 0.4, -0.5);
        let h = 1e-6;
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            let fd = (g.value(&(q + e)) - g.value(&(q - e))) / (2.0 * h);
            assert!((fd - g.gradient(&q)[i]).abs() < 1e-8);
        }
        assert_eq!(g.value(&Vec3::new(3.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn samples_snap_to_nodes() {
        let g = PolyBump {
            centre: Vec3::zeros(),
            radius: 2.0,
        };
        let r = divergence_identity(8, 3.0, &[Vec3::new(0.1, 0.1, 0.1)], &g, IdentityVariant::AsStated).unwrap();
        let h = 6.0 / 8.0;
        for c in r.samples[0] {
            assert!((c.abs() - 0.5 * h).abs() < 1e-12);
        }
    }
}
