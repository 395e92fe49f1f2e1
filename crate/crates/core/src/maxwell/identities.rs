//! Field momentum and angular momentum identities, checked on manufactured
//! solutions:
//!
//! ```text
//! d_t (E x B / 4 pi) - div T + (rho E + j x B) = 0,
//! T_ij = (E_i E_j + B_i B_j - |E|^2/2 delta_ij - |B|^2/2 delta_ij) / 4 pi,
//!
//! d_t (1/4 pi) int R . (E x B) = -int R . (rho E + j x B),   R = w x (x - x0).
//! ```
//!
//! The angular identity needs the boundary flux of `R . T` to vanish. It is
//! checked on a periodic patch with fields supported strictly inside it,
//! because a box is not rotation invariant.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{Axis, Manufactured};
use crate::{Mat3, Vec3};

fn stress(e: &Vec3, b: &Vec3) -> Mat3 {
    (e * e.transpose() + b * b.transpose() - Mat3::identity() * (0.5 * (e.norm_squared() + b.norm_squared())))
        / (4.0 * PI)
}

/// Max-norm of the pointwise momentum residual over the interior nodes of
/// an `n^3` lattice on `[lo, hi]`, with centred differences of step `h` in
/// space and time.
pub fn momentum_identity_residual(m: &Manufactured, lo: Vec3, hi: Vec3, n: usize, t: f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let dt = h.min();
    let points: Vec<Vec3> = (1..n)
        .flat_map(|i| (1..n).flat_map(move |j| (1..n).map(move |k| Vec3::new(i as f64, j as f64, k as f64))))
        .map(|ijk| lo + ijk.component_mul(&h))
        .collect();
    points
        .par_iter()
        .map(|x| {
            let g = |s: f64| m.e(x, s).cross(&m.b(x, s)) / (4.0 * PI);
            let dg = (g(t + dt) - g(t - dt)) / (2.0 * dt);
            let mut div_t = Vec3::zeros();
            for a in 0..3 {
                let mut step = Vec3::zeros();
                step[a] = h[a];
                let (xp, xm) = (x + step, x - step);
                let dt_a = (stress(&m.e(&xp, t), &m.b(&xp, t)) - stress(&m.e(&xm, t), &m.b(&xm, t))) / (2.0 * h[a]);
                div_t += dt_a.column(a);
            }
            let (e, b) = (m.e(x, t), m.b(x, t));
            let force = e * m.rho(x, t) + m.j(x, t).cross(&b);
            (dg - div_t + force).amax()
        })
        .reduce(|| 0.0, f64::max)
}

/// Periodic cube `[lo, lo + side)^3` with `n` cells per axis, sampled at
/// cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchGrid {
    pub lo: Vec3,
    pub side: f64,
    pub n: usize,
}

impl PatchGrid {
    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn points(&self) -> Vec<Vec3> {
        let h = self.spacing();
        let n = self.n;
        (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| [i, j, k])))
            .map(|[i, j, k]| self.lo + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h)
            .collect()
    }
}

/// Fields and sources on a patch at one time.
#[derive(Debug, Clone)]
pub struct PatchSnapshot {
    pub t: f64,
    pub e: Vec<Vec3>,
    pub b: Vec<Vec3>,
    pub rho: Vec<f64>,
    pub j: Vec<Vec3>,
}

pub fn sample_patch(m: &Manufactured, grid: &PatchGrid, t: f64) -> PatchSnapshot {
    let pts = grid.points();
    PatchSnapshot {
        t,
        e: pts.par_iter().map(|x| m.e(x, t)).collect(),
        b: pts.par_iter().map(|x| m.b(x, t)).collect(),
        rho: pts.par_iter().map(|x| m.rho(x, t)).collect(),
        j: pts.par_iter().map(|x| m.j(x, t)).collect(),
    }
}

/// Both sides of the angular identity at the interior times of a series.
#[derive(Debug, Clone, Serialize)]
pub struct AngularMomentumReport {
    pub times: Vec<f64>,
    /// Centred difference of `(1/4pi) int R . (E x B)`.
    pub rate: Vec<f64>,
    /// `-int R . (rho E + j x B)`.
    pub torque: Vec<f64>,
    /// `d_t P + int (rho E + j x B)` for the linear momentum `P`.
    pub linear_mismatch: Vec<[f64; 3]>,
}

impl AngularMomentumReport {
    pub fn absolute_mismatch(&self) -> Vec<f64> {
        self.rate.iter().zip(&self.torque).map(|(a, b)| a - b).collect()
    }

    /// `max |rate - torque| / max |torque|`.
    pub fn relative_mismatch(&self) -> f64 {
        let scale = self.torque.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.absolute_mismatch().iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }
}

pub fn angular_momentum_rate_check(grid: &PatchGrid, series: &[PatchSnapshot], axis: &Axis) -> AngularMomentumReport {
    let pts = grid.points();
    let dv = grid.spacing().powi(3);
    let integrals = |s: &PatchSnapshot| {
        let (mut l, mut p, mut tq, mut f) = (0.0, Vec3::zeros(), 0.0, Vec3::zeros());
        for (k, x) in pts.iter().enumerate() {
            let r = axis.rotation_field(x);
            let g = s.e[k].cross(&s.b[k]) / (4.0 * PI);
            let force = s.e[k] * s.rho[k] + s.j[k].cross(&s.b[k]);
            l += r.dot(&g);
            p += g;
            tq -= r.dot(&force);
            f += force;
        }
        (l * dv, p * dv, tq * dv, f * dv)
    };
    let values: Vec<_> = series.iter().map(integrals).collect();
    let mut out = AngularMomentumReport {
        times: Vec::new(),
        rate: Vec::new(),
        torque: Vec::new(),
        linear_mismatch: Vec::new(),
    };
    for k in 1..series.len().saturating_sub(1) {
        let span = series[k + 1].t - series[k - 1].t;
        out.times.push(series[k].t);
        out.rate.push((values[k + 1].0 - values[k - 1].0) / span);
        out.torque.push(values[k].2);
        let lin = (values[k + 1].1 - values[k - 1].1) / span + values[k].3;
        out.linear_mismatch.push([lin.x, lin.y, lin.z]);
    }
    out
}
