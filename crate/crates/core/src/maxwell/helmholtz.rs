//! Discrete Helmholtz split of the cavity fields, as a diagnostic.
//!
//! `E = E_1 + grad xi` with `Delta xi = div E` on interior nodes and
//! `xi = 0` on the walls, so `E_1` is divergence free and keeps zero
//! tangential trace. `B = B_1 + grad psi` with `Delta psi = div B` on cells
//! and zero normal derivative, matching `B . n = 0`; for a Yee field
//! `div B = 0` and the gradient part vanishes.
//!
//! Both Poisson problems are solved matrix-free by conjugate gradients.

use serde::Serialize;

use super::{Array3, EMFieldState};
use crate::cg::conjugate_gradient;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelmholtzReport {
    pub e_norm: f64,
    pub e_solenoidal_norm: f64,
    pub e_gradient_norm: f64,
    /// `max |div E_1|` on interior nodes.
    pub div_e1: f64,
    /// `<E_1, grad xi>` relative to `|E|^2`.
    pub orthogonality: f64,
    pub b_gradient_norm: f64,
    pub cg_iterations: [usize; 2],
}

pub fn helmholtz_split(state: &EMFieldState, tol: f64) -> Result<HelmholtzReport> {
    let g = *state.geometry();
    let n = g.cells;
    let h = g.spacing();
    let dv = g.cell_volume();

    // Electric part on interior nodes.
    let inner = [n[0] - 1, n[1] - 1, n[2] - 1];
    let inner_id = |i: usize, j: usize, k: usize| ((i - 1) * inner[1] + (j - 1)) * inner[2] + (k - 1);
    let nodes = |v: &[f64]| {
        let mut a = Array3::zeros([n[0] + 1, n[1] + 1, n[2] + 1]);
        for i in 1..n[0] {
            for j in 1..n[1] {
                for k in 1..n[2] {
                    a.set([i, j, k], v[inner_id(i, j, k)]);
                }
            }
        }
        a
    };
    // -Delta on interior nodes with zero walls.
    let neg_lap = |v: &[f64]| {
        let a = nodes(v);
        let mut out = vec![0.0; v.len()];
        for i in 1..n[0] {
            for j in 1..n[1] {
                for k in 1..n[2] {
                    let c = a.get([i, j, k]);
                    let mut s = 0.0;
                    for d in 0..3 {
                        let mut up = [i, j, k];
                        let mut dn = [i, j, k];
                        up[d] += 1;
                        dn[d] -= 1;
                        s += (2.0 * c - a.get(up) - a.get(dn)) / (h[d] * h[d]);
                    }
                    out[inner_id(i, j, k)] = s;
                }
            }
        }
        out
    };
    let div = state.divergence_e();
    let mut rhs = vec![0.0; inner.iter().product()];
    for i in 1..n[0] {
        for j in 1..n[1] {
            for k in 1..n[2] {
                rhs[inner_id(i, j, k)] = -div.get([i, j, k]);
            }
        }
    }
    let (xi, it_e) = conjugate_gradient("Helmholtz electric potential", neg_lap, &rhs, tol, 20 * rhs.len())?;
    let xi = nodes(&xi);
    let mut grad = state.e.clone();
    let mut e1 = state.e.clone();
    for a in 0..3 {
        let c = &mut grad.comp[a];
        for idx in c.indices().collect::<Vec<_>>() {
            let mut up = idx;
            up[a] += 1;
            let v = (xi.get(up) - xi.get(idx)) / h[a];
            c.set(idx, v);
            e1.comp[a].set(idx, state.e.comp[a].get(idx) - v);
        }
    }
    let mut probe = state.clone();
    probe.e = e1.clone();
    let div_e1 = probe
        .divergence_e()
        .as_slice()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let cross: f64 = e1
        .comp
        .iter()
        .zip(&grad.comp)
        .map(|(a, b)| a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum::<f64>())
        .sum();

    // Magnetic part on cells with zero normal flux through the walls.
    let cells = n[0] * n[1] * n[2];
    let cell_id = |idx: [usize; 3]| (idx[0] * n[1] + idx[1]) * n[2] + idx[2];
    let neg_lap_n = |v: &[f64]| {
        let mut out = vec![0.0; cells];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = [i, j, k];
                    let c = v[cell_id(idx)];
                    let mut s = 0.0;
                    for d in 0..3 {
                        for up in [false, true] {
                            let mut nb = idx;
                            if up && idx[d] + 1 < n[d] {
                                nb[d] += 1;
                            } else if !up && idx[d] > 0 {
                                nb[d] -= 1;
                            } else {
                                continue;
                            }
                            s += (c - v[cell_id(nb)]) / (h[d] * h[d]);
                        }
                    }
                    out[cell_id(idx)] = s;
                }
            }
        }
        out
    };
    let div_b = state.divergence_b();
    let mean = div_b.as_slice().iter().sum::<f64>() / cells as f64;
    let rhs_b: Vec<f64> = div_b.as_slice().iter().map(|v| -(v - mean)).collect();
    let (psi, it_b) = if rhs_b.iter().all(|v| *v == 0.0) {
        (vec![0.0; cells], 0)
    } else {
        conjugate_gradient("Helmholtz magnetic potential", neg_lap_n, &rhs_b, tol, 20 * cells)?
    };
    let mut grad_b = 0.0;
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let idx = [i, j, k];
                for d in 0..3 {
                    if idx[d] + 1 < n[d] {
                        let mut nb = idx;
                        nb[d] += 1;
                        grad_b += ((psi[cell_id(nb)] - psi[cell_id(idx)]) / h[d]).powi(2);
                    }
                }
            }
        }
    }
    let e_sq = state.e.norm_sq();
    Ok(HelmholtzReport {
        e_norm: (e_sq * dv).sqrt(),
        e_solenoidal_norm: (e1.norm_sq() * dv).sqrt(),
        e_gradient_norm: (grad.norm_sq() * dv).sqrt(),
        div_e1,
        orthogonality: cross / e_sq.max(f64::MIN_POSITIVE),
        b_gradient_norm: (grad_b * dv).sqrt(),
        cg_iterations: [it_e, it_b],
    })
}
