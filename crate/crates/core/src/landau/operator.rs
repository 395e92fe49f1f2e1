//! Assembly of `L = A - K`.
//!
//! Write `u_s = g_s / sqrt(J_s)`. The bilinear form of the operator is
//!
//! ```text
//! <L g, h> = 1/2 sum_{s,t} int int J_s(p) J_t(q) (grad v_s(p) - grad v_t(q)) . Phi_st (grad u_s(p) - grad u_t(q))
//! ```
//!
//! with `v = h / sqrt(J)`. Both momenta run over the corner lattice with the
//! diagonal `c = c'` removed. Splitting the square gives a local part
//!
//! ```text
//! A(u, v) = sum_s sum_c W J_s(c) grad v_s(c) . sigma_s(c) grad u_s(c),
//! sigma_s(c) = sum_t sum_{c' != c} W J_t(c') Phi_st(c, c')
//! ```
//!
//! and a dense coupling `K(u, v)`. In `A` the corner gradient is replaced by
//! the mean over the eight one-sided (octant) gradients of the cell, which
//! dominates the averaged-gradient form by convexity; `L` therefore stays
//! positive semidefinite while the checkerboard modes invisible to the
//! averaged gradient are damped. Constants per species and common linear
//! momenta are annihilated exactly.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{build_basis, BasisNormalization, ProjectionBasis};
use super::{CollisionSetup, DistributionVector, OCTANTS};
use crate::equilibria::PlasmaPair;
use crate::kernel::KernelParams;
use crate::vgrid::VelocityGrid;
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyOptions {
    /// Refuse assembly when the dense storage estimate exceeds this.
    pub memory_budget_bytes: u64,
    pub normalization: BasisNormalization,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            memory_budget_bytes: 4 << 30,
            normalization: BasisNormalization::Grid,
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        self.data
            .par_chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Discrete `L = A - K` with its null-space basis.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    setup: CollisionSetup,
    a_part: SparseMatrix,
    k_part: DenseMatrix,
    basis: ProjectionBasis,
    sigma: [Vec<Mat3>; 2],
}

/// Dense storage needed for `K`, `L` and an eigendecomposition workspace.
pub fn memory_estimate(nodes: usize) -> u64 {
    let dim = 2 * nodes as u64;
    3 * dim * dim * 8
}

/// Assembles the operator on `grid_p` using the corner lattice of `grid_q`.
pub fn assemble_l(
    grid_p: &VelocityGrid,
    grid_q: &VelocityGrid,
    pair: PlasmaPair,
    kernel: KernelParams,
    options: &AssemblyOptions,
) -> Result<LinearizedOperator> {
    let required = memory_estimate(grid_p.len());
    if required > options.memory_budget_bytes {
        return Err(Error::Budget {
            required_bytes: required,
            budget_bytes: options.memory_budget_bytes,
            detail: format!(
                "dense operator of dimension {} on a {}^3 grid",
                2 * grid_p.len(),
                grid_p.n_per_axis()
            ),
        });
    }
    let setup = CollisionSetup::new(grid_p, grid_q, pair, kernel)?;
    LinearizedOperator::from_setup(setup, options.normalization)
}

struct SlabRows<'a> {
    // (species, layer) -> rows of that layer, each `dim` long
    chunks: Vec<(usize, usize, &'a mut [f64])>,
}

impl LinearizedOperator {
    pub fn from_setup(setup: CollisionSetup, normalization: BasisNormalization) -> Result<Self> {
        let basis = build_basis(&setup, normalization)?;
        let sigma = corner_diffusion(&setup)?;
        let k_u = assemble_coupling(&setup)?;
        let a_part = assemble_local(&setup, &sigma);
        let k_part = to_g_coordinates(&setup, k_u);
        Ok(Self {
            setup,
            a_part,
            k_part,
            basis,
            sigma,
        })
    }

    pub fn setup(&self) -> &CollisionSetup {
        &self.setup
    }

    pub fn grid(&self) -> &VelocityGrid {
        self.setup.grid()
    }

    pub fn basis(&self) -> &ProjectionBasis {
        &self.basis
    }

    pub fn a_part(&self) -> &SparseMatrix {
        &self.a_part
    }

    pub fn k_part(&self) -> &DenseMatrix {
        &self.k_part
    }

    /// `sigma_s` at the corners (punctured corner sum).
    pub fn corner_sigma(&self, s: usize) -> &[Mat3] {
        &self.sigma[s]
    }

    pub fn dim(&self) -> usize {
        self.k_part.dim
    }

    pub fn apply_slice(&self, g: &[f64]) -> Vec<f64> {
        let a = self.a_part.matvec(g);
        let k = self.k_part.matvec(g);
        a.into_iter().zip(k).map(|(x, y)| x - y).collect()
    }

    pub fn apply(&self, g: &DistributionVector) -> DistributionVector {
        DistributionVector::from_stacked(g.nodes(), self.apply_slice(g.as_slice()))
            .expect("operator preserves dimensions")
    }

    /// `K g` alone.
    pub fn apply_k(&self, g: &DistributionVector) -> DistributionVector {
        DistributionVector::from_stacked(g.nodes(), self.k_part.matvec(g.as_slice())).expect("dimensions")
    }

    /// `<L g, g>` in the grid inner product.
    pub fn quadratic_form(&self, g: &DistributionVector) -> f64 {
        self.apply(g).inner(g, self.grid())
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a_part.get(i, j) - self.k_part.get(i, j)
    }

    /// Dense copy of `L` for the eigensolver.
    pub fn to_dense(&self) -> Mat<f64> {
        let dim = self.dim();
        let mut m = Mat::<f64>::from_fn(dim, dim, |i, j| -self.k_part.get(i, j));
        for i in 0..dim {
            for (j, v) in self.a_part.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `||L||_F`.
    pub fn frobenius_norm(&self) -> f64 {
        let dim = self.dim();
        let mut acc = 0.0;
        for i in 0..dim {
            let row = self.k_part.row(i);
            let mut r: f64 = row.iter().map(|v| v * v).sum();
            for (j, a) in self.a_part.row(i) {
                let k = row[j];
                r += (a - k) * (a - k) - k * k;
            }
            acc += r;
        }
        acc.sqrt()
    }

    /// `||L - L^T||_F / ||L||_F`.
    pub fn asymmetry(&self) -> f64 {
        let dim = self.dim();
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..i {
                let d = self.entry(i, j) - self.entry(j, i);
                acc += 2.0 * d * d;
            }
        }
        acc.sqrt() / self.frobenius_norm()
    }

    /// Largest eigenvalue, from a fully reorthogonalised Lanczos run with a
    /// fixed start vector.
    pub fn spectral_norm(&self) -> f64 {
        let dim = self.dim();
        let steps = dim.min(80);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
        let nrm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        for _ in 0..steps {
            let mut w = self.apply_slice(&v);
            alpha.push(dot(&w, &v));
            basis.push(v);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = dot(&w, &w).sqrt();
            if b <= 1e-13 * alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())) {
                break;
            }
            beta.push(b);
            v = w.into_iter().map(|x| x / b).collect();
        }
        let k = alpha.len();
        let t = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j || j + 1 == i {
                beta[i.min(j)]
            } else {
                0.0
            }
        });
        t.symmetric_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    /// `||L chi_i|| / (||L|| ||chi_i||)` for the six basis functions.
    pub fn null_residuals(&self, norm_l: f64) -> [f64; 6] {
        std::array::from_fn(|i| {
            let chi = self.basis.chi(i);
            self.apply(chi).norm(self.grid()) / (norm_l * chi.norm(self.grid()))
        })
    }
}

/// Punctured corner sums `sigma_s(c) = sum_t sum_{c' != c} W J_t(c') Phi_st(c, c')`.
fn corner_diffusion(setup: &CollisionSetup) -> Result<[Vec<Mat3>; 2]> {
    let w = setup.grid().cell_volume();
    let pos = setup.corner_positions();
    let same = setup.symmetric_species();
    let per_corner = |s: usize| -> Result<Vec<Mat3>> {
        (0..setup.corners())
            .into_par_iter()
            .map(|c| {
                let mut acc = Mat3::zeros();
                for (cp, q) in pos.iter().enumerate() {
                    if cp == c {
                        continue;
                    }
                    if same {
                        let jt = setup.j_corners(0)[cp] + setup.j_corners(1)[cp];
                        if let Some(phi) = setup.phi_punctured(s, 0, &pos[c], q)? {
                            acc += phi * (w * jt);
                        }
                    } else {
                        for t in 0..2 {
                            if let Some(phi) = setup.phi_punctured(s, t, &pos[c], q)? {
                                acc += phi * (w * setup.j_corners(t)[cp]);
                            }
                        }
                    }
                }
                Ok(acc)
            })
            .collect()
    };
    Ok([per_corner(0)?, per_corner(1)?])
}

/// Gradient rows of the eight one-sided gradients of a cell, in local node
/// numbering: `gamma[o][l]` is the weight of node `l` in octant gradient `o`.
fn octant_gradients(h: f64) -> [[Vec3; 8]; 8] {
    let mut gamma = [[Vec3::zeros(); 8]; 8];
    for (o, &[ox, oy, oz]) in OCTANTS.iter().enumerate() {
        for (l, &[da, db, dc]) in OCTANTS.iter().enumerate() {
            let sgn = |d: usize| if d == 1 { 1.0 / h } else { -1.0 / h };
            if db == oy && dc == oz {
                gamma[o][l].x = sgn(da);
            }
            if da == ox && dc == oz {
                gamma[o][l].y = sgn(db);
            }
            if da == ox && db == oy {
                gamma[o][l].z = sgn(dc);
            }
        }
    }
    gamma
}

fn stencil_slot(d: [isize; 3]) -> usize {
    ((d[0] + 1) * 9 + (d[1] + 1) * 3 + (d[2] + 1)) as usize
}

fn assemble_local(setup: &CollisionSetup, sigma: &[Vec<Mat3>; 2]) -> SparseMatrix {
    let grid = setup.grid();
    let n = grid.n_per_axis();
    let nodes = grid.len();
    let w = grid.cell_volume();
    let gamma = octant_gradients(grid.spacing());
    let mut stencil = vec![[0.0f64; 27]; 2 * nodes];
    for s in 0..2 {
        for c in 0..setup.corners() {
            let scale = w * setup.j_corners(s)[c] / 8.0;
            let sg = &sigma[s][c];
            let mut local = [[0.0; 8]; 8];
            for go in &gamma {
                let sgo: [Vec3; 8] = std::array::from_fn(|l| sg * go[l]);
                for l in 0..8 {
                    for lp in 0..8 {
                        local[l][lp] += go[l].dot(&sgo[lp]);
                    }
                }
            }
            let ids = setup.corner_nodes(c);
            for l in 0..8 {
                for lp in 0..8 {
                    let d = [0, 1, 2].map(|k| OCTANTS[lp][k] as isize - OCTANTS[l][k] as isize);
                    stencil[s * nodes + ids[l]][stencil_slot(d)] += scale * local[l][lp];
                }
            }
        }
    }
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for s in 0..2 {
        let d = setup.sqrt_j_nodes(s);
        for node in 0..nodes {
            let [i, j, k] = grid.ijk(node);
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    for dk in -1isize..=1 {
                        let (ii, jj, kk) = (i as isize + di, j as isize + dj, k as isize + dk);
                        if ii < 0 || jj < 0 || kk < 0 || ii >= n as isize || jj >= n as isize || kk >= n as isize {
                            continue;
                        }
                        let m = grid.index(ii as usize, jj as usize, kk as usize);
                        let v = stencil[s * nodes + node][stencil_slot([di, dj, dk])];
                        col_idx.push(s * nodes + m);
                        values.push(v / (d[node] * d[m] * w));
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    SparseMatrix {
        dim: 2 * nodes,
        row_ptr,
        col_idx,
        values,
    }
}

/// Dense coupling in `u` coordinates:
/// `K[n_s, m_t] = sum_{c ∋ n} sum_{c' ∋ m, c' != c} W^2 J_s(c) J_t(c') beta_{c,n} . Phi_st(c, c') beta_{c',m}`.
fn assemble_coupling(setup: &CollisionSetup) -> Result<DenseMatrix> {
    let grid = setup.grid();
    let n = grid.n_per_axis();
    let nodes = grid.len();
    let dim = 2 * nodes;
    let layer = n * n;
    let mut data = vec![0.0f64; dim * dim];
    for parity in 0..2 {
        let mut chunks: Vec<Option<&mut [f64]>> = data.chunks_mut(layer * dim).map(Some).collect();
        let mut tasks = Vec::new();
        for a in (parity..n - 1).step_by(2) {
            let mut slab = SlabRows { chunks: Vec::new() };
            for s in 0..2 {
                for i in [a, a + 1] {
                    let chunk = chunks[s * n + i].take().expect("slabs of one parity are disjoint");
                    slab.chunks.push((s, i, chunk));
                }
            }
            tasks.push((a, slab));
        }
        tasks
            .into_par_iter()
            .map(|(a, mut slab)| coupling_slab(setup, a, &mut slab))
            .collect::<Result<Vec<()>>>()?;
    }
    // Exact symmetry; the two triangles differ only by summation order.
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (data[i * dim + j] + data[j * dim + i]);
            data[i * dim + j] = v;
            data[j * dim + i] = v;
        }
    }
    Ok(DenseMatrix { dim, data })
}

fn coupling_slab(setup: &CollisionSetup, a: usize, slab: &mut SlabRows<'_>) -> Result<()> {
    let grid = setup.grid();
    let n = grid.n_per_axis();
    let nodes = grid.len();
    let dim = 2 * nodes;
    let layer = n * n;
    let w = grid.cell_volume();
    let beta = setup.gradient_weights();
    let pos = setup.corner_positions();
    let same = setup.symmetric_species();
    // h[s][t][m]: sum over c' around m of W^2 J_t(c') Phi_st(c, c') beta_{c', m}
    let mut h = vec![[0.0f64; 3]; 4 * nodes];
    for c in setup.corner_slab(a) {
        h.iter_mut().for_each(|v| *v = [0.0; 3]);
        for (cp, q) in pos.iter().enumerate() {
            if cp == c {
                continue;
            }
            let ids = setup.corner_nodes(cp);
            let mut phis = [[Mat3::zeros(); 2]; 2];
            if same {
                let phi = setup.phi_punctured(0, 0, &pos[c], q)?.unwrap_or_else(Mat3::zeros);
                phis = [[phi; 2]; 2];
            } else {
                for s in 0..2 {
                    for t in 0..2 {
                        phis[s][t] = setup.phi_punctured(s, t, &pos[c], q)?.unwrap_or_else(Mat3::zeros);
                    }
                }
            }
            for s in 0..2 {
                for t in 0..2 {
                    let tmat = phis[s][t] * (w * w * setup.j_corners(t)[cp]);
                    let base = (2 * s + t) * nodes;
                    for (o, &m) in ids.iter().enumerate() {
                        let v = tmat * beta[o];
                        let e = &mut h[base + m];
                        e[0] += v.x;
                        e[1] += v.y;
                        e[2] += v.z;
                    }
                }
            }
        }
        let ids = setup.corner_nodes(c);
        for (o, &node) in ids.iter().enumerate() {
            let i = node / layer;
            let local = node - i * layer;
            for (s, li, chunk) in slab.chunks.iter_mut() {
                if *li != i {
                    continue;
                }
                let s = *s;
                let js = setup.j_corners(s)[c];
                let b = beta[o] * js;
                let row = &mut chunk[local * dim..(local + 1) * dim];
                for t in 0..2 {
                    let hs = &h[(2 * s + t) * nodes..(2 * s + t + 1) * nodes];
                    let out = &mut row[t * nodes..(t + 1) * nodes];
                    for (r, hv) in out.iter_mut().zip(hs) {
                        *r += b.x * hv[0] + b.y * hv[1] + b.z * hv[2];
                    }
                }
            }
        }
    }
    Ok(())
}

fn to_g_coordinates(setup: &CollisionSetup, mut k: DenseMatrix) -> DenseMatrix {
    let nodes = setup.nodes();
    let w = setup.grid().cell_volume();
    let inv: Vec<f64> = (0..2)
        .flat_map(|s| setup.sqrt_j_nodes(s).iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        .collect();
    let dim = 2 * nodes;
    k.data.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
        let di = inv[i] / w;
        for (v, dj) in row.iter_mut().zip(&inv) {
            *v *= di * dj;
        }
    });
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{Sign, SpeciesParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(n: usize, pair: PlasmaPair) -> LinearizedOperator {
        let g = VelocityGrid::centered(n, 4.0).unwrap();
        assemble_l(
            &g,
            &g.staggered_companion(),
            pair,
            KernelParams::default(),
            &AssemblyOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn octant_gradients_average_to_the_corner_gradient() {
        let h = 0.7;
        let gamma = octant_gradients(h);
        for l in 0..8 {
            let mean = gamma.iter().fold(Vec3::zeros(), |acc, g| acc + g[l]) / 8.0;
            let [da, db, dc] = OCTANTS[l];
            let expected = Vec3::new(2.0 * da as f64 - 1.0, 2.0 * db as f64 - 1.0, 2.0 * dc as f64 - 1.0) * (0.25 / h);
            assert!((mean - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_and_semidefinite() {
        let op = small(6, PlasmaPair::default());
        assert!(op.asymmetry() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let norm = op.spectral_norm();
        for _ in 0..20 {
            let u = op.setup().tabulate(|_, _| rng.gen_range(-1.0..1.0));
            let q = op.quadratic_form(&u);
            assert!(q >= -1e-12 * norm * u.norm(op.grid()).powi(2));
        }
    }

    #[test]
    fn exact_null_vectors() {
        let op = small(6, PlasmaPair::default());
        let norm = op.spectral_norm();
        let r = op.null_residuals(norm);
        for (i, v) in r.iter().enumerate().take(5) {
            assert!(*v < 1e-12, "chi_{} residual {v}", i + 1);
        }
        assert!(r[5] < 0.2);
    }

    #[test]
    fn unequal_masses_keep_structure() {
        let pair = PlasmaPair::new(
            SpeciesParams::new(2.0, 1.0, Sign::Plus, 1.0).unwrap(),
            SpeciesParams::unit(Sign::Minus),
        )
        .unwrap();
        let op = small(5, pair);
        assert!(op.asymmetry() < 1e-14);
        let r = op.null_residuals(op.spectral_norm());
        for v in r.iter().take(5) {
            assert!(*v < 1e-12);
        }
    }

    #[test]
    fn budget_refusal() {
        let g = VelocityGrid::centered(8, 4.0).unwrap();
        let opts = AssemblyOptions {
            memory_budget_bytes: 1000,
            ..AssemblyOptions::default()
        };
        let err = assemble_l(
            &g,
            &g.staggered_companion(),
            PlasmaPair::default(),
            KernelParams::default(),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }
}
