//! Discrete linearised Landau operator.
//!
//! Unknowns live on the nodes of an unshifted [`VelocityGrid`]. Every
//! collision integral is evaluated on the *corner lattice*: the interior
//! nodes of the half-staggered companion grid, each of which sits at the
//! centre of a 2x2x2 block of base nodes. Gradients at a corner are
//! formed from those eight nodes, so the kernel is only ever sampled at
//! corner pairs `(c, c')` with `c != c'` (or at node/corner pairs, which are
//! at least `h sqrt(3)/2` apart).
//!
//! Species are stacked: entries `0..N` of a [`DistributionVector`] belong to
//! the positive species, `N..2N` to the negative one.

mod basis;
mod coeff;
mod export;
mod gamma;
mod identity;
mod operator;
mod spectrum;

pub use basis::{build_basis, project, BasisNormalization, Moments, ProjectionBasis};
pub use coeff::{coeff_fields, decay_envelope, sobolev_norm, CoefficientFields, DecayEnvelope};
pub use export::{read_operator_dump, write_operator_dump, write_spectrum_csv, OperatorDump};
pub use gamma::{apply_gamma, collision_integral, conservation_report, ConservationReport};
pub use identity::{divergence_identity, DivergenceIdentity, IdentityVariant, PolyBump, TestFunction};
pub use operator::{assemble_l, memory_estimate, AssemblyOptions, DenseMatrix, LinearizedOperator, SparseMatrix};
pub use spectrum::{
    coercivity_gap, deflated_gap, eigendecompose, eigenvalues, EigenDecomposition, GapReport, REPORTED_EIGENVALUES,
};

use crate::equilibria::{Juttner, PlasmaPair};
use crate::kernel::{Kernel, KernelParams};
use crate::vgrid::VelocityGrid;
use crate::{Error, Mat3, Result, Vec3};

/// Two-species perturbation `f = (f+, f-)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector {
    nodes: usize,
    data: Vec<f64>,
}

impl DistributionVector {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            nodes,
            data: vec![0.0; 2 * nodes],
        }
    }

    pub fn from_parts(plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        if plus.len() != minus.len() {
            return Err(Error::config(format!(
                "species components differ in length: {} vs {}",
                plus.len(),
                minus.len()
            )));
        }
        let nodes = plus.len();
        let mut data = plus;
        data.extend_from_slice(&minus);
        Self::from_stacked(nodes, data)
    }

    pub fn from_stacked(nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 2 * nodes {
            return Err(Error::config(format!(
                "stacked vector has {} entries, expected {}",
                data.len(),
                2 * nodes
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite entry at index {i}")));
        }
        Ok(Self { nodes, data })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn plus(&self) -> &[f64] {
        &self.data[..self.nodes]
    }

    pub fn minus(&self) -> &[f64] {
        &self.data[self.nodes..]
    }

    pub fn species(&self, s: usize) -> &[f64] {
        &self.data[s * self.nodes..(s + 1) * self.nodes]
    }

    pub fn species_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.data[s * self.nodes..(s + 1) * self.nodes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Grid inner product `sum_s sum_k w_k f_s g_s`.
    pub fn inner(&self, other: &Self, grid: &VelocityGrid) -> f64 {
        assert_eq!(self.nodes, grid.len());
        assert_eq!(other.nodes, grid.len());
        let w = grid.weights();
        let n = self.nodes;
        let mut acc = 0.0;
        for s in 0..2 {
            for k in 0..n {
                acc += w[k] * self.data[s * n + k] * other.data[s * n + k];
            }
        }
        acc
    }

    pub fn norm(&self, grid: &VelocityGrid) -> f64 {
        self.inner(self, grid).sqrt()
    }

    pub fn axpy(&mut self, alpha: f64, x: &Self) {
        assert_eq!(self.data.len(), x.data.len());
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn linear_combination(alpha: f64, x: &Self, beta: f64, y: &Self) -> Self {
        assert_eq!(x.data.len(), y.data.len());
        Self {
            nodes: x.nodes,
            data: x.data.iter().zip(&y.data).map(|(a, b)| alpha * a + beta * b).collect(),
        }
    }
}

/// Everything the collision discretisation needs to know about the grid and
/// the plasma: nodes, corner lattice, equilibria and kernels.
#[derive(Debug, Clone)]
pub struct CollisionSetup {
    grid: VelocityGrid,
    pair: PlasmaPair,
    kernel_params: KernelParams,
    juttner: [Juttner; 2],
    // kernels[s][t] couples species s at p with species t at q.
    kernels: [[Kernel; 2]; 2],
    corner_pos: Vec<Vec3>,
    corner_base: Vec<usize>,
    sqrt_j_nodes: [Vec<f64>; 2],
    j_corners: [Vec<f64>; 2],
}

/// Offsets of the eight nodes around a corner, `o = 4 da + 2 db + dc`.
pub(crate) const OCTANTS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [0, 0, 1],
    [0, 1, 0],
    [0, 1, 1],
    [1, 0, 0],
    [1, 0, 1],
    [1, 1, 0],
    [1, 1, 1],
];

impl CollisionSetup {
    /// `grid_q` must be the half-staggered companion of `grid_p`; its
    /// interior nodes become the corner lattice.
    pub fn new(
        grid_p: &VelocityGrid,
        grid_q: &VelocityGrid,
        pair: PlasmaPair,
        kernel_params: KernelParams,
    ) -> Result<Self> {
        pair.validate()?;
        kernel_params.validate()?;
        if grid_p.is_staggered() {
            return Err(Error::config("the unknowns must live on an unshifted grid"));
        }
        if grid_q.stagger() != [0.5; 3]
            || grid_q.n_per_axis() != grid_p.n_per_axis()
            || grid_q.p_max() != grid_p.p_max()
        {
            return Err(Error::config(
                "quadrature grid must be the half-cell staggered companion of the node grid",
            ));
        }
        let n = grid_p.n_per_axis();
        let mut corner_pos = Vec::with_capacity((n - 1).pow(3));
        let mut corner_base = Vec::with_capacity((n - 1).pow(3));
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                for k in 0..n - 1 {
                    corner_pos.push(grid_q.nodes()[grid_q.index(i, j, k)]);
                    corner_base.push(grid_p.index(i, j, k));
                }
            }
        }
        let juttner = [Juttner::new(pair.plus)?, Juttner::new(pair.minus)?];
        let sp = pair.species();
        let kernels = [
            [
                Kernel::new(&sp[0], &sp[0], &kernel_params),
                Kernel::new(&sp[0], &sp[1], &kernel_params),
            ],
            [
                Kernel::new(&sp[1], &sp[0], &kernel_params),
                Kernel::new(&sp[1], &sp[1], &kernel_params),
            ],
        ];
        let sqrt_j_nodes = [0, 1].map(|s| grid_p.tabulate(|p| juttner[s].sqrt(p)));
        let j_corners = [0, 1].map(|s| corner_pos.iter().map(|c| juttner[s].eval(c)).collect());
        Ok(Self {
            grid: grid_p.clone(),
            pair,
            kernel_params,
            juttner,
            kernels,
            corner_pos,
            corner_base,
            sqrt_j_nodes,
            j_corners,
        })
    }

    /// Builds both grids from `(n, p_max)`.
    pub fn from_grid_params(n: usize, p_max: f64, pair: PlasmaPair, kernel_params: KernelParams) -> Result<Self> {
        let grid = VelocityGrid::centered(n, p_max)?;
        let stag = grid.staggered_companion();
        Self::new(&grid, &stag, pair, kernel_params)
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn pair(&self) -> &PlasmaPair {
        &self.pair
    }

    pub fn kernel_params(&self) -> &KernelParams {
        &self.kernel_params
    }

    pub fn juttner(&self, s: usize) -> &Juttner {
        &self.juttner[s]
    }

    pub fn kernel(&self, s: usize, t: usize) -> &Kernel {
        &self.kernels[s][t]
    }

    /// `Phi_st(p, q)`, or `None` when the two momenta move at the same
    /// velocity. Such pairs are dropped from every lattice sum; with equal
    /// masses this is exactly the diagonal `c = c'`, with unequal masses it
    /// can also happen off the diagonal.
    #[inline]
    pub(crate) fn phi_punctured(&self, s: usize, t: usize, p: &Vec3, q: &Vec3) -> Result<Option<Mat3>> {
        match self.kernels[s][t].phi(p, q) {
            Ok(m) => Ok(Some(m)),
            Err(Error::Singular { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn corners(&self) -> usize {
        self.corner_pos.len()
    }

    pub fn corner_positions(&self) -> &[Vec3] {
        &self.corner_pos
    }

    /// Node indices around corner `c`, in [`OCTANTS`] order.
    #[inline]
    pub(crate) fn corner_nodes(&self, c: usize) -> [usize; 8] {
        let n = self.grid.n_per_axis();
        let b = self.corner_base[c];
        OCTANTS.map(|[da, db, dc]| b + (da * n + db) * n + dc)
    }

    /// Corner indices of the x-slab `a`.
    pub(crate) fn corner_slab(&self, a: usize) -> std::ops::Range<usize> {
        let m = self.grid.n_per_axis() - 1;
        a * m * m..(a + 1) * m * m
    }

    /// Coefficients of the averaged gradient: `grad u(c) = sum_o beta[o] u(node_o)`.
    pub(crate) fn gradient_weights(&self) -> [Vec3; 8] {
        let q = 0.25 / self.grid.spacing();
        OCTANTS.map(|[da, db, dc]| {
            Vec3::new(
                (2.0 * da as f64 - 1.0) * q,
                (2.0 * db as f64 - 1.0) * q,
                (2.0 * dc as f64 - 1.0) * q,
            )
        })
    }

    pub fn sqrt_j_nodes(&self, s: usize) -> &[f64] {
        &self.sqrt_j_nodes[s]
    }

    pub fn j_corners(&self, s: usize) -> &[f64] {
        &self.j_corners[s]
    }

    /// Tabulates a two-species function on the nodes.
    pub fn tabulate(&self, mut f: impl FnMut(usize, &Vec3) -> f64) -> DistributionVector {
        let n = self.nodes();
        let mut data = Vec::with_capacity(2 * n);
        for s in 0..2 {
            data.extend(self.grid.nodes().iter().map(|p| f(s, p)));
        }
        DistributionVector { nodes: n, data }
    }

    /// Whether all four kernels coincide (equal masses and charges).
    pub(crate) fn symmetric_species(&self) -> bool {
        let [a, b] = self.pair.species();
        a.mass == b.mass && a.charge == b.charge
    }

    /// Corner average and averaged gradient of a node field.
    pub(crate) fn corner_values(&self, field: &[f64]) -> (Vec<f64>, Vec<Vec3>) {
        let beta = self.gradient_weights();
        let mut vals = Vec::with_capacity(self.corners());
        let mut grads = Vec::with_capacity(self.corners());
        for c in 0..self.corners() {
            let nodes = self.corner_nodes(c);
            let mut v = 0.0;
            let mut g = Vec3::zeros();
            for (o, &m) in nodes.iter().enumerate() {
                v += field[m];
                g += beta[o] * field[m];
            }
            vals.push(0.125 * v);
            grads.push(g);
        }
        (vals, grads)
    }
}
