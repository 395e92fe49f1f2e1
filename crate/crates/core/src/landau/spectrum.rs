//! Dense spectral analysis of the assembled operator.

use faer::{Mat, Par, Side};
use serde::Serialize;

use super::operator::LinearizedOperator;
use super::DistributionVector;
use crate::{Error, Result};

/// Number of smallest eigenvalues kept in reports.
pub const REPORTED_EIGENVALUES: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub n_per_axis: usize,
    /// Largest eigenvalue of `L`.
    pub norm_l: f64,
    pub smallest: Vec<f64>,
    pub tol_null: f64,
    pub near_zero_count: usize,
    /// Smallest eigenvalue of `L` restricted to the complement of the null basis.
    pub delta_hat: f64,
    pub null_residuals: [f64; 6],
}

/// Full eigendecomposition `L = V diag(values) V^T` (Euclidean coordinates).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

fn sequential() {
    faer::set_global_parallelism(Par::Seq);
}

fn eigen_error(e: impl std::fmt::Debug) -> Error {
    Error::Eigen(format!("{e:?}"))
}

pub fn eigenvalues(op: &LinearizedOperator) -> Result<Vec<f64>> {
    sequential();
    let mut v = op
        .to_dense()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(eigen_error)?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn eigendecompose(op: &LinearizedOperator) -> Result<EigenDecomposition> {
    sequential();
    let evd = op.to_dense().self_adjoint_eigen(Side::Lower).map_err(eigen_error)?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Eigen("eigenvalues not returned in ascending order".into()));
    }
    Ok(EigenDecomposition {
        values,
        vectors: evd.U().to_owned(),
    })
}

impl EigenDecomposition {
    /// Coordinates `V^T g` of `g` in the eigenbasis.
    pub fn coefficients(&self, g: &DistributionVector) -> Vec<f64> {
        let v = &self.vectors;
        let x = g.as_slice();
        (0..v.ncols())
            .map(|k| {
                let col = v.col(k);
                let mut c = 0.0;
                for i in 0..v.nrows() {
                    c += col[i] * x[i];
                }
                c
            })
            .collect()
    }

    /// `exp(-t L) g`.
    pub fn propagate(&self, g: &DistributionVector, t: f64) -> DistributionVector {
        let v = &self.vectors;
        let dim = v.nrows();
        let mut out = vec![0.0; dim];
        for (k, c) in self.coefficients(g).into_iter().enumerate() {
            let col = v.col(k);
            let c = c * (-t * self.values[k]).exp();
            for i in 0..dim {
                out[i] += c * col[i];
            }
        }
        DistributionVector::from_stacked(g.nodes(), out).expect("dimensions")
    }
}

/// `L` deflated on the null basis: `P L P + shift Q Q^T` with `P = I - Q Q^T`.
fn deflated(op: &LinearizedOperator, shift: f64) -> Mat<f64> {
    let mut m = op.to_dense();
    let dim = m.nrows();
    let cols = op.basis().orthonormal_columns();
    let q = Mat::<f64>::from_fn(dim, 6, |i, k| cols[k][i]);
    let lq = &m * &q;
    let b = q.transpose() * &lq;
    // P L P + s Q Q^T = L - Q X^T - X Q^T with X = L Q - Q (B + s I) / 2.
    let mut x = lq.clone();
    for i in 0..dim {
        for k in 0..6 {
            let mut acc = 0.0;
            for l in 0..6 {
                let bs = b[(l, k)] + if l == k { shift } else { 0.0 };
                acc += q[(i, l)] * bs;
            }
            x[(i, k)] -= 0.5 * acc;
        }
    }
    for j in 0..dim {
        for i in 0..dim {
            let mut acc = 0.0;
            for k in 0..6 {
                acc += q[(i, k)] * x[(j, k)] + x[(i, k)] * q[(j, k)];
            }
            m[(i, j)] -= acc;
        }
    }
    m
}

/// Smallest eigenvalue of `L` on the orthogonal complement of the null basis.
pub fn deflated_gap(op: &LinearizedOperator, norm_l: f64) -> Result<f64> {
    sequential();
    let m = deflated(op, 2.0 * norm_l);
    let v = m.self_adjoint_eigenvalues(Side::Lower).map_err(eigen_error)?;
    v.into_iter()
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Eigen("empty spectrum".into()))
}

/// Full spectral report: near-zero count relative to `tol_null ||L||` and the
/// deflated gap.
pub fn coercivity_gap(op: &LinearizedOperator, tol_null: f64) -> Result<GapReport> {
    let values = eigenvalues(op)?;
    let norm_l = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let near_zero_count = values.iter().filter(|v| v.abs() < tol_null * norm_l).count();
    let delta_hat = deflated_gap(op, norm_l)?;
    Ok(GapReport {
        n_per_axis: op.grid().n_per_axis(),
        norm_l,
        smallest: values.iter().take(REPORTED_EIGENVALUES).copied().collect(),
        tol_null,
        near_zero_count,
        delta_hat,
        null_residuals: op.null_residuals(norm_l),
    })
}
