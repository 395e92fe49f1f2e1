//! Null-space basis `chi_1..chi_6` and the macro-micro projection.

use serde::{Deserialize, Serialize};

use super::{CollisionSetup, DistributionVector};
use crate::vgrid::VelocityGrid;
use crate::{Error, Result};

const RADIAL_TOL: f64 = 1e-12;

/// How the tabulated basis functions are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BasisNormalization {
    /// Normalisers computed with the grid quadrature, so that the discrete
    /// Gram matrix is the identity to rounding.
    #[default]
    Grid,
    /// The continuum constants from radial quadrature, unchanged. On a
    /// truncated grid the discrete Gram matrix then misses the identity by
    /// roughly the Jüttner mass outside the cube.
    Radial,
}

/// Normalising constants of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisConstants {
    pub kappa1: f64,
    pub kappa2: [f64; 2],
    pub kappa3: f64,
    /// `M_s = int J_s`.
    pub mass: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ProjectionBasis {
    chi: [DistributionVector; 6],
    radial: BasisConstants,
    discrete: BasisConstants,
    normalization: BasisNormalization,
}

/// Macroscopic coefficients of `Pf = a+ chi_1 + a- chi_2 + b.chi_{3..5} + c chi_6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b: [f64; 3],
    pub c: f64,
}

impl Moments {
    pub fn as_array(&self) -> [f64; 6] {
        [self.a_plus, self.a_minus, self.b[0], self.b[1], self.b[2], self.c]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            a_plus: v[0],
            a_minus: v[1],
            b: [v[2], v[3], v[4]],
            c: v[5],
        }
    }
}

fn checked_inverse_sqrt(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.powf(-0.5))
    } else {
        Err(Error::config(format!("basis normaliser {name} is not positive: {v}")))
    }
}

fn radial_constants(setup: &CollisionSetup) -> Result<BasisConstants> {
    let mut mass = [0.0; 2];
    let mut kappa2 = [0.0; 2];
    let mut second = 0.0;
    for s in 0..2 {
        let j = setup.juttner(s);
        let sp = *j.species();
        mass[s] = j.radial_moment(|_| 1.0, 0, RADIAL_TOL)?.value;
        if !(mass[s] > 0.0) {
            return Err(Error::config(format!(
                "species mass integral is not positive: {}",
                mass[s]
            )));
        }
        kappa2[s] = j.radial_moment(|r| sp.p0_radial(r), 1, RADIAL_TOL)?.value / mass[s];
        second += j.radial_moment(|r| r * r / 3.0, 2, RADIAL_TOL)?.value;
    }
    let mut energy = 0.0;
    for s in 0..2 {
        let j = setup.juttner(s);
        let sp = *j.species();
        let k2 = kappa2[s];
        energy += j
            .radial_moment(|r| (sp.p0_radial(r) - k2).powi(2), 2, RADIAL_TOL)?
            .value;
    }
    Ok(BasisConstants {
        kappa1: checked_inverse_sqrt("kappa1", second)?,
        kappa2,
        kappa3: checked_inverse_sqrt("kappa3", energy)?,
        mass,
    })
}

fn grid_constants(setup: &CollisionSetup) -> Result<BasisConstants> {
    let grid = setup.grid();
    let mut mass = [0.0; 2];
    let mut kappa2 = [0.0; 2];
    let mut second = 0.0;
    let mut energy = 0.0;
    for s in 0..2 {
        let sp = *setup.juttner(s).species();
        let j: Vec<f64> = setup.sqrt_j_nodes(s).iter().map(|v| v * v).collect();
        mass[s] = grid.quad(&j);
        checked_inverse_sqrt("grid mass", mass[s])?;
        let p0j: Vec<f64> = grid.nodes().iter().zip(&j).map(|(p, jv)| sp.p0(p) * jv).collect();
        kappa2[s] = grid.quad(&p0j) / mass[s];
        let p1j: Vec<f64> = grid.nodes().iter().zip(&j).map(|(p, jv)| p.x * p.x * jv).collect();
        second += grid.quad(&p1j);
        let ej: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&j)
            .map(|(p, jv)| (sp.p0(p) - kappa2[s]).powi(2) * jv)
            .collect();
        energy += grid.quad(&ej);
    }
    Ok(BasisConstants {
        kappa1: checked_inverse_sqrt("kappa1", second)?,
        kappa2,
        kappa3: checked_inverse_sqrt("kappa3", energy)?,
        mass,
    })
}

/// Tabulates `chi_1..chi_6` on the node grid.
pub fn build_basis(setup: &CollisionSetup, normalization: BasisNormalization) -> Result<ProjectionBasis> {
    let radial = radial_constants(setup)?;
    let discrete = grid_constants(setup)?;
    let k = match normalization {
        BasisNormalization::Grid => discrete,
        BasisNormalization::Radial => radial,
    };
    let sp = setup.pair().species();
    let chi = [
        setup.tabulate(|s, p| {
            if s == 0 {
                k.mass[0].powf(-0.5) * setup.juttner(0).sqrt(p)
            } else {
                0.0
            }
        }),
        setup.tabulate(|s, p| {
            if s == 1 {
                k.mass[1].powf(-0.5) * setup.juttner(1).sqrt(p)
            } else {
                0.0
            }
        }),
        setup.tabulate(|s, p| k.kappa1 * p.x * setup.juttner(s).sqrt(p)),
        setup.tabulate(|s, p| k.kappa1 * p.y * setup.juttner(s).sqrt(p)),
        setup.tabulate(|s, p| k.kappa1 * p.z * setup.juttner(s).sqrt(p)),
        setup.tabulate(|s, p| k.kappa3 * (sp[s].p0(p) - k.kappa2[s]) * setup.juttner(s).sqrt(p)),
    ];
    Ok(ProjectionBasis {
        chi,
        radial,
        discrete,
        normalization,
    })
}

impl ProjectionBasis {
    pub fn chi(&self, i: usize) -> &DistributionVector {
        &self.chi[i]
    }

    pub fn chis(&self) -> &[DistributionVector; 6] {
        &self.chi
    }

    /// Constants from radial quadrature on the whole momentum space.
    pub fn radial_constants(&self) -> &BasisConstants {
        &self.radial
    }

    /// The same constants evaluated with the grid quadrature.
    pub fn grid_constants(&self) -> &BasisConstants {
        &self.discrete
    }

    pub fn normalization(&self) -> BasisNormalization {
        self.normalization
    }

    /// Discrete Gram matrix `<chi_i, chi_j>`.
    pub fn gram(&self, grid: &VelocityGrid) -> [[f64; 6]; 6] {
        let mut g = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..=i {
                let v = self.chi[i].inner(&self.chi[j], grid);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    /// `max |<chi_i, chi_j> - delta_ij|`.
    pub fn gram_defect(&self, grid: &VelocityGrid) -> f64 {
        let g = self.gram(grid);
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Columns spanning the basis, orthonormal in the plain Euclidean inner
    /// product of the stacked coefficient vectors (modified Gram-Schmidt).
    pub fn orthonormal_columns(&self) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(6);
        for chi in &self.chi {
            let mut v = chi.as_slice().to_vec();
            for _ in 0..2 {
                for q in &cols {
                    let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                }
            }
            let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= nrm);
            cols.push(v);
        }
        cols
    }
}

/// Moments `(a+, a-, b, c)` of `f` and the macroscopic part `Pf`.
pub fn project(f: &DistributionVector, basis: &ProjectionBasis, grid: &VelocityGrid) -> (DistributionVector, Moments) {
    let m: [f64; 6] = std::array::from_fn(|i| f.inner(&basis.chi[i], grid));
    let mut pf = DistributionVector::zeros(f.nodes());
    for (coef, chi) in m.iter().zip(&basis.chi) {
        pf.axpy(*coef, chi);
    }
    (pf, Moments::from_array(m))
}
