//! Moment-constructed test functions.
//!
//! `B_ij(p) = (p_i p_j - delta_ij) h(|p|)` with the radial profile
//!
//! ```text
//! h(r) sqrt(J(r)) = mu(r) p_0 (k1 r^2 + k2 r^4 + k3 r^6 + k4 r^8),
//! mu(r)           = exp(-r^2 / 2) / sqrt(2 pi),
//! ```
//!
//! so every moment of `B_ij sqrt(J)` reduces to Gaussian moments
//! `m_n = int r^{2n} mu = (2n-1)!!` and to `i_j = int r^{2j} sqrt(1+r^2) mu`.
//! The coefficients `k` solve a 4x4 system whose rows fix
//!
//! ```text
//! lambda_1 = int p_1^2 p_2^2 / p_0  h sqrt(J) = 1/2
//! lambda_3 = int p_1^2 / p_0        h sqrt(J) = 1/2
//! <B_ii, p_0 sqrt(J)> = 0,  <B_ii, sqrt(J)> = 0
//! ```
//!
//! and then `lambda_2 = int p_1^4 / p_0 h sqrt(J) = 3/2` follows.
//!
//! The second family, `C_i = p_i (p_0 - rho_0) sqrt(J)`, uses the constant
//! `rho_0` that makes `int |p|^2 / p_0 (p_0 - rho_0) J` vanish.
//!
//! All integrals are written as (angular monomial) x (radial function). The
//! radial part is integrated adaptively over `[0, 40]`, beyond which the
//! Gaussian factor is below the smallest subnormal double.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibria::{Juttner, Sign, SpeciesParams};
use crate::vgrid::{adaptive_quad_1d, sphere_quad, Domain, QuadOptions, VelocityGrid};
use crate::{Error, Result, Vec3};

/// Largest `n` for which `(2n-1)!!` is tabulated.
pub const MAX_MOMENT_ORDER: usize = 20;

/// Upper end of every radial integral.
const RADIAL_CUTOFF: f64 = 40.0;

/// `exp(-r^2/2) / sqrt(2 pi)`.
#[inline]
pub fn gaussian_weight(r: f64) -> f64 {
    (-0.5 * r * r).exp() / (2.0 * PI).sqrt()
}

/// `m_n = (2n-1)!!` for `n = 0..=n_max`, in exact integer arithmetic.
pub fn gaussian_moments(n_max: usize) -> Result<Vec<u128>> {
    if n_max > MAX_MOMENT_ORDER {
        return Err(Error::config(format!(
            "moment order {n_max} exceeds {MAX_MOMENT_ORDER}"
        )));
    }
    let mut m = vec![1u128];
    for n in 1..=n_max {
        m.push((2 * n as u128 - 1) * m[n - 1]);
    }
    Ok(m)
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `i_j = a i_0 + b i_1` with exact integer `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ICombination {
    pub on_i0: i64,
    pub on_i1: i64,
}

impl ICombination {
    pub fn eval(&self, i0: f64, i1: f64) -> f64 {
        self.on_i0 as f64 * i0 + self.on_i1 as f64 * i1
    }
}

/// `i_j = (2j-1) i_{j-1} + (2j-3) i_{j-2}` starting from `i_0 = (1, 0)`,
/// `i_1 = (0, 1)`.
pub fn i_combinations(j_max: usize) -> Vec<ICombination> {
    let mut out = vec![ICombination { on_i0: 1, on_i1: 0 }, ICombination { on_i0: 0, on_i1: 1 }];
    for j in 2..=j_max {
        let (a, b) = ((2 * j - 1) as i64, (2 * j - 3) as i64);
        let (x, y) = (out[j - 1], out[j - 2]);
        out.push(ICombination {
            on_i0: a * x.on_i0 + b * y.on_i0,
            on_i1: a * x.on_i1 + b * y.on_i1,
        });
    }
    out.truncate(j_max + 1);
    out
}

/// Highest `j` for which `i_j` is tabulated.
pub const I_TABLE_ORDER: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct MomentTables {
    pub m: Vec<u128>,
    pub i0: Estimate,
    pub i1: Estimate,
    /// Exact combinations for `j = 0..=I_TABLE_ORDER`.
    pub i: Vec<ICombination>,
    /// Direct quadrature of `i_j`, same indices.
    pub i_direct: Vec<Estimate>,
}

impl MomentTables {
    /// `i_j` from the recurrence and the quadrature `i_0`, `i_1`.
    pub fn i_value(&self, j: usize) -> f64 {
        self.i[j].eval(self.i0.value, self.i1.value)
    }

    /// Worst relative gap between recurrence and direct quadrature.
    pub fn recurrence_mismatch(&self) -> f64 {
        (0..self.i.len())
            .map(|j| (self.i_value(j) - self.i_direct[j].value).abs() / self.i_direct[j].value)
            .fold(0.0, f64::max)
    }

    /// Worst relative gap between `m_n` and `2 int_0^inf r^{2n} mu`.
    pub fn moment_quadrature_mismatch(&self, n: usize, tol: f64) -> Result<f64> {
        let exact = self.m[n] as f64;
        let q = radial(|r| r.powi(2 * n as i32) * gaussian_weight(r), tol * exact)?;
        Ok((2.0 * q.value - exact).abs() / exact)
    }
}

fn radial(f: impl Fn(f64) -> f64, tol: f64) -> Result<Estimate> {
    let q = adaptive_quad_1d(f, Domain::Finite(0.0, RADIAL_CUTOFF), QuadOptions::new(tol))?;
    Ok(Estimate {
        value: q.value,
        error: q.error,
    })
}

/// `int_R r^{2j} sqrt(1+r^2) mu dr` with relative target `tol`.
fn i_direct(j: usize, tol: f64) -> Result<Estimate> {
    // m_j <= i_j, so an absolute target of tol * m_j is relative.
    let scale = (1..=j).map(|n| (2 * n - 1) as f64).product::<f64>();
    let half = radial(
        |r| r.powi(2 * j as i32) * (1.0 + r * r).sqrt() * gaussian_weight(r),
        0.5 * tol * scale,
    )?;
    Ok(Estimate {
        value: 2.0 * half.value,
        error: 2.0 * half.error,
    })
}

/// Gaussian moments up to order 10 and the `i` table with `i_0`, `i_1` at
/// relative accuracy `tol`.
pub fn i_tables(tol: f64) -> Result<MomentTables> {
    if !(tol > 0.0) {
        return Err(Error::config(format!("tolerance must be positive, got {tol}")));
    }
    let i_direct: Vec<Estimate> = (0..=I_TABLE_ORDER).map(|j| i_direct(j, tol)).collect::<Result<_>>()?;
    Ok(MomentTables {
        m: gaussian_moments(10)?,
        i0: i_direct[0],
        i1: i_direct[1],
        i: i_combinations(I_TABLE_ORDER),
        i_direct,
    })
}

/// The three integer rows of the system (independent of `i`).
fn integer_rows(m: &[u128]) -> [[i128; 4]; 3] {
    let m = |n: usize| m[n] as i128;
    [
        std::array::from_fn(|c| m(c + 2)),
        std::array::from_fn(|c| m(c + 3)),
        std::array::from_fn(|c| m(c + 4) - 2 * m(c + 3) - 3 * m(c + 2)),
    ]
}

/// Row of `<B_ii, sqrt(J)>`: `i_{j+2} - 3 i_{j+1}` for `j = 1..4`.
fn i_row(combos: &[ICombination]) -> [ICombination; 4] {
    std::array::from_fn(|c| ICombination {
        on_i0: combos[c + 3].on_i0 - 3 * combos[c + 2].on_i0,
        on_i1: combos[c + 3].on_i1 - 3 * combos[c + 2].on_i1,
    })
}

fn det3(m: [[i128; 3]; 3]) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `det C = a i_0 + b i_1`, with `(a, b)` obtained by cofactor expansion
/// along the last row in exact integers.
pub fn det_c_closed_form(tables: &MomentTables) -> ICombination {
    let top = integer_rows(&tables.m);
    let last = i_row(&tables.i);
    let mut out = ICombination { on_i0: 0, on_i1: 0 };
    for col in 0..4 {
        let minor: [[i128; 3]; 3] = std::array::from_fn(|r| {
            let mut row = [0i128; 3];
            let mut k = 0;
            for c in 0..4 {
                if c != col {
                    row[k] = top[r][c];
                    k += 1;
                }
            }
            row
        });
        // Cofactor sign for row 3 (0-based), column col.
        let cof = if (3 + col) % 2 == 0 { det3(minor) } else { -det3(minor) };
        out.on_i0 += (cof * last[col].on_i0 as i128) as i64;
        out.on_i1 += (cof * last[col].on_i1 as i128) as i64;
    }
    out
}

/// The system matrix at given `(i_0, i_1)`.
pub fn system_matrix(tables: &MomentTables, i0: f64, i1: f64) -> Matrix4<f64> {
    let top = integer_rows(&tables.m);
    let last = i_row(&tables.i);
    Matrix4::from_fn(|r, c| if r < 3 { top[r][c] as f64 } else { last[c].eval(i0, i1) })
}

/// Right-hand side `(const_1, const_2, 0, 0)`.
///
/// With `int_0^inf r^{2n} mu = m_n / 2` and the sphere averages of
/// `w_1^2 w_2^2` (`4 pi / 15`) and `w_1^2` (`4 pi / 3`):
/// `lambda_1 = (2 pi / 15) sum k_j m_{j+3}` and
/// `lambda_3 = (2 pi / 3) sum k_j m_{j+2}`. Setting both to `1/2` gives the
/// second entry directly, and the orthogonality row
/// `sum k_j (m_{j+3} - 2 m_{j+2} - 3 m_{j+1}) = 0` then gives the first.
pub fn moment_rhs() -> [f64; 2] {
    let c = 3.0 / (4.0 * PI);
    [c, c]
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentFunctionCoeffs {
    pub k: [f64; 4],
    /// `det C` by LU factorisation.
    pub det_c: f64,
    /// The same determinant from the exact integer closed form.
    pub det_c_closed_form: f64,
    pub closed_form: ICombination,
    /// `|a| err(i_0) + |b| err(i_1)`; the sign of `det C` is certified when
    /// `|det C|` exceeds it.
    pub det_c_bound: f64,
    pub rhs: [f64; 2],
}

pub fn solve_k(tables: &MomentTables) -> Result<MomentFunctionCoeffs> {
    let (i0, i1) = (tables.i0.value, tables.i1.value);
    let c = system_matrix(tables, i0, i1);
    let lu = c.lu();
    let det = lu.determinant();
    let scale: f64 = c.row_iter().map(|r| r.norm()).product();
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::numerical("moment system is degenerate", det, 1e-12 * scale));
    }
    let rhs = moment_rhs();
    let k = lu
        .solve(&Vector4::new(rhs[0], rhs[1], 0.0, 0.0))
        .ok_or_else(|| Error::numerical("moment system is singular", det, 0.0))?;
    let closed = det_c_closed_form(tables);
    Ok(MomentFunctionCoeffs {
        k: [k[0], k[1], k[2], k[3]],
        det_c: det,
        det_c_closed_form: closed.eval(i0, i1),
        closed_form: closed,
        det_c_bound: (closed.on_i0 as f64).abs() * tables.i0.error + (closed.on_i1 as f64).abs() * tables.i1.error,
        rhs,
    })
}

/// Relative gap between the LU determinant and the closed form at `(i0, i1)`.
pub fn det_mismatch(tables: &MomentTables, i0: f64, i1: f64) -> f64 {
    let lu = system_matrix(tables, i0, i1).determinant();
    let closed = det_c_closed_form(tables).eval(i0, i1);
    (lu - closed).abs() / closed.abs()
}

/// `h(r) sqrt(J(r))` and `h` itself for the solved coefficients.
#[derive(Debug, Clone, Copy)]
pub struct MomentProfile {
    pub k: [f64; 4],
    juttner: Juttner,
}

impl MomentProfile {
    /// Profile for the unit positive species.
    pub fn new(k: [f64; 4]) -> Result<Self> {
        Ok(Self {
            k,
            juttner: Juttner::new(SpeciesParams::unit(Sign::Plus))?,
        })
    }

    pub fn juttner(&self) -> &Juttner {
        &self.juttner
    }

    fn poly(&self, r: f64) -> f64 {
        let r2 = r * r;
        r2 * (self.k[0] + r2 * (self.k[1] + r2 * (self.k[2] + r2 * self.k[3])))
    }

    /// `h(r) = mu(r) p_0 poly(r) / sqrt(J(r))`.
    pub fn h(&self, r: f64) -> f64 {
        let p0 = (1.0 + r * r).sqrt();
        gaussian_weight(r) * p0 * self.poly(r) / self.juttner.radial(r).sqrt()
    }

    /// `B_ij(p)`.
    pub fn bij(&self, i: usize, j: usize, p: &Vec3) -> f64 {
        let delta = if i == j { 1.0 } else { 0.0 };
        (p[i] * p[j] - delta) * self.h(p.norm())
    }
}

/// `int_{S^2} w^e` for an exponent triple, cached.
struct SphereMoments {
    tol: f64,
    cache: BTreeMap<[u32; 3], f64>,
}

impl SphereMoments {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, idx: &[usize]) -> Result<f64> {
        let mut e = [0u32; 3];
        for &i in idx {
            e[i] += 1;
        }
        if let Some(v) = self.cache.get(&e) {
            return Ok(*v);
        }
        let v = sphere_quad(
            |w| w.x.powi(e[0] as i32) * w.y.powi(e[1] as i32) * w.z.powi(e[2] as i32),
            self.tol,
        )?
        .value;
        self.cache.insert(e, v);
        Ok(v)
    }
}

/// One named residual with its threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
}

impl Residual {
    pub fn passed(&self) -> bool {
        self.value.abs() <= self.threshold
    }
}

/// Quadrature checks of the solved `B_ij`.
#[derive(Debug, Clone, Serialize)]
pub struct BijChecks {
    pub lambda: [f64; 3],
    pub residuals: Vec<Residual>,
}

impl BijChecks {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(Residual::passed)
    }

    pub fn worst(&self) -> f64 {
        self.residuals.iter().map(|r| r.value.abs()).fold(0.0, f64::max)
    }
}

/// Fixed seed for the random contraction probe.
const CONTRACTION_SEED: u64 = 0x5eed_b170;

/// Evaluates the orthogonality conditions, the `lambda` values and the
/// contraction identity by angular x radial adaptive quadrature.
pub fn check_bij(profile: &MomentProfile, tol: f64, threshold: f64) -> Result<BijChecks> {
    let mut sphere = SphereMoments::new(tol);
    // rad(n, g) = int_0^inf r^{2 + n} g(r) h sqrt(J) dr
    let hj = |r: f64| profile.h(r) * profile.juttner.radial(r).sqrt();
    let rad =
        |n: i32, g: &dyn Fn(f64) -> f64| -> Result<f64> { Ok(radial(|r| r.powi(2 + n) * g(r) * hj(r), tol)?.value) };
    let one = |_: f64| 1.0;
    let p0 = |r: f64| (1.0 + r * r).sqrt();
    let inv_p0 = |r: f64| 1.0 / (1.0 + r * r).sqrt();
    let r2 = rad(2, &one)?;
    let r0 = rad(0, &one)?;
    let r2e = rad(2, &p0)?;
    let r0e = rad(0, &p0)?;
    let r3 = rad(3, &one)?;
    let r1 = rad(1, &one)?;
    // (p_k / p_0) p_0, kept unsimplified
    let ratio = |r: f64| p0(r) * inv_p0(r);
    let r3ie = rad(3, &ratio)?;
    let r1ie = rad(1, &ratio)?;
    let r3i = rad(3, &inv_p0)?;
    let r1i = rad(1, &inv_p0)?;
    let r4i = rad(4, &inv_p0)?;
    let r2i = rad(2, &inv_p0)?;
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };

    let mut out = Vec::new();
    let mut worst = [0.0f64; 5];
    for i in 0..3 {
        for j in i..3 {
            let (sij, s0) = (sphere.get(&[i, j])?, sphere.get(&[])?);
            worst[0] = worst[0].max((sij * r2 - delta(i, j) * s0 * r0).abs());
            worst[2] = worst[2].max((sij * r2e - delta(i, j) * s0 * r0e).abs());
            for k in 0..3 {
                let (sijk, sk) = (sphere.get(&[i, j, k])?, sphere.get(&[k])?);
                worst[1] = worst[1].max((sijk * r3 - delta(i, j) * sk * r1).abs());
                worst[3] = worst[3].max((sijk * r3i - delta(i, j) * sk * r1i).abs());
                worst[4] = worst[4].max((sijk * r3ie - delta(i, j) * sk * r1ie).abs());
            }
        }
    }
    let names = [
        "<B_ij, sqrt J>",
        "<B_ij, p_k sqrt J>",
        "<B_ij, p_0 sqrt J>",
        "<(p_k/p_0) B_ij, sqrt J>",
        "<(p_k/p_0) B_ij, p_0 sqrt J>",
    ];
    for (name, v) in names.iter().zip(worst) {
        out.push(Residual {
            name: name.to_string(),
            value: v,
            threshold,
        });
    }

    // T_ijkl = int B_ij (p_k / p_0) p_l sqrt J
    let mut t = [[[[0.0f64; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    t[i][j][k][l] = sphere.get(&[i, j, k, l])? * r4i - delta(i, j) * sphere.get(&[k, l])? * r2i;
                }
            }
        }
    }
    let lambda = [
        sphere.get(&[0, 0, 1, 1])? * r4i,
        sphere.get(&[0, 0, 0, 0])? * r4i,
        sphere.get(&[0, 0])? * r2i,
    ];
    for (name, v, target) in [
        ("lambda_1", lambda[0], 0.5),
        ("lambda_2", lambda[1], 1.5),
        ("lambda_3", lambda[2], 0.5),
    ] {
        out.push(Residual {
            name: format!("{name} - {target}"),
            value: v - target,
            threshold,
        });
    }

    // Contraction with a random G_kij symmetric in (i, j) and a random xi:
    // sum T_ijkl G_kij xi_l must equal sum_ij G_iij xi_j.
    let mut rng = ChaCha8Rng::seed_from_u64(CONTRACTION_SEED);
    let mut g = [[[0.0f64; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in i..3 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                g[k][i][j] = v;
                g[k][j][i] = v;
            }
        }
    }
    let xi: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            rhs += g[i][i][j] * xi[j];
            for k in 0..3 {
                for l in 0..3 {
                    lhs += t[i][j][k][l] * g[k][i][j] * xi[l];
                }
            }
        }
    }
    out.push(Residual {
        name: "contraction identity".into(),
        value: lhs - rhs,
        threshold,
    });
    Ok(BijChecks { lambda, residuals: out })
}

/// Node-indexed `B_ij` on a grid together with discrete inner products.
#[derive(Debug, Clone)]
pub struct BijFields {
    /// `fields[i][j][node]`.
    pub fields: [[Vec<f64>; 3]; 3],
    /// Grid-quadrature versions of the orthogonality residuals.
    pub discrete_residuals: Vec<Residual>,
}

pub fn build_bij(profile: &MomentProfile, grid: &VelocityGrid, threshold: f64) -> BijFields {
    let fields: [[Vec<f64>; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| grid.tabulate(|p| profile.bij(i, j, p))));
    let sj = grid.tabulate(|p| profile.juttner.sqrt(p));
    let p0s = grid.tabulate(|p| (1.0 + p.norm_squared()).sqrt());
    let mut worst = [0.0f64; 3];
    for row in &fields {
        for b in row {
            let ip =
                |w: &dyn Fn(usize) -> f64| grid.quad(&(0..grid.len()).map(|n| b[n] * sj[n] * w(n)).collect::<Vec<_>>());
            worst[0] = worst[0].max(ip(&|_| 1.0).abs());
            worst[2] = worst[2].max(ip(&|n| p0s[n]).abs());
            for k in 0..3 {
                worst[1] = worst[1].max(ip(&|n| grid.nodes()[n][k]).abs());
            }
        }
    }
    let discrete_residuals = ["<B_ij, sqrt J>", "<B_ij, p_k sqrt J>", "<B_ij, p_0 sqrt J>"]
        .iter()
        .zip(worst)
        .map(|(name, v)| Residual {
            name: format!("grid {name}"),
            value: v,
            threshold,
        })
        .collect();
    BijFields {
        fields,
        discrete_residuals,
    }
}

/// `rho_0` and the tabulated `C_i` of one species.
#[derive(Debug, Clone)]
pub struct CiFields {
    pub rho0: f64,
    /// `int |p|^2 / p_0 (p_0 - rho_0) J` by radial quadrature.
    pub defining_residual: f64,
    /// `c[i][node] = p_i (p_0 - rho_0) sqrt(J)`.
    pub c: [Vec<f64>; 3],
}

const RHO_TOL: f64 = 1e-13;

/// `rho_0 = int |p|^2 J / int |p|^2 / p_0 J`.
pub fn rho0(sp: &SpeciesParams) -> Result<f64> {
    let j = Juttner::new(*sp)?;
    let num = j.radial_moment(|r| r * r, 2, RHO_TOL)?.value;
    let den = j.radial_moment(|r| r * r / sp.p0_radial(r), 1, RHO_TOL)?.value;
    Ok(num / den)
}

pub fn rho0_and_ci(sp: &SpeciesParams, grid: &VelocityGrid) -> Result<CiFields> {
    let j = Juttner::new(*sp)?;
    let rho = rho0(sp)?;
    let defining_residual = j
        .radial_moment(|r| r * r / sp.p0_radial(r) * (sp.p0_radial(r) - rho), 2, RHO_TOL)?
        .value;
    let c = std::array::from_fn(|i| grid.tabulate(|p| p[i] * (sp.p0(p) - rho) * j.sqrt(p)));
    Ok(CiFields {
        rho0: rho,
        defining_residual,
        c,
    })
}

/// Grid version of `int p_1^2 / p_0 (p_0 - rho_0) J`, relative to
/// `int p_1^2 J`.
pub fn grid_component_residual(sp: &SpeciesParams, grid: &VelocityGrid) -> Result<f64> {
    let j = Juttner::new(*sp)?;
    let rho = rho0(sp)?;
    let num = grid.quad(&grid.tabulate(|p| p.x * p.x / sp.p0(p) * (sp.p0(p) - rho) * j.eval(p)));
    let den = grid.quad(&grid.tabulate(|p| p.x * p.x * j.eval(p)));
    Ok(num.abs() / den)
}

/// Pairings of `C_i` with the energy direction.
#[derive(Debug, Clone, Serialize)]
pub struct CiPairings {
    pub rho0: [f64; 2],
    /// `<(p_j / p_0) C_i, sqrt J>` per species.
    pub against_sqrt_j: [[[f64; 3]; 3]; 2],
    /// `<(p_j / p_0) C_i, chi_6>` per species, with `chi_6` the normalised
    /// energy direction of the pair.
    pub against_energy: [[[f64; 3]; 3]; 2],
}

impl CiPairings {
    /// `max |<(p_j/p_0) C_i, sqrt J>|`.
    pub fn worst_orthogonality(&self) -> f64 {
        self.against_sqrt_j
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |a, b| a.max(b.abs()))
    }

    /// `max_{i != j} |<(p_j/p_0) C_i, chi_6>|`.
    pub fn worst_off_diagonal(&self) -> f64 {
        let mut w = 0.0f64;
        for m in &self.against_energy {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        w = w.max(m[i][j].abs());
                    }
                }
            }
        }
        w
    }
}

/// Radial x angular evaluation of the `C_i` pairings for a plasma pair.
pub fn ci_pairings(pair: &crate::equilibria::PlasmaPair, tol: f64) -> Result<CiPairings> {
    let species = pair.species();
    let mut sphere = SphereMoments::new(tol);
    let js = [Juttner::new(species[0])?, Juttner::new(species[1])?];
    let mut mass = [0.0; 2];
    let mut mean_energy = [0.0; 2];
    for s in 0..2 {
        let sp = species[s];
        mass[s] = js[s].radial_moment(|_| 1.0, 0, RHO_TOL)?.value;
        mean_energy[s] = js[s].radial_moment(|r| sp.p0_radial(r), 1, RHO_TOL)?.value / mass[s];
    }
    let mut energy_norm = 0.0;
    for s in 0..2 {
        let sp = species[s];
        let e = mean_energy[s];
        energy_norm += js[s]
            .radial_moment(|r| (sp.p0_radial(r) - e).powi(2), 2, RHO_TOL)?
            .value;
    }
    let kappa3 = energy_norm.powf(-0.5);
    let mut out = CiPairings {
        rho0: [0.0; 2],
        against_sqrt_j: [[[0.0; 3]; 3]; 2],
        against_energy: [[[0.0; 3]; 3]; 2],
    };
    for s in 0..2 {
        let sp = species[s];
        let rho = rho0(&sp)?;
        out.rho0[s] = rho;
        let e = mean_energy[s];
        // Radial parts divided by the 4 pi r^2 that radial_moment applies.
        let plain = js[s]
            .radial_moment(|r| r * r * (sp.p0_radial(r) - rho) / sp.p0_radial(r), 2, RHO_TOL)?
            .value;
        let energy = js[s]
            .radial_moment(
                |r| r * r * (sp.p0_radial(r) - rho) * (sp.p0_radial(r) - e) / sp.p0_radial(r),
                3,
                RHO_TOL,
            )?
            .value;
        for i in 0..3 {
            for j in 0..3 {
                let ang = sphere.get(&[i, j])? / (4.0 * PI);
                out.against_sqrt_j[s][i][j] = ang * plain;
                out.against_energy[s][i][j] = ang * energy * kappa3;
            }
        }
    }
    Ok(out)
}

/// Stable JSON summary of the construction.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub m_table: Vec<u128>,
    pub i0: Estimate,
    pub i1: Estimate,
    pub i_combinations: Vec<ICombination>,
    pub i_direct: Vec<Estimate>,
    pub k: [f64; 4],
    #[serde(rename = "detC")]
    pub det_c: f64,
    #[serde(rename = "detC_closed_form")]
    pub det_c_closed_form: f64,
    #[serde(rename = "detC_bound")]
    pub det_c_bound: f64,
    pub lambda: [f64; 3],
    pub residuals: Vec<Residual>,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(Residual::passed)
    }
}

/// Default probes `(i_0, i_1)` with `i_1 > i_0 > 0` for the determinant check.
pub fn determinant_probes(seed: u64) -> [(f64, f64); 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| {
        let a: f64 = rng.gen_range(0.1..5.0);
        (a, a * rng.gen_range(1.01..4.0))
    })
}

/// Runs the whole construction with relative quadrature target `tol` and
/// checks every residual against `threshold`.
pub fn moment_report(tol: f64, threshold: f64, seed: u64) -> Result<MomentReport> {
    let tables = i_tables(tol)?;
    let coeffs = solve_k(&tables)?;
    let profile = MomentProfile::new(coeffs.k)?;
    let checks = check_bij(&profile, tol, threshold)?;
    let mut residuals = vec![
        Residual {
            name: "m_5 vs quadrature".into(),
            value: tables.moment_quadrature_mismatch(5, tol)?,
            threshold: 1e-8,
        },
        Residual {
            name: "i recurrence vs direct".into(),
            value: tables.recurrence_mismatch(),
            threshold: 1e-7,
        },
        Residual {
            name: "i_0 - i_1 (must be negative)".into(),
            value: (tables.i0.value - tables.i1.value).max(0.0),
            threshold: 0.0,
        },
        Residual {
            name: "detC LU vs closed form".into(),
            value: det_mismatch(&tables, tables.i0.value, tables.i1.value),
            threshold: 1e-9,
        },
        Residual {
            name: "detC + bound (must be negative)".into(),
            value: (coeffs.det_c_closed_form + coeffs.det_c_bound).max(0.0),
            threshold: 0.0,
        },
    ];
    for (n, (a, b)) in determinant_probes(seed).into_iter().enumerate() {
        residuals.push(Residual {
            name: format!("detC LU vs closed form, probe {n}"),
            value: det_mismatch(&tables, a, b),
            threshold: 1e-9,
        });
    }
    residuals.extend(checks.residuals);
    Ok(MomentReport {
        m_table: tables.m.clone(),
        i0: tables.i0,
        i1: tables.i1,
        i_combinations: tables.i.clone(),
        i_direct: tables.i_direct.clone(),
        k: coeffs.k,
        det_c: coeffs.det_c,
        det_c_closed_form: coeffs.det_c_closed_form,
        det_c_bound: coeffs.det_c_bound,
        lambda: checks.lambda,
        residuals,
    })
}
