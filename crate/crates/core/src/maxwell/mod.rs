//! Yee scheme for Maxwell's equations in a perfectly conducting box, with
//! `c = 1` and Gaussian `4 pi` sources:
//!
//! ```text
//! d_t E - curl B = -4 pi j,   d_t B + curl E = 0,
//! div E = 4 pi rho,           div B = 0.
//! ```
//!
//! Layout on a box with `n_a` cells of width `h_a` along axis `a`:
//!
//! * `E_a`, `j_a` on edges: half-integer index along `a`, integer along the
//!   other two axes (`n_a x (n_b + 1) x (n_c + 1)` values).
//! * `B_a` on faces: integer index along `a`, half-integer along the others
//!   (`(n_a + 1) x n_b x n_c` values).
//! * `rho` on nodes.
//!
//! Tangential `E` and normal `B` on the walls are stored and kept at zero.
//! The time step is the velocity-Verlet form of the leapfrog: a half kick of
//! `B`, a full kick of `E` with the current at the half step, a second half
//! kick of `B`. Both fields are therefore available at integer times.

mod export;
mod helmholtz;
mod identities;
mod manufactured;

pub use export::{read_snapshot, write_diagnostics_csv, write_snapshot, SnapshotMeta};
pub use helmholtz::{helmholtz_split, HelmholtzReport};
pub use identities::{
    angular_momentum_rate_check, momentum_identity_residual, sample_patch, AngularMomentumReport, PatchGrid,
    PatchSnapshot,
};
pub use manufactured::{Factor, Manufactured, Term};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Rectangular box `[0, L_x] x [0, L_y] x [0, L_z]` split into cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxGeometry {
    pub cells: [usize; 3],
    pub lengths: [f64; 3],
}

impl BoxGeometry {
    pub fn cube(n: usize, side: f64) -> Self {
        Self {
            cells: [n; 3],
            lengths: [side; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.cells[a] < 2 {
                return Err(Error::config(format!(
                    "need at least 2 cells per axis, got {:?}",
                    self.cells
                )));
            }
            if !(self.lengths[a] > 0.0 && self.lengths[a].is_finite()) {
                return Err(Error::config(format!(
                    "box lengths must be positive, got {:?}",
                    self.lengths
                )));
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.lengths[a] / self.cells[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// `cfl_factor * min h / sqrt(3)`.
    pub fn stable_dt(&self, cfl_factor: f64) -> f64 {
        cfl_factor * self.spacing().iter().cloned().fold(f64::INFINITY, f64::min) / 3f64.sqrt()
    }

    pub fn centre(&self) -> Vec3 {
        Vec3::new(self.lengths[0], self.lengths[1], self.lengths[2]) * 0.5
    }

    fn edge_dims(&self, a: usize) -> [usize; 3] {
        std::array::from_fn(|d| if d == a { self.cells[d] } else { self.cells[d] + 1 })
    }

    fn face_dims(&self, a: usize) -> [usize; 3] {
        std::array::from_fn(|d| if d == a { self.cells[d] + 1 } else { self.cells[d] })
    }

    fn node_dims(&self) -> [usize; 3] {
        std::array::from_fn(|d| self.cells[d] + 1)
    }

    /// Position of edge `idx` of component `a`.
    pub fn edge_position(&self, a: usize, idx: [usize; 3]) -> Vec3 {
        let h = self.spacing();
        Vec3::from_fn(|d, _| (idx[d] as f64 + if d == a { 0.5 } else { 0.0 }) * h[d])
    }

    /// Position of face `idx` of component `a`.
    pub fn face_position(&self, a: usize, idx: [usize; 3]) -> Vec3 {
        let h = self.spacing();
        Vec3::from_fn(|d, _| (idx[d] as f64 + if d == a { 0.0 } else { 0.5 }) * h[d])
    }

    pub fn node_position(&self, idx: [usize; 3]) -> Vec3 {
        let h = self.spacing();
        Vec3::from_fn(|d, _| idx[d] as f64 * h[d])
    }
}

/// Dense row-major 3D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Array3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Array3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn offset(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    #[inline]
    pub fn get(&self, idx: [usize; 3]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; 3], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let d = self.dims;
        (0..d[0]).flat_map(move |i| (0..d[1]).flat_map(move |j| (0..d[2]).map(move |k| [i, j, k])))
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    fn fill_with(&mut self, f: impl Fn([usize; 3]) -> f64 + Sync) {
        let [_, n1, n2] = self.dims;
        self.data.par_chunks_mut(n1 * n2).enumerate().for_each(|(i, slab)| {
            for j in 0..n1 {
                for k in 0..n2 {
                    slab[j * n2 + k] = f([i, j, k]);
                }
            }
        });
    }
}

/// Three staggered components.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredVector {
    pub comp: [Array3; 3],
}

impl StaggeredVector {
    pub fn edges(geom: &BoxGeometry) -> Self {
        Self {
            comp: std::array::from_fn(|a| Array3::zeros(geom.edge_dims(a))),
        }
    }

    pub fn faces(geom: &BoxGeometry) -> Self {
        Self {
            comp: std::array::from_fn(|a| Array3::zeros(geom.face_dims(a))),
        }
    }

    /// Samples `f(x)[a]` at every edge of component `a`.
    pub fn sample_edges(geom: &BoxGeometry, f: impl Fn(&Vec3) -> Vec3 + Sync) -> Self {
        let mut out = Self::edges(geom);
        for (a, c) in out.comp.iter_mut().enumerate() {
            c.fill_with(|idx| f(&geom.edge_position(a, idx))[a]);
        }
        out
    }

    /// Samples `f(a, x)` at every edge of component `a`.
    pub fn sample_edge_components(geom: &BoxGeometry, f: impl Fn(usize, &Vec3) -> f64 + Sync) -> Self {
        let mut out = Self::edges(geom);
        for (a, c) in out.comp.iter_mut().enumerate() {
            c.fill_with(|idx| f(a, &geom.edge_position(a, idx)));
        }
        out
    }

    pub fn sample_faces(geom: &BoxGeometry, f: impl Fn(&Vec3) -> Vec3 + Sync) -> Self {
        let mut out = Self::faces(geom);
        for (a, c) in out.comp.iter_mut().enumerate() {
            c.fill_with(|idx| f(&geom.face_position(a, idx))[a]);
        }
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.comp.iter().map(Array3::norm_sq).sum()
    }

    pub fn axpy(&mut self, alpha: f64, x: &StaggeredVector) {
        for (c, xc) in self.comp.iter_mut().zip(&x.comp) {
            c.data.iter_mut().zip(&xc.data).for_each(|(a, b)| *a += alpha * b);
        }
    }
}

/// How `rho` follows the current during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChargeUpdate {
    /// `rho += -dt div j` on interior nodes.
    #[default]
    Continuity,
    /// `rho` is left as it is.
    Frozen,
}

/// Field state of the cavity.
#[derive(Debug, Clone)]
pub struct EMFieldState {
    geom: BoxGeometry,
    pub e: StaggeredVector,
    pub b: StaggeredVector,
    pub rho: Array3,
    /// Current used in the last step.
    pub j: StaggeredVector,
    dt: f64,
    t: f64,
    steps: usize,
    pub charge_update: ChargeUpdate,
    history: Option<History>,
}

/// What `step` carries between calls. `B` is rebuilt each half step as
/// `b_ref - curl(int E dt)`, so `div B` is one evaluation of `div curl` and
/// its rounding does not random-walk with the step count. `E` and `rho`
/// are running sums kept in compensated form, and the public fields are
/// their rounded values, which holds the Gauss defect at the rounding of a
/// single evaluation as well.
#[derive(Debug, Clone)]
struct History {
    b_ref: StaggeredVector,
    e_integral: StaggeredVector,
    e_sum: StaggeredVector,
    e_carry: StaggeredVector,
    rho_sum: Array3,
    rho_carry: Array3,
    seen: Option<(StaggeredVector, StaggeredVector, Array3)>,
}

/// Neumaier summation: `sum += inc` with the lost low part kept in `carry`.
fn compensated_add(sum: &mut [f64], carry: &mut [f64], inc: impl Iterator<Item = f64>) {
    for ((s, c), x) in sum.iter_mut().zip(carry.iter_mut()).zip(inc) {
        let t = *s + x;
        *c += if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
        *s = t;
    }
}

impl History {
    fn restart(s: &EMFieldState) -> Self {
        Self {
            b_ref: s.b.clone(),
            e_integral: StaggeredVector::edges(&s.geom),
            e_sum: s.e.clone(),
            e_carry: StaggeredVector::edges(&s.geom),
            rho_sum: s.rho.clone(),
            rho_carry: Array3::zeros(s.geom.node_dims()),
            seen: None,
        }
    }
}

/// Field-wide scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxwellDiagnostics {
    pub t: f64,
    /// `(1/8pi) int (|E|^2 + |B|^2)`.
    pub energy: f64,
    /// The quantity the scheme conserves exactly without sources:
    /// `(1/8pi) (|E|^2 + |B|^2 - dt^2/4 |curl E|^2)`.
    pub discrete_energy: f64,
    /// `(1/4pi) int E x B`.
    pub momentum: [f64; 3],
    /// `(1/4pi) int R . (E x B)` about the box's central `z` axis.
    pub angular_momentum_z: f64,
    pub gauss_residual: f64,
    pub div_b_residual: f64,
}

/// Rotation axis `R(x) = direction x (x - origin)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Axis {
    pub fn rotation_field(&self, x: &Vec3) -> Vec3 {
        self.direction.cross(&(x - self.origin))
    }
}

#[inline]
fn shift(mut idx: [usize; 3], d: usize, up: bool) -> [usize; 3] {
    if up {
        idx[d] += 1;
    } else {
        idx[d] -= 1;
    }
    idx
}

impl EMFieldState {
    /// Zero fields. Fails if `dt` exceeds `min h / sqrt(3)`.
    pub fn new(geom: BoxGeometry, dt: f64) -> Result<Self> {
        geom.validate()?;
        let limit = geom.stable_dt(1.0);
        if !(dt > 0.0 && dt <= limit) {
            return Err(Error::config(format!("time step {dt} violates the CFL limit {limit}")));
        }
        Ok(Self {
            geom,
            e: StaggeredVector::edges(&geom),
            b: StaggeredVector::faces(&geom),
            rho: Array3::zeros(geom.node_dims()),
            j: StaggeredVector::edges(&geom),
            dt,
            t: 0.0,
            steps: 0,
            charge_update: ChargeUpdate::Continuity,
            history: None,
        })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geom
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Samples analytic fields and zeroes the wall entries.
    pub fn set_fields(&mut self, e: impl Fn(&Vec3) -> Vec3 + Sync, b: impl Fn(&Vec3) -> Vec3 + Sync) {
        self.e = StaggeredVector::sample_edges(&self.geom, e);
        self.b = StaggeredVector::sample_faces(&self.geom, b);
        self.enforce_pec();
    }

    /// Samples `E` and a vector potential on edges and sets `B` to the
    /// discrete curl of the potential, so that `div B = 0` to rounding. A
    /// potential with zero tangential trace keeps `B . n = 0` on the walls.
    pub fn set_fields_from_potential(&mut self, e: impl Fn(&Vec3) -> Vec3 + Sync, a: impl Fn(&Vec3) -> Vec3 + Sync) {
        self.e = StaggeredVector::sample_edges(&self.geom, e);
        let mut pot = StaggeredVector::sample_edges(&self.geom, a);
        std::mem::swap(&mut self.e, &mut pot);
        self.enforce_pec();
        self.b = self.curl_e();
        std::mem::swap(&mut self.e, &mut pot);
        self.enforce_pec();
    }

    /// `E = -grad phi` with `phi` on nodes (zero on the walls), and
    /// `rho = div E / 4 pi` on interior nodes.
    pub fn set_electrostatic(&mut self, phi: impl Fn(&Vec3) -> f64 + Sync) {
        let g = self.geom;
        let h = g.spacing();
        let mut pot = Array3::zeros(g.node_dims());
        let n = g.cells;
        pot.fill_with(|idx| {
            if (0..3).any(|d| idx[d] == 0 || idx[d] == n[d]) {
                0.0
            } else {
                phi(&g.node_position(idx))
            }
        });
        for a in 0..3 {
            let pot = &pot;
            self.e.comp[a].fill_with(|idx| -(pot.get(shift(idx, a, true)) - pot.get(idx)) / h[a]);
        }
        self.enforce_pec();
        let div = self.divergence_e();
        self.rho = div;
        self.rho.data.iter_mut().for_each(|v| *v /= 4.0 * PI);
    }

    /// Zeroes tangential `E` and normal `B` on the walls.
    pub fn enforce_pec(&mut self) {
        let n = self.geom.cells;
        for a in 0..3 {
            let e = &mut self.e.comp[a];
            let [_, n1, n2] = e.dims;
            e.data.par_chunks_mut(n1 * n2).enumerate().for_each(|(i, slab)| {
                for j in 0..n1 {
                    for k in 0..n2 {
                        let idx = [i, j, k];
                        if (0..3).any(|d| d != a && (idx[d] == 0 || idx[d] == n[d])) {
                            slab[j * n2 + k] = 0.0;
                        }
                    }
                }
            });
            let b = &mut self.b.comp[a];
            for idx in b
                .indices()
                .filter(|idx| idx[a] == 0 || idx[a] == n[a])
                .collect::<Vec<_>>()
            {
                b.set(idx, 0.0);
            }
        }
    }

    /// `curl E` on faces.
    pub fn curl_e(&self) -> StaggeredVector {
        curl_edges(&self.geom, &self.e)
    }

    /// `div E` on nodes; wall nodes are zero.
    pub fn divergence_e(&self) -> Array3 {
        divergence_edges(&self.geom, &self.e)
    }

    /// `div B` on cells.
    pub fn divergence_b(&self) -> Array3 {
        let g = self.geom;
        let h = g.spacing();
        let mut out = Array3::zeros(g.cells);
        out.fill_with(|idx| {
            (0..3)
                .map(|a| (self.b.comp[a].get(shift(idx, a, true)) - self.b.comp[a].get(idx)) / h[a])
                .sum()
        });
        out
    }

    /// One time step; `current` is `j` at `t + dt/2` on edges.
    pub fn step(&mut self, current: Option<&StaggeredVector>) {
        let fresh = match &self.history {
            Some(h) => h
                .seen
                .as_ref()
                .is_none_or(|(e, b, rho)| *e != self.e || *b != self.b || *rho != self.rho),
            None => true,
        };
        let mut h = match self.history.take() {
            Some(h) if !fresh => h,
            _ => History::restart(self),
        };
        let g = self.geom;
        let dt = self.dt;
        self.advance_b(&mut h);
        let cb = curl_faces(&g, &self.b);
        let four_pi = 4.0 * PI;
        for a in 0..3 {
            let (e, c, curl) = (&mut h.e_sum.comp[a].data, &mut h.e_carry.comp[a].data, &cb.comp[a].data);
            match current {
                Some(j) => compensated_add(
                    e,
                    c,
                    curl.iter()
                        .zip(&j.comp[a].data)
                        .map(|(cb, j)| dt * cb - four_pi * dt * j),
                ),
                None => compensated_add(e, c, curl.iter().map(|cb| dt * cb)),
            }
            let out = &mut self.e.comp[a].data;
            out.iter_mut()
                .zip(e.iter().zip(c.iter()))
                .for_each(|(o, (s, c))| *o = s + c);
        }
        match current {
            Some(j) => {
                self.j = j.clone();
                if self.charge_update == ChargeUpdate::Continuity {
                    let div = divergence_edges(&g, j);
                    compensated_add(
                        &mut h.rho_sum.data,
                        &mut h.rho_carry.data,
                        div.data.iter().map(|d| -dt * d),
                    );
                    let out = &mut self.rho.data;
                    out.iter_mut()
                        .zip(h.rho_sum.data.iter().zip(&h.rho_carry.data))
                        .for_each(|(o, (s, c))| *o = s + c);
                }
            }
            None => self.j = StaggeredVector::edges(&g),
        }
        self.enforce_pec();
        self.advance_b(&mut h);
        self.enforce_pec();
        h.seen = Some((self.e.clone(), self.b.clone(), self.rho.clone()));
        self.history = Some(h);
        self.t += dt;
        self.steps += 1;
    }

    /// Half a step of `dB/dt = -curl E`.
    fn advance_b(&mut self, h: &mut History) {
        h.e_integral.axpy(0.5 * self.dt, &self.e);
        self.b = curl_edges(&self.geom, &h.e_integral);
        for (c, r) in self.b.comp.iter_mut().zip(&h.b_ref.comp) {
            c.data.iter_mut().zip(&r.data).for_each(|(v, r)| *v = r - *v);
        }
    }

    /// `div E - 4 pi rho` on nodes; wall nodes are zero.
    pub fn gauss_defect(&self) -> Array3 {
        let mut div = self.divergence_e();
        let n = self.geom.cells;
        let idx: Vec<[usize; 3]> = div.indices().collect();
        for i in idx {
            let v = if (0..3).all(|d| i[d] > 0 && i[d] < n[d]) {
                div.get(i) - 4.0 * PI * self.rho.get(i)
            } else {
                0.0
            };
            div.set(i, v);
        }
        div
    }

    /// `max |div E - 4 pi rho|` over interior nodes.
    pub fn gauss_residual(&self) -> f64 {
        self.gauss_defect().data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn div_b_residual(&self) -> f64 {
        self.divergence_b().data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `E` and `B` averaged to cell centres, as `(centre, E, B)`.
    pub fn cell_centred(&self) -> Vec<(Vec3, Vec3, Vec3)> {
        let g = self.geom;
        let n = g.cells;
        let mut out = Vec::with_capacity(n.iter().product());
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = [i, j, k];
                    let mut e = Vec3::zeros();
                    let mut b = Vec3::zeros();
                    for a in 0..3 {
                        let (p, q) = ((a + 1) % 3, (a + 2) % 3);
                        let ea = &self.e.comp[a];
                        e[a] = 0.25
                            * (ea.get(idx)
                                + ea.get(shift(idx, p, true))
                                + ea.get(shift(idx, q, true))
                                + ea.get(shift(shift(idx, p, true), q, true)));
                        b[a] = 0.5 * (self.b.comp[a].get(idx) + self.b.comp[a].get(shift(idx, a, true)));
                    }
                    let x = g.node_position(idx) + Vec3::from(g.spacing()) * 0.5;
                    out.push((x, e, b));
                }
            }
        }
        out
    }

    pub fn diagnostics(&self) -> MaxwellDiagnostics {
        let dv = self.geom.cell_volume();
        let centred = self.cell_centred();
        let mut momentum = Vec3::zeros();
        let mut lz = 0.0;
        let axis = Axis {
            origin: self.geom.centre(),
            direction: Vec3::z(),
        };
        for (x, e, b) in &centred {
            let s = e.cross(b);
            momentum += s;
            lz += axis.rotation_field(x).dot(&s);
        }
        let scale = dv / (4.0 * PI);
        let raw = self.e.norm_sq() + self.b.norm_sq();
        let curl = self.curl_e().norm_sq();
        MaxwellDiagnostics {
            t: self.t,
            energy: raw * dv / (8.0 * PI),
            discrete_energy: (raw - 0.25 * self.dt * self.dt * curl) * dv / (8.0 * PI),
            momentum: [momentum.x * scale, momentum.y * scale, momentum.z * scale],
            angular_momentum_z: lz * scale,
            gauss_residual: self.gauss_residual(),
            div_b_residual: self.div_b_residual(),
        }
    }

    /// Discrete `int E . j` with the last current.
    pub fn work_rate(&self) -> f64 {
        let dv = self.geom.cell_volume();
        self.e
            .comp
            .iter()
            .zip(&self.j.comp)
            .map(|(e, j)| e.data.iter().zip(&j.data).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>()
            * dv
    }

    /// Whether every wall entry is exactly zero.
    pub fn pec_holds(&self) -> bool {
        let n = self.geom.cells;
        (0..3).all(|a| {
            let e = &self.e.comp[a];
            let b = &self.b.comp[a];
            e.indices()
                .filter(|idx| (0..3).any(|d| d != a && (idx[d] == 0 || idx[d] == n[d])))
                .all(|idx| e.get(idx) == 0.0)
                && b.indices()
                    .filter(|idx| idx[a] == 0 || idx[a] == n[a])
                    .all(|idx| b.get(idx) == 0.0)
        })
    }
}

/// Discrete curl of a face field on interior edges. Wall edges are zero.
fn curl_faces(geom: &BoxGeometry, v: &StaggeredVector) -> StaggeredVector {
    let mut out = StaggeredVector::edges(geom);
    let h = geom.spacing();
    let n = geom.cells;
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let (vc, vb) = (&v.comp[c], &v.comp[b]);
        out.comp[a].fill_with(|idx| {
            if idx[b] == 0 || idx[b] == n[b] || idx[c] == 0 || idx[c] == n[c] {
                return 0.0;
            }
            (vc.get(idx) - vc.get(shift(idx, b, false))) / h[b] - (vb.get(idx) - vb.get(shift(idx, c, false))) / h[c]
        });
    }
    out
}

/// Discrete curl of an edge field, on faces.
fn curl_edges(geom: &BoxGeometry, v: &StaggeredVector) -> StaggeredVector {
    let mut out = StaggeredVector::faces(geom);
    let h = geom.spacing();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let (vc, vb) = (&v.comp[c], &v.comp[b]);
        out.comp[a].fill_with(|idx| {
            (vc.get(shift(idx, b, true)) - vc.get(idx)) / h[b] - (vb.get(shift(idx, c, true)) - vb.get(idx)) / h[c]
        });
    }
    out
}

/// `div` of an edge field on nodes; wall nodes are left at zero.
fn divergence_edges(geom: &BoxGeometry, v: &StaggeredVector) -> Array3 {
    let h = geom.spacing();
    let n = geom.cells;
    let mut out = Array3::zeros(geom.node_dims());
    out.fill_with(|idx| {
        if (0..3).any(|d| idx[d] == 0 || idx[d] == n[d]) {
            return 0.0;
        }
        (0..3)
            .map(|a| (v.comp[a].get(idx) - v.comp[a].get(shift(idx, a, false))) / h[a])
            .sum()
    });
    out
}

/// Standing mode `(l, m, n)` of the box with amplitude vector `amp`
/// (projected to be orthogonal to the wave vector).
#[derive(Debug, Clone, Copy)]
pub struct CavityMode {
    pub k: Vec3,
    pub amp: Vec3,
}

impl CavityMode {
    pub fn new(geom: &BoxGeometry, mode: [usize; 3], amp: Vec3) -> Result<Self> {
        let k = Vec3::from_fn(|a, _| mode[a] as f64 * PI / geom.lengths[a]);
        if (0..3).filter(|&a| mode[a] == 0).count() > 1 {
            return Err(Error::config(format!("mode {mode:?} is identically zero")));
        }
        let amp = amp - k * (amp.dot(&k) / k.norm_squared());
        Ok(Self { k, amp })
    }

    pub fn omega(&self) -> f64 {
        self.k.norm()
    }

    pub fn e(&self, x: &Vec3, t: f64) -> Vec3 {
        let (s, c) = (
            x.component_mul(&self.k).map(f64::sin),
            x.component_mul(&self.k).map(f64::cos),
        );
        let w = (self.omega() * t).cos();
        Vec3::new(
            self.amp.x * c.x * s.y * s.z,
            self.amp.y * s.x * c.y * s.z,
            self.amp.z * s.x * s.y * c.z,
        ) * w
    }

    /// A vector potential of `b` with zero tangential trace on the walls:
    /// `-sin(omega t) / omega` times the spatial part of `e`.
    pub fn vector_potential(&self, x: &Vec3, t: f64) -> Vec3 {
        let w = self.omega();
        self.e(x, 0.0) * (-(w * t).sin() / w)
    }

    pub fn b(&self, x: &Vec3, t: f64) -> Vec3 {
        let (s, c) = (
            x.component_mul(&self.k).map(f64::sin),
            x.component_mul(&self.k).map(f64::cos),
        );
        let kxa = self.k.cross(&self.amp);
        let w = -(self.omega() * t).sin() / self.omega();
        Vec3::new(
            kxa.x * s.x * c.y * c.z,
            kxa.y * c.x * s.y * c.z,
            kxa.z * c.x * c.y * s.z,
        ) * w
    }
}

/// Relative `l^2` distance between the state and a cavity mode at the
/// state's time.
pub fn mode_error(state: &EMFieldState, mode: &CavityMode) -> f64 {
    let g = *state.geometry();
    let t = state.time();
    let e = StaggeredVector::sample_edges(&g, |x| mode.e(x, t));
    let b = StaggeredVector::sample_faces(&g, |x| mode.b(x, t));
    let mut d = state.e.clone();
    d.axpy(-1.0, &e);
    let mut db = state.b.clone();
    db.axpy(-1.0, &b);
    ((d.norm_sq() + db.norm_sq()) / (e.norm_sq() + b.norm_sq()).max(f64::MIN_POSITIVE)).sqrt()
}
