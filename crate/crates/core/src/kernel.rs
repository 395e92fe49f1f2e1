//! The relativistic Landau (Belyaev-Budker) collision kernel.
//!
//! With `w = p/m_p`, `v = q/m_q` and `gamma = P.Q / (m_p m_q)`,
//!
//! ```text
//! Lambda = gamma^2 (gamma^2 - 1)^{-3/2}
//! S      = (gamma^2 - 1) I - (w - v)(w - v)^T + (gamma - 1)(w v^T + v w^T)
//! Phi    = c_K e_p e_q L Lambda S / (w0 v0)
//! ```
//!
//! where `w0 = p0/m_p`. The default `c_K = 2 pi`.
//!
//! `gamma - 1` is formed as `(|w - v|^2 + |w x v|^2) / (w0 v0 + 1 + w.v)`,
//! which avoids the cancellation in `w0 v0 - w.v - 1` near the diagonal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::equilibria::SpeciesParams;
use crate::vgrid::{adaptive_quad_1d, Domain, QuadOptions};
use crate::{Error, Mat3, Result, Vec3};

/// Below this value of `|gamma - 1|` the kernel is treated as singular.
pub const DIAGONAL_THRESHOLD: f64 = 1e-14;

/// Coulomb logarithm `L` for one species pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombLog(pub f64);

impl Default for CoulombLog {
    fn default() -> Self {
        CoulombLog(1.0)
    }
}

/// Coulomb logarithm plus the overall kernel constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    #[serde(default = "default_clog")]
    pub coulomb_log: f64,
    #[serde(default = "default_constant")]
    pub constant: f64,
}

fn default_clog() -> f64 {
    1.0
}
fn default_constant() -> f64 {
    2.0 * PI
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            coulomb_log: default_clog(),
            constant: default_constant(),
        }
    }
}

impl KernelParams {
    pub fn with_constant(constant: f64) -> Self {
        Self {
            constant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coulomb_log > 0.0 && self.coulomb_log.is_finite()) {
            return Err(Error::config(format!(
                "Coulomb logarithm must be positive, got {}",
                self.coulomb_log
            )));
        }
        if !(self.constant > 0.0 && self.constant.is_finite()) {
            return Err(Error::config(format!(
                "kernel constant must be positive, got {}",
                self.constant
            )));
        }
        Ok(())
    }
}

/// Everything [`eval_kernel`] computes for one `(p, q)` pair.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    pub phi: Mat3,
    pub lambda: f64,
    pub s_matrix: Mat3,
    /// Minkowski product `P.Q` (with masses).
    pub pq_dot: f64,
}

/// `sqrt(m_p^2 + |p|^2) sqrt(m_q^2 + |q|^2) - p.q`.
pub fn minkowski_dot(p: &Vec3, q: &Vec3, m_p: f64, m_q: f64) -> f64 {
    let p0 = (m_p * m_p + p.norm_squared()).sqrt();
    let q0 = (m_q * m_q + q.norm_squared()).sqrt();
    p0 * q0 - p.dot(q)
}

/// `gamma - 1` for dimensionless momenta, free of cancellation.
#[inline]
pub fn gamma_minus_one(w: &Vec3, v: &Vec3, w0: f64, v0: f64) -> f64 {
    let d = w - v;
    let c = w.cross(v);
    (d.norm_squared() + c.norm_squared()) / (w0 * v0 + 1.0 + w.dot(v))
}

#[inline]
fn s_dimensionless(w: &Vec3, v: &Vec3, gm1: f64) -> Mat3 {
    let d = w - v;
    let g2m1 = gm1 * (gm1 + 2.0);
    Mat3::identity() * g2m1 - d * d.transpose() + (w * v.transpose() + v * w.transpose()) * gm1
}

/// The matrix `S(P, Q)`. Unlike [`eval_kernel`] this is finite on the
/// diagonal, where it vanishes.
pub fn s_matrix(p: &Vec3, q: &Vec3, m_p: f64, m_q: f64) -> Mat3 {
    let w = p / m_p;
    let v = q / m_q;
    let w0 = (1.0 + w.norm_squared()).sqrt();
    let v0 = (1.0 + v.norm_squared()).sqrt();
    s_dimensionless(&w, &v, gamma_minus_one(&w, &v, w0, v0))
}

/// Kernel for a fixed ordered species pair `(s, t)`.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    m_p: f64,
    m_q: f64,
    factor: f64,
}

impl Kernel {
    pub fn new(sp_p: &SpeciesParams, sp_q: &SpeciesParams, params: &KernelParams) -> Self {
        Self {
            m_p: sp_p.mass,
            m_q: sp_q.mass,
            factor: params.constant * sp_p.charge * sp_q.charge * params.coulomb_log,
        }
    }

    /// Equal unit masses and charges with the given kernel constant.
    pub fn unit(constant: f64) -> Self {
        Self {
            m_p: 1.0,
            m_q: 1.0,
            factor: constant,
        }
    }

    /// The same pair seen from the other side: `(t, s)`.
    pub fn swapped(&self) -> Self {
        Self {
            m_p: self.m_q,
            m_q: self.m_p,
            factor: self.factor,
        }
    }

    pub fn masses(&self) -> (f64, f64) {
        (self.m_p, self.m_q)
    }

    /// Full evaluation.
    pub fn eval(&self, p: &Vec3, q: &Vec3) -> Result<KernelValue> {
        let w = p / self.m_p;
        let v = q / self.m_q;
        let w0 = (1.0 + w.norm_squared()).sqrt();
        let v0 = (1.0 + v.norm_squared()).sqrt();
        let gm1 = gamma_minus_one(&w, &v, w0, v0);
        let s = s_dimensionless(&w, &v, gm1);
        if gm1.abs() < DIAGONAL_THRESHOLD {
            return Err(Error::Singular {
                p: [p.x, p.y, p.z],
                q: [q.x, q.y, q.z],
            });
        }
        let gamma = 1.0 + gm1;
        let g2m1 = gm1 * (gm1 + 2.0);
        let lambda = gamma * gamma / (g2m1 * g2m1.sqrt());
        Ok(KernelValue {
            phi: s * (self.factor * lambda / (w0 * v0)),
            lambda,
            s_matrix: s,
            pq_dot: gamma * self.m_p * self.m_q,
        })
    }

    /// `Phi(P, Q)` only; the hot path of every collision integral.
    #[inline]
    pub fn phi(&self, p: &Vec3, q: &Vec3) -> Result<Mat3> {
        let w = p / self.m_p;
        let v = q / self.m_q;
        let w0 = (1.0 + w.norm_squared()).sqrt();
        let v0 = (1.0 + v.norm_squared()).sqrt();
        let gm1 = gamma_minus_one(&w, &v, w0, v0);
        if gm1.abs() < DIAGONAL_THRESHOLD {
            return Err(Error::Singular {
                p: [p.x, p.y, p.z],
                q: [q.x, q.y, q.z],
            });
        }
        let gamma = 1.0 + gm1;
        let g2m1 = gm1 * (gm1 + 2.0);
        let scale = self.factor * gamma * gamma / (g2m1 * g2m1.sqrt() * w0 * v0);
        Ok(s_dimensionless(&w, &v, gm1) * scale)
    }
}

/// `Phi(P, Q)` between species `sp_p` (momentum `p`) and `sp_q` (momentum `q`).
pub fn eval_kernel(
    p: &Vec3,
    q: &Vec3,
    sp_p: &SpeciesParams,
    sp_q: &SpeciesParams,
    params: &KernelParams,
) -> Result<KernelValue> {
    Kernel::new(sp_p, sp_q, params).eval(p, q)
}

/// `kappa(p) = 2^{7/2} pi p0 int_0^pi (1 + |p|^2 sin^2 t)^{-3/2} sin t dt`
/// (unit mass), evaluated by adaptive quadrature.
pub fn kappa(p: &Vec3, tol: f64) -> Result<f64> {
    let a = p.norm_squared();
    let p0 = (1.0 + a).sqrt();
    let est = adaptive_quad_1d(
        |t: f64| {
            let s = t.sin();
            (1.0 + a * s * s).powf(-1.5) * s
        },
        Domain::Finite(0.0, PI),
        QuadOptions::new(tol),
    )?;
    Ok(2f64.powf(3.5) * PI * p0 * est.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::Sign;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
        let axis = rand_vec(rng, 1.0).normalize();
        let angle = rng.gen_range(0.0..2.0 * PI);
        *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix()
    }

    fn max_abs(m: &Mat3) -> f64 {
        m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski_dot(&Vec3::zeros(), &Vec3::zeros(), 1.0, 1.0), 1.0);
        let p = Vec3::new(0.3, -2.0, 1.7);
        assert_relative_eq!(minkowski_dot(&p, &p, 1.0, 1.0), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn near_field_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut c_min = f64::INFINITY;
        let mut samples = 0;
        while samples < 2000 {
            let p = rand_vec(&mut rng, 5.0);
            let q = rand_vec(&mut rng, 5.0);
            if (p - q).norm() >= 0.5 * (p.norm() + 1.0) {
                continue;
            }
            let q0 = (1.0 + q.norm_squared()).sqrt();
            let w0 = (1.0 + p.norm_squared()).sqrt();
            let gm1 = gamma_minus_one(&p, &q, w0, q0);
            c_min = c_min.min(gm1 * q0 * q0 / (p - q).norm_squared());
            samples += 1;
        }
        assert!(c_min > 0.05, "fitted constant {c_min}");
    }

    #[test]
    fn s_vanishes_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = rand_vec(&mut rng, 6.0);
            assert_eq!(max_abs(&s_matrix(&p, &p, 1.0, 1.0)), 0.0);
        }
    }

    #[test]
    fn diagonal_is_rejected() {
        let k = Kernel::unit(2.0 * PI);
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert!(matches!(k.phi(&p, &p), Err(Error::Singular { .. })));
        assert!(matches!(
            k.eval(&p, &(p + Vec3::new(1e-9, 0.0, 0.0))),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn s_tends_to_zero_along_a_line() {
        let p = Vec3::new(0.7, -0.2, 1.1);
        let e1 = Vec3::x();
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let eps = 10f64.powi(-k);
            let v = max_abs(&s_matrix(&p, &(p + e1 * eps), 1.0, 1.0));
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn null_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = Kernel::unit(2.0 * PI);
        for _ in 0..100 {
            let p = rand_vec(&mut rng, 6.0);
            let q = rand_vec(&mut rng, 6.0);
            let phi = k.phi(&p, &q).unwrap();
            let u = p / (1.0 + p.norm_squared()).sqrt() - q / (1.0 + q.norm_squared()).sqrt();
            let r = (phi * u).norm() / (phi.norm() * u.norm());
            assert!(r < 1e-12, "relative residual {r}");
        }
    }

    #[test]
    fn null_vector_unequal_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ion = SpeciesParams::new(4.0, 1.0, Sign::Plus, 1.0).unwrap();
        let el = SpeciesParams::unit(Sign::Minus);
        let k = Kernel::new(&ion, &el, &KernelParams::default());
        for _ in 0..100 {
            let p = rand_vec(&mut rng, 6.0);
            let q = rand_vec(&mut rng, 6.0);
            let phi = k.phi(&p, &q).unwrap();
            let u = p / ion.p0(&p) - q / el.p0(&q);
            assert!((phi * u).norm() / (phi.norm() * u.norm()) < 1e-12);
        }
    }

    #[test]
    fn symmetry_and_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ion = SpeciesParams::new(3.0, 2.0, Sign::Plus, 1.0).unwrap();
        let el = SpeciesParams::unit(Sign::Minus);
        let k = Kernel::new(&ion, &el, &KernelParams::default());
        for _ in 0..100 {
            let p = rand_vec(&mut rng, 5.0);
            let q = rand_vec(&mut rng, 5.0);
            let a = k.phi(&p, &q).unwrap();
            assert_eq!(a, a.transpose());
            let b = k.swapped().phi(&q, &p).unwrap();
            assert!(max_abs(&(a - b)) <= 1e-13 * max_abs(&a));
        }
    }

    #[test]
    fn rotational_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = Kernel::unit(2.0 * PI);
        for _ in 0..100 {
            let o = random_rotation(&mut rng);
            let p = rand_vec(&mut rng, 5.0);
            let q = rand_vec(&mut rng, 5.0);
            let lhs = k.phi(&(o * p), &(o * q)).unwrap();
            let rhs = o * k.phi(&p, &q).unwrap() * o.transpose();
            assert!(max_abs(&(lhs - rhs)) <= 1e-12 * max_abs(&rhs));
        }
    }

    #[test]
    fn s_is_psd_off_its_null_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let p = rand_vec(&mut rng, 5.0);
            let q = rand_vec(&mut rng, 5.0);
            let s = s_matrix(&p, &q, 1.0, 1.0);
            let u = (p / (1.0 + p.norm_squared()).sqrt() - q / (1.0 + q.norm_squared()).sqrt()).normalize();
            let mut v = rand_vec(&mut rng, 1.0);
            v -= u * u.dot(&v);
            assert!(v.dot(&(s * v)) >= -1e-12 * max_abs(&s) * v.norm_squared());
        }
    }

    #[test]
    fn growth_bound_constant_is_stable() {
        let k = Kernel::unit(2.0 * PI);
        let fit = |n: usize, seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut c: f64 = 0.0;
            for _ in 0..n {
                let p = rand_vec(&mut rng, 8.0);
                let q = rand_vec(&mut rng, 8.0);
                let phi = k.phi(&p, &q).unwrap();
                let q0 = (1.0 + q.norm_squared()).sqrt();
                c = c.max(max_abs(&phi) / (q0.powi(7) * (1.0 + 1.0 / (p - q).norm())));
            }
            c
        };
        let c1 = fit(2000, 10);
        let c2 = fit(4000, 10);
        assert!(c1.is_finite() && c1 > 0.0);
        assert!(c2 <= 2.0 * c1, "{c1} vs {c2}");
    }

    #[test]
    fn kernel_value_fields_consistent() {
        let p = Vec3::new(0.4, 0.1, -0.3);
        let q = Vec3::new(-1.0, 0.5, 0.2);
        let v = eval_kernel(
            &p,
            &q,
            &SpeciesParams::unit(Sign::Plus),
            &SpeciesParams::unit(Sign::Minus),
            &KernelParams::default(),
        )
        .unwrap();
        let g = minkowski_dot(&p, &q, 1.0, 1.0);
        assert_relative_eq!(v.pq_dot, g, max_relative = 1e-14);
        assert_relative_eq!(v.lambda, g * g / (g * g - 1.0).powf(1.5), max_relative = 1e-12);
        assert!(v.lambda > 0.0);
        let p0 = (1.0 + p.norm_squared()).sqrt();
        let q0 = (1.0 + q.norm_squared()).sqrt();
        let expected = v.s_matrix * (2.0 * PI * v.lambda / (p0 * q0));
        assert!(max_abs(&(v.phi - expected)) < 1e-13 * max_abs(&expected));
    }

    #[test]
    fn kappa_values() {
        assert_relative_eq!(
            kappa(&Vec3::zeros(), 1e-13).unwrap(),
            2f64.powf(4.5) * PI,
            max_relative = 1e-12
        );
        // The angular integral has the closed form 2 / (1 + |p|^2).
        let p = Vec3::new(1.0, -2.0, 0.5);
        let p0 = (1.0 + p.norm_squared()).sqrt();
        assert_relative_eq!(
            kappa(&p, 1e-13).unwrap(),
            2f64.powf(4.5) * PI / p0,
            max_relative = 1e-10
        );
        let b10 = kappa(&Vec3::new(10.0, 0.0, 0.0), 1e-12).unwrap() * 10.0;
        let b100 = kappa(&Vec3::new(100.0, 0.0, 0.0), 1e-12).unwrap() * 100.0;
        assert!(b100 <= b10 * 1.01 && b100 < 2f64.powf(4.5) * PI);
    }

    proptest! {
        #[test]
        fn kappa_positive(x in -20.0..20.0f64, y in -20.0..20.0f64, z in -20.0..20.0f64) {
            prop_assert!(kappa(&Vec3::new(x, y, z), 1e-10).unwrap() > 0.0);
        }

        #[test]
        fn lambda_positive_off_diagonal(a in prop::array::uniform3(-6.0..6.0f64), b in prop::array::uniform3(-6.0..6.0f64)) {
            let p = Vec3::from(a);
            let q = Vec3::from(b);
            prop_assume!((p - q).norm() > 1e-6);
            let v = Kernel::unit(1.0).eval(&p, &q).unwrap();
            prop_assert!(v.lambda > 0.0);
            prop_assert!(v.pq_dot >= 1.0);
        }
    }
}
