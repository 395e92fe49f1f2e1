//! Relativistic free transport `dx/dt = p / p0` with specular reflection
//! `p -> p - 2 (p . n) n` at the wall of a disk or a ball.
//!
//! The disk is the infinite cylinder `x^2 + y^2 < R^2`, so the `z` motion
//! is free. Flight times to the wall come from the exact root of the
//! quadratic, so the only errors are rounding errors.
//!
//! Both billiards are integrable. A rounding error in an invariant shifts
//! the phase of the orbit by an amount that grows with every reflection, so
//! in plain `f64` the reversal error after `N` reflections grows like
//! `N^2 eps` and reaches `1e-8` by `N = 10^4`. Trajectories are therefore
//! integrated in double-double arithmetic and only reported in `f64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qd::Quad;

use crate::{Error, Result, Vec3};

/// Three-vector in double-double precision.
#[derive(Debug, Clone, Copy)]
struct DdVec([Quad; 3]);

impl DdVec {
    fn from_f64(v: &Vec3) -> Self {
        Self([Quad::from(v.x), Quad::from(v.y), Quad::from(v.z)])
    }

    fn to_f64(self) -> Vec3 {
        Vec3::new(self.0[0].0, self.0[1].0, self.0[2].0)
    }

    fn dot(&self, o: &Self) -> Quad {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    fn axpy(&self, a: Quad, x: &Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + a * x.0[i]))
    }

    fn scale(&self, a: Quad) -> Self {
        Self(self.0.map(|v| v * a))
    }

    fn neg(&self) -> Self {
        Self(self.0.map(|v| -v))
    }

    fn sub(&self, o: &Self) -> Self {
        self.axpy(Quad::from(-1.0), o)
    }

    /// Largest component magnitude, rounded to `f64`.
    fn amax(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.0.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    Disk { radius: f64 },
    Ball { radius: f64 },
}

impl Domain {
    pub fn radius(&self) -> f64 {
        match *self {
            Domain::Disk { radius } | Domain::Ball { radius } => radius,
        }
    }

    /// Part of a vector that sees the wall: `(x, y, 0)` for the disk.
    fn active(&self, v: &Vec3) -> Vec3 {
        match self {
            Domain::Disk { .. } => Vec3::new(v.x, v.y, 0.0),
            Domain::Ball { .. } => *v,
        }
    }

    /// Outward normal at a wall point, with the length of the radius.
    pub fn normal(&self, x: &Vec3) -> Vec3 {
        self.active(x)
    }

    fn active_dd(&self, v: &DdVec) -> DdVec {
        match self {
            Domain::Disk { .. } => DdVec([v.0[0], v.0[1], Quad::ZERO]),
            Domain::Ball { .. } => *v,
        }
    }

    /// Double-double version of [`Domain::time_to_wall`].
    fn time_to_wall_dd(&self, x: &DdVec, v: &DdVec) -> Option<Quad> {
        let (xa, va) = (self.active_dd(x), self.active_dd(v));
        let a = va.dot(&va);
        if a.0 == 0.0 {
            return None;
        }
        let r = Quad::from(self.radius());
        let b = xa.dot(&va);
        let c = xa.dot(&xa) - r * r;
        let d = b * b - a * c;
        let disc = if d.0 > 0.0 { d.sqrt() } else { Quad::ZERO };
        let t = if b.0 <= 0.0 { (disc - b) / a } else { -c / (b + disc) };
        Some(if t.0 < 0.0 { Quad::ZERO } else { t })
    }

    /// Time to reach the wall moving from `x` with velocity `v`, or `None`
    /// if the motion never reaches it. `x` may lie on the wall.
    pub fn time_to_wall(&self, x: &Vec3, v: &Vec3) -> Option<f64> {
        let (xa, va) = (self.active(x), self.active(v));
        let a = va.norm_squared();
        if a == 0.0 {
            return None;
        }
        let r = self.radius();
        let b = xa.dot(&va);
        let c = xa.norm_squared() - r * r;
        let disc = (b * b - a * c).max(0.0).sqrt();
        // Larger root of a t^2 + 2 b t + c, in the form without cancellation.
        Some(if b <= 0.0 { (disc - b) / a } else { -c / (b + disc) }.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Particle {
    pub x: [f64; 3],
    pub p: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardConfig {
    pub domain: Domain,
    pub particles: Vec<Particle>,
    pub t_end: f64,
    pub max_reflections: usize,
}

impl BilliardConfig {
    pub fn validate(&self) -> Result<()> {
        let r = self.domain.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::config(format!("domain radius must be positive, got {r}")));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::config(format!("t_end must be positive, got {}", self.t_end)));
        }
        for (k, q) in self.particles.iter().enumerate() {
            let x = Vec3::from(q.x);
            if q.x.iter().chain(&q.p).any(|v| !v.is_finite()) {
                return Err(Error::config(format!("particle {k} has a non-finite coordinate")));
            }
            if self.domain.active(&x).norm() >= r {
                return Err(Error::config(format!(
                    "particle {k} at {:?} is not strictly inside the domain",
                    q.x
                )));
            }
        }
        Ok(())
    }
}

pub fn velocity(p: &Vec3) -> Vec3 {
    p / (1.0 + p.norm_squared()).sqrt()
}

/// Specular reflection across the plane with normal `n`, which need not be
/// a unit vector. Using the unnormalised wall point as `n` avoids the
/// rounding bias of `normalize`, which otherwise grows `|p|` steadily over
/// many reflections.
pub fn reflect(p: &Vec3, n: &Vec3) -> Vec3 {
    p - n * (2.0 * p.dot(n) / n.norm_squared())
}

fn velocity_dd(p: &DdVec) -> DdVec {
    p.scale((Quad::ONE + p.dot(p)).sqrt().recip())
}

fn reflect_dd(p: &DdVec, n: &DdVec) -> DdVec {
    p.axpy(-(Quad::from(2.0) * p.dot(n) / n.dot(n)), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleReport {
    pub reflections: usize,
    /// Length of the forward run.
    pub duration: f64,
    /// `max_k | |p_k| - |p_0| | / |p_0|` over reflections.
    pub dp_norm: f64,
    /// `max_k |L_k - L_0|` over the conserved components of
    /// `L = x x p`: `z` only for the disk, all three for the ball.
    pub dl: f64,
    /// Same as `dl` for the `z` component alone.
    pub dl_axial: f64,
    /// Distance to the start after reversing the momentum and running for
    /// `duration` again.
    pub reversal_error: f64,
    /// `max_k |R(R p_k) - p_k|` over reflections.
    pub involution_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BilliardReport {
    pub domain: Domain,
    pub particles: Vec<ParticleReport>,
    pub max_dp_norm: f64,
    pub max_dl: f64,
    pub max_dl_axial: f64,
    pub max_reversal_error: f64,
    pub max_involution_error: f64,
    pub total_reflections: usize,
}

struct Flight {
    x: DdVec,
    p: DdVec,
    reflections: usize,
    dp_norm: f64,
    dl: f64,
    dl_axial: f64,
    involution: f64,
}

/// Runs for `duration`, or, when `max_reflections` is given, until midway
/// through the flight after that many reflections, whichever comes first.
/// Returns the final state and the time actually travelled.
/// Conservation diagnostics are only gathered when `watch` is set; they are
/// evaluated in `f64` from the rounded state, which is far more accurate
/// than the thresholds they are compared with.
fn fly(
    domain: &Domain,
    x0: DdVec,
    p0: DdVec,
    duration: Quad,
    max_reflections: Option<usize>,
    watch: bool,
) -> (Flight, Quad) {
    let l0 = x0.to_f64().cross(&p0.to_f64());
    let norm0 = p0.to_f64().norm();
    let mut s = Flight {
        x: x0,
        p: p0,
        reflections: 0,
        dp_norm: 0.0,
        dl: 0.0,
        dl_axial: 0.0,
        involution: 0.0,
    };
    let mut t = Quad::ZERO;
    loop {
        let v = velocity_dd(&s.p);
        let remaining = duration - t;
        let hit = domain.time_to_wall_dd(&s.x, &v);
        let budget_left = max_reflections.is_none_or(|m| s.reflections < m);
        match hit {
            Some(tau) if tau <= remaining && budget_left => {
                s.x = s.x.axpy(tau, &v);
                t += tau;
                let n = domain.active_dd(&s.x);
                let reflected = reflect_dd(&s.p, &n);
                s.reflections += 1;
                if watch {
                    s.involution = s.involution.max(reflect_dd(&reflected, &n).sub(&s.p).amax());
                    let (x, p) = (s.x.to_f64(), reflected.to_f64());
                    let l = x.cross(&p) - l0;
                    s.dp_norm = s.dp_norm.max((p.norm() - norm0).abs() / norm0);
                    s.dl_axial = s.dl_axial.max(l.z.abs());
                    s.dl = s.dl.max(match domain {
                        Domain::Disk { .. } => l.z.abs(),
                        Domain::Ball { .. } => l.amax(),
                    });
                }
                s.p = reflected;
            }
            Some(tau) if !budget_left => {
                let half = tau * Quad::from(0.5);
                let step = if half < remaining { half } else { remaining };
                s.x = s.x.axpy(step, &v);
                return (s, t + step);
            }
            _ => {
                s.x = s.x.axpy(remaining, &v);
                return (s, duration);
            }
        }
    }
}

pub fn run_particle(domain: &Domain, q: &Particle, t_end: f64, max_reflections: usize) -> ParticleReport {
    let (x0, p0) = (DdVec::from_f64(&Vec3::from(q.x)), DdVec::from_f64(&Vec3::from(q.p)));
    let (fwd, duration) = fly(domain, x0, p0, Quad::from(t_end), Some(max_reflections), true);
    let (back, _) = fly(domain, fwd.x, fwd.p.neg(), duration, None, false);
    ParticleReport {
        reflections: fwd.reflections,
        duration: duration.0,
        dp_norm: fwd.dp_norm,
        dl: fwd.dl,
        dl_axial: fwd.dl_axial,
        reversal_error: back.x.sub(&x0).to_f64().norm(),
        involution_error: fwd.involution,
    }
}

pub fn run_billiard(cfg: &BilliardConfig) -> Result<BilliardReport> {
    cfg.validate()?;
    let particles: Vec<ParticleReport> = cfg
        .particles
        .par_iter()
        .map(|q| run_particle(&cfg.domain, q, cfg.t_end, cfg.max_reflections))
        .collect();
    let max = |f: fn(&ParticleReport) -> f64| particles.iter().map(f).fold(0.0, f64::max);
    Ok(BilliardReport {
        domain: cfg.domain,
        max_dp_norm: max(|r| r.dp_norm),
        max_dl: max(|r| r.dl),
        max_dl_axial: max(|r| r.dl_axial),
        max_reversal_error: max(|r| r.reversal_error),
        max_involution_error: max(|r| r.involution_error),
        total_reflections: particles.iter().map(|r| r.reflections).sum(),
        particles,
    })
}

/// `n` particles uniform in the domain (the disk's `z` in `[-R, R]`) with
/// momentum components uniform in `[-p_scale, p_scale]`.
pub fn random_particles(domain: &Domain, n: usize, p_scale: f64, seed: u64) -> Vec<Particle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = domain.radius();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = Vec3::from_fn(|_, _| rng.gen_range(-r..r));
        let p = Vec3::from_fn(|_, _| rng.gen_range(-p_scale..p_scale));
        if domain.active(&x).norm() < 0.99 * r {
            out.push(Particle {
                x: x.into(),
                p: p.into(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: Domain = Domain::Disk { radius: 1.0 };
    const BALL: Domain = Domain::Ball { radius: 1.0 };

    #[test]
    fn wall_time_lands_on_the_wall() {
        let x = Vec3::new(0.3, -0.2, 0.7);
        let v = Vec3::new(0.4, 0.5, -0.1);
        for d in [DISK, BALL] {
            let t = d.time_to_wall(&x, &v).unwrap();
            assert!((d.active(&(x + v * t)).norm() - 1.0).abs() < 1e-14);
        }
        // Leaving the wall inwards crosses the whole chord.
        let on = Vec3::new(1.0, 0.0, 0.0);
        let t = BALL.time_to_wall(&on, &Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert!((t - 2.0).abs() < 1e-15);
        assert_eq!(DISK.time_to_wall(&x, &Vec3::new(0.0, 0.0, 1.0)), None);
    }

    #[test]
    fn radial_shot_reverses_without_angular_momentum() {
        let q = Particle {
            x: [0.0, 0.0, 0.0],
            p: [0.6, 0.8, 0.0],
        };
        let r = run_particle(&DISK, &q, 1e3, 10);
        assert_eq!(r.reflections, 10);
        assert_eq!(r.dl, 0.0);
        assert!(r.reversal_error < 1e-12);
    }

    #[test]
    fn generic_disk_orbit_conserves() {
        let q = Particle {
            x: [0.31, -0.17, 0.2],
            p: [0.73, 0.41, -0.25],
        };
        let r = run_particle(&DISK, &q, 1e9, 10_000);
        assert_eq!(r.reflections, 10_000);
        assert!(r.dp_norm < 1e-12, "{r:?}");
        assert!(r.dl < 1e-10, "{r:?}");
        assert!(r.reversal_error < 1e-9, "{r:?}");
    }

    #[test]
    fn outside_particles_are_rejected() {
        let cfg = BilliardConfig {
            domain: BALL,
            particles: vec![Particle {
                x: [0.0, 1.0, 0.0],
                p: [1.0, 0.0, 0.0],
            }],
            t_end: 1.0,
            max_reflections: 10,
        };
        assert!(matches!(run_billiard(&cfg), Err(Error::Config(_))));
    }
}
