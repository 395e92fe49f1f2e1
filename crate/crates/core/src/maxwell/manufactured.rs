//! Manufactured electromagnetic fields built from potentials,
//! `E = -grad phi - d_t A`, `B = curl A`, so that Faraday's law and
//! `div B = 0` hold identically. Charge and current are then defined by
//! Gauss and Ampere:
//!
//! ```text
//! rho = div E / 4 pi,   j = (curl B - d_t E) / 4 pi.
//! ```
//!
//! Each potential is a sum of separable terms
//! `amp * f_x(x) f_y(y) f_z(z) f_t(t)`, so derivatives of any order are
//! exact.

use std::f64::consts::PI;

use crate::Vec3;

/// One-dimensional factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    One,
    /// `sin(k s + phase)`.
    Sin {
        k: f64,
        phase: f64,
    },
    /// Polynomial in `u = (s - centre) / half_width` on `|u| < 1`, zero
    /// outside. `coeffs[n]` multiplies `u^n`.
    Compact {
        centre: f64,
        half_width: f64,
        coeffs: Vec<f64>,
    },
}

impl Factor {
    pub fn cos(k: f64) -> Self {
        Factor::Sin { k, phase: 0.5 * PI }
    }

    pub fn sin(k: f64) -> Self {
        Factor::Sin { k, phase: 0.0 }
    }

    /// `(1 - u^2)^power`, which has `power - 1` continuous derivatives.
    pub fn bump(centre: f64, half_width: f64, power: u32) -> Self {
        let mut coeffs = vec![0.0; 2 * power as usize + 1];
        let mut binom = 1.0;
        for i in 0..=power as usize {
            coeffs[2 * i] = if i % 2 == 0 { binom } else { -binom };
            binom = binom * (power as usize - i) as f64 / (i + 1) as f64;
        }
        Factor::Compact {
            centre,
            half_width,
            coeffs,
        }
    }

    /// `order`-th derivative at `s`.
    pub fn derivative(&self, s: f64, order: u32) -> f64 {
        match self {
            Factor::One => {
                if order == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::Sin { k, phase } => k.powi(order as i32) * (k * s + phase + 0.5 * PI * order as f64).sin(),
            Factor::Compact {
                centre,
                half_width,
                coeffs,
            } => {
                let u = (s - centre) / half_width;
                if u.abs() >= 1.0 {
                    return 0.0;
                }
                let mut acc = 0.0;
                for n in (order as usize..coeffs.len()).rev() {
                    let falling: f64 = (0..order as usize).map(|i| (n - i) as f64).product();
                    acc = acc * u + coeffs[n] * falling;
                }
                // Chain rule for u = (s - centre) / half_width.
                acc / half_width.powi(order as i32)
            }
        }
    }
}

/// `amp * prod_a factors[a](coordinate a)` with coordinates `(x, y, z, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub amp: f64,
    pub factors: [Factor; 4],
}

impl Term {
    pub fn new(amp: f64, factors: [Factor; 4]) -> Self {
        Self { amp, factors }
    }

    fn eval(&self, x: &Vec3, t: f64, order: [u32; 4]) -> f64 {
        let coords = [x.x, x.y, x.z, t];
        let mut v = self.amp;
        for a in 0..4 {
            v *= self.factors[a].derivative(coords[a], order[a]);
            if v == 0.0 {
                break;
            }
        }
        v
    }
}

/// Scalar and vector potentials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manufactured {
    pub phi: Vec<Term>,
    pub a: [Vec<Term>; 3],
}

const T: usize = 3;

fn order(ds: &[usize]) -> [u32; 4] {
    let mut o = [0u32; 4];
    for &d in ds {
        o[d] += 1;
    }
    o
}

fn sum(terms: &[Term], x: &Vec3, t: f64, ds: &[usize]) -> f64 {
    let o = order(ds);
    terms.iter().map(|term| term.eval(x, t, o)).sum()
}

impl Manufactured {
    pub fn e(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| -sum(&self.phi, x, t, &[i]) - sum(&self.a[i], x, t, &[T]))
    }

    pub fn vector_potential(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| sum(&self.a[i], x, t, &[]))
    }

    pub fn b(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| {
            let (p, q) = ((i + 1) % 3, (i + 2) % 3);
            sum(&self.a[q], x, t, &[p]) - sum(&self.a[p], x, t, &[q])
        })
    }

    /// `d_t E`.
    pub fn e_dt(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| -sum(&self.phi, x, t, &[i, T]) - sum(&self.a[i], x, t, &[T, T]))
    }

    pub fn rho(&self, x: &Vec3, t: f64) -> f64 {
        let lap: f64 = (0..3).map(|i| sum(&self.phi, x, t, &[i, i])).sum();
        let div_a_t: f64 = (0..3).map(|i| sum(&self.a[i], x, t, &[i, T])).sum();
        -(lap + div_a_t) / (4.0 * PI)
    }

    pub fn j(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| self.j_component(i, x, t))
    }

    /// Component `i` of `j`, for sampling on edges without the other two.
    pub fn j_component(&self, i: usize, x: &Vec3, t: f64) -> f64 {
        let grad_div: f64 = (0..3).map(|k| sum(&self.a[k], x, t, &[i, k])).sum();
        let lap: f64 = (0..3).map(|k| sum(&self.a[i], x, t, &[k, k])).sum();
        (grad_div - lap + sum(&self.phi, x, t, &[i, T]) + sum(&self.a[i], x, t, &[T, T])) / (4.0 * PI)
    }

    /// A smooth non-vacuum field with every source term active.
    pub fn smooth() -> Self {
        use Factor::*;
        let s = |k: f64, phase: f64| Sin { k, phase };
        Self {
            phi: vec![
                Term::new(0.7, [s(1.3, 0.2), s(0.9, -0.4), s(1.1, 0.5), s(1.7, 0.1)]),
                Term::new(-0.4, [s(2.1, 1.0), One, s(0.6, 0.3), s(0.8, -0.7)]),
            ],
            a: [
                vec![Term::new(0.5, [s(0.8, 0.1), s(1.4, 0.6), s(1.0, -0.2), s(1.2, 0.4)])],
                vec![Term::new(-0.6, [s(1.2, -0.3), s(0.7, 0.2), s(1.6, 0.9), s(0.9, 0.0)])],
                vec![
                    Term::new(0.3, [s(1.5, 0.7), s(1.1, -0.5), s(0.5, 0.1), s(1.4, 0.3)]),
                    Term::new(0.2, [One, s(2.0, 0.0), s(1.3, 0.4), s(0.6, 1.1)]),
                ],
            ],
        }
    }

    /// Two vacuum plane waves: one along `+x` polarised in `y`, one along
    /// `-y` polarised in `z`. Both `2 pi / k` periodic.
    pub fn plane_wave_pair(k: f64) -> Self {
        use Factor::One;
        // sin(k s - k t) = sin(ks) cos(kt) - cos(ks) sin(kt), and
        // sin(k s + k t) = sin(ks) cos(kt) + cos(ks) sin(kt).
        let (s, c) = (Factor::sin(k), Factor::cos(k));
        Self {
            phi: vec![],
            a: [
                vec![],
                vec![
                    Term::new(1.0 / k, [s.clone(), One, One, c.clone()]),
                    Term::new(-1.0 / k, [c.clone(), One, One, s.clone()]),
                ],
                vec![
                    Term::new(0.5 / k, [One, s.clone(), One, c.clone()]),
                    Term::new(0.5 / k, [One, c, One, s]),
                ],
            ],
        }
    }

    /// Fields supported in the cube of half-width `radius` about `centre`,
    /// oscillating in time.
    pub fn compact(centre: Vec3, radius: f64) -> Self {
        let bump = |a: usize| Factor::bump(centre[a], radius, 5);
        let env = |amp: f64, t: Factor| Term::new(amp, [bump(0), bump(1), bump(2), t]);
        let tf = |k: f64, phase: f64| Factor::Sin { k, phase };
        let wiggle = |amp: f64, a: usize, t: Factor| {
            let mut f = [bump(0), bump(1), bump(2), t];
            let Factor::Compact { coeffs, .. } = &mut f[a] else {
                unreachable!()
            };
            // Multiply the envelope along `a` by u, making the term odd in it.
            coeffs.insert(0, 0.0);
            Term::new(amp, f)
        };
        Self {
            phi: vec![env(0.8, tf(1.3, 0.4)), wiggle(0.5, 0, tf(0.7, -0.2))],
            a: [
                vec![env(0.6, tf(1.1, 0.3)), wiggle(0.4, 1, tf(1.9, 0.5))],
                vec![wiggle(-0.7, 0, tf(1.5, 0.1)), env(0.3, tf(0.9, 1.2))],
                vec![wiggle(0.5, 1, tf(1.2, -0.6)), wiggle(0.2, 0, tf(0.8, 0.9))],
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, s: f64) -> f64 {
        let h = 1e-4;
        (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn factor_derivatives_match_differences() {
        for f in [Factor::sin(1.7), Factor::cos(0.6), Factor::bump(0.2, 0.9, 4)] {
            for order in 0..3 {
                let s = 0.37;
                let d = fd(|u| f.derivative(u, order), s);
                assert!((d - f.derivative(s, order + 1)).abs() < 1e-8, "{f:?} {order}");
            }
        }
        assert_eq!(Factor::bump(0.0, 1.0, 4).derivative(1.2, 1), 0.0);
    }

    #[test]
    fn maxwell_equations_hold_pointwise() {
        for m in [
            Manufactured::smooth(),
            Manufactured::compact(Vec3::new(0.5, 0.5, 0.5), 0.4),
        ] {
            let x = Vec3::new(0.41, 0.63, 0.37);
            let t = 0.3;
            // Faraday: d_t B = -curl E
            let partial = |g: &dyn Fn(&Vec3) -> f64, a: usize| {
                fd(
                    |s| {
                        let mut y = x;
                        y[a] = s;
                        g(&y)
                    },
                    x[a],
                )
            };
            let db = Vec3::from_fn(|i, _| fd(|s| m.b(&x, s)[i], t));
            let curl_e = Vec3::from_fn(|i, _| {
                let (p, q) = ((i + 1) % 3, (i + 2) % 3);
                partial(&|y| m.e(y, t)[q], p) - partial(&|y| m.e(y, t)[p], q)
            });
            assert!((db + curl_e).norm() < 1e-7);
            // Gauss: div E = 4 pi rho
            let div_e: f64 = (0..3).map(|a| partial(&|y| m.e(y, t)[a], a)).sum();
            assert!((div_e - 4.0 * PI * m.rho(&x, t)).abs() < 1e-7);
            // Continuity: d_t rho + div j = 0
            let div_j: f64 = (0..3).map(|a| partial(&|y| m.j(y, t)[a], a)).sum();
            assert!((fd(|s| m.rho(&x, s), t) + div_j).abs() < 1e-7);
            let de = Vec3::from_fn(|i, _| fd(|s| m.e(&x, s)[i], t));
            assert!((de - m.e_dt(&x, t)).norm() < 1e-8);
        }
    }

    #[test]
    fn plane_waves_are_vacuum_solutions() {
        let m = Manufactured::plane_wave_pair(2.0 * PI);
        let x = Vec3::new(0.1, 0.7, 0.3);
        assert!(m.rho(&x, 0.4).abs() < 1e-12);
        assert!(m.j(&x, 0.4).norm() < 1e-12);
        assert!((m.e(&x, 0.0) - m.e(&(x + Vec3::new(1.0, 1.0, 1.0)), 0.0)).norm() < 1e-12);
    }
}
