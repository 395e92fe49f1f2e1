//! Species constants, Jüttner equilibria and the Bessel function `K_2`.
//!
//! The equilibrium of species `s` is
//!
//! ```text
//! J(p) = exp(-p0 / kT) / (4 pi e m^2 kT K_2(m / kT)),   p0 = sqrt(m^2 + |p|^2)
//! ```
//!
//! so that `e * int J dp = 1`. `K_2` itself is evaluated from its integral
//! representation rather than a library routine.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::vgrid::{adaptive_quad_1d, exp_poly_tail, Domain, QuadEstimate, QuadOptions};
use crate::{Error, Result, Vec3};

/// Charge sign of a species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesParams {
    pub mass: f64,
    /// Charge magnitude.
    pub charge: f64,
    pub sign: Sign,
    pub k_b_t: f64,
}

impl SpeciesParams {
    pub fn new(mass: f64, charge: f64, sign: Sign, k_b_t: f64) -> Result<Self> {
        let sp = Self {
            mass,
            charge,
            sign,
            k_b_t,
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn unit(sign: Sign) -> Self {
        Self {
            mass: 1.0,
            charge: 1.0,
            sign,
            k_b_t: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("charge", self.charge),
            ("temperature", self.k_b_t),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "species {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `p0 = sqrt(m^2 + |p|^2)`.
    #[inline]
    pub fn p0(&self, p: &Vec3) -> f64 {
        (self.mass * self.mass + p.norm_squared()).sqrt()
    }

    #[inline]
    pub fn p0_radial(&self, r: f64) -> f64 {
        self.mass.hypot(r)
    }
}

/// Ion/electron pair sharing one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlasmaPair {
    pub plus: SpeciesParams,
    pub minus: SpeciesParams,
}

impl Default for PlasmaPair {
    fn default() -> Self {
        Self {
            plus: SpeciesParams::unit(Sign::Plus),
            minus: SpeciesParams::unit(Sign::Minus),
        }
    }
}

impl PlasmaPair {
    pub fn new(plus: SpeciesParams, minus: SpeciesParams) -> Result<Self> {
        let pair = Self { plus, minus };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        self.plus.validate()?;
        self.minus.validate()?;
        if self.plus.sign != Sign::Plus || self.minus.sign != Sign::Minus {
            return Err(Error::config("plasma pair must list the positive species first"));
        }
        if self.plus.k_b_t != self.minus.k_b_t {
            return Err(Error::config(format!(
                "both species must share one temperature, got {} and {}",
                self.plus.k_b_t, self.minus.k_b_t
            )));
        }
        Ok(())
    }

    pub fn species(&self) -> [SpeciesParams; 2] {
        [self.plus, self.minus]
    }
}

/// `e^s K_2(s)` from `K_2(s) = s^2/3 int_1^inf e^{-st} (t^2-1)^{3/2} dt`.
///
/// `tol` is relative. The exponential scaling keeps heavy species
/// (`m / kT` in the thousands) representable.
pub fn bessel_k2_scaled(s: f64, tol: f64) -> Result<QuadEstimate> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::config(format!("K_2 argument must be positive, got {s}")));
    }
    // With t = 1 + u the integrand is e^{-su} (u (2 + u))^{3/2} <= e^{-su} (1 + u)^3,
    // and it is bounded below by (2u)^{3/2} e^{-su}, whose integral is
    // 2^{3/2} Gamma(5/2) s^{-5/2}.
    let lower = 2f64.powf(1.5) * 0.75 * PI.sqrt() * s.powf(-2.5);
    let abs_tol = tol * lower;
    let tail = move |b: f64| s.exp() * exp_poly_tail(3, s, 1.0 + b);
    let est = adaptive_quad_1d(
        |u: f64| (-s * u).exp() * (u * (2.0 + u)).powf(1.5),
        Domain::HalfLine {
            start: 0.0,
            tail: &tail,
        },
        QuadOptions::new(abs_tol),
    )?;
    let scale = s * s / 3.0;
    Ok(QuadEstimate {
        value: scale * est.value,
        error: scale * est.error,
        evaluations: est.evaluations,
    })
}

/// Modified Bessel function `K_2(s)` with relative tolerance `tol`.
pub fn bessel_k2(s: f64, tol: f64) -> Result<f64> {
    Ok(bessel_k2_scaled(s, tol)?.value * (-s).exp())
}

/// Tolerance used when a [`Juttner`] computes its own normalisation.
pub const NORMALISATION_TOL: f64 = 1e-13;

/// Jüttner equilibrium of one species with its normalisation cached.
#[derive(Debug, Clone, Copy)]
pub struct Juttner {
    sp: SpeciesParams,
    // J(p) = amplitude * exp(-(p0 - m) / kT)
    amplitude: f64,
}

impl Juttner {
    pub fn new(sp: SpeciesParams) -> Result<Self> {
        sp.validate()?;
        let s = sp.mass / sp.k_b_t;
        let k2s = bessel_k2_scaled(s, NORMALISATION_TOL)?.value;
        let amplitude = 1.0 / (4.0 * PI * sp.charge * sp.mass * sp.mass * sp.k_b_t * k2s);
        Ok(Self { sp, amplitude })
    }

    /// A copy whose normalisation constant is multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            sp: self.sp,
            amplitude: self.amplitude * factor,
        }
    }

    pub fn species(&self) -> &SpeciesParams {
        &self.sp
    }

    /// `J(0)`, the maximum of the profile.
    pub fn peak(&self) -> f64 {
        self.amplitude
    }

    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        self.amplitude * (-(self.sp.p0_radial(r) - self.sp.mass) / self.sp.k_b_t).exp()
    }

    #[inline]
    pub fn eval(&self, p: &Vec3) -> f64 {
        self.radial(p.norm())
    }

    #[inline]
    pub fn sqrt(&self, p: &Vec3) -> f64 {
        self.eval(p).sqrt()
    }

    /// `grad J = -(p / (kT p0)) J`.
    pub fn grad(&self, p: &Vec3) -> Vec3 {
        let p0 = self.sp.p0(p);
        -p * (self.eval(p) / (self.sp.k_b_t * p0))
    }

    /// `int g(|p|) J(p) dp` by radial quadrature, for `|g(r)| <= (1 + r)^growth`.
    pub fn radial_moment(&self, g: impl Fn(f64) -> f64, growth: u32, tol: f64) -> Result<QuadEstimate> {
        let (m, t) = (self.sp.mass, self.sp.k_b_t);
        // For r >= 2m, p0 - m = r^2 / (p0 + m) >= r / 2, which gives a tail
        // envelope that stays finite even for very heavy species.
        let rate = 0.5 / t;
        let amplitude = self.amplitude;
        let tail = move |b: f64| {
            if b < 2.0 * m {
                f64::INFINITY
            } else {
                4.0 * PI * amplitude * rate.exp() * exp_poly_tail(growth + 2, rate, 1.0 + b)
            }
        };
        adaptive_quad_1d(
            |r| 4.0 * PI * r * r * g(r) * self.radial(r),
            Domain::HalfLine {
                start: 0.0,
                tail: &tail,
            },
            QuadOptions::new(tol),
        )
    }
}

/// Convenience wrapper: `J(p)` for the given species.
pub fn juttner(p: &Vec3, sp: &SpeciesParams) -> Result<f64> {
    Ok(Juttner::new(*sp)?.eval(p))
}

/// `M = int J dp` by radial adaptive quadrature.
pub fn mass_constant(sp: &SpeciesParams, tol: f64) -> Result<f64> {
    Ok(Juttner::new(*sp)?.radial_moment(|_| 1.0, 0, tol)?.value)
}

/// `|e+ M+ - e- M-|` for two (possibly rescaled) equilibria.
pub fn neutrality_residual(plus: &Juttner, minus: &Juttner, tol: f64) -> Result<f64> {
    let mp = plus.radial_moment(|_| 1.0, 0, tol)?.value;
    let mm = minus.radial_moment(|_| 1.0, 0, tol)?.value;
    Ok((plus.species().charge * mp - minus.species().charge * mm).abs())
}

/// Global neutrality residual of a pair; passes when below `tol`.
pub fn check_neutrality(pair: &PlasmaPair, tol: f64) -> Result<f64> {
    pair.validate()?;
    let q = (tol * 1e-2).max(1e-15);
    neutrality_residual(&Juttner::new(pair.plus)?, &Juttner::new(pair.minus)?, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    /// Power series of K_2, accurate for moderate s.
    fn k2_series(x: f64) -> f64 {
        let y = x * x / 4.0;
        let half = x / 2.0;
        let mut i2 = 0.0;
        let mut rest = 0.0;
        let mut term = half * half / 2.0; // (x/2)^2 / (0! 2!)
        let mut harmonic_k = 0.0;
        let mut harmonic_k2 = 1.5; // H_2
        for k in 0..80 {
            if k > 0 {
                term *= y / (k as f64 * (k as f64 + 2.0));
                harmonic_k += 1.0 / k as f64;
                harmonic_k2 += 1.0 / (k as f64 + 2.0);
            }
            i2 += term;
            let psi_sum = -2.0 * EULER_GAMMA + harmonic_k + harmonic_k2;
            rest += psi_sum * term;
        }
        2.0 / (x * x) - 0.5 - half.ln() * i2 + 0.5 * rest
    }

    /// Hankel asymptotic expansion truncated at its smallest term.
    fn k2_asymptotic(x: f64) -> f64 {
        let mu = 16.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let odd = (2 * k - 1) as f64;
            let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        (PI / (2.0 * x)).sqrt() * (-x).exp() * sum
    }

    #[test]
    fn oracle_series_and_asymptotic_agree() {
        // Near s = 8 the series has not yet lost digits to cancellation and the
        // optimally truncated asymptotic series is good to about e^{-2s}.
        assert_relative_eq!(k2_series(8.0), k2_asymptotic(8.0), max_relative = 1e-6);
    }

    #[test]
    fn k2_matches_oracle() {
        for &s in &[0.5, 1.0, 2.0, 5.0] {
            let v = bessel_k2(s, 1e-11).unwrap();
            assert_relative_eq!(v, k2_series(s), max_relative = 1e-8);
        }
        assert_relative_eq!(
            bessel_k2(20.0, 1e-11).unwrap(),
            k2_asymptotic(20.0),
            max_relative = 1e-8
        );
    }

    #[test]
    fn k2_large_argument_leading_order() {
        // K_2(s) e^s sqrt(2s/pi) = 1 + 15/(8s) + O(s^-2): about 1.096 at s = 20,
        // so the leading-order ratio is only within 5% of one from s ~ 40 on.
        let ratio = |s: f64| bessel_k2(s, 1e-10).unwrap() * s.exp() * (2.0 * s / PI).sqrt();
        assert_relative_eq!(
            ratio(20.0),
            1.0 + 15.0 / 160.0 + 105.0 / (2.0 * 160.0 * 160.0),
            max_relative = 2e-4
        );
        assert!((ratio(40.0) - 1.0).abs() < 0.05);
        assert!((ratio(200.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn k2_monotone() {
        let k = |s| bessel_k2(s, 1e-10).unwrap();
        assert!(k(1.0) > k(2.0) && k(2.0) > k(5.0));
    }

    #[test]
    fn k2_rejects_nonpositive() {
        assert!(matches!(bessel_k2(0.0, 1e-8), Err(Error::Config(_))));
    }

    #[test]
    fn normalisation_radial() {
        for sp in [
            SpeciesParams::unit(Sign::Plus),
            SpeciesParams::new(2.0, 2.0, Sign::Plus, 1.0).unwrap(),
            SpeciesParams::new(1.0, 1.0, Sign::Minus, 0.3).unwrap(),
            SpeciesParams::new(1836.0, 1.0, Sign::Plus, 1.0).unwrap(),
        ] {
            let m = mass_constant(&sp, 1e-10).unwrap();
            assert_relative_eq!(sp.charge * m, 1.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn mass_constant_independent_of_mass() {
        let a = mass_constant(&SpeciesParams::unit(Sign::Plus), 1e-10).unwrap();
        let b = mass_constant(&SpeciesParams::new(2.0, 1.0, Sign::Plus, 1.0).unwrap(), 1e-10).unwrap();
        assert!((a - b).abs() < 2e-10);
        let half = mass_constant(&SpeciesParams::new(1.0, 2.0, Sign::Plus, 1.0).unwrap(), 1e-10).unwrap();
        assert!((half - 0.5).abs() < 1e-10);
    }

    #[test]
    fn second_moment_identity() {
        for t in [0.5, 1.0, 3.0] {
            let sp = SpeciesParams::new(1.0, 1.0, Sign::Plus, t).unwrap();
            let j = Juttner::new(sp).unwrap();
            let m = j.radial_moment(|_| 1.0, 0, 1e-11).unwrap().value;
            let lhs = j
                .radial_moment(|r| r * r / (3.0 * sp.p0_radial(r)), 1, 1e-11)
                .unwrap()
                .value;
            assert_relative_eq!(lhs, t * m, max_relative = 1e-8);
        }
    }

    #[test]
    fn neutrality() {
        assert!(check_neutrality(&PlasmaPair::default(), 1e-8).unwrap() < 1e-8);
        let pair = PlasmaPair::new(
            SpeciesParams::new(1836.0, 1.0, Sign::Plus, 1.0).unwrap(),
            SpeciesParams::new(1.0, 1.0, Sign::Minus, 1.0).unwrap(),
        )
        .unwrap();
        assert!(check_neutrality(&pair, 1e-8).unwrap() < 1e-8);
        let plus = Juttner::new(pair.plus).unwrap().rescaled(1.01);
        let minus = Juttner::new(pair.minus).unwrap();
        let r = neutrality_residual(&plus, &minus, 1e-12).unwrap();
        assert_relative_eq!(r, 0.01, max_relative = 1e-8);
    }

    #[test]
    fn pair_validation() {
        let mut pair = PlasmaPair::default();
        pair.minus.k_b_t = 2.0;
        assert!(matches!(pair.validate(), Err(Error::Config(_))));
        let swapped = PlasmaPair {
            plus: SpeciesParams::unit(Sign::Minus),
            minus: SpeciesParams::unit(Sign::Minus),
        };
        assert!(swapped.validate().is_err());
        assert!(SpeciesParams::new(-1.0, 1.0, Sign::Plus, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn positive_even_and_bounded(x in -10.0..10.0f64, y in -10.0..10.0f64, z in -10.0..10.0f64) {
            let j = Juttner::new(SpeciesParams::unit(Sign::Plus)).unwrap();
            let p = Vec3::new(x, y, z);
            let v = j.eval(&p);
            prop_assert!(v > 0.0);
            prop_assert!(v <= j.peak());
            prop_assert_eq!(v, j.eval(&-p));
            prop_assert!(j.eval(&(p * 1.1)) <= v);
        }

        #[test]
        fn gradient_matches_finite_difference(x in -4.0..4.0f64, y in -4.0..4.0f64, z in -4.0..4.0f64) {
            let j = Juttner::new(SpeciesParams::unit(Sign::Minus)).unwrap();
            let p = Vec3::new(x, y, z);
            let g = j.grad(&p);
            let h = 1e-5;
            for d in 0..3 {
                let mut e = Vec3::zeros();
                e[d] = h;
                let fd = (j.eval(&(p + e)) - j.eval(&(p - e))) / (2.0 * h);
                prop_assert!((fd - g[d]).abs() <= 1e-6 * g.norm().max(1e-3 * j.eval(&p)));
            }
        }
    }
}
