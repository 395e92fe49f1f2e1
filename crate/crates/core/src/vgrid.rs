//! Momentum-space discretisation.
//!
//! A [`VelocityGrid`] is the cell-centre (midpoint) tensor rule on the cube
//! `[-p_max, p_max]^3`, optionally shifted by half a cell per axis. The shifted
//! companion never shares a node with the unshifted grid, which is what the
//! collision integrals rely on to step around the `|p - q|^-1` singularity of
//! the kernel.
//!
//! One-dimensional integrals (Bessel `K_2`, radial normalisations, Gaussian
//! moments) go through [`adaptive_quad_1d`], a globally adaptive 7/15-point
//! Gauss-Kronrod rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result, Vec3};

pub const DEFAULT_N_PER_AXIS: usize = 16;
pub const DEFAULT_P_MAX: f64 = 6.0;

/// Truncated momentum lattice with midpoint weights.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n_per_axis: usize,
    p_max: f64,
    spacing: f64,
    stagger: [f64; 3],
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

impl VelocityGrid {
    /// Builds an `n^3` midpoint grid on `[-p_max, p_max]^3` shifted by
    /// `stagger * h`, each stagger entry being `0` or `1/2`.
    pub fn new(n_per_axis: usize, p_max: f64, stagger: [f64; 3]) -> Result<Self> {
        if n_per_axis < 2 {
            return Err(Error::config(format!(
                "velocity grid needs at least 2 nodes per axis, got {n_per_axis}"
            )));
        }
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::config(format!("momentum cutoff must be positive, got {p_max}")));
        }
        if let Some(s) = stagger.iter().find(|&&s| s != 0.0 && s != 0.5) {
            return Err(Error::config(format!("stagger offsets must be 0 or 1/2, got {s}")));
        }
        let h = 2.0 * p_max / n_per_axis as f64;
        // Odd multiples of h/2 keep the unshifted grid exactly symmetric.
        let axis = |d: usize, i: usize| ((2 * i + 1) as f64 - n_per_axis as f64 + 2.0 * stagger[d]) * (0.5 * h);
        let n = n_per_axis;
        let mut nodes = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    nodes.push(Vec3::new(axis(0, i), axis(1, j), axis(2, k)));
                }
            }
        }
        let weights = vec![h * h * h; nodes.len()];
        Ok(Self {
            n_per_axis,
            p_max,
            spacing: h,
            stagger,
            nodes,
            weights,
        })
    }

    /// Unshifted grid.
    pub fn centered(n_per_axis: usize, p_max: f64) -> Result<Self> {
        Self::new(n_per_axis, p_max, [0.0; 3])
    }

    /// The half-cell companion of `self` (shifted by `h/2` on every axis).
    pub fn staggered_companion(&self) -> Self {
        Self::new(self.n_per_axis, self.p_max, [0.5; 3]).expect("parameters already validated")
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Cell width `h`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn stagger(&self) -> [f64; 3] {
        self.stagger
    }

    pub fn is_staggered(&self) -> bool {
        self.stagger.iter().any(|&s| s != 0.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of a single cell, `h^3`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Linear index of node `(i, j, k)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_per_axis + j) * self.n_per_axis + k
    }

    /// Inverse of [`VelocityGrid::index`].
    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.n_per_axis;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Index of the node mirrored through the origin. Only meaningful for an
    /// unshifted grid.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n_per_axis;
        let [i, j, k] = self.ijk(idx);
        self.index(n - 1 - i, n - 1 - j, n - 1 - k)
    }

    /// Tabulates `f` at every node.
    pub fn tabulate(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    /// `sum_k w_k v_k`.
    pub fn quad(&self, values: &[f64]) -> f64 {
        quad(self, values)
    }
}

/// Tensor midpoint quadrature `sum_k w_k v_k`.
///
/// Panics when `values` does not have one entry per node.
pub fn quad(grid: &VelocityGrid, values: &[f64]) -> f64 {
    assert_eq!(
        values.len(),
        grid.len(),
        "quadrature values must have one entry per grid node"
    );
    grid.weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integration domain for [`adaptive_quad_1d`].
pub enum Domain<'a> {
    /// `[a, b]`.
    Finite(f64, f64),
    /// `[start, inf)`. `tail(b)` must bound `int_b^inf |f|`; the integral is
    /// truncated at the first `b` where `tail(b) <= tol / 100`.
    HalfLine { start: f64, tail: &'a dyn Fn(f64) -> f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute error target.
    pub tol: f64,
    /// Maximum number of subintervals before giving up.
    pub max_subdivisions: usize,
}

impl QuadOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_subdivisions: 4000,
        }
    }
}

/// Result of a 1D quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - hw * x);
        let f2 = f(c + hw * x);
        kronrod += w * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kronrod * hw;
    let error = ((kronrod - gauss) * hw).abs();
    (value, error)
}

/// Globally adaptive Gauss-Kronrod quadrature.
///
/// Returns [`Error::Numerical`] carrying the best estimate when the error
/// target is not met within `max_subdivisions` intervals.
pub fn adaptive_quad_1d(f: impl Fn(f64) -> f64, domain: Domain<'_>, opts: QuadOptions) -> Result<QuadEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::config(format!(
            "quadrature tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let (a, b, tol) = match domain {
        Domain::Finite(a, b) => (a, b, opts.tol),
        Domain::HalfLine { start, tail } => {
            let target = opts.tol / 100.0;
            let mut width = 1.0;
            let mut b = start + width;
            let mut doublings = 0;
            while tail(b) > target {
                width *= 2.0;
                b = start + width;
                doublings += 1;
                if doublings > 60 {
                    return Err(Error::numerical("tail truncation search", f64::NAN, tail(b)));
                }
            }
            (start, b, opts.tol - target)
        }
    };
    integrate_finite(&f, a, b, tol, opts.max_subdivisions)
}

fn integrate_finite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, budget: usize) -> Result<QuadEstimate> {
    if a == b {
        return Ok(QuadEstimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let (value, error) = kronrod15(f, a, b);
    let mut total_value = value;
    let mut total_error = error;
    let mut evaluations = 15;
    heap.push(Segment { a, b, value, error });
    while total_error > tol {
        if heap.len() >= budget {
            return Err(Error::numerical("adaptive quadrature", total_value, total_error));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod15(f, worst.a, mid);
        let (v2, e2) = kronrod15(f, mid, worst.b);
        evaluations += 30;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        if !total_value.is_finite() {
            return Err(Error::numerical(
                "adaptive quadrature (non-finite integrand)",
                total_value,
                total_error,
            ));
        }
    }
    // Re-sum to shed the drift of the running totals.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(QuadEstimate {
        value,
        error,
        evaluations,
    })
}

/// `int_0^inf f dr` where `|f(r)| <= scale * (1 + r)^power * exp(-rate * r)`.
pub fn integrate_exp_decay(
    f: impl Fn(f64) -> f64,
    scale: f64,
    power: u32,
    rate: f64,
    tol: f64,
) -> Result<QuadEstimate> {
    let tail = move |b: f64| scale * rate.exp() * exp_poly_tail(power, rate, 1.0 + b);
    adaptive_quad_1d(
        f,
        Domain::HalfLine {
            start: 0.0,
            tail: &tail,
        },
        QuadOptions::new(tol),
    )
}

/// Exact `int_b^inf r^k e^{-a r} dr` for integer `k`, `a > 0`, `b >= 0`.
pub fn exp_poly_tail(k: u32, a: f64, b: f64) -> f64 {
    // e^{-ab} sum_{i=0}^k k!/(k-i)! b^{k-i} / a^{i+1}
    let mut sum = 0.0;
    let mut falling = 1.0;
    for i in 0..=k {
        sum += falling * b.powi((k - i) as i32) / a.powi(i as i32 + 1);
        falling *= (k - i) as f64;
    }
    (-a * b).exp() * sum
}

/// Upper bound of `int_b^inf r^k e^{-r^2/2} dr`; infinite unless
/// `b >= sqrt(2k)` and `b > 0`.
pub fn gaussian_poly_tail(k: u32, b: f64) -> f64 {
    // r^k e^{-r^2/4} is decreasing past sqrt(2k), and int_b^inf e^{-r^2/4}
    // is at most (2/b) e^{-b^2/4}.
    if b <= 0.0 || b * b < 2.0 * k as f64 {
        return f64::INFINITY;
    }
    2.0 * b.powi(k as i32 - 1) * (-0.5 * b * b).exp()
}

/// `int_{S^2} f(omega) d omega` by nested adaptive quadrature in
/// `(theta, phi)`; `tol` is an absolute target for the whole sphere.
pub fn sphere_quad(f: impl Fn(&Vec3) -> f64, tol: f64) -> Result<QuadEstimate> {
    let failure = std::cell::Cell::new(None);
    let inner_error = std::cell::Cell::new(0.0f64);
    let inner_tol = tol / (8.0 * std::f64::consts::PI);
    let outer = adaptive_quad_1d(
        |theta: f64| {
            let (st, ct) = theta.sin_cos();
            let ring = adaptive_quad_1d(
                |phi: f64| {
                    let (sp, cp) = phi.sin_cos();
                    f(&Vec3::new(st * cp, st * sp, ct))
                },
                Domain::Finite(0.0, 2.0 * std::f64::consts::PI),
                QuadOptions::new(inner_tol),
            );
            match ring {
                Ok(r) => {
                    inner_error.set(inner_error.get().max(r.error));
                    st * r.value
                }
                Err(e) => {
                    failure.set(Some(e.to_string()));
                    f64::NAN
                }
            }
        },
        Domain::Finite(0.0, std::f64::consts::PI),
        QuadOptions::new(0.5 * tol),
    );
    if let Some(msg) = failure.take() {
        return Err(Error::numerical(
            format!("sphere quadrature: {msg}"),
            f64::NAN,
            f64::NAN,
        ));
    }
    let outer = outer?;
    Ok(QuadEstimate {
        value: outer.value,
        error: outer.error + 2.0 * inner_error.get(),
        evaluations: outer.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_quad_matches_monomial_formula() {
        // int_{S^2} x^a y^b z^c = 4 pi (a-1)!!(b-1)!!(c-1)!! / (a+b+c+1)!! for even a, b, c.
        fn dfact(n: i32) -> f64 {
            if n <= 0 {
                1.0
            } else {
                n as f64 * dfact(n - 2)
            }
        }
        for (a, b, c) in [(0, 0, 0), (2, 0, 0), (2, 2, 0), (4, 2, 2), (6, 0, 2), (1, 2, 0)] {
            let est = sphere_quad(|w| w.x.powi(a) * w.y.powi(b) * w.z.powi(c), 1e-12).unwrap();
            let exact = if (a | b | c) % 2 == 1 {
                0.0
            } else {
                4.0 * std::f64::consts::PI * dfact(a - 1) * dfact(b - 1) * dfact(c - 1) / dfact(a + b + c + 1)
            };
            assert!(
                (est.value - exact).abs() < 1e-11,
                "{a} {b} {c}: {} vs {exact}",
                est.value
            );
        }
    }

    #[test]
    fn two_per_axis_grid() {
        let g = VelocityGrid::centered(2, 1.0).unwrap();
        assert_eq!(g.len(), 8);
        for (p, w) in g.nodes().iter().zip(g.weights()) {
            for d in 0..3 {
                assert_eq!(p[d].abs(), 0.5);
            }
            assert_eq!(*w, 1.0);
        }
    }

    #[test]
    fn weights_partition_cube() {
        for &(n, p) in &[(3usize, 1.5), (7, 4.0), (16, 6.0)] {
            let g = VelocityGrid::centered(n, p).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert_relative_eq!(total, (2.0 * p).powi(3), max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(VelocityGrid::centered(1, 1.0), Err(Error::Config(_))));
        assert!(matches!(VelocityGrid::centered(4, 0.0), Err(Error::Config(_))));
        assert!(matches!(VelocityGrid::centered(4, -1.0), Err(Error::Config(_))));
        assert!(matches!(
            VelocityGrid::new(4, 1.0, [0.25, 0.0, 0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn staggered_grid_is_disjoint() {
        let base = VelocityGrid::centered(16, 6.0).unwrap();
        let stag = base.staggered_companion();
        let h = base.spacing();
        let mut min_d = f64::INFINITY;
        for p in base.nodes() {
            for q in stag.nodes() {
                min_d = min_d.min((p - q).norm());
            }
        }
        assert_relative_eq!(min_d, h * 3f64.sqrt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn unstaggered_grid_is_symmetric() {
        let g = VelocityGrid::centered(5, 2.0).unwrap();
        for (idx, p) in g.nodes().iter().enumerate() {
            let m = g.mirror(idx);
            assert_eq!(g.nodes()[m], -p);
        }
    }

    #[test]
    fn quad_of_constant_and_odd() {
        let g = VelocityGrid::centered(9, 3.0).unwrap();
        assert_relative_eq!(g.quad(&vec![1.0; g.len()]), 216.0, max_relative = 1e-12);
        let odd = g.tabulate(|p| p[0] * (-p.norm_squared()).exp());
        assert!(g.quad(&odd).abs() < 1e-15);
    }

    #[test]
    fn quad_gaussian() {
        let g = VelocityGrid::centered(32, 8.0).unwrap();
        let v = g.tabulate(|p| (-p.norm_squared()).exp());
        let exact = std::f64::consts::PI.powf(1.5);
        assert_relative_eq!(g.quad(&v), exact, max_relative = 1e-6);
    }

    #[test]
    #[should_panic(expected = "one entry per grid node")]
    fn quad_length_mismatch_panics() {
        let g = VelocityGrid::centered(2, 1.0).unwrap();
        g.quad(&[1.0; 3]);
    }

    #[test]
    fn exponential_half_line() {
        let r = integrate_exp_decay(|r| (-r).exp(), 1.0, 0, 1.0, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_density_on_real_line() {
        let mu = |r: f64| (-0.5 * r * r).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let tail = |b: f64| gaussian_poly_tail(0, b);
        let half = adaptive_quad_1d(
            mu,
            Domain::HalfLine {
                start: 0.0,
                tail: &tail,
            },
            QuadOptions::new(1e-12),
        )
        .unwrap();
        assert!((2.0 * half.value - 1.0).abs() < 2e-12);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let opts = QuadOptions {
            tol: 1e-14,
            max_subdivisions: 3,
        };
        let err = adaptive_quad_1d(|x: f64| x.abs().sqrt().recip(), Domain::Finite(1e-300, 1.0), opts).unwrap_err();
        match err {
            Error::Numerical {
                estimate, error_bound, ..
            } => {
                assert!(estimate.is_finite());
                assert!(error_bound > 1e-14);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn exp_poly_tail_matches_quadrature() {
        for k in 0..6 {
            let exact = exp_poly_tail(k, 1.3, 2.0);
            let num = adaptive_quad_1d(
                |r| r.powi(k as i32) * (-1.3 * r).exp(),
                Domain::Finite(2.0, 80.0),
                QuadOptions::new(1e-14),
            )
            .unwrap();
            assert_relative_eq!(exact, num.value, max_relative = 1e-10);
        }
    }
}
