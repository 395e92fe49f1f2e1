//! Spatially homogeneous relaxation `df/dt = -L f + eps Gamma(f, f)` with no
//! fields.
//!
//! On a truncated grid the linear part decays exponentially at the rate of
//! the smallest non-null eigenvalue. That is the only rate reported: the
//! algebraic decay of the full inhomogeneous problem has no counterpart here.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::functionals::{functionals, MAX_TIME_DERIVATIVES};
use crate::cg::conjugate_gradient;
use crate::landau::{apply_gamma, project, DistributionVector, EigenDecomposition, LinearizedOperator, Moments};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialRecipe {
    /// Uniform noise weighted by `J^{1/4}`, with the macroscopic part
    /// removed and unit norm.
    RandomMicroscopic { seed: u64 },
    /// `amplitude * chi_index` with `index` in `0..6`.
    BasisElement { index: usize, amplitude: f64 },
    /// `amplitude * sqrt(J) * exp(-|p - centre|^2 / 2 width^2)` on both species.
    JuttnerBump {
        amplitude: f64,
        centre: [f64; 3],
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// `exp(-dt L)` from a full eigendecomposition, with the nonlinear term
    /// added before each propagation. Small grids only.
    ExactExponential,
    /// Crank-Nicolson on the linear part, solved by conjugate gradients;
    /// the nonlinear term is explicit.
    ImplicitMidpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationConfig {
    pub n_per_axis: usize,
    pub p_max: f64,
    pub initial: InitialRecipe,
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    pub nonlinear_epsilon: f64,
    pub k_max: usize,
    /// Steps between recorded snapshots.
    pub stride: usize,
    /// The run aborts once `||f||` exceeds this.
    pub norm_bound: f64,
    pub tol_null: f64,
    /// Trapezoid nodes per step for the energy closure under the exact
    /// exponential integrator.
    pub closure_substeps: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            n_per_axis: 12,
            p_max: 6.0,
            initial: InitialRecipe::RandomMicroscopic { seed: 0 },
            integrator: Integrator::ExactExponential,
            dt: 0.02,
            t_end: 3.0,
            nonlinear_epsilon: 0.0,
            k_max: 1,
            stride: 5,
            norm_bound: 1e3,
            tol_null: 5e-2,
            closure_substeps: 100,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) {
            return bad(format!("t_end = {} is shorter than one step", self.t_end));
        }
        if !(self.nonlinear_epsilon >= 0.0) {
            return bad(format!(
                "nonlinear_epsilon must be >= 0, got {}",
                self.nonlinear_epsilon
            ));
        }
        if self.k_max > MAX_TIME_DERIVATIVES {
            return bad(format!("k_max = {} exceeds {MAX_TIME_DERIVATIVES}", self.k_max));
        }
        if self.stride == 0 || self.closure_substeps == 0 {
            return bad("stride and closure_substeps must be at least 1".into());
        }
        if !(self.norm_bound > 0.0) || !(self.tol_null > 0.0) {
            return bad("norm_bound and tol_null must be positive".into());
        }
        if let InitialRecipe::BasisElement { index, .. } = self.initial {
            if index >= 6 {
                return bad(format!("basis index {index} is not in 0..6"));
            }
        }
        if self.steps() / self.stride < 2 * self.k_max + 1 {
            return bad("too few recorded snapshots for the requested k_max".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub i_parallel: f64,
    pub d_parallel: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub b: [f64; 3],
    pub c: f64,
    pub norm_micro: f64,
    pub norm: f64,
}

/// Least-squares line through `(t, log ||(1 - P) f||)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Minus the slope.
    pub rate: f64,
    pub intercept: f64,
    pub t_from: f64,
    pub t_to: f64,
    pub points: usize,
}

pub fn fit_decay(t: &[f64], norm_micro: &[f64]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(norm_micro)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::config("decay fit needs two positive samples"));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    Ok(DecayFit {
        rate: -slope,
        intercept: my - slope * mt,
        t_from: pts[0].0,
        t_to: pts[pts.len() - 1].0,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationRun {
    pub config: RelaxationConfig,
    /// Records at snapshots with `k_max` neighbours on each side.
    pub records: Vec<DiagnosticsRecord>,
    pub fit: DecayFit,
    pub initial_norm: f64,
    /// `max_t max_i |m_i(t) - m_i(0)| / (t ||f0||)` over all snapshots.
    pub moment_drift_rate: f64,
    /// `max_n | ||f_n||^2 + 2 int <L f, f> - ||f_0||^2 | / ||f_0||^2`, with
    /// the integral by the trapezoid rule. Only for `eps = 0`. The exact
    /// exponential integrator evaluates `<L f, f>` in the eigenbasis at
    /// `closure_substeps` nodes per step; the implicit midpoint uses the
    /// step values.
    pub energy_closure: Option<f64>,
    /// Recorded steps where `I_parallel` grew by more than rounding.
    pub monotone_violations: usize,
    pub steps: usize,
}

fn initial_state(op: &LinearizedOperator, recipe: &InitialRecipe) -> Result<DistributionVector> {
    let setup = op.setup();
    let grid = op.grid();
    let f = match *recipe {
        InitialRecipe::RandomMicroscopic { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = DistributionVector::zeros(setup.nodes());
            for s in 0..2 {
                let w: Vec<f64> = setup.sqrt_j_nodes(s).iter().map(|v| v.sqrt()).collect();
                for (v, w) in g.species_mut(s).iter_mut().zip(w) {
                    *v = w * rng.gen_range(-1.0..1.0);
                }
            }
            let (pg, _) = project(&g, op.basis(), grid);
            g.axpy(-1.0, &pg);
            let n = g.norm(grid);
            g.scale(1.0 / n);
            g
        }
        InitialRecipe::BasisElement { index, amplitude } => {
            let mut g = op.basis().chi(index).clone();
            g.scale(amplitude);
            g
        }
        InitialRecipe::JuttnerBump {
            amplitude,
            centre,
            width,
        } => {
            let c = Vec3::from(centre);
            let sj: [Vec<f64>; 2] = [0, 1].map(|s| setup.sqrt_j_nodes(s).to_vec());
            let mut k = 0usize;
            let nodes = setup.nodes();
            setup.tabulate(|s, p| {
                let v = amplitude * sj[s][k % nodes] * (-(p - c).norm_squared() / (2.0 * width * width)).exp();
                k += 1;
                v
            })
        }
    };
    Ok(f)
}

struct Snapshot {
    t: f64,
    f: DistributionVector,
    moments: Moments,
    norm_micro: f64,
    norm: f64,
}

/// Integrates the relaxation problem. `eigen` is required by the exact
/// exponential integrator and must come from the same operator.
pub fn run_relaxation(
    op: &LinearizedOperator,
    eigen: Option<&EigenDecomposition>,
    cfg: &RelaxationConfig,
) -> Result<RelaxationRun> {
    cfg.validate()?;
    let grid = op.grid();
    if grid.n_per_axis() != cfg.n_per_axis {
        return Err(Error::config(format!(
            "operator grid has {} points per axis, config asks for {}",
            grid.n_per_axis(),
            cfg.n_per_axis
        )));
    }
    if cfg.integrator == Integrator::ExactExponential && eigen.is_none() {
        return Err(Error::config(
            "exact-exponential integration needs the eigendecomposition",
        ));
    }
    let basis = op.basis();
    let eps = cfg.nonlinear_epsilon;
    let f0 = initial_state(op, &cfg.initial)?;
    let norm0 = f0.norm(grid);
    let steps = cfg.steps();
    let dt = cfg.dt;

    let snapshot = |t: f64, f: &DistributionVector| {
        let (pf, moments) = project(f, basis, grid);
        Snapshot {
            t,
            norm_micro: DistributionVector::linear_combination(1.0, f, -1.0, &pf).norm(grid),
            norm: f.norm(grid),
            moments,
            f: f.clone(),
        }
    };

    let mut snaps = vec![snapshot(0.0, &f0)];
    let mut f = f0.clone();
    let mut dissipated = 0.0;
    let mut prev_form = op.quadratic_form(&f0);
    let mut closure: f64 = 0.0;
    // <L f(s), f(s)> = w sum_k lambda_k c_k^2 exp(-2 lambda_k s) when the grid
    // weights are uniform.
    let weights = grid.weights();
    let spectral_form = match eigen {
        Some(e)
            if eps == 0.0
                && cfg.integrator == Integrator::ExactExponential
                && weights.iter().all(|w| *w == weights[0]) =>
        {
            let c = e.coefficients(&f0);
            let w = weights[0];
            Some(move |s: f64| -> f64 {
                w * e
                    .values
                    .iter()
                    .zip(&c)
                    .map(|(l, c)| l * c * c * (-2.0 * l * s).exp())
                    .sum::<f64>()
            })
        }
        _ => None,
    };
    for n in 1..=steps {
        let t = n as f64 * dt;
        let forcing = if eps > 0.0 {
            let mut g = apply_gamma(op.setup(), &f, &f)?;
            g.scale(eps * dt);
            Some(g)
        } else {
            None
        };
        f = match cfg.integrator {
            Integrator::ExactExponential => {
                let e = eigen.expect("checked above");
                match forcing {
                    // Without forcing propagate from the start, so rounding
                    // does not accumulate over steps.
                    None => e.propagate(&f0, t),
                    Some(g) => e.propagate(&DistributionVector::linear_combination(1.0, &f, 1.0, &g), dt),
                }
            }
            Integrator::ImplicitMidpoint => {
                let lf = op.apply(&f);
                let mut rhs = DistributionVector::linear_combination(1.0, &f, -0.5 * dt, &lf);
                if let Some(g) = forcing {
                    rhs.axpy(1.0, &g);
                }
                let apply = |x: &[f64]| {
                    let lx = op.apply_slice(x);
                    x.iter().zip(lx).map(|(a, b)| a + 0.5 * dt * b).collect()
                };
                let (x, _) = conjugate_gradient("implicit midpoint step", apply, rhs.as_slice(), 1e-13, 10_000)?;
                DistributionVector::from_stacked(f.nodes(), x)?
            }
        };
        let norm = f.norm(grid);
        if !(norm <= cfg.norm_bound) {
            return Err(Error::Diverged {
                step: n,
                norm,
                bound: cfg.norm_bound,
            });
        }
        if let Some(g) = &spectral_form {
            let m = cfg.closure_substeps;
            let h = dt / m as f64;
            let t0 = t - dt;
            let inner: f64 = (1..m).map(|k| g(t0 + k as f64 * h)).sum();
            dissipated += h * (g(t0) + 2.0 * inner + g(t));
            closure = closure.max((norm * norm + dissipated - norm0 * norm0).abs() / (norm0 * norm0));
        } else if eps == 0.0 {
            let form = op.quadratic_form(&f);
            dissipated += dt * (form + prev_form);
            prev_form = form;
            closure = closure.max((norm * norm + dissipated - norm0 * norm0).abs() / (norm0 * norm0));
        }
        if n % cfg.stride == 0 {
            snaps.push(snapshot(t, &f));
        }
    }

    let m0 = snaps[0].moments.as_array();
    let moment_drift_rate = snaps[1..]
        .iter()
        .map(|s| {
            let m = s.moments.as_array();
            let d = (0..6).fold(0.0f64, |a, i| a.max((m[i] - m0[i]).abs()));
            d / (s.t * norm0)
        })
        .fold(0.0f64, f64::max);

    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let series: Vec<DistributionVector> = snaps.iter().map(|s| s.f.clone()).collect();
    let values = functionals(op.setup(), basis, &times, &series, None, cfg.k_max)?;
    let records: Vec<DiagnosticsRecord> = values
        .iter()
        .zip(&snaps[cfg.k_max..])
        .map(|(v, s)| DiagnosticsRecord {
            t: s.t,
            i_parallel: v.i_parallel,
            d_parallel: v.d_parallel,
            a_plus: s.moments.a_plus,
            a_minus: s.moments.a_minus,
            b: s.moments.b,
            c: s.moments.c,
            norm_micro: s.norm_micro,
            norm: s.norm,
        })
        .collect();
    let monotone_violations = records
        .windows(2)
        .filter(|w| w[1].i_parallel > w[0].i_parallel * (1.0 + 1e-12))
        .count();

    let half = cfg.t_end / 2.0;
    let tail: Vec<&Snapshot> = snaps.iter().filter(|s| s.t >= half - 1e-12).collect();
    let fit = fit_decay(
        &tail.iter().map(|s| s.t).collect::<Vec<_>>(),
        &tail.iter().map(|s| s.norm_micro).collect::<Vec<_>>(),
    )?;

    Ok(RelaxationRun {
        config: cfg.clone(),
        records,
        fit,
        initial_norm: norm0,
        moment_drift_rate,
        energy_closure: (eps == 0.0).then_some(closure),
        monotone_violations,
        steps,
    })
}

/// One row per record; the fit columns repeat on every row.
pub fn write_relaxation_csv(path: &Path, run: &RelaxationRun) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "t,I_par,D_par,a_plus,a_minus,bx,by,bz,c,micro_norm,fit_rate,fit_intercept"
    )?;
    for r in &run.records {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t,
            r.i_parallel,
            r.d_parallel,
            r.a_plus,
            r.a_minus,
            r.b[0],
            r.b[1],
            r.b[2],
            r.c,
            r.norm_micro,
            run.fit.rate,
            run.fit.intercept
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::PlasmaPair;
    use crate::kernel::KernelParams;
    use crate::landau::{eigendecompose, BasisNormalization, CollisionSetup};

    fn small() -> (LinearizedOperator, EigenDecomposition) {
        let setup = CollisionSetup::from_grid_params(6, 5.0, PlasmaPair::default(), KernelParams::default()).unwrap();
        let op = LinearizedOperator::from_setup(setup, BasisNormalization::Grid).unwrap();
        let e = eigendecompose(&op).unwrap();
        (op, e)
    }

    fn cfg() -> RelaxationConfig {
        RelaxationConfig {
            n_per_axis: 6,
            p_max: 5.0,
            dt: 0.05,
            t_end: 2.0,
            stride: 2,
            ..Default::default()
        }
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let t: Vec<f64> = (0..10).map(|k| k as f64 * 0.3).collect();
        let v: Vec<f64> = t.iter().map(|t| 2.0 * (-1.7 * t).exp()).collect();
        let fit = fit_decay(&t, &v).unwrap();
        assert!((fit.rate - 1.7).abs() < 1e-12);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn integrators_agree_and_decay_monotonically() {
        let (op, e) = small();
        let a = run_relaxation(&op, Some(&e), &cfg()).unwrap();
        let b = run_relaxation(
            &op,
            None,
            &RelaxationConfig {
                integrator: Integrator::ImplicitMidpoint,
                dt: 0.0125,
                stride: 8,
                ..cfg()
            },
        )
        .unwrap();
        assert_eq!(a.monotone_violations, 0);
        assert_eq!(b.monotone_violations, 0);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.t - y.t).abs() < 1e-12);
            assert!((x.norm - y.norm).abs() < 1e-3 * a.initial_norm, "{} {}", x.norm, y.norm);
        }
        assert!(a.energy_closure.unwrap() < 1e-2);
    }

    #[test]
    fn config_errors_are_reported() {
        let (op, e) = small();
        let mut c = cfg();
        c.k_max = 3;
        assert!(matches!(run_relaxation(&op, Some(&e), &c), Err(Error::Config(_))));
        let mut c = cfg();
        c.n_per_axis = 8;
        assert!(matches!(run_relaxation(&op, Some(&e), &c), Err(Error::Config(_))));
        assert!(matches!(run_relaxation(&op, None, &cfg()), Err(Error::Config(_))));
        let json = r#"{"dt": 0.1, "bogus": 1}"#;
        assert!(serde_json::from_str::<RelaxationConfig>(json).is_err());
    }

    #[test]
    fn divergence_names_the_step() {
        let (op, e) = small();
        let c = RelaxationConfig {
            norm_bound: 0.5,
            initial: InitialRecipe::BasisElement {
                index: 0,
                amplitude: 1.0,
            },
            ..cfg()
        };
        match run_relaxation(&op, Some(&e), &c) {
            Err(Error::Diverged { step: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
