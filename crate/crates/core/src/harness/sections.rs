//! One function per stage of a run. Each returns its checks and a few
//! informative numbers, and may write plot-ready files to the output
//! directory.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{DomainKind, RunConfig};
use super::report::{Check, Relation};
use super::rng::{stream, stream_seed};
use crate::equilibria::{bessel_k2_scaled, check_neutrality, Juttner};
use crate::kernel::{kappa, s_matrix, Kernel};
use crate::landau::{
    apply_gamma, build_basis, collision_integral, conservation_report, deflated_gap, divergence_identity,
    eigendecompose, write_operator_dump, write_spectrum_csv, BasisNormalization, CollisionSetup, EigenDecomposition,
    GapReport, IdentityVariant, LinearizedOperator, PolyBump, REPORTED_EIGENVALUES,
};
use crate::maxwell::write_diagnostics_csv;
use crate::momentfn::{check_bij, det_mismatch, determinant_probes, i_tables, solve_k, MomentProfile};
use crate::scenarios::{
    random_particles, run_billiard, run_cavity, run_relaxation, write_relaxation_csv, BilliardConfig, Domain,
    InitialRecipe,
};
use crate::vgrid::VelocityGrid;
use crate::{Mat3, Result, Vec3};

/// What a stage produced, before timing is attached.
#[derive(Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub notes: Vec<(String, f64)>,
}

impl Outcome {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn note(&mut self, name: impl Into<String>, v: f64) {
        self.notes.push((name.into(), v));
    }
}

/// An assembled operator with its full spectrum and deflated gap.
pub struct Prepared {
    pub op: LinearizedOperator,
    pub eigen: EigenDecomposition,
    pub norm_l: f64,
    pub delta_hat: f64,
}

/// State shared by the stages of one run.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    prepared: Vec<((usize, u64), Prepared)>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            prepared: Vec::new(),
        }
    }

    /// Assembles `L` on `(n, p_max)` once per run.
    fn prepared(&mut self, n: usize, p_max: f64) -> Result<&Prepared> {
        let key = (n, p_max.to_bits());
        if let Some(i) = self.prepared.iter().position(|(k, _)| *k == key) {
            return Ok(&self.prepared[i].1);
        }
        let setup = CollisionSetup::from_grid_params(n, p_max, self.cfg.species, self.cfg.kernel)?;
        let op = LinearizedOperator::from_setup(setup, BasisNormalization::Grid)?;
        let eigen = eigendecompose(&op)?;
        let norm_l = eigen.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let delta_hat = deflated_gap(&op, norm_l)?;
        self.prepared.push((
            key,
            Prepared {
                op,
                eigen,
                norm_l,
                delta_hat,
            },
        ));
        Ok(&self.prepared.last().expect("just pushed").1)
    }

    fn out(&self, file: &str) -> std::path::PathBuf {
        self.cfg.out_dir.join(file)
    }
}

pub fn constants(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let mut o = Outcome::default();
    for (label, sp) in [("plus", cfg.species.plus), ("minus", cfg.species.minus)] {
        let j = Juttner::new(sp)?;
        let mass = j.radial_moment(|_| 1.0, 0, tol.quadrature)?.value;
        o.check(Check::below(
            format!("normalisation e*int J = 1 ({label})"),
            (sp.charge * mass - 1.0).abs(),
            tol.normalisation,
        ));
        let second = j
            .radial_moment(|r| r * r / (3.0 * sp.p0_radial(r)), 1, tol.quadrature)?
            .value;
        let expected = sp.k_b_t * mass;
        o.check(Check::below(
            format!("int p_i^2/p0 J = k_bT M ({label})"),
            (second - expected).abs() / expected,
            tol.second_moment,
        ));
        let grid = VelocityGrid::centered(24, 8.0)?;
        let on_grid = sp.charge * grid.quad(&grid.tabulate(|p| j.eval(p)));
        o.note(
            format!("grid (24, 8.0) normalisation error ({label})"),
            (on_grid - 1.0).abs(),
        );
    }
    o.check(Check::below(
        "neutrality residual",
        check_neutrality(&cfg.species, tol.neutrality)?,
        tol.neutrality,
    ));
    let mut previous = f64::INFINITY;
    let mut decreasing = true;
    for s in [0.5, 1.0, 2.0, 5.0] {
        let est = bessel_k2_scaled(s, tol.quadrature)?;
        o.check(Check::below(
            format!("K2({s}) quadrature error bound"),
            est.error / est.value,
            tol.bessel,
        ));
        let k2 = est.value * (-s).exp();
        o.note(format!("K2({s})"), k2);
        decreasing &= k2 < previous;
        previous = k2;
    }
    o.check(Check::holds("K2 decreasing on 0.5, 1, 2, 5", decreasing));
    Ok(o)
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let q = nalgebra::Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    nalgebra::UnitQuaternion::from_quaternion(q)
        .to_rotation_matrix()
        .into_inner()
}

pub fn kernel(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let (plus, minus) = (cfg.species.plus, cfg.species.minus);
    let k = Kernel::new(&plus, &minus, &cfg.kernel);
    let mut o = Outcome::default();

    let mut rng = stream(cfg.seed, "kernel/null-vector");
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.kernel_samples {
        let (p, q) = (random_vec(&mut rng, 4.0), random_vec(&mut rng, 4.0));
        let phi = k.phi(&p, &q)?;
        let w = p / plus.p0(&p) - q / minus.p0(&q);
        worst = worst.max((phi * w).norm() / (phi.norm() * w.norm()));
    }
    o.check(Check::below(
        "Phi (p/p0 - q/q0) = 0, relative",
        worst,
        tol.kernel_null_vector,
    ));

    let mut rng = stream(cfg.seed, "kernel/rotation");
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.kernel_samples {
        let (p, q, r) = (
            random_vec(&mut rng, 4.0),
            random_vec(&mut rng, 4.0),
            random_rotation(&mut rng),
        );
        let phi = k.phi(&p, &q)?;
        let rotated = k.phi(&(r * p), &(r * q))?;
        worst = worst.max((rotated - r * phi * r.transpose()).norm() / phi.norm());
    }
    o.check(Check::below(
        "rotational covariance of Phi, relative",
        worst,
        tol.kernel_rotation,
    ));

    let mut rng = stream(cfg.seed, "kernel/diagonal");
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.kernel_samples {
        let p = random_vec(&mut rng, 4.0);
        worst = worst.max(s_matrix(&p, &p, 1.0, 1.0).abs().max());
    }
    o.check(Check::below("S(P, P) = 0 for unit mass", worst, tol.kernel_diagonal));

    let k0 = kappa(&Vec3::zeros(), tol.quadrature)?;
    let exact = 2f64.powf(4.5) * std::f64::consts::PI;
    o.note("kappa(0) relative error against 2^(9/2) pi", (k0 - exact).abs() / exact);
    Ok(o)
}

pub fn moment_tables(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let qt = cfg.momentfn.tol;
    let tables = i_tables(qt)?;
    let mut o = Outcome::default();
    let expected: [u128; 6] = [3, 15, 105, 945, 10395, 135135];
    o.check(Check::holds(
        "m_2..m_7 = 3, 15, 105, 945, 10395, 135135",
        tables.m[2..=7] == expected,
    ));
    let mut worst: f64 = 0.0;
    for n in 2..=7 {
        worst = worst.max(tables.moment_quadrature_mismatch(n, qt)?);
    }
    o.check(Check::below(
        "m_2..m_7 against radial quadrature, relative",
        worst,
        tol.i_tables,
    ));
    o.check(Check::below(
        "i_j recurrence against direct quadrature, relative",
        tables.recurrence_mismatch(),
        tol.i_tables,
    ));
    o.check(Check::holds("i_1 > i_0", tables.i1.value > tables.i0.value));
    o.note("i_0", tables.i0.value);
    o.note("i_1", tables.i1.value);
    let coeffs = solve_k(&tables)?;
    o.check(Check::below(
        "det C by LU against closed form at (i_0, i_1)",
        det_mismatch(&tables, tables.i0.value, tables.i1.value),
        tol.determinant,
    ));
    for (n, (a, b)) in determinant_probes(stream_seed(cfg.seed, "moment-tables/probes"))
        .into_iter()
        .enumerate()
    {
        o.check(Check::below(
            format!("det C by LU against closed form at probe {n}"),
            det_mismatch(&tables, a, b),
            tol.determinant,
        ));
    }
    // The sign is certified only if the value plus its quadrature error bound stays negative.
    o.check(Check::below(
        "det C + error bound",
        coeffs.det_c_closed_form + coeffs.det_c_bound,
        0.0,
    ));
    o.note("det C", coeffs.det_c);
    Ok(o)
}

pub fn moment_functions(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let qt = cfg.momentfn.tol;
    let coeffs = solve_k(&i_tables(qt)?)?;
    let profile = MomentProfile::new(coeffs.k)?;
    let checks = check_bij(&profile, qt, cfg.tolerances.moment_functions)?;
    let mut o = Outcome::default();
    for r in checks.residuals {
        o.check(Check::new(r.name, r.value.abs(), Relation::AtMost, r.threshold));
    }
    for (i, l) in checks.lambda.iter().enumerate() {
        o.note(format!("lambda_{}", i + 1), *l);
    }
    for (i, k) in coeffs.k.iter().enumerate() {
        o.note(format!("k_{}", i + 1), *k);
    }
    Ok(o)
}

pub fn operator(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances.clone();
    let params = cfg.operator.clone();
    let out_spectrum = ctx.out("spectrum.csv");
    let out_dump = ctx.out("operator.bin");
    let mut o = Outcome::default();
    let pre = ctx.prepared(params.n_per_axis, params.p_max)?;
    let n = params.n_per_axis;
    o.check(Check::below(
        format!("||L - L^T||_F / ||L||_F at {n}^3"),
        pre.op.asymmetry(),
        tol.operator_symmetry,
    ));
    let coarse = pre.op.null_residuals(pre.norm_l);
    for (i, r) in coarse.iter().enumerate() {
        o.check(Check::below(
            format!("||L chi_{}|| relative at {n}^3", i + 1),
            *r,
            tol.null,
        ));
    }
    let count = pre
        .eigen
        .values
        .iter()
        .filter(|v| v.abs() < tol.spectral_count * pre.norm_l)
        .count();
    o.check(Check::new(
        format!("near-zero eigenvalues at {n}^3"),
        count as f64,
        Relation::Equals,
        6.0,
    ));
    o.check(Check::above(format!("delta_hat at {n}^3"), pre.delta_hat, 0.0));
    o.note(format!("||L|| at {n}^3"), pre.norm_l);
    o.note(format!("delta_hat at {n}^3"), pre.delta_hat);
    let report = GapReport {
        n_per_axis: n,
        norm_l: pre.norm_l,
        smallest: pre.eigen.values.iter().take(REPORTED_EIGENVALUES).copied().collect(),
        tol_null: tol.spectral_count,
        near_zero_count: count,
        delta_hat: pre.delta_hat,
        null_residuals: coarse,
    };
    write_spectrum_csv(&out_spectrum, &report)?;
    if params.dump {
        write_operator_dump(&out_dump, &pre.op, &report.smallest)?;
    }
    let coarse_gap = pre.delta_hat;

    let m = params.refined_n_per_axis;
    let setup = CollisionSetup::from_grid_params(m, params.p_max, cfg.species, cfg.kernel)?;
    let fine = LinearizedOperator::from_setup(setup, BasisNormalization::Grid)?;
    let norm_fine = fine.spectral_norm();
    let fine_residuals = fine.null_residuals(norm_fine);
    let worst = |r: &[f64; 6]| r.iter().fold(0.0f64, |a, b| a.max(*b));
    o.check(Check::below(
        format!("worst ||L chi_i|| ratio {m}^3 / {n}^3"),
        worst(&fine_residuals) / worst(&coarse),
        1.0,
    ));
    let fine_gap = deflated_gap(&fine, norm_fine)?;
    o.check(Check::above(format!("delta_hat at {m}^3"), fine_gap, 0.0));
    o.check(Check::below(
        format!("|delta_hat({m}) - delta_hat({n})| / delta_hat({n})"),
        (fine_gap - coarse_gap).abs() / coarse_gap,
        tol.gap_stability,
    ));
    o.note(format!("||L|| at {m}^3"), norm_fine);
    o.note(format!("delta_hat at {m}^3"), fine_gap);
    Ok(o)
}

/// Relative sizes of `<Gamma(f, f), chi_i>` followed by the conservation
/// residuals of `C(F, F)`: mass (two species), momentum (three), energy.
fn collision_residuals(cfg: &RunConfig, n: usize) -> Result<Vec<(String, f64)>> {
    let setup = CollisionSetup::from_grid_params(n, cfg.collision.p_max, cfg.species, cfg.kernel)?;
    let f = setup.tabulate(|s, p| {
        let sq = setup.juttner(s).sqrt(p);
        sq * (0.3 + 0.5 * p.x - 0.2 * p.y * p.z + 0.1 * p.norm_squared()) * (1.0 + 0.5 * s as f64)
    });
    let gamma = apply_gamma(&setup, &f, &f)?;
    let basis = build_basis(&setup, BasisNormalization::Grid)?;
    let grid = setup.grid();
    let mut out: Vec<(String, f64)> = basis
        .chis()
        .iter()
        .enumerate()
        .map(|(i, chi)| {
            (
                format!("<Gamma(f, f), chi_{}>", i + 1),
                gamma.inner(chi, grid).abs() / (gamma.norm(grid) * chi.norm(grid)),
            )
        })
        .collect();
    let mut big = f.clone();
    for s in 0..2 {
        let sq = setup.sqrt_j_nodes(s).to_vec();
        big.species_mut(s).iter_mut().zip(sq).for_each(|(a, b)| *a *= b);
    }
    let rep = conservation_report(&setup, &collision_integral(&setup, &big, &big)?);
    out.push(("int C dp (plus)".into(), rep.mass[0]));
    out.push(("int C dp (minus)".into(), rep.mass[1]));
    for (i, v) in rep.momentum.iter().enumerate() {
        out.push((format!("int p_{} C dp", i + 1), *v));
    }
    out.push(("int p0 C dp".into(), rep.energy));
    Ok(out)
}

/// Below this a residual is rounding noise and refinement cannot halve it.
pub const ROUNDING_LEVEL: f64 = 1e-12;

pub fn collision(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let (n, m) = (cfg.collision.n_per_axis, cfg.collision.refined_n_per_axis);
    let coarse = collision_residuals(cfg, n)?;
    let fine = collision_residuals(cfg, m)?;
    let mut o = Outcome::default();
    for ((name, c), (_, f)) in coarse.iter().zip(&fine) {
        o.check(Check::below(
            format!("{name} relative at {n}^3"),
            *c,
            cfg.tolerances.collision_conservation,
        ));
        if *c < ROUNDING_LEVEL {
            o.check(Check::below(
                format!("{name} relative at {m}^3 (rounding level)"),
                *f,
                ROUNDING_LEVEL,
            ));
        } else {
            o.check(Check::below(format!("{name} ratio {m}^3 / {n}^3"), f / c, 0.5));
        }
        o.note(format!("{name} relative at {m}^3"), *f);
    }
    Ok(o)
}

pub fn relaxation(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances.clone();
    let mut o = Outcome::default();
    for (label, base) in [("random", &cfg.relax.random), ("smooth", &cfg.relax.smooth)] {
        let mut rc = base.clone();
        if let InitialRecipe::RandomMicroscopic { seed } = rc.initial {
            rc.initial = InitialRecipe::RandomMicroscopic {
                seed: stream_seed(cfg.seed, "relax/random") ^ seed,
            };
        }
        let csv = ctx.out(&format!("relaxation-{label}.csv"));
        let pre = ctx.prepared(rc.n_per_axis, rc.p_max)?;
        let run = run_relaxation(&pre.op, Some(&pre.eigen), &rc)?;
        write_relaxation_csv(&csv, &run)?;
        o.check(Check::new(
            format!("I_parallel non-increasing, violations ({label})"),
            run.monotone_violations as f64,
            Relation::Equals,
            0.0,
        ));
        if label == "random" {
            o.check(Check::below(
                "max |m(t) - m(0)| / (t ||f0||) (random)",
                run.moment_drift_rate,
                tol.null,
            ));
            o.check(Check::below(
                "|fitted rate - delta_hat| / delta_hat (random)",
                (run.fit.rate - pre.delta_hat).abs() / pre.delta_hat,
                tol.decay_rate,
            ));
            o.note("fitted decay rate", run.fit.rate);
            o.note("delta_hat", pre.delta_hat);
        } else if let Some(closure) = run.energy_closure {
            o.check(Check::below(
                format!("energy identity closure ({label})"),
                closure,
                tol.energy_closure,
            ));
        }
    }
    Ok(o)
}

pub fn billiard(ctx: &mut Context, kind: DomainKind) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let b = &cfg.billiard;
    let (domain, label) = match kind {
        DomainKind::Disk => (Domain::Disk { radius: b.radius }, "disk"),
        DomainKind::Ball => (Domain::Ball { radius: b.radius }, "ball"),
    };
    let particles = random_particles(
        &domain,
        b.particles,
        b.p_scale,
        stream_seed(cfg.seed, &format!("billiard/{label}")),
    );
    let report = run_billiard(&BilliardConfig {
        domain,
        particles,
        t_end: f64::MAX,
        max_reflections: b.reflections,
    })?;
    write_json(&ctx.out(&format!("billiard-{label}.json")), &report)?;
    let mut o = Outcome::default();
    o.check(Check::below(
        format!("max | |p| - |p0| | / |p0| ({label})"),
        report.max_dp_norm,
        tol.billiard_momentum,
    ));
    o.check(Check::below(
        format!("max |L_axis - L_axis(0)| ({label})"),
        report.max_dl_axial,
        tol.billiard_angular,
    ));
    if kind == DomainKind::Ball {
        o.check(Check::below(
            "max |L - L(0)| all components (ball)",
            report.max_dl,
            tol.billiard_angular,
        ));
    }
    o.check(Check::below(
        format!("max reversal error ({label})"),
        report.max_reversal_error,
        tol.billiard_reversal,
    ));
    o.note("max |R(R p) - p|", report.max_involution_error);
    o.note("reflections", report.total_reflections as f64);
    Ok(o)
}

pub fn cavity(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let r = run_cavity(&cfg.cavity)?;
    write_diagnostics_csv(&ctx.out("cavity-diagnostics.csv"), &r.series)?;
    let mut o = Outcome::default();
    o.check(Check::holds(
        "PEC entries exactly zero after every step",
        r.pec_every_step,
    ));
    o.check(Check::below("max |div B| over all steps", r.max_div_b, tol.div_b));
    o.check(Check::below(
        format!("discrete energy drift over {} steps", r.steps),
        r.energy_drift,
        tol.field_energy_drift,
    ));
    o.check(Check::below(
        "Gauss defect drift with continuity",
        r.gauss_drift,
        tol.gauss_drift,
    ));
    o.check(Check::above(
        "Gauss defect drift with frozen charge",
        r.frozen_gauss_drift,
        tol.gauss_drift,
    ));
    o.check(Check::new(
        "momentum identity observed order",
        r.momentum_order,
        Relation::AtLeast,
        tol.momentum_order,
    ));
    let a = &r.angular_mismatch;
    o.check(Check::below(
        "angular momentum mismatch ratio fine / coarse",
        a[a.len() - 1].value / a[a.len() - 2].value,
        1.0,
    ));
    for l in &r.momentum_residuals {
        o.note(format!("momentum residual at {}", l.cells), l.value);
    }
    for l in a {
        o.note(format!("angular mismatch at {}", l.cells), l.value);
    }
    for l in &r.mode_errors {
        o.note(format!("mode error at {}", l.cells), l.value);
    }
    o.note("mode convergence order", r.mode_order);
    Ok(o)
}

/// Momenta where the two sides of the divergence identity are compared.
pub fn identity_samples() -> [Vec3; 4] {
    [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(0.6, 0.0, 0.0),
        Vec3::new(0.3, -0.6, 0.4),
        Vec3::new(-0.8, 0.5, 0.2),
    ]
}

pub fn divergence(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = &cfg.identity;
    let g = PolyBump {
        centre: Vec3::new(0.2, -0.1, 0.1),
        radius: p.bump_radius,
    };
    let samples = identity_samples();
    let coarse = divergence_identity(p.n_per_axis, p.p_max, &samples, &g, IdentityVariant::AsStated)?;
    let fine = divergence_identity(p.refined_n_per_axis, p.p_max, &samples, &g, IdentityVariant::AsStated)?;
    let (n, m) = (p.n_per_axis, p.refined_n_per_axis);
    let mut o = Outcome::default();
    o.check(Check::below(
        format!("divergence identity mismatch at {n}^3"),
        coarse.max_relative(),
        cfg.tolerances.divergence_identity,
    ));
    o.check(Check::below(
        format!("divergence identity mismatch ratio {m}^3 / {n}^3"),
        fine.max_relative() / coarse.max_relative(),
        1.0,
    ));
    o.note(format!("mismatch at {m}^3"), fine.max_relative());
    let rescaled = divergence_identity(n, p.p_max, &samples, &g, IdentityVariant::RescaledKappa)?;
    o.note(
        format!("mismatch at {n}^3 with kappa / 2^(3/2)"),
        rescaled.max_relative(),
    );
    Ok(o)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
