//! The twelve acceptance criteria, each at its stated tolerance. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! Criteria 1 to 5 are recomputed here from library calls and independent
//! oracles. Criteria 6 to 11 read the report of a full `all` run, after
//! checking that the thresholds the run used are the required ones. Criterion
//! 12 repeats the run with another thread budget and compares every output
//! byte for byte.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvml::equilibria::{bessel_k2, check_neutrality, Juttner};
use rvml::harness::{run, Command, Relation, RunConfig, RunReport, Section};
use rvml::kernel::{s_matrix, Kernel};
use rvml::momentfn::{check_bij, det_mismatch, determinant_probes, i_tables, solve_k, MomentProfile};
use rvml::{Mat3, Vec3};

/// What a criterion found: a verdict line and, on failure, the reasons.
struct Verdict {
    failures: Vec<String>,
    summary: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn below(&mut self, what: &str, value: f64, limit: f64) {
        self.summary.push(format!("{what} {value:.2e}"));
        if !(value < limit) {
            self.failures.push(format!("{what} = {value:.3e}, need < {limit:.1e}"));
        }
    }

    fn require(&mut self, what: &str, ok: bool) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn runtime(&mut self, seconds: f64, limit: f64) {
        self.summary.push(format!("{seconds:.2} s"));
        if !(seconds < limit) {
            self.failures.push(format!("runtime {seconds:.1} s, need < {limit} s"));
        }
    }

    /// Every check of the section passed.
    fn section_passes(&mut self, s: &Section) {
        for c in s.checks.iter().filter(|c| !c.pass) {
            self.failures.push(format!(
                "[{}] {} = {:.3e} against {:.3e}",
                s.name, c.name, c.value, c.threshold
            ));
        }
    }

    /// The check exists and used the required threshold and relation. Whether it
    /// passed is covered by `section_passes`.
    fn uses(&mut self, s: &Section, name_prefix: &str, relation: Relation, threshold: f64) {
        let found: Vec<_> = s.checks.iter().filter(|c| c.name.starts_with(name_prefix)).collect();
        if found.is_empty() {
            self.failures
                .push(format!("[{}] no check named `{name_prefix}...`", s.name));
        }
        for c in found {
            if c.relation != relation || c.threshold != threshold {
                self.failures.push(format!(
                    "[{}] {} uses {:?} {:e}, required {:?} {:e}",
                    s.name, c.name, c.relation, c.threshold, relation, threshold
                ));
            }
        }
    }
}

fn c1_moment_integers() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let tables = i_tables(1e-10).expect("moment tables");
    let seconds = t.elapsed().as_secs_f64();
    let expected: [u128; 6] = [3, 15, 105, 945, 10395, 135135];
    v.require("m_2..m_7 bit-exact", tables.m[2..=7] == expected);
    v.summary.push("m_2..m_7 exact".into());
    let combos: Vec<(i64, i64)> = tables.i[2..=6].iter().map(|c| (c.on_i0, c.on_i1)).collect();
    v.require("i_2 = i_0 + 3 i_1", combos[0] == (1, 3));
    v.require("i_6 = 4705 i_0 + 16614 i_1", combos[4] == (4705, 16614));
    let worst = (2..=6)
        .map(|j| ((tables.i_value(j) - tables.i_direct[j].value) / tables.i_direct[j].value).abs())
        .fold(0.0, f64::max);
    v.below("i-table vs quadrature", worst, 1e-7);
    v.runtime(seconds, 1.0);
    v
}

fn c2_determinant() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let tables = i_tables(1e-10).expect("moment tables");
    let coeffs = solve_k(&tables).expect("solve");
    let (i0, i1) = (tables.i0.value, tables.i1.value);
    let closed = 14_364_000.0 * i0 - 15_649_200.0 * i1;
    v.below(
        "det mismatch at quadrature (i0, i1)",
        det_mismatch(&tables, i0, i1),
        1e-9,
    );
    v.below("closed form as stated", ((coeffs.det_c - closed) / closed).abs(), 1e-9);
    let probes = determinant_probes(20240917);
    v.require("two probe pairs", probes.len() >= 2);
    let worst = probes
        .iter()
        .map(|(a, b)| det_mismatch(&tables, *a, *b))
        .fold(0.0, f64::max);
    v.below("det mismatch at probes", worst, 1e-9);
    v.require("det C < 0", coeffs.det_c < 0.0 && closed < 0.0);
    v.require("i_1 > i_0", i1 > i0);
    v.runtime(t.elapsed().as_secs_f64(), 1.0);
    v
}

fn c3_moment_functions() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let coeffs = solve_k(&i_tables(1e-10).expect("tables")).expect("solve");
    let checks = check_bij(&MomentProfile::new(coeffs.k).expect("profile"), 1e-10, 1e-6).expect("check");
    let worst = checks.residuals.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    v.below("worst residual", worst, 1e-6);
    let lambda_err = checks
        .lambda
        .iter()
        .zip([0.5, 1.5, 0.5])
        .map(|(l, e)| (l - e).abs())
        .fold(0.0, f64::max);
    v.below("lambda error", lambda_err, 1e-6);
    v.runtime(t.elapsed().as_secs_f64(), 30.0);
    v
}

/// Power series of K_2, valid well past s = 5 in double precision.
fn k2_series(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let y = x * x / 4.0;
    let half = x / 2.0;
    let (mut i2, mut rest) = (0.0, 0.0);
    let mut term = half * half / 2.0;
    let (mut hk, mut hk2) = (0.0, 1.5);
    for k in 0..80 {
        if k > 0 {
            term *= y / (k as f64 * (k as f64 + 2.0));
            hk += 1.0 / k as f64;
            hk2 += 1.0 / (k as f64 + 2.0);
        }
        i2 += term;
        rest += (-2.0 * EULER_GAMMA + hk + hk2) * term;
    }
    2.0 / (x * x) - 0.5 - half.ln() * i2 + 0.5 * rest
}

fn c4_juttner() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let cfg = RunConfig::default();
    let mut worst_norm: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    for sp in cfg.species.species() {
        let j = Juttner::new(sp).expect("juttner");
        let m = j.radial_moment(|_| 1.0, 0, 1e-12).expect("mass").value;
        worst_norm = worst_norm.max((sp.charge * m - 1.0).abs());
        let second = j
            .radial_moment(|r| r * r / (3.0 * sp.p0_radial(r)), 1, 1e-12)
            .expect("moment")
            .value;
        worst_second = worst_second.max(((second - sp.k_b_t * m) / (sp.k_b_t * m)).abs());
    }
    v.below("normalisation", worst_norm, 1e-6);
    v.below("second moment", worst_second, 1e-6);
    v.below(
        "neutrality",
        check_neutrality(&cfg.species, 1e-8).expect("neutrality"),
        1e-8,
    );
    let worst_k2 = [0.5, 1.0, 2.0, 5.0]
        .into_iter()
        .map(|s| {
            let oracle = k2_series(s);
            ((bessel_k2(s, 1e-12).expect("k2") - oracle) / oracle).abs()
        })
        .fold(0.0, f64::max);
    v.below("K2 vs series oracle", worst_k2, 1e-8);
    v.runtime(t.elapsed().as_secs_f64(), 5.0);
    v
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    // Gram-Schmidt on a random frame, fixed to determinant +1.
    let a = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0)).normalize();
    let b = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let b = (b - a * a.dot(&b)).normalize();
    Mat3::from_columns(&[a, b, a.cross(&b)])
}

fn c5_kernel() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let cfg = RunConfig::default();
    let (plus, minus) = (cfg.species.plus, cfg.species.minus);
    let k = Kernel::new(&plus, &minus, &cfg.kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draw = |r: &mut ChaCha8Rng| Vec3::from_fn(|_, _| r.gen_range(-5.0..5.0));
    let (mut null, mut rot, mut diag): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let (p, q) = (draw(&mut rng), draw(&mut rng));
        let phi = k.phi(&p, &q).expect("phi");
        let w = p / plus.p0(&p) - q / minus.p0(&q);
        null = null.max((phi * w).norm() / (phi.norm() * w.norm()));
        let r = random_rotation(&mut rng);
        let phi_r = k.phi(&(r * p), &(r * q)).expect("phi");
        rot = rot.max((phi_r - r * phi * r.transpose()).norm() / phi.norm());
        diag = diag.max(s_matrix(&p, &p, 1.0, 1.0).abs().max());
    }
    v.summary.push(format!("S(P,P) {diag:.1e}"));
    v.require("S(P, P) = 0 to rounding", diag <= 8.0 * f64::EPSILON);
    v.below("null-vector residual", null, 1e-12);
    v.below("rotation covariance", rot, 1e-12);
    v.runtime(t.elapsed().as_secs_f64(), 5.0);
    v
}

fn section<'a>(v: &mut Verdict, r: &'a RunReport, name: &str) -> Option<&'a Section> {
    let s = r.section(name);
    v.require(&format!("report has section `{name}`"), s.is_some());
    s
}

fn c6_operator(r: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    if let Some(s) = section(&mut v, r, "operator") {
        v.section_passes(s);
        v.uses(s, "||L - L^T||_F / ||L||_F at 12^3", Relation::Below, 1e-10);
        v.uses(s, "||L chi_", Relation::Below, 5e-2);
        v.uses(s, "worst ||L chi_i|| ratio 16^3 / 12^3", Relation::Below, 1.0);
        v.uses(s, "near-zero eigenvalues at 12^3", Relation::Equals, 6.0);
        v.uses(s, "delta_hat at 12^3", Relation::Above, 0.0);
        v.uses(
            s,
            "|delta_hat(16) - delta_hat(12)| / delta_hat(12)",
            Relation::Below,
            0.25,
        );
        v.require(
            "near-zero cut is 1e-3 ||L||",
            r.config.tolerances.spectral_count == 1e-3,
        );
        if let Some(c) = s.checks.iter().find(|c| c.name.starts_with("|delta_hat(16)")) {
            v.summary.push(format!("gap change {:.3}", c.value));
        }
        v.runtime(s.wall_seconds, 600.0);
    }
    v
}

fn c7_collision(r: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    if let Some(s) = section(&mut v, r, "collision") {
        v.section_passes(s);
        // Six projections of Gamma, two masses, three momenta and the energy.
        let coarse: Vec<_> = s
            .checks
            .iter()
            .filter(|c| c.name.ends_with("relative at 12^3"))
            .collect();
        v.require("twelve residuals at 12^3", coarse.len() == 12);
        for c in coarse {
            v.require(
                &format!("{} uses < 5e-2", c.name),
                c.threshold == 5e-2 && c.relation == Relation::Below,
            );
        }
        for prefix in [
            "<Gamma(f, f), chi_6>",
            "int C dp (plus)",
            "int C dp (minus)",
            "int p_3 C dp",
            "int p0 C dp",
        ] {
            v.require(
                &format!("`{prefix}` checked at 12^3"),
                s.checks
                    .iter()
                    .any(|c| c.name.starts_with(prefix) && c.name.ends_with("12^3")),
            );
        }
        let halving = s.checks.iter().filter(|c| c.name.contains("ratio")).count();
        let rounding = s.checks.iter().filter(|c| c.name.contains("rounding level")).count();
        v.require("every residual refined", halving + rounding == 12);
        for c in s.checks.iter().filter(|c| c.name.contains("ratio")) {
            v.require(
                &format!("{} uses ratio < 0.5", c.name),
                c.threshold == 0.5 && c.relation == Relation::Below,
            );
        }
        v.summary.push(format!("{halving} halved, {rounding} at rounding"));
        v.runtime(s.wall_seconds, 300.0);
    }
    v
}

fn c8_relaxation(r: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    if let Some(s) = section(&mut v, r, "relaxation") {
        v.section_passes(s);
        v.uses(s, "max |m(t) - m(0)| / (t ||f0||)", Relation::Below, 5e-2);
        v.uses(s, "|fitted rate - delta_hat| / delta_hat", Relation::Below, 0.05);
        v.uses(s, "I_parallel non-increasing", Relation::Equals, 0.0);
        if let Some(c) = s.checks.iter().find(|c| c.name.starts_with("|fitted rate")) {
            v.summary.push(format!("rate error {:.3}", c.value));
        }
        v.runtime(s.wall_seconds, 300.0);
    }
    v
}

fn c9_billiards(r: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    v.require(
        "1000 particles, 10^4 reflections",
        r.config.billiard.particles == 1000 && r.config.billiard.reflections == 10_000,
    );
    for name in ["billiard-disk", "billiard-ball"] {
        if let Some(s) = section(&mut v, r, name) {
            v.section_passes(s);
            v.uses(s, "max | |p| - |p0| | / |p0|", Relation::Below, 1e-12);
            v.uses(s, "max |L_axis - L_axis(0)|", Relation::Below, 1e-10);
            v.uses(s, "max reversal error", Relation::Below, 1e-9);
            v.runtime(s.wall_seconds, 30.0);
        }
    }
    v
}

fn c10_cavity(r: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    v.require(
        "32^3 cells and 10^4 steps",
        r.config.cavity.cells == 32 && r.config.cavity.steps == 10_000,
    );
    if let Some(s) = section(&mut v, r, "cavity") {
        v.section_passes(s);
        v.uses(s, "PEC entries exactly zero", Relation::Equals, 1.0);
        v.uses(s, "max |div B|", Relation::Below, 1e-12);
        v.uses(s, "discrete energy drift", Relation::Below, 1e-10);
        v.uses(s, "Gauss defect drift with continuity", Relation::Below, 1e-12);
        v.uses(s, "momentum identity observed order", Relation::AtLeast, 1.0);
        v.uses(s, "angular momentum mismatch ratio", Relation::Below, 1.0);
        if let Some(c) = s.checks.iter().find(|c| c.name.starts_with("momentum identity")) {
            v.summary.push(format!("momentum order {:.2}", c.value));
        }
        v.runtime(s.wall_seconds, 300.0);
    }
    v
}

fn c11_divergence_identity(r: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    if let Some(s) = section(&mut v, r, "divergence-identity") {
        v.section_passes(s);
        v.uses(s, "divergence identity mismatch at 16^3", Relation::Below, 0.1);
        v.uses(s, "divergence identity mismatch ratio", Relation::Below, 1.0);
        if let Some(c) = s
            .checks
            .iter()
            .find(|c| c.name.starts_with("divergence identity mismatch at"))
        {
            v.summary.push(format!("mismatch {:.3}", c.value));
        }
        v.runtime(s.wall_seconds, 120.0);
    }
    v
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("read"),
            )
        })
        .collect()
}

/// The report with the fields that legitimately differ between the runs
/// (timings and the thread budget) cleared.
fn comparable(r: &RunReport) -> String {
    let mut r = r.without_timings();
    r.config.threads = 0;
    serde_json::to_string_pretty(&r).expect("serialise")
}

fn c12_determinism(first: &RunReport, first_files: &BTreeMap<String, Vec<u8>>, dir: &Path) -> Verdict {
    let mut v = Verdict::new();
    let mut cfg = first.config.clone();
    cfg.threads = 2;
    let t = Instant::now();
    let second = run(Command::All, &cfg);
    let seconds = t.elapsed().as_secs_f64();
    let second = match second {
        Ok(r) => r,
        Err(e) => {
            v.failures.push(format!("second run failed: {e}"));
            return v;
        }
    };
    let second_files = snapshot(dir);
    v.require("reports agree", comparable(first) == comparable(&second));
    v.require(
        "same output files",
        first_files.keys().collect::<Vec<_>>() == second_files.keys().collect::<Vec<_>>(),
    );
    for (name, bytes) in first_files {
        if name.starts_with("report-") {
            continue;
        }
        v.require(&format!("{name} byte-identical"), second_files.get(name) == Some(bytes));
    }
    v.summary.push(format!(
        "threads 1 vs 2, {} files, second run {seconds:.0} s",
        first_files.len()
    ));
    v
}

fn report(n: usize, title: &str, v: &Verdict) -> bool {
    let ok = v.failures.is_empty();
    println!(
        "criterion {n:>2} {} {title}: {}",
        if ok { "PASS" } else { "FAIL" },
        v.summary.join(", ")
    );
    for f in &v.failures {
        println!("              {f}");
    }
    ok
}

fn main() {
    // Answer libtest's discovery protocol so `cargo test -- --list` stays cheap.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut passed = vec![
        report(1, "moment integers and i-tables", &c1_moment_integers()),
        report(2, "determinant of C", &c2_determinant()),
        report(3, "moment-function orthogonality", &c3_moment_functions()),
        report(4, "Juttner constants and K2", &c4_juttner()),
        report(5, "kernel algebra", &c5_kernel()),
    ];

    let out = tempfile::tempdir().expect("tempdir");
    let cfg = RunConfig {
        out_dir: out.path().to_path_buf(),
        threads: 1,
        ..Default::default()
    };
    let t = Instant::now();
    match run(Command::All, &cfg) {
        Ok(r) => {
            println!("full run with 1 thread: {:.0} s", t.elapsed().as_secs_f64());
            let files = snapshot(out.path());
            passed.push(report(6, "operator structure", &c6_operator(&r)));
            passed.push(report(7, "collision conservation", &c7_collision(&r)));
            passed.push(report(8, "relaxation", &c8_relaxation(&r)));
            passed.push(report(9, "billiards", &c9_billiards(&r)));
            passed.push(report(10, "cavity", &c10_cavity(&r)));
            passed.push(report(11, "divergence identity", &c11_divergence_identity(&r)));
            passed.push(report(12, "determinism", &c12_determinism(&r, &files, out.path())));
        }
        Err(e) => {
            println!("full run failed: {e}");
            for n in 6..=12 {
                println!("criterion {n:>2} FAIL: no report");
                passed.push(false);
            }
        }
    }
    let failed = passed.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", passed.len() - failed, passed.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
