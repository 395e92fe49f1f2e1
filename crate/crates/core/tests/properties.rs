//! Property tests on the building blocks that every scenario relies on.

use proptest::prelude::*;
use rvml::equilibria::{Sign, SpeciesParams};
use rvml::harness::{stream_seed, Check, Relation, RunConfig};
use rvml::kernel::{Kernel, KernelParams};
use rvml::scenarios::{observed_order, reflect, velocity, Domain, Level};
use rvml::Vec3;

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-scale..scale).prop_map(Vec3::from)
}

fn unit_kernel() -> (SpeciesParams, Kernel) {
    let sp = SpeciesParams::unit(Sign::Plus);
    (sp, Kernel::new(&sp, &sp, &KernelParams::default()))
}

proptest! {
    #[test]
    fn reflection_preserves_length_and_is_an_involution(p in vec3(10.0), n in vec3(2.0)) {
        prop_assume!(n.norm() > 1e-3);
        let r = reflect(&p, &n);
        prop_assert!((r.norm() - p.norm()).abs() <= 1e-14 * (1.0 + p.norm()));
        prop_assert!((reflect(&r, &n) - p).norm() <= 1e-13 * (1.0 + p.norm()));
        // Only the normal component flips.
        prop_assert!((r.dot(&n) + p.dot(&n)).abs() <= 1e-13 * (1.0 + p.norm()) * n.norm());
    }

    #[test]
    fn disk_reflection_keeps_axial_angular_momentum(theta in 0.0..std::f64::consts::TAU, z in -3.0..3.0f64, p in vec3(5.0)) {
        let d = Domain::Disk { radius: 1.0 };
        let x = Vec3::new(theta.cos(), theta.sin(), z);
        let r = reflect(&p, &d.normal(&x));
        prop_assert!((x.cross(&r).z - x.cross(&p).z).abs() <= 1e-13 * (1.0 + p.norm()));
        prop_assert_eq!(r.z, p.z);
    }

    #[test]
    fn flights_end_on_the_wall(x in vec3(0.55), p in vec3(4.0), ball in any::<bool>()) {
        let d = if ball { Domain::Ball { radius: 1.0 } } else { Domain::Disk { radius: 1.0 } };
        let v = velocity(&p);
        prop_assert!(v.norm() < 1.0);
        if let Some(t) = d.time_to_wall(&x, &v) {
            let hit = x + v * t;
            prop_assert!((d.normal(&hit).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_is_symmetric_semidefinite_with_relative_velocity_null_vector(p in vec3(6.0), q in vec3(6.0)) {
        prop_assume!((p - q).norm() > 1e-3);
        let (sp, k) = unit_kernel();
        let phi = k.phi(&p, &q).unwrap();
        prop_assert!((phi - phi.transpose()).norm() <= 1e-14 * phi.norm());
        let eig = phi.symmetric_eigenvalues();
        prop_assert!(eig.min() >= -1e-12 * phi.norm());
        let w = p / sp.p0(&p) - q / sp.p0(&q);
        prop_assert!((phi * w).norm() <= 1e-12 * phi.norm() * w.norm());
        // Equal species: exchanging the arguments leaves the kernel unchanged.
        let swapped = k.phi(&q, &p).unwrap();
        prop_assert!((swapped - phi).norm() <= 1e-12 * phi.norm());
    }

    #[test]
    fn check_relations_agree_with_comparisons(v in -1e3..1e3f64, t in -1e3..1e3f64) {
        prop_assert_eq!(Check::new("x", v, Relation::Below, t).pass, v < t);
        prop_assert_eq!(Check::new("x", v, Relation::AtMost, t).pass, v <= t);
        prop_assert_eq!(Check::new("x", v, Relation::Above, t).pass, v > t);
        prop_assert_eq!(Check::new("x", v, Relation::AtLeast, t).pass, v >= t);
        prop_assert!(!Check::new("x", f64::NAN, Relation::AtLeast, t).pass);
    }

    #[test]
    fn observed_order_recovers_power_laws(order in 0.5..4.0f64, c in 1e-6..1e3f64, n in 4usize..64) {
        let level = |m: usize| Level { cells: m, value: c * (m as f64).powf(-order) };
        let got = observed_order(&[level(n), level(2 * n)]);
        prop_assert!((got - order).abs() < 1e-10);
    }

    #[test]
    fn named_streams_are_reproducible(seed in any::<u64>(), label in "[a-z/]{1,12}") {
        prop_assert_eq!(stream_seed(seed, &label), stream_seed(seed, &label));
        prop_assert_ne!(stream_seed(seed, &label), stream_seed(seed, &format!("{label}!")));
    }

    #[test]
    fn config_round_trips_with_arbitrary_positive_tolerances(div_b in 1e-16..1.0f64, seed in any::<u64>(), threads in 0usize..64) {
        let mut cfg = RunConfig::default();
        cfg.tolerances.div_b = div_b;
        cfg.seed = seed;
        cfg.threads = threads;
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
