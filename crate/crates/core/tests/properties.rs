use proptest::prelude::*;

use scanmix::couplings::{disagreement_count, rematched_monotone_step, CoupledPair, CouplingRule};
use scanmix::estimators::{fit_power_law, sample_mag_chain};
use scanmix::harness::{read_csv, write_csv, ResultRecord, Scenario};
use scanmix::kernels::{build_kernel, evolve, export_kernel, import_kernel, stationary_magnetization, tv_distance, Distribution};
use scanmix::{Mode, ModelParams, RngStream, SpinConfig};

fn params() -> impl Strategy<Value = ModelParams> {
    (2usize..40, 1usize..6, 0.0f64..2.5, prop::bool::ANY).prop_map(|(n, k, beta, restricted)| {
        let mode = if restricted { Mode::Restricted } else { Mode::Standard };
        ModelParams::new(n, k.min(n), beta, mode).unwrap()
    })
}

fn distribution(len: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero mass", |w| Distribution::normalized(w).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_rows_are_stochastic_and_banded(p in params()) {
        let kernel = build_kernel(&p).unwrap();
        let n = p.n();
        for m in kernel.first_state()..=n {
            prop_assert!((kernel.row_sum(m) - 1.0).abs() < 1e-12);
            for j in 0..=n {
                let e = kernel.entry(m, j);
                prop_assert!(e >= 0.0);
                if m.abs_diff(j) > p.k() && p.mode() == Mode::Standard {
                    prop_assert_eq!(e, 0.0);
                }
            }
        }
    }

    #[test]
    fn standard_kernel_and_law_are_flip_symmetric(n in 2usize..40, k in 1usize..6, beta in 0.0f64..2.5) {
        let p = ModelParams::standard(n, k.min(n), beta).unwrap();
        let kernel = build_kernel(&p).unwrap();
        let mu = stationary_magnetization(&p);
        for m in 0..=n {
            prop_assert!((mu.weights()[m] - mu.weights()[n - m]).abs() < 1e-14);
            for j in 0..=n {
                prop_assert!((kernel.entry(m, j) - kernel.entry(n - m, n - j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn evolve_preserves_mass(p in params(), t in 0u64..50) {
        let n = p.n();
        let kernel = build_kernel(&p).unwrap();
        let d = evolve(&Distribution::point_mass(n + 1, n), &kernel, t).unwrap();
        prop_assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_is_a_metric(a in distribution(6), b in distribution(6), c in distribution(6)) {
        let ab = tv_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&ab));
        prop_assert_eq!(ab, tv_distance(&b, &a).unwrap());
        prop_assert!(ab <= tv_distance(&a, &c).unwrap() + tv_distance(&c, &b).unwrap() + 1e-15);
        prop_assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn kernel_text_round_trip(p in params()) {
        let kernel = build_kernel(&p).unwrap();
        prop_assert_eq!(import_kernel(&export_kernel(&kernel)).unwrap(), kernel);
    }

    #[test]
    fn restricted_fast_path_never_negative(n in 2usize..60, k in 1usize..5, beta in 0.0f64..3.0, seed in any::<u64>(), t in 0u64..200) {
        let p = ModelParams::restricted(n, k.min(n), beta).unwrap();
        let m = sample_mag_chain(&p, n, t, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert!(2 * m >= n && m <= n);
    }

    #[test]
    fn rematched_disagreements_never_grow(n in 4usize..50, k in 1usize..5, beta in 0.0f64..2.0, seed in any::<u64>()) {
        let p = ModelParams::standard(n, k.min(n), beta).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let x = SpinConfig::random(n, &mut rng);
        let mut spins = x.spins().to_vec();
        spins.reverse();
        let mut pair = CoupledPair::new(x, SpinConfig::from_spins(spins).unwrap(), CouplingRule::RematchedMonotone).unwrap();
        let mut d = disagreement_count(&pair);
        for _ in 0..50 {
            let (next, stats) = rematched_monotone_step(&p, &pair, &mut rng).unwrap();
            prop_assert_eq!(stats.mag_gap, 0.0);
            let d_next = disagreement_count(&next);
            prop_assert!(d_next <= d);
            d = d_next;
            pair = next;
        }
    }

    #[test]
    fn power_law_recovers_exponents(e in -3.0f64..3.0, a in 0.1f64..10.0) {
        let xs = [2.0, 3.0, 5.0, 8.0, 13.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| a * x.powf(e)).collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((fit.exponent - e).abs() < 1e-9);
        prop_assert!((fit.intercept - a.ln()).abs() < 1e-9);
    }

    #[test]
    fn csv_records_round_trip(value in any::<f64>().prop_filter("finite", |v| v.is_finite()), se in 0.0f64..1.0, t in any::<u32>(), seed in any::<u64>()) {
        let rec = ResultRecord {
            scenario: Scenario::CutoffProfile,
            n: 100,
            k: 3,
            beta: 0.1,
            mode: Mode::Standard,
            t: t as u64,
            kind: "tv_lower_bound".into(),
            value,
            std_error: se,
            replicas: 10,
            seed,
            wall_time_ms: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(std::slice::from_ref(&rec), &path).unwrap();
        prop_assert_eq!(read_csv(&path).unwrap(), vec![rec]);
    }
}
