use proptest::prelude::*;
use tracethresh::bp_sim::{estimate_extinction, estimate_ru, sample_r, sample_r_set, BpConfig};
use tracethresh::rng::replicate_rng;
use tracethresh::{DelayCoupling, DistributionSpec, ModelParams};

fn untraced(lambda: f64, infectious: DistributionSpec) -> ModelParams {
    ModelParams {
        contact_rate: lambda,
        naming_prob: 0.0,
        infectious,
        ..Default::default()
    }
}

#[test]
fn geometric_offspring_without_tracing() {
    // Poisson offspring over an Exp(1) lifetime is geometric: extinction 1/lambda.
    let p = untraced(2.0, DistributionSpec::exponential(1.0));
    let e = estimate_extinction(&p, &BpConfig::untruncated(), 100_000, 5).unwrap();
    assert!((e.p_ext - 0.5).abs() < 4.0 * e.se, "{e:?}");
    let m = estimate_ru(&p, 100_000, 6).unwrap();
    assert!((m.mean - 2.0).abs() < 4.0 * m.se, "{m:?}");
}

#[test]
fn poisson_offspring_without_tracing() {
    let p = untraced(1.8, DistributionSpec::constant(1.0));
    let mut q = 0.0_f64;
    for _ in 0..10_000 {
        q = (-1.8 * (1.0 - q)).exp();
    }
    let e = estimate_extinction(&p, &BpConfig::default(), 100_000, 7).unwrap();
    assert!((e.p_ext - q).abs() < 4.0 * e.se, "{e:?} vs {q}");
}

#[test]
fn several_initial_cases_multiply() {
    let p = ModelParams {
        initial_infectives: 3,
        ..ModelParams::default()
    };
    let one = ModelParams {
        initial_infectives: 1,
        ..p
    };
    let e3 = estimate_extinction(&p, &BpConfig::default(), 20_000, 8).unwrap();
    let e1 = estimate_extinction(&one, &BpConfig::default(), 20_000, 8).unwrap();
    assert!((e3.p_ext - e1.p_ext.powi(3)).abs() < 1e-12);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = ModelParams::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_r_set(&p, &BpConfig::default(), 5_000, 99).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn shared_delays_keep_the_mean() {
    let base = ModelParams {
        contact_rate: 1.5,
        naming_prob: 1.0,
        latent: DistributionSpec::exponential(1.0),
        delay: DistributionSpec::exponential_mean(1.5),
        ..Default::default()
    };
    let mutual = ModelParams {
        delay_coupling: DelayCoupling::Mutual,
        ..base
    };
    let a = estimate_ru(&base, 200_000, 10).unwrap();
    let b = estimate_ru(&mutual, 200_000, 11).unwrap();
    let se = (a.se * a.se + b.se * b.se).sqrt();
    assert!((a.mean - b.mean).abs() < 4.0 * se, "{a:?} {b:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_only_cuts_large_clusters(seed in any::<u64>(), threshold in 1u64..60) {
        let p = ModelParams { contact_rate: 2.5, ..ModelParams::default() };
        let cut = BpConfig { inf_threshold: Some(threshold), ..BpConfig::default() };
        for i in 0..50 {
            let full = sample_r(&p, &BpConfig::untruncated(), &mut replicate_rng(seed, i));
            let trunc = sample_r(&p, &cut, &mut replicate_rng(seed, i));
            match trunc {
                Some(r) => prop_assert_eq!(full, Some(r)),
                None => prop_assert!(full.is_none_or(|r| r >= threshold)),
            }
        }
    }

    #[test]
    fn no_contacts_no_offspring(seed in any::<u64>()) {
        let p = ModelParams { contact_rate: 0.0, ..ModelParams::default() };
        let set = sample_r_set(&p, &BpConfig::default(), 100, seed).unwrap();
        prop_assert!(set.samples.iter().all(|s| *s == Some(0)));
        prop_assert_eq!(set.extinction(1).unwrap().p_ext, 1.0);
    }
}
