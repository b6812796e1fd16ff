use proptest::prelude::*;
use tracethresh::bp_sim::estimate_ru;
use tracethresh::exp_analysis::{
    analyze_exp, lambda_crit, lambda_star_exp, r_u_exp, ru_infinite_sufficiency_bound, series_tables, CritCase,
    ExpModel,
};
use tracethresh::{DistributionSpec, ModelParams};

fn latent_law() -> BoxedStrategy<DistributionSpec> {
    prop_oneof![
        Just(DistributionSpec::Zero),
        (0.05..2.0f64).prop_map(DistributionSpec::constant),
        (0.05..2.0f64).prop_map(DistributionSpec::exponential_mean),
        (0.05..2.0f64, 1.5..6.0f64).prop_map(|(m, k)| DistributionSpec::gamma(m, k)),
    ]
    .boxed()
}

fn exp_params() -> impl Strategy<Value = ModelParams> {
    (
        0.5..2.0f64,
        0.1..3.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        latent_law(),
        0.0..3.0f64,
    )
        .prop_map(|(gamma, delay_mean, p, pi_r, pi_t, latent, lambda)| ModelParams {
            contact_rate: lambda,
            naming_prob: p,
            interview_natural: pi_r,
            interview_traced: pi_t,
            infectious: DistributionSpec::exponential(gamma),
            latent,
            delay: DistributionSpec::exponential_mean(delay_mean),
            ..Default::default()
        })
}

fn rate(d: DistributionSpec) -> f64 {
    match d {
        DistributionSpec::Exponential { rate } => rate,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn star_exceeds_recovery_rate(params in exp_params()) {
        let star = lambda_star_exp(&params).unwrap();
        if params.natural_naming() == 0.0 {
            prop_assert!(star.is_infinite());
        } else if star.is_finite() {
            prop_assert!(star > rate(params.infectious), "{} vs {:?}", star, params.infectious);
        }
    }

    #[test]
    fn sufficiency_bound_dominates_star(params in exp_params(), eps in 0.05..2.0f64) {
        let star = lambda_star_exp(&params).unwrap();
        match ru_infinite_sufficiency_bound(&params, eps) {
            Ok(bound) => prop_assert!(bound >= star - 1e-3, "bound {} star {}", bound, star),
            Err(_) => {}
        }
    }

    #[test]
    fn analysis_is_consistent(params in exp_params()) {
        let r = analyze_exp(&params).unwrap();
        if r.finite {
            prop_assert!(params.contact_rate < r.lambda_star);
            prop_assert!(r.y_star >= 0.0 && r.r_u.is_finite() && r.r_u >= 0.0);
        } else {
            prop_assert!(r.r_u.is_infinite());
        }
    }

    #[test]
    fn ru_grows_with_contact_rate(params in exp_params(), a in 0.05..0.95f64, b in 0.05..0.95f64) {
        let m = ExpModel::new(&params).unwrap();
        let star = m.lambda_star();
        let top = if star.is_finite() { star } else { 5.0 };
        let (lo, hi) = (a.min(b) * top, a.max(b) * top);
        prop_assume!(hi - lo > 1e-3);
        let (rl, rh) = (m.with_contact_rate(lo).r_u(), m.with_contact_rate(hi).r_u());
        prop_assert!(rh >= rl - 1e-9 * rl.abs().max(1.0), "R_U({}) = {} > R_U({}) = {}", lo, rl, hi, rh);
    }

    #[test]
    fn time_unit_does_not_matter(params in exp_params(), factor in 0.2..5.0f64) {
        let scaled = params.time_scaled(factor);
        let (a, b) = (r_u_exp(&params).unwrap(), r_u_exp(&scaled).unwrap());
        if a.is_finite() {
            prop_assert!((a - b).abs() < 1e-8 * a.max(1.0), "{} vs {}", a, b);
        }
        let (sa, sb) = (lambda_star_exp(&params).unwrap(), lambda_star_exp(&scaled).unwrap());
        if sa.is_finite() {
            prop_assert!((sa / factor - sb).abs() < 1e-3 * sb.max(1.0), "{} vs {}", sa, sb);
        }
    }

    #[test]
    fn critical_rate_sets_ru_to_one(params in exp_params()) {
        let crit = lambda_crit(&params, CritCase::ExpRu).unwrap();
        let star = lambda_star_exp(&params).unwrap();
        prop_assert!(crit <= star);
        let m = ExpModel::new(&params.with_contact_rate(crit)).unwrap();
        prop_assert!((m.r_u_series() - 1.0).abs() < 1e-4, "R_U at crit = {}", m.r_u_series());
    }
}

fn with_delay_mean(p: &ModelParams, mean: f64) -> ModelParams {
    ModelParams {
        delay: DistributionSpec::exponential_mean(mean),
        ..*p
    }
}

fn with_latent_mean(p: &ModelParams, mean: f64) -> ModelParams {
    ModelParams {
        latent: p.latent.with_mean(mean),
        ..*p
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coefficient_series_is_bounded(params in exp_params()) {
        // Normalized units; the bound needs the delay rate away from the integers.
        let (params, _) = params.normalized();
        let xi = 1.0 / params.delay.mean();
        let gap = (xi - xi.round()).abs();
        prop_assume!(gap > 1e-3);
        let t = series_tables(&params, 0.0).unwrap();
        let sum: f64 = t.c.iter().zip(&t.rho).map(|(c, r)| c * r).sum();
        let (l, p) = (params.contact_rate, params.naming_prob);
        let (pr, pt) = (params.interview_natural, params.interview_traced);
        let bound = l * p * (pt * xi + pr) / gap * (l * p * xi * (pt + pr) / gap).exp();
        prop_assert!(sum.abs() <= bound * (1.0 + 1e-12), "{} > {}", sum.abs(), bound);
    }

    #[test]
    fn ru_monotone_in_delay_and_latency(params in exp_params()) {
        let m = ExpModel::new(&params).unwrap();
        let star = m.lambda_star();
        let params = params.with_contact_rate(0.5 * star.min(4.0));
        let delays = [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
        let by_delay: Vec<f64> = delays.iter().map(|&d| r_u_exp(&with_delay_mean(&params, d)).unwrap()).collect();
        for w in by_delay.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-9) || w[1].is_infinite(), "{:?}", by_delay);
        }
        if params.latent.mean() > 0.0 {
            let latents = [0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
            let by_latent: Vec<f64> = latents.iter().map(|&l| r_u_exp(&with_latent_mean(&params, l)).unwrap()).collect();
            for w in by_latent.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) || w[0].is_infinite(), "{:?}", by_latent);
            }
        }
    }

    #[test]
    fn more_tracing_raises_critical_rate(params in exp_params()) {
        let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0];
        type Setter = fn(&mut ModelParams, f64);
        let setters: [Setter; 3] = [
            |p, v| p.naming_prob = v,
            |p, v| p.interview_natural = v,
            |p, v| p.interview_traced = v,
        ];
        for set in setters {
            let crits: Vec<f64> = grid
                .iter()
                .map(|&v| {
                    let mut q = params;
                    set(&mut q, v);
                    lambda_crit(&q, CritCase::ExpRu).unwrap()
                })
                .collect();
            for w in crits.windows(2) {
                prop_assert!(w[1] >= w[0] - 2e-6, "{:?}", crits);
            }
        }
    }
}

// R_U itself is not monotone in the naming probability: tracing can raise the
// number of unnamed individuals produced by a named cluster above the
// untraced offspring mean, while still lowering the critical contact rate.
#[test]
fn ru_can_grow_with_naming() {
    let traced = ModelParams {
        contact_rate: 1.5,
        naming_prob: 1.0,
        interview_natural: 1.0,
        interview_traced: 0.0,
        infectious: DistributionSpec::exponential(1.0),
        latent: DistributionSpec::Zero,
        delay: DistributionSpec::exponential(0.7),
        ..Default::default()
    };
    let untraced = ModelParams {
        naming_prob: 0.0,
        ..traced
    };
    let (a, b) = (r_u_exp(&untraced).unwrap(), r_u_exp(&traced).unwrap());
    assert!((a - 1.5).abs() < 1e-12 && b > 2.4);
    let sim = estimate_ru(&traced, 200_000, 17).unwrap();
    assert!((sim.mean - b).abs() < 4.0 * sim.se, "{sim:?} vs {b}");
    assert!(lambda_crit(&traced, CritCase::ExpRu).unwrap() > lambda_crit(&untraced, CritCase::ExpRu).unwrap());
}

#[test]
fn untraced_ru_is_mean_offspring() {
    for gamma in [0.5, 1.0, 3.0] {
        let params = ModelParams {
            contact_rate: 1.7,
            naming_prob: 0.0,
            infectious: DistributionSpec::exponential(gamma),
            ..Default::default()
        };
        assert!((r_u_exp(&params).unwrap() - 1.7 / gamma).abs() < 1e-12);
        assert!((lambda_crit(&params, CritCase::ExpRu).unwrap() - gamma).abs() < 1e-5);
    }
}

#[test]
fn longer_latency_helps_tracing() {
    // Smallpox-like latent periods are traced more often than influenza-like ones.
    let base = ModelParams {
        contact_rate: 1.0,
        naming_prob: 0.5,
        interview_natural: 0.8,
        interview_traced: 0.8,
        infectious: DistributionSpec::exponential(1.0),
        delay: DistributionSpec::exponential_mean(0.5),
        ..Default::default()
    };
    let crit = |mean: f64| {
        let p = ModelParams {
            latent: DistributionSpec::exponential_mean(mean),
            ..base
        };
        lambda_crit(&p, CritCase::ExpRu).unwrap()
    };
    assert!(crit(0.58) > crit(0.10));
}
