use proptest::prelude::*;

use social_sampling::binarize_signal;
use social_sampling::models::{
    decision_probabilities, decision_probabilities_with_smoothing, generalized_commit_probability, posterior_init,
    posterior_update, BinarySignal, MarketSnapshot, ModelSpec,
};

fn snapshot() -> impl Strategy<Value = (Vec<u64>, Vec<f64>)> {
    (1usize..16).prop_flat_map(|m| {
        (
            prop::collection::vec(0u64..2000, m),
            prop::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], m),
        )
    })
}

fn any_model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (0.5001f64..0.999, 0.0f64..4.0).prop_map(|(eta, gamma)| ModelSpec::SocialSampling { eta, gamma }),
        (0.5001f64..0.999).prop_map(|eta| ModelSpec::Performance { eta }),
        Just(ModelSpec::Popularity),
        (0.0f64..=1.0, 0.5001f64..0.999).prop_map(|(alpha, eta)| ModelSpec::Additive { alpha, eta }),
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(beta0, beta1)| ModelSpec::PerformanceRegression { beta0, beta1 }),
        (-3.0f64..3.0, -3.0f64..3.0, -0.1f64..0.1, -1.0f64..1.0).prop_map(|(beta0, beta1, beta2, beta3)| {
            ModelSpec::FullRegression {
                beta0,
                beta1,
                beta2,
                beta3,
            }
        }),
    ]
}

fn probs(model: &ModelSpec, pop: &[u64], perf: &[f64]) -> Vec<f64> {
    let snap = MarketSnapshot::new(0, pop.to_vec(), perf.to_vec()).unwrap();
    decision_probabilities(model, &snap).unwrap().into_vec()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn output_is_a_distribution((pop, perf) in snapshot(), model in any_model()) {
        let theta = probs(&model, &pop, &perf);
        prop_assert!(theta.iter().all(|&t| t >= 0.0));
        prop_assert!((theta.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn permuting_options_permutes_output(
        (pop, perf) in snapshot(),
        model in any_model(),
        seed in any::<u64>(),
    ) {
        let m = pop.len();
        // deterministic shuffle from the seed
        let mut order: Vec<usize> = (0..m).collect();
        let mut s = seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let theta = probs(&model, &pop, &perf);
        let p2: Vec<u64> = order.iter().map(|&i| pop[i]).collect();
        let q2: Vec<f64> = order.iter().map(|&i| perf[i]).collect();
        let permuted = probs(&model, &p2, &q2);
        let expected: Vec<f64> = order.iter().map(|&i| theta[i]).collect();
        prop_assert!(linf(&permuted, &expected) <= 1e-12);
    }

    #[test]
    fn equal_popularity_reduces_to_performance(
        (pop, perf) in snapshot(),
        eta in 0.5001f64..0.999,
    ) {
        let equal = vec![pop[0]; pop.len()];
        let a = probs(&ModelSpec::SocialSampling { eta, gamma: 1.0 }, &equal, &perf);
        let b = probs(&ModelSpec::Performance { eta }, &equal, &perf);
        prop_assert!(linf(&a, &b) <= 1e-12);
    }

    #[test]
    fn uninformative_eta_approaches_popularity((pop, perf) in snapshot()) {
        let a = probs(&ModelSpec::SocialSampling { eta: 0.5 + 1e-9, gamma: 1.0 }, &pop, &perf);
        let b = probs(&ModelSpec::Popularity, &pop, &perf);
        prop_assert!(linf(&a, &b) <= 1e-6);
    }

    #[test]
    fn zero_exponent_is_the_performance_model(
        (pop, perf) in snapshot(),
        eta in 0.5001f64..0.999,
    ) {
        let a = probs(&ModelSpec::SocialSampling { eta, gamma: 0.0 }, &pop, &perf);
        let b = probs(&ModelSpec::Performance { eta }, &pop, &perf);
        prop_assert!(linf(&a, &b) <= 1e-12);
    }

    #[test]
    fn more_popularity_or_a_good_signal_raises_the_share(
        (pop, perf) in snapshot(),
        eta in 0.5001f64..0.999,
        gamma in 0.1f64..3.0,
        j in any::<prop::sample::Index>(),
    ) {
        prop_assume!(pop.len() >= 2);
        let j = j.index(pop.len());
        let model = ModelSpec::SocialSampling { eta, gamma };
        let base = probs(&model, &pop, &perf)[j];
        let mut more = pop.clone();
        more[j] += 1;
        prop_assert!(probs(&model, &more, &perf)[j] > base);
        let (mut bad, mut good) = (perf.clone(), perf.clone());
        bad[j] = -1.0;
        good[j] = 1.0;
        prop_assert!(probs(&model, &pop, &good)[j] > probs(&model, &pop, &bad)[j]);
    }

    #[test]
    fn one_step_matches_the_posterior(
        perf in prop::collection::vec(-2.0f64..2.0, 1..16),
        eta in 0.5001f64..0.999,
        p in 1u64..100,
    ) {
        let m = perf.len();
        let snap = MarketSnapshot::new(0, vec![p; m], perf.clone()).unwrap();
        let kernel = decision_probabilities_with_smoothing(
            &ModelSpec::SocialSampling { eta, gamma: 1.0 },
            &snap,
            1e-9 / m as f64,
        )
        .unwrap()
        .into_vec();
        let signals: Vec<BinarySignal> = perf.iter().map(|&q| binarize_signal(q).unwrap()).collect();
        let post = posterior_update(&posterior_init(m, eta).unwrap(), &signals).unwrap();
        prop_assert!(linf(&kernel, post.probabilities().as_slice()) <= 1e-6);
    }

    #[test]
    fn sequential_and_batch_posteriors_agree(
        days in (1usize..10).prop_flat_map(|m| prop::collection::vec(prop::collection::vec(any::<bool>(), m), 1..30)),
        eta in 0.5001f64..0.999,
    ) {
        let m = days[0].len();
        let mut seq = posterior_init(m, eta).unwrap();
        let (mut good, mut bad) = (vec![0u64; m], vec![0u64; m]);
        for day in &days {
            let signals: Vec<BinarySignal> = day.iter().map(|&g| BinarySignal::from_value(g as u8).unwrap()).collect();
            seq = posterior_update(&seq, &signals).unwrap();
            for (j, &g) in day.iter().enumerate() {
                if g { good[j] += 1 } else { bad[j] += 1 }
            }
        }
        let batch = posterior_init(m, eta).unwrap().update_counts(&good, &bad).unwrap();
        prop_assert!(linf(seq.log_weights(), batch.log_weights()) <= 1e-9);
    }

    #[test]
    fn generalized_commit_is_monotone_and_bounded(
        other in 0.01f64..1.0,
        a in 0.01f64..1.0,
        b in 0.01f64..1.0,
    ) {
        let bound = 1.0 / other;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p_lo = generalized_commit_probability(lo, other, bound).unwrap();
        let p_hi = generalized_commit_probability(hi, other, bound).unwrap();
        prop_assert!(p_lo > 0.0 && p_hi <= 1.0 + 1e-12);
        prop_assert!(p_lo <= p_hi);
        if lo < hi {
            prop_assert!(p_lo < p_hi);
        }
    }
}
