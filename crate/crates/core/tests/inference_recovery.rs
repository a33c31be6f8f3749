use social_sampling::inference::{fit, gamma_profile, log_likelihood, rank_traders, skill_credible_interval};
use social_sampling::models::{ModelFamily, ModelSpec};
use social_sampling::pipeline::{
    daily_profits, generate_synthetic_market, generate_synthetic_panel, SyntheticMarketConfig,
};

fn panel(model: ModelSpec, seed: u64) -> social_sampling::PanelDataset {
    generate_synthetic_panel(&SyntheticMarketConfig::new(30, 60, 500, model, seed))
        .unwrap()
        .panel
}

#[test]
fn social_sampling_parameters_are_recovered() {
    for (eta, seed) in [(0.65, 1), (0.8, 2), (0.9, 3)] {
        let p = panel(ModelSpec::SocialSampling { eta, gamma: 1.0 }, seed);
        let f = fit(ModelFamily::SocialSampling, &p).unwrap();
        let ModelSpec::SocialSampling { eta: fitted, .. } = f.model else {
            unreachable!()
        };
        assert!((fitted - eta).abs() < 0.02, "eta {eta}: fitted {fitted}");
        assert!(f.converged);
    }
}

#[test]
fn profile_peaks_at_the_generating_exponent() {
    let p = panel(ModelSpec::SocialSampling { eta: 0.8, gamma: 1.0 }, 4);
    let profile = gamma_profile(&p, &[0.5, 1.0, 1.5]).unwrap();
    let ll: Vec<f64> = profile.iter().map(|pt| pt.log_likelihood.unwrap()).collect();
    assert!(ll[1] > ll[0] && ll[1] > ll[2], "{ll:?}");
}

#[test]
fn fitted_likelihood_beats_the_truth_or_ties() {
    let truth = ModelSpec::SocialSampling { eta: 0.8, gamma: 1.0 };
    let p = panel(truth, 5);
    let f = fit(ModelFamily::SocialSampling, &p).unwrap();
    assert!(f.log_likelihood >= log_likelihood(&truth, &p).unwrap() - 1e-6);
}

#[test]
fn popularity_generated_panels_prefer_the_popularity_family() {
    let p = panel(ModelSpec::Popularity, 6);
    let pop = fit(ModelFamily::Popularity, &p).unwrap();
    let perf = fit(ModelFamily::Performance, &p).unwrap();
    assert!(pop.log_likelihood > perf.log_likelihood);
}

#[test]
fn the_best_synthetic_trader_ranks_first() {
    let m = generate_synthetic_market(&SyntheticMarketConfig::new(
        15,
        150,
        50,
        ModelSpec::social_sampling(0.8),
        7,
    ))
    .unwrap();
    let ranking = rank_traders(&daily_profits(&m.trades));
    assert_eq!(ranking[0].user_id, m.truth.best_user);
    let top = &ranking[0];
    let ci = skill_credible_interval(top.positive_days, top.negative_days, 0.95).unwrap();
    assert!(ci.contains(0.7), "{ci:?}");
    assert!(ci.lower > 0.5);
}
