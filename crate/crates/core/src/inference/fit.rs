use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{log_likelihood, require_decisions};
use crate::error::{Error, Result};
use crate::models::{ModelFamily, ModelSpec};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::panel::PanelDataset;

/// Starting values per coordinate for the one- and two-parameter families.
pub const GRID: [f64; 5] = [-10.0, -1.0, 0.0, 1.0, 10.0];
/// Coarser per-coordinate grid for the four-parameter full regression.
pub const FULL_REGRESSION_GRID: [f64; 2] = [-1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Popularity exponent held fixed when fitting the social-sampling family.
    pub gamma: f64,
    pub nelder_mead: NelderMeadOptions,
    /// How many of the best grid points seed a simplex run.
    pub refine_starts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            nelder_mead: NelderMeadOptions::default(),
            refine_starts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Grid point (in optimizer coordinates) the winning simplex started from.
    pub init_point: Vec<f64>,
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `η = 0.5 + 0.5 σ(u)` keeps η inside (0.5, 1) for moderate `u`.
fn eta_of(u: f64) -> f64 {
    0.5 + 0.5 * logistic(u)
}

/// Map optimizer coordinates to a model. Bounded parameters go through a
/// logistic transform; regression coefficients are used as-is.
fn model_at(family: ModelFamily, x: &[f64], gamma: f64) -> ModelSpec {
    match family {
        ModelFamily::SocialSampling => ModelSpec::SocialSampling {
            eta: eta_of(x[0]),
            gamma,
        },
        ModelFamily::Performance => ModelSpec::Performance { eta: eta_of(x[0]) },
        ModelFamily::Additive => ModelSpec::Additive {
            alpha: logistic(x[0]),
            eta: eta_of(x[1]),
        },
        ModelFamily::PerformanceRegression => ModelSpec::PerformanceRegression {
            beta0: x[0],
            beta1: x[1],
        },
        ModelFamily::FullRegression => ModelSpec::FullRegression {
            beta0: x[0],
            beta1: x[1],
            beta2: x[2],
            beta3: x[3],
        },
        ModelFamily::Popularity => ModelSpec::Popularity,
    }
}

fn grid_points(family: ModelFamily) -> Vec<Vec<f64>> {
    let axis: &[f64] = if family == ModelFamily::FullRegression {
        &FULL_REGRESSION_GRID
    } else {
        &GRID
    };
    let mut points = vec![Vec::new()];
    for _ in 0..family.parameter_count() {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Negative log-likelihood; invalid or failed evaluations are `+inf`.
fn objective(family: ModelFamily, panel: &PanelDataset, gamma: f64, x: &[f64]) -> f64 {
    match log_likelihood(&model_at(family, x, gamma), panel) {
        Ok(ll) if !ll.is_nan() => -ll,
        _ => f64::INFINITY,
    }
}

pub fn fit(family: ModelFamily, panel: &PanelDataset) -> Result<FitResult> {
    fit_with(family, panel, &FitOptions::default())
}

/// Maximize the log-likelihood of `family` on `panel`.
///
/// Every grid point is evaluated, the best `refine_starts` of them seed a
/// Nelder-Mead run, and the best local optimum wins. If no run reaches a
/// finite likelihood or no run meets the stopping tolerance, the result is
/// returned with `converged = false`.
pub fn fit_with(family: ModelFamily, panel: &PanelDataset, options: &FitOptions) -> Result<FitResult> {
    require_decisions(panel)?;
    if family == ModelFamily::SocialSampling && !(options.gamma.is_finite() && options.gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "gamma must be finite and >= 0, got {}",
            options.gamma
        )));
    }
    if family == ModelFamily::Popularity {
        let ll = log_likelihood(&ModelSpec::Popularity, panel)?;
        return Ok(FitResult {
            model: ModelSpec::Popularity,
            log_likelihood: ll,
            iterations: 0,
            evaluations: 1,
            converged: ll.is_finite(),
            init_point: Vec::new(),
        });
    }

    let gamma = options.gamma;
    let mut scored: Vec<(Vec<f64>, f64)> = grid_points(family)
        .into_par_iter()
        .map(|x| {
            let f = objective(family, panel, gamma, &x);
            (x, f)
        })
        .collect();
    // stable: equal values keep grid order
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    let grid_evaluations = scored.len();

    let runs: Vec<_> = scored
        .into_iter()
        .take(options.refine_starts.max(1))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(start, _)| {
            let m = nelder_mead(|x| objective(family, panel, gamma, x), &start, &options.nelder_mead);
            (start, m)
        })
        .collect();

    let evaluations = grid_evaluations + runs.iter().map(|(_, m)| m.evaluations).sum::<usize>();
    let (init_point, best) = runs
        .into_iter()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .expect("at least one start");
    let log_likelihood = -best.value;
    Ok(FitResult {
        model: model_at(family, &best.point, gamma),
        log_likelihood,
        iterations: best.iterations,
        evaluations,
        converged: best.converged && log_likelihood.is_finite(),
        init_point,
    })
}

/// One point of the popularity-exponent profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub gamma: f64,
    pub log_likelihood: Option<f64>,
    pub eta: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Maximized log-likelihood of the social-sampling model with `γ` fixed at
/// each grid value. A failing grid point is reported in place.
pub fn gamma_profile(panel: &PanelDataset, gamma_grid: &[f64]) -> Result<Vec<ProfilePoint>> {
    if gamma_grid.is_empty() {
        return Err(Error::invalid("gamma grid is empty"));
    }
    require_decisions(panel)?;
    Ok(gamma_grid
        .par_iter()
        .map(|&gamma| {
            let options = FitOptions {
                gamma,
                ..FitOptions::default()
            };
            match fit_with(ModelFamily::SocialSampling, panel, &options) {
                Ok(fit) => {
                    let eta = match fit.model {
                        ModelSpec::SocialSampling { eta, .. } => Some(eta),
                        _ => None,
                    };
                    ProfilePoint {
                        gamma,
                        log_likelihood: Some(fit.log_likelihood),
                        eta,
                        converged: fit.converged,
                        error: None,
                    }
                }
                Err(e) => ProfilePoint {
                    gamma,
                    log_likelihood: None,
                    eta: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::fixtures::panel;

    #[test]
    fn grids_have_expected_sizes() {
        assert_eq!(grid_points(ModelFamily::Popularity), vec![Vec::<f64>::new()]);
        assert_eq!(grid_points(ModelFamily::SocialSampling).len(), 5);
        assert_eq!(grid_points(ModelFamily::Additive).len(), 25);
        assert_eq!(grid_points(ModelFamily::FullRegression).len(), 16);
    }

    #[test]
    fn transformed_parameters_stay_in_bounds() {
        for u in [-40.0, -10.0, 0.0, 10.0, 30.0] {
            let eta = eta_of(u);
            assert!((0.5..=1.0).contains(&eta));
        }
        assert_eq!(eta_of(0.0), 0.75);
    }

    #[test]
    fn all_good_choices_push_eta_up() {
        // every new mimicker goes to a good-signal option, popularity uniform
        let p = panel(&[
            (
                vec![1, 2, 3, 4],
                vec![2; 4],
                vec![0.1, -0.1, 0.2, -0.3],
                vec![5, 0, 4, 0],
            ),
            (
                vec![1, 2, 3, 4],
                vec![2; 4],
                vec![-0.1, 0.3, 0.2, -0.3],
                vec![0, 3, 6, 0],
            ),
        ]);
        let f = fit(ModelFamily::Performance, &p).unwrap();
        match f.model {
            ModelSpec::Performance { eta } => assert!(eta > 0.999, "{eta}"),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn uniform_day_gives_maximum_entropy_fit() {
        let p = panel(&[(
            vec![1, 2, 3, 4],
            vec![0, 3, 1, 7],
            vec![0.1, -0.2, 0.0, 0.5],
            vec![2, 2, 2, 2],
        )]);
        let f = fit(ModelFamily::FullRegression, &p).unwrap();
        let expected = 8.0 * (0.25f64).ln();
        assert!(
            (f.log_likelihood - expected).abs() < 1e-6,
            "{} vs {expected}",
            f.log_likelihood
        );
        let theta = crate::models::decision_probabilities(&f.model, &p.days()[0].snapshot).unwrap();
        for t in theta.as_slice() {
            assert!((t - 0.25).abs() < 1e-3, "{theta:?}");
        }
    }

    #[test]
    fn popularity_family_has_no_parameters() {
        let p = panel(&[(vec![1, 2], vec![1, 3], vec![0.1, 0.2], vec![1, 2])]);
        let f = fit(ModelFamily::Popularity, &p).unwrap();
        assert_eq!(f.model, ModelSpec::Popularity);
        assert!(f.init_point.is_empty());
        let expected = (1.5f64 / 5.0).ln() + 2.0 * (3.5f64 / 5.0).ln();
        assert!((f.log_likelihood - expected).abs() < 1e-12);
    }

    #[test]
    fn fit_requires_decisions() {
        let p = panel(&[(vec![1, 2], vec![1, 3], vec![0.1, 0.2], vec![0, 0])]);
        assert!(fit(ModelFamily::SocialSampling, &p).is_err());
    }

    #[test]
    fn profile_is_flat_for_single_option() {
        let p = panel(&[
            (vec![1], vec![4], vec![0.1], vec![3]),
            (vec![1], vec![7], vec![-0.1], vec![2]),
        ]);
        let prof = gamma_profile(&p, &[0.5, 1.0, 2.0]).unwrap();
        for pt in &prof {
            assert_eq!(pt.log_likelihood, Some(0.0));
        }
        assert!(gamma_profile(&p, &[]).is_err());
        let with_bad = gamma_profile(&p, &[1.0, -1.0]).unwrap();
        assert!(with_bad[1].error.is_some());
        assert!(with_bad[0].error.is_none());
    }
}
