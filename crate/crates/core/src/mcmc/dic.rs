use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::model::logit;
use crate::model::logistic;

use super::likelihood::ItemKernel;
use super::samples::{stable_mean, ParameterClass, ParameterLayout, PosteriorSamples};
use super::{ModelParameters, ModelSpec};

/// Deviance information criterion and its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevianceSummary {
    pub dic: f64,
    /// Effective number of parameters, `D̄ − D(θ̄)`.
    pub p_d: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

/// `−2 · log-likelihood` at a parameter set.
pub fn deviance(u: &ResponseMatrix, params: &ModelParameters, spec: &ModelSpec) -> f64 {
    let kernel = ItemKernel::from_parameters(spec, params);
    let ll: f64 = params
        .abilities
        .iter()
        .enumerate()
        .map(|(j, &theta)| kernel.row_log_likelihood(u.row(j), spec.space.transform(theta)))
        .sum();
    -2.0 * ll
}

fn to_unconstrained(class: ParameterClass, spec: &ModelSpec, x: f64) -> f64 {
    match class {
        ParameterClass::Dispersion | ParameterClass::Discrimination => x.ln(),
        ParameterClass::Guessing => logit(x),
        ParameterClass::Difficulty | ParameterClass::Ability => spec.space.transform(x),
    }
}

fn from_unconstrained(class: ParameterClass, spec: &ModelSpec, y: f64) -> f64 {
    match class {
        ParameterClass::Dispersion | ParameterClass::Discrimination => y.exp(),
        ParameterClass::Guessing => logistic(y),
        ParameterClass::Difficulty | ParameterClass::Ability => spec.space.untransform(y),
    }
}

/// Posterior mean of every parameter, averaged on its unconstrained scale
/// (`ln` for slopes, `logit` for guessing, `g` for locations). A parameter
/// whose draws are all identical keeps that exact value.
pub(crate) fn unconstrained_mean(samples: &PosteriorSamples, spec: &ModelSpec) -> Vec<f64> {
    let layout: &ParameterLayout = &samples.layout;
    (0..samples.n_params())
        .map(|col| {
            let draws = samples.pooled(col);
            let first = draws[0];
            if draws.iter().all(|&x| x == first) {
                return first;
            }
            let class = layout.class_of(col);
            let ys: Vec<f64> = draws.iter().map(|&x| to_unconstrained(class, spec, x)).collect();
            from_unconstrained(class, spec, stable_mean(&ys))
        })
        .collect()
}

/// DIC from retained draws: `D̄ + p_D` with `p_D = D̄ − D(θ̄)`.
pub fn dic(samples: &PosteriorSamples, u: &ResponseMatrix, spec: &ModelSpec) -> Result<DevianceSummary> {
    if samples.total_draws() == 0 {
        return Err(IrtError::invalid("no posterior draws"));
    }
    let layout = &samples.layout;
    if layout.items.len() != u.n_items() || layout.subjects.len() != u.n_subjects() {
        return Err(IrtError::invalid("samples do not match the response matrix"));
    }
    let rows: Vec<&[f64]> = samples.iter_draws().collect();
    let deviances: Vec<f64> = rows
        .par_iter()
        .map(|row| deviance(u, &ModelParameters::from_draw(layout, row), spec))
        .collect();
    let mean_deviance = stable_mean(&deviances);
    let point = ModelParameters::from_draw(layout, &unconstrained_mean(samples, spec));
    let deviance_at_mean = deviance(u, &point, spec);
    if !(mean_deviance.is_finite() && deviance_at_mean.is_finite()) {
        return Err(IrtError::Numerical("non-finite deviance".into()));
    }
    let p_d = mean_deviance - deviance_at_mean;
    Ok(DevianceSummary {
        dic: mean_deviance + p_d,
        p_d,
        mean_deviance,
        deviance_at_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{log_likelihood, GuessingMode, SlopeMode};
    use crate::model::AbilitySpace;

    fn toy() -> (ResponseMatrix, ModelSpec, ParameterLayout) {
        let u = ResponseMatrix::from_rows(&[vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 1]]).unwrap();
        let spec = ModelSpec::model_2a();
        let layout = ParameterLayout {
            slope: SlopeMode::SharedDispersion,
            guessing: GuessingMode::Fixed,
            items: u.item_ids().to_vec(),
            subjects: u.subject_ids().to_vec(),
        };
        (u, spec, layout)
    }

    #[test]
    fn degenerate_draws_have_zero_effective_parameters() {
        let (u, spec, layout) = toy();
        let row = vec![0.9, 0.7, 1.3, 2.1, 0.4, 1.1, 3.3];
        let chain: Vec<f64> = row.iter().copied().cycle().take(row.len() * 20).collect();
        let samples = PosteriorSamples::new(layout.clone(), vec![chain.clone(), chain]);
        let d = dic(&samples, &u, &spec).unwrap();
        assert_eq!(d.p_d, 0.0);
        let at = deviance(&u, &ModelParameters::from_draw(&layout, &row), &spec);
        assert_eq!(d.dic, at);
    }

    #[test]
    fn deviance_agrees_with_curve_likelihood() {
        let (u, spec, layout) = toy();
        let row = vec![0.6, 0.7, 1.3, 2.1, 0.4, 1.1, 3.3];
        let params = ModelParameters::from_draw(&layout, &row);
        let items = spec.item_parameters(&params);
        let ll = log_likelihood(&u, &params.abilities, &items, &spec).unwrap();
        assert!((deviance(&u, &params, &spec) + 2.0 * ll).abs() < 1e-10);
    }

    #[test]
    fn jensen_gap_is_positive_for_varied_abilities() {
        let (u, _, layout) = toy();
        let spec = ModelSpec::dispersion(AbilitySpace::RealLine);
        let mut chain = Vec::new();
        for k in 0..40 {
            let wobble = if k % 2 == 0 { 0.8 } else { -0.8 };
            chain.extend_from_slice(&[1.0, -0.5, 0.0, 0.5, 0.2 + wobble, -0.4 - wobble, 1.0 + wobble]);
        }
        let samples = PosteriorSamples::new(layout, vec![chain]);
        let d = dic(&samples, &u, &spec).unwrap();
        assert!(d.p_d > 0.0);
        assert!((d.dic - (d.mean_deviance + d.p_d)).abs() < 1e-9);
    }
}
