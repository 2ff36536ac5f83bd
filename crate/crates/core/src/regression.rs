//! Latent regression with fixed items.
//!
//! Abilities enter through `h(θ_j) = x_jᵀβ + ε_j`, `ε_j ~ N(0, σ²)`, where
//! `h` is the space's transformation. Item curves come from an earlier fit
//! and are never updated. Each sweep draws `h(θ_j)` by random-walk
//! Metropolis, then `β` and `1/σ²` from their conjugate conditionals.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::mcmc::{
    chain_rng, normal, potential_scale_reduction, stable_mean, standardize, summarize, Block,
    BlockAcceptance, DevianceSummary, ItemKernel, McmcConfig, ParameterSummary, ADAPT_WINDOW,
    MIN_DRAWS_FOR_RHAT,
};
use crate::model::{logit, AbilitySpace, AbilityTransform, ItemParameters};

/// Multiplicative change in the odds of a negative response per unit of a
/// covariate with coefficient `beta_k`, `exp(−D·a·β_k)`.
pub fn unit_change_factor(a: f64, beta_k: f64, d: f64) -> f64 {
    (-d * a * beta_k).exp()
}

/// Coefficient priors `N(0, precision)` and a `Gamma(shape, rate)` prior on
/// the residual precision `1/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionPriors {
    pub coefficient_precision: f64,
    pub precision_shape: f64,
    pub precision_rate: f64,
}

impl Default for RegressionPriors {
    fn default() -> Self {
        RegressionPriors {
            coefficient_precision: 1e-5,
            precision_shape: 1e-4,
            precision_rate: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub space: AbilitySpace,
    /// Must be the space's own transformation.
    pub transform: AbilityTransform,
    pub covariate_names: Vec<String>,
    /// One row per subject.
    pub covariates: Vec<Vec<f64>>,
    pub fixed_items: Vec<ItemParameters>,
    pub priors: RegressionPriors,
}

impl RegressionSpec {
    /// Spec with the space's transformation and default priors.
    pub fn new(
        space: AbilitySpace,
        covariate_names: Vec<String>,
        covariates: Vec<Vec<f64>>,
        fixed_items: Vec<ItemParameters>,
    ) -> Self {
        RegressionSpec {
            transform: space.transform_kind(),
            space,
            covariate_names,
            covariates,
            fixed_items,
            priors: RegressionPriors::default(),
        }
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    fn design_matrix(&self) -> DMatrix<f64> {
        let r = self.n_covariates();
        DMatrix::from_fn(self.covariates.len(), r, |j, k| self.covariates[j][k])
    }

    pub fn validate(&self, u: &ResponseMatrix) -> Result<()> {
        self.space.validate()?;
        if self.transform != self.space.transform_kind() {
            return Err(IrtError::config(format!(
                "transform {:?} does not match the {} ability space",
                self.transform, self.space
            )));
        }
        if self.fixed_items.len() != u.n_items() {
            return Err(IrtError::invalid(format!(
                "{} fixed items for {} response columns",
                self.fixed_items.len(),
                u.n_items()
            )));
        }
        for it in &self.fixed_items {
            it.validate(&self.space)?;
        }
        let r = self.n_covariates();
        if r == 0 {
            return Err(IrtError::invalid("at least one covariate column is required"));
        }
        if self.covariates.len() != u.n_subjects() {
            return Err(IrtError::invalid(format!(
                "{} covariate rows for {} subjects",
                self.covariates.len(),
                u.n_subjects()
            )));
        }
        for (j, row) in self.covariates.iter().enumerate() {
            if row.len() != r || row.iter().any(|x| !x.is_finite()) {
                return Err(IrtError::invalid(format!(
                    "covariate row {} must hold {r} finite values",
                    j + 1
                )));
            }
        }
        let p = &self.priors;
        if !(p.coefficient_precision > 0.0 && p.precision_shape > 0.0 && p.precision_rate > 0.0) {
            return Err(IrtError::config("regression prior parameters must be > 0"));
        }
        let x = self.design_matrix();
        let sv = x.singular_values();
        let largest = sv.max();
        let tol = largest * self.covariates.len().max(r) as f64 * f64::EPSILON;
        if x.rank(tol) < r {
            return Err(IrtError::invalid(
                "covariate matrix does not have full column rank",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionResult {
    /// The spec as given, fixed items included.
    pub spec: RegressionSpec,
    pub config: McmcConfig,
    pub coefficients: Vec<ParameterSummary>,
    pub residual_variance: ParameterSummary,
    /// `ε_j = h(θ_j) − x_jᵀβ`.
    pub residuals: Vec<ParameterSummary>,
    pub abilities: Vec<ParameterSummary>,
    pub deviance: DevianceSummary,
    pub acceptance: Vec<BlockAcceptance>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&ParameterSummary> {
        self.spec
            .covariate_names
            .iter()
            .position(|n| n == name)
            .map(|k| &self.coefficients[k])
    }
}

struct RegressionChain<'a> {
    u: &'a ResponseMatrix,
    space: AbilitySpace,
    x: DMatrix<f64>,
    xtx: DMatrix<f64>,
    kernel: ItemKernel,
    priors: RegressionPriors,
    eta: Vec<f64>,
    beta: DVector<f64>,
    precision: f64,
    /// Per-subject row log-likelihoods.
    row_ll: Vec<f64>,
    abilities: Block,
}

impl<'a> RegressionChain<'a> {
    fn init(
        u: &'a ResponseMatrix,
        spec: &RegressionSpec,
        cfg: &McmcConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let space = spec.space;
        let kernel = ItemKernel::from_items(&spec.fixed_items, &space);
        let m = u.n_items() as f64;
        let mean_slope = kernel.slope.iter().sum::<f64>() / m;
        let centre = spec
            .fixed_items
            .iter()
            .map(|it| space.transform(it.b))
            .sum::<f64>()
            / m;
        let mut z: Vec<f64> = u
            .subject_scores()
            .iter()
            .map(|&s| logit((s as f64 + 0.5) / (m + 1.0)))
            .collect();
        standardize(&mut z);
        let eta: Vec<f64> = z
            .iter()
            .map(|&zj| {
                let y = centre + zj / mean_slope.max(0.5) + 0.5 * normal(rng);
                if space.contains(space.untransform(y)) {
                    y
                } else {
                    centre
                }
            })
            .collect();

        let x = spec.design_matrix();
        let xtx = x.transpose() * &x;
        let row_ll: Vec<f64> = eta
            .iter()
            .enumerate()
            .map(|(j, &e)| kernel.row_log_likelihood(u.row(j), e))
            .collect();
        if row_ll.iter().any(|v| !v.is_finite()) {
            return Err(IrtError::Initialization(
                "non-finite likelihood at the starting abilities".into(),
            ));
        }
        let mut chain = RegressionChain {
            u,
            space,
            x,
            xtx,
            kernel,
            priors: spec.priors,
            beta: DVector::zeros(spec.n_covariates()),
            precision: 1.0,
            eta,
            row_ll,
            abilities: Block::new("abilities", u.n_subjects(), cfg.proposal.ability),
        };
        chain.update_coefficients(rng)?;
        chain.update_precision(rng)?;
        Ok(chain)
    }

    fn linear_predictor(&self) -> DVector<f64> {
        &self.x * &self.beta
    }

    fn update_abilities(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        let mu = self.linear_predictor();
        let tau = self.precision;
        for j in 0..self.eta.len() {
            let current = self.eta[j];
            let prop = current + self.abilities.scale[j] * normal(rng);
            let log_u = rng.random::<f64>().ln();
            if !self.space.contains(self.space.untransform(prop)) {
                self.abilities.record(j, false, counting);
                continue;
            }
            let ll = self.kernel.row_log_likelihood(self.u.row(j), prop);
            let log_ratio = ll - self.row_ll[j]
                - 0.5 * tau * ((prop - mu[j]).powi(2) - (current - mu[j]).powi(2));
            let accepted = log_u < log_ratio;
            if accepted {
                self.eta[j] = prop;
                self.row_ll[j] = ll;
            }
            self.abilities.record(j, accepted, counting);
        }
    }

    fn update_coefficients(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let r = self.beta.len();
        let tau = self.precision;
        let precision =
            &self.xtx * tau + DMatrix::identity(r, r) * self.priors.coefficient_precision;
        let chol = Cholesky::new(precision).ok_or_else(|| {
            IrtError::Numerical("coefficient posterior precision is not positive definite".into())
        })?;
        let eta = DVector::from_column_slice(&self.eta);
        let mean = chol.solve(&(self.x.tr_mul(&eta) * tau));
        let z = DVector::from_fn(r, |_, _| normal(rng));
        // L Lᵀ = P, so Lᵀ⁻¹ z has covariance P⁻¹
        let offset = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| IrtError::Numerical("singular Cholesky factor".into()))?;
        self.beta = mean + offset;
        Ok(())
    }

    fn update_precision(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let mu = self.linear_predictor();
        let ssr: f64 = self.eta.iter().zip(mu.iter()).map(|(e, m)| (e - m).powi(2)).sum();
        let shape = self.priors.precision_shape + 0.5 * self.eta.len() as f64;
        let rate = self.priors.precision_rate + 0.5 * ssr;
        let gamma = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| IrtError::Numerical(format!("residual precision draw: {e}")))?;
        let tau: f64 = rng.sample(gamma);
        if !(tau.is_finite() && tau > 0.0) {
            return Err(IrtError::Numerical(format!("residual precision draw {tau}")));
        }
        self.precision = tau;
        Ok(())
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, counting: bool) -> Result<()> {
        self.update_abilities(rng, counting);
        self.update_coefficients(rng)?;
        self.update_precision(rng)
    }

    /// `[β, σ², ε, θ]`
    fn record(&self, out: &mut Vec<f64>) {
        out.extend(self.beta.iter());
        out.push(1.0 / self.precision);
        let mu = self.linear_predictor();
        out.extend(self.eta.iter().zip(mu.iter()).map(|(e, m)| e - m));
        out.extend(self.eta.iter().map(|&e| self.space.untransform(e)));
    }
}

struct RegressionChainOutput {
    draws: Vec<f64>,
    acceptance: f64,
}

fn run_regression_chain(
    u: &ResponseMatrix,
    spec: &RegressionSpec,
    cfg: &McmcConfig,
    chain: usize,
) -> Result<RegressionChainOutput> {
    let mut rng = chain_rng(cfg.seed, chain);
    let mut state = RegressionChain::init(u, spec, cfg, &mut rng)?;
    let width = spec.n_covariates() + 1 + 2 * u.n_subjects();
    let mut draws = Vec::with_capacity(cfg.retained_per_chain() * width);
    for t in 0..cfg.iterations {
        let burning = t < cfg.burn_in;
        state.sweep(&mut rng, !burning)?;
        if burning && cfg.adapt && (t + 1) % ADAPT_WINDOW == 0 {
            state.abilities.adapt();
        }
        if !burning && (t - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            state.record(&mut draws);
        }
    }
    Ok(RegressionChainOutput {
        draws,
        acceptance: state.abilities.rate(),
    })
}

fn sample_chains(
    u: &ResponseMatrix,
    spec: &RegressionSpec,
    cfg: &McmcConfig,
) -> Result<Vec<RegressionChainOutput>> {
    spec.validate(u)?;
    cfg.validate()?;
    (0..cfg.chains)
        .into_par_iter()
        .map(|chain| run_regression_chain(u, spec, cfg, chain))
        .collect()
}

/// Samples the regression posterior with the item curves held fixed.
pub fn fit_regression(
    u: &ResponseMatrix,
    spec: &RegressionSpec,
    cfg: &McmcConfig,
) -> Result<RegressionResult> {
    let outputs = sample_chains(u, spec, cfg)?;

    let r = spec.n_covariates();
    let n = u.n_subjects();
    let width = r + 1 + 2 * n;
    let kept = cfg.retained_per_chain();
    let column = |col: usize| -> Vec<Vec<f64>> {
        outputs
            .iter()
            .map(|o| (0..kept).map(|k| o.draws[k * width + col]).collect())
            .collect()
    };
    let summary = |name: String, col: usize| -> ParameterSummary {
        let traces = column(col);
        let rhat = (cfg.chains >= 2 && kept >= MIN_DRAWS_FOR_RHAT)
            .then(|| potential_scale_reduction(&traces));
        summarize(name, &traces.concat(), rhat)
    };

    let coefficients = (0..r)
        .map(|k| summary(format!("beta[{}]", spec.covariate_names[k]), k))
        .collect();
    let residual_variance = summary("sigma2".into(), r);
    let ids = u.subject_ids();
    let residuals = (0..n)
        .map(|j| summary(format!("eps[{}]", ids[j]), r + 1 + j))
        .collect();
    let abilities = (0..n)
        .map(|j| summary(format!("theta[{}]", ids[j]), r + 1 + n + j))
        .collect();

    let deviance = regression_deviance(u, spec, &outputs, width, r + 1 + n)?;
    let acceptance = vec![BlockAcceptance {
        block: "abilities".into(),
        rate: outputs.iter().map(|o| o.acceptance).sum::<f64>() / cfg.chains as f64,
    }];

    Ok(RegressionResult {
        spec: spec.clone(),
        config: *cfg,
        coefficients,
        residual_variance,
        residuals,
        abilities,
        deviance,
        acceptance,
    })
}

/// Deviance of the responses given the abilities, with the plug-in point
/// taken as the mean of `h(θ_j)`.
fn regression_deviance(
    u: &ResponseMatrix,
    spec: &RegressionSpec,
    outputs: &[RegressionChainOutput],
    width: usize,
    theta_offset: usize,
) -> Result<DevianceSummary> {
    let space = &spec.space;
    let kernel = ItemKernel::from_items(&spec.fixed_items, space);
    let n = u.n_subjects();
    let rows: Vec<&[f64]> = outputs
        .iter()
        .flat_map(|o| o.draws.chunks_exact(width))
        .map(|row| &row[theta_offset..theta_offset + n])
        .collect();
    let deviance_at = |thetas: &[f64], transformed: bool| -> f64 {
        -2.0 * thetas
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let e = if transformed { t } else { space.transform(t) };
                kernel.row_log_likelihood(u.row(j), e)
            })
            .sum::<f64>()
    };
    let deviances: Vec<f64> = rows.par_iter().map(|t| deviance_at(t, false)).collect();
    let mean_deviance = stable_mean(&deviances);
    let eta_bar: Vec<f64> = (0..n)
        .map(|j| stable_mean(&rows.iter().map(|t| space.transform(t[j])).collect::<Vec<_>>()))
        .collect();
    let deviance_at_mean = deviance_at(&eta_bar, true);
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
