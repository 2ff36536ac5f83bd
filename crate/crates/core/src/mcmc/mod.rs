//! Bayesian estimation by Metropolis-within-Gibbs.
//!
//! Two predictor forms are supported. With a shared dispersion `β` the logit
//! of a positive response is `β·g(θ_j) − g(b_i)`; with per-item slopes it is
//! `D·a_i·(g(θ_j) − g(b_i))`. Either can carry a free lower asymptote `c_i`.
//! The sampler works on the transformed scale throughout: `g(θ)`, `g(b)`,
//! `ln β`, `ln a` and `logit c` are updated by Gaussian random walks, so
//! every draw stays inside its domain.

mod diagnostics;
mod dic;
mod likelihood;
mod samples;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::model::{AbilitySpace, ItemParameters, DEFAULT_SCALING};

pub use diagnostics::{gelman_rubin, potential_scale_reduction, MIN_DRAWS_FOR_RHAT};
pub use dic::{deviance, dic, DevianceSummary};
pub use likelihood::log_likelihood;
pub use samples::{ParameterClass, ParameterLayout, ParameterSummary, PosteriorSamples};

pub(crate) use likelihood::ItemKernel;
pub(crate) use sampler::{chain_rng, normal, standardize, Block, ADAPT_WINDOW};
pub(crate) use samples::{stable_mean, summarize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMode {
    /// One dispersion `β` for all items.
    SharedDispersion,
    /// A discrimination `a_i` per item.
    PerItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessingMode {
    /// `c_i = 0`.
    Fixed,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub space: AbilitySpace,
    pub slope: SlopeMode,
    pub guessing: GuessingMode,
    /// Scaling constant `D`, used by the per-item slope form.
    pub scaling: f64,
}

impl ModelSpec {
    /// Shared dispersion, no guessing.
    pub fn dispersion(space: AbilitySpace) -> Self {
        ModelSpec {
            space,
            slope: SlopeMode::SharedDispersion,
            guessing: GuessingMode::Fixed,
            scaling: DEFAULT_SCALING,
        }
    }

    /// Real-line abilities with a normal population.
    pub fn model_1a() -> Self {
        Self::dispersion(AbilitySpace::RealLine)
    }

    /// Positive abilities with a log-normal population.
    pub fn model_2a() -> Self {
        Self::dispersion(AbilitySpace::PositiveHalfLine)
    }

    /// Abilities on `(0, upper)` through the logit link.
    pub fn model_3a(upper: f64) -> Self {
        Self::dispersion(AbilitySpace::BoundedInterval {
            upper,
            link: crate::model::Link::Logit,
        })
    }

    pub fn with_slope(mut self, slope: SlopeMode) -> Self {
        self.slope = slope;
        self
    }

    pub fn with_guessing(mut self, guessing: GuessingMode) -> Self {
        self.guessing = guessing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if !(self.scaling.is_finite() && self.scaling > 0.0) {
            return Err(IrtError::config(format!("scaling D = {} must be > 0", self.scaling)));
        }
        Ok(())
    }

    /// Item characteristic curves implied by a parameter set.
    ///
    /// Under the shared-dispersion form, item `i` behaves as an ordinary
    /// curve with `a = β / D` and `g(b_icc) = g(b_i) / β`.
    pub fn item_parameters(&self, params: &ModelParameters) -> Vec<ItemParameters> {
        let d = self.scaling;
        (0..params.difficulties.len())
            .map(|i| {
                let c = params.guessing.get(i).copied().unwrap_or(0.0);
                match self.slope {
                    SlopeMode::SharedDispersion => {
                        let beta = params.slopes[0];
                        let b = self
                            .space
                            .untransform(self.space.transform(params.difficulties[i]) / beta);
                        ItemParameters { a: beta / d, b, c, d }
                    }
                    SlopeMode::PerItem => ItemParameters {
                        a: params.slopes[i],
                        b: params.difficulties[i],
                        c,
                        d,
                    },
                }
            })
            .collect()
    }

    /// Inverse of [`ModelSpec::item_parameters`] for a shared-dispersion model:
    /// recovers `(β, b_i)` from curves sharing one discrimination.
    pub fn dispersion_parameters(&self, items: &[ItemParameters]) -> Result<(f64, Vec<f64>)> {
        let first = items
            .first()
            .ok_or_else(|| IrtError::invalid("no items"))?;
        let beta = first.a * first.d;
        for it in items {
            it.validate(&self.space)?;
            if ((it.a * it.d) - beta).abs() > 1e-12 * beta {
                return Err(IrtError::invalid(
                    "items do not share a common discrimination",
                ));
            }
        }
        let b = items
            .iter()
            .map(|it| self.space.untransform(beta * self.space.transform(it.b)))
            .collect();
        Ok((beta, b))
    }
}

/// A full parameter set on the natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    /// `[β]` for shared dispersion, otherwise one `a_i` per item.
    pub slopes: Vec<f64>,
    /// Empty when guessing is fixed at zero.
    pub guessing: Vec<f64>,
    pub difficulties: Vec<f64>,
    pub abilities: Vec<f64>,
}

impl ModelParameters {
    pub(crate) fn from_draw(layout: &ParameterLayout, row: &[f64]) -> Self {
        let g0 = layout.guessing_offset();
        let d0 = layout.difficulty_offset();
        let t0 = layout.ability_offset();
        ModelParameters {
            slopes: row[..g0].to_vec(),
            guessing: row[g0..d0].to_vec(),
            difficulties: row[d0..t0].to_vec(),
            abilities: row[t0..].to_vec(),
        }
    }
}

/// Prior on a latent location (ability or difficulty). Second parameters are
/// precisions, so `precision = 1e-4` means variance `1e4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatentPrior {
    Normal { mean: f64, precision: f64 },
    LogNormal { meanlog: f64, precision: f64 },
    /// Uniform on `(0, R)` of the bounded space.
    Uniform,
}

impl LatentPrior {
    pub fn standard_normal() -> Self {
        LatentPrior::Normal {
            mean: 0.0,
            precision: 1.0,
        }
    }

    fn compatible_with(&self, space: &AbilitySpace) -> bool {
        matches!(
            (self, space),
            (LatentPrior::Normal { .. }, AbilitySpace::RealLine)
                | (LatentPrior::LogNormal { .. }, AbilitySpace::PositiveHalfLine)
                | (LatentPrior::Uniform, AbilitySpace::BoundedInterval { .. })
        )
    }

    fn validate(&self, what: &str, space: &AbilitySpace) -> Result<()> {
        if !self.compatible_with(space) {
            return Err(IrtError::config(format!(
                "{what} prior {self:?} does not match ability space {space}"
            )));
        }
        match *self {
            LatentPrior::Normal { mean: m, precision: p }
            | LatentPrior::LogNormal { meanlog: m, precision: p } => {
                if !(m.is_finite() && p.is_finite() && p > 0.0) {
                    return Err(IrtError::config(format!("{what} prior needs precision > 0")));
                }
            }
            LatentPrior::Uniform => {}
        }
        Ok(())
    }

    /// Unnormalized log density of `y = g(x)` (Jacobian included).
    #[inline]
    pub(crate) fn ln_density_transformed(&self, y: f64, space: &AbilitySpace) -> f64 {
        match *self {
            LatentPrior::Normal { mean, precision } => -0.5 * precision * (y - mean) * (y - mean),
            LatentPrior::LogNormal { meanlog, precision } => {
                -0.5 * precision * (y - meanlog) * (y - meanlog)
            }
            LatentPrior::Uniform => space.ln_untransform_jacobian(y),
        }
    }

    /// Transformed-scale value at the prior's standard-normal quantile `z`.
    pub(crate) fn transformed_at_normal_quantile(&self, z: f64, space: &AbilitySpace) -> f64 {
        match *self {
            LatentPrior::Normal { mean, precision } => mean + z / precision.sqrt(),
            LatentPrior::LogNormal { meanlog, precision } => meanlog + z / precision.sqrt(),
            LatentPrior::Uniform => {
                let u = crate::model::std_normal_cdf(z).clamp(1e-6, 1.0 - 1e-6);
                match *space {
                    AbilitySpace::BoundedInterval { link, .. } => link.apply_unchecked(u),
                    _ => z,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfNormalPrior {
    pub precision: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    /// Prior on `β` or on each `a_i`.
    pub slope: HalfNormalPrior,
    pub ability: LatentPrior,
    pub difficulty: LatentPrior,
    /// Used only when guessing is free.
    pub guessing: BetaPrior,
    pub zero_sum_difficulties: bool,
}

impl PriorSpec {
    /// The vague defaults paired with each ability space:
    /// `N(0, 1e-4)` / `N(0, 1)` on the real line,
    /// `LN(1.64, 1)` / `LN(1.64, 1)` on the half-line and
    /// `U(0, R)` / `U(0, R)` on a bounded interval.
    pub fn default_for(space: &AbilitySpace) -> Self {
        let (difficulty, ability) = match space {
            AbilitySpace::RealLine => (
                LatentPrior::Normal {
                    mean: 0.0,
                    precision: 1e-4,
                },
                LatentPrior::standard_normal(),
            ),
            AbilitySpace::PositiveHalfLine => {
                let ln = LatentPrior::LogNormal {
                    meanlog: 1.64,
                    precision: 1.0,
                };
                (ln, ln)
            }
            AbilitySpace::BoundedInterval { .. } => (LatentPrior::Uniform, LatentPrior::Uniform),
        };
        PriorSpec {
            slope: HalfNormalPrior { precision: 1e-4 },
            ability,
            difficulty,
            guessing: BetaPrior {
                alpha: 5.0,
                beta: 17.0,
            },
            zero_sum_difficulties: true,
        }
    }

    pub fn validate(&self, space: &AbilitySpace) -> Result<()> {
        self.ability.validate("ability", space)?;
        self.difficulty.validate("difficulty", space)?;
        if !(self.slope.precision.is_finite() && self.slope.precision > 0.0) {
            return Err(IrtError::config("slope prior precision must be > 0"));
        }
        if !(self.guessing.alpha > 0.0 && self.guessing.beta > 0.0) {
            return Err(IrtError::config("guessing prior shapes must be > 0"));
        }
        Ok(())
    }
}

/// Initial random-walk standard deviations on the transformed scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalScales {
    pub ability: f64,
    pub difficulty: f64,
    pub slope: f64,
    pub guessing: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        ProposalScales {
            ability: 1.0,
            difficulty: 0.1,
            slope: 0.05,
            guessing: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub chains: usize,
    /// Total sweeps per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal: ProposalScales,
    /// Tune proposal scales during burn-in.
    pub adapt: bool,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            chains: 4,
            iterations: 10_000,
            burn_in: 2_000,
            thin: 5,
            proposal: ProposalScales::default(),
            adapt: true,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn schedule(mut self, chains: usize, iterations: usize, burn_in: usize, thin: usize) -> Self {
        self.chains = chains;
        self.iterations = iterations;
        self.burn_in = burn_in;
        self.thin = thin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains < 1 {
            return Err(IrtError::config("need at least one chain"));
        }
        if self.thin < 1 {
            return Err(IrtError::config("thin must be >= 1"));
        }
        if self.iterations <= self.burn_in {
            return Err(IrtError::config(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        let p = self.proposal;
        if [p.ability, p.difficulty, p.slope, p.guessing]
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(IrtError::config("proposal scales must be > 0"));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Post-burn-in acceptance rate of one update block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockAcceptance {
    pub block: String,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub priors: PriorSpec,
    pub config: McmcConfig,
    pub samples: PosteriorSamples,
    pub summaries: Vec<ParameterSummary>,
    /// Posterior means.
    pub point: ModelParameters,
    pub deviance: DevianceSummary,
    pub acceptance: Vec<BlockAcceptance>,
    pub warnings: Vec<String>,
}

impl FitResult {
    fn class_summaries(&self, class: ParameterClass) -> Vec<&ParameterSummary> {
        let layout = &self.samples.layout;
        self.summaries
            .iter()
            .enumerate()
            .filter(|(col, _)| layout.class_of(*col) == class)
            .map(|(_, s)| s)
            .collect()
    }

    pub fn dispersion(&self) -> Option<&ParameterSummary> {
        self.class_summaries(ParameterClass::Dispersion).into_iter().next()
    }

    pub fn difficulties(&self) -> Vec<&ParameterSummary> {
        self.class_summaries(ParameterClass::Difficulty)
    }

    pub fn abilities(&self) -> Vec<&ParameterSummary> {
        self.class_summaries(ParameterClass::Ability)
    }

    pub fn discriminations(&self) -> Vec<&ParameterSummary> {
        self.class_summaries(ParameterClass::Discrimination)
    }

    pub fn guessing(&self) -> Vec<&ParameterSummary> {
        self.class_summaries(ParameterClass::Guessing)
    }

    pub fn max_rhat(&self) -> Option<f64> {
        self.summaries
            .iter()
            .map(|s| s.rhat)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Item curves at the posterior means, for anchoring or two-stage fits.
    pub fn item_parameters(&self) -> Vec<ItemParameters> {
        self.spec.item_parameters(&self.point)
    }
}

/// Fits a model by Metropolis-within-Gibbs. Chains run in parallel; the
/// output depends only on the inputs and `cfg.seed`.
pub fn fit(
    u: &ResponseMatrix,
    spec: &ModelSpec,
    priors: &PriorSpec,
    cfg: &McmcConfig,
) -> Result<FitResult> {
    use rayon::prelude::*;

    spec.validate()?;
    priors.validate(&spec.space)?;
    cfg.validate()?;

    let mut warnings = Vec::new();
    for i in u.degenerate_items() {
        warnings.push(format!(
            "item {} has identical responses from every subject; its difficulty is only weakly identified",
            u.item_ids()[i]
        ));
    }

    let outputs = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| sampler::run_chain(u, spec, priors, cfg, chain))
        .collect::<Result<Vec<_>>>()?;

    let layout = ParameterLayout {
        slope: spec.slope,
        guessing: spec.guessing,
        items: u.item_ids().to_vec(),
        subjects: u.subject_ids().to_vec(),
    };
    let mut acceptance_totals: Vec<(String, f64)> = Vec::new();
    let mut chains = Vec::with_capacity(outputs.len());
    for out in outputs {
        for (k, (block, rate)) in out.acceptance.into_iter().enumerate() {
            match acceptance_totals.get_mut(k) {
                Some(slot) => slot.1 += rate,
                None => acceptance_totals.push((block, rate)),
            }
        }
        chains.push(out.draws);
    }
    let acceptance = acceptance_totals
        .into_iter()
        .map(|(block, total)| BlockAcceptance {
            block,
            rate: total / cfg.chains as f64,
        })
        .collect();

    let samples = PosteriorSamples::new(layout, chains);
    let rhat = gelman_rubin(&samples);
    let names = samples.layout.names();
    let summaries: Vec<ParameterSummary> = names
        .into_iter()
        .enumerate()
        .map(|(col, name)| {
            summarize(
                name,
                &samples.pooled(col),
                rhat.as_ref().map(|r| r[col]),
            )
        })
        .collect();
    let point = ModelParameters::from_draw(
        &samples.layout,
        &summaries.iter().map(|s| s.mean).collect::<Vec<_>>(),
    );
    let deviance = dic(&samples, u, spec)?;

    Ok(FitResult {
        spec: *spec,
        priors: *priors,
        config: *cfg,
        samples,
        summaries,
        point,
        deviance,
        acceptance,
        warnings,
    })
}
