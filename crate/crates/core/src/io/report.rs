//! JSON report documents.
//!
//! Every document starts with `schema_version` and a `kind` tag and rejects
//! unknown fields on reading, so a report either parses against this schema
//! or fails loudly.

use serde::{Deserialize, Serialize};

use crate::anchoring::{AnchorInterval, AnchorLevels, AnchorOptions};
use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::io::ItemRecord;
use crate::mcmc::{
    BlockAcceptance, DevianceSummary, FitResult, McmcConfig, ModelParameters, ModelSpec,
    ParameterSummary, PriorSpec,
};
use crate::model::{AbilitySpace, AbilityTransform};
use crate::regression::{unit_change_factor, RegressionPriors, RegressionResult};
use crate::simulation::SimulationDesign;

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn check_header(version: u32, kind: &str, expected: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(IrtError::config(format!(
            "schema version {version} is not supported (expected {SCHEMA_VERSION})"
        )));
    }
    if kind != expected {
        return Err(IrtError::config(format!(
            "document kind {kind:?} where {expected:?} was expected"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub schema_version: u32,
    pub kind: String,
    pub model: ModelSpec,
    pub priors: PriorSpec,
    pub mcmc: McmcConfig,
    pub n_subjects: usize,
    pub n_items: usize,
    pub deviance: DevianceSummary,
    /// `None` when fewer than two chains were run.
    pub max_rhat: Option<f64>,
    pub acceptance: Vec<BlockAcceptance>,
    pub warnings: Vec<String>,
    /// Item curves at the posterior means, in the ordinary form.
    pub items: Vec<ItemRecord>,
    pub parameters: Vec<ParameterSummary>,
}

impl FitReport {
    pub const KIND: &'static str = "fit";

    pub fn new(fit: &FitResult, u: &ResponseMatrix) -> Self {
        FitReport {
            schema_version: SCHEMA_VERSION,
            kind: Self::KIND.into(),
            model: fit.spec,
            priors: fit.priors,
            mcmc: fit.config,
            n_subjects: u.n_subjects(),
            n_items: u.n_items(),
            deviance: fit.deviance,
            max_rhat: fit.max_rhat(),
            acceptance: fit.acceptance.clone(),
            warnings: fit.warnings.clone(),
            items: u
                .item_ids()
                .iter()
                .zip(fit.item_parameters())
                .map(|(id, p)| ItemRecord::new(id.clone(), &p))
                .collect(),
            parameters: fit.summaries.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_header(self.schema_version, &self.kind, Self::KIND)
    }

    /// Posterior means of the abilities, in subject order.
    pub fn ability_means(&self) -> Vec<f64> {
        self.parameters
            .iter()
            .filter(|p| p.name.starts_with("theta["))
            .map(|p| p.mean)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorReport {
    pub schema_version: u32,
    pub kind: String,
    pub space: AbilitySpace,
    pub n_params: u8,
    pub options: AnchorOptions,
    pub intervals: Vec<AnchorInterval>,
    pub levels: AnchorLevels,
}

impl AnchorReport {
    pub const KIND: &'static str = "anchor";

    pub fn new(
        space: AbilitySpace,
        n_params: u8,
        options: AnchorOptions,
        intervals: Vec<AnchorInterval>,
        levels: AnchorLevels,
    ) -> Self {
        AnchorReport {
            schema_version: SCHEMA_VERSION,
            kind: Self::KIND.into(),
            space,
            n_params,
            options,
            intervals,
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitChange {
    pub covariate: String,
    pub item: String,
    /// Odds multiplier `exp(−D·a·β_k)` at the coefficient's posterior mean.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionReport {
    pub schema_version: u32,
    pub kind: String,
    pub space: AbilitySpace,
    pub transform: AbilityTransform,
    pub covariate_names: Vec<String>,
    pub fixed_items: Vec<ItemRecord>,
    pub priors: RegressionPriors,
    pub mcmc: McmcConfig,
    pub deviance: DevianceSummary,
    pub acceptance: Vec<BlockAcceptance>,
    pub coefficients: Vec<ParameterSummary>,
    pub residual_variance: ParameterSummary,
    pub unit_change: Vec<UnitChange>,
    pub residuals: Vec<ParameterSummary>,
    pub abilities: Vec<ParameterSummary>,
}

impl RegressionReport {
    pub const KIND: &'static str = "regress";

    pub fn new(result: &RegressionResult, item_ids: &[String]) -> Self {
        let spec = &result.spec;
        let mut unit_change = Vec::new();
        for (name, coef) in spec.covariate_names.iter().zip(&result.coefficients) {
            for (id, it) in item_ids.iter().zip(&spec.fixed_items) {
                unit_change.push(UnitChange {
                    covariate: name.clone(),
                    item: id.clone(),
                    factor: unit_change_factor(it.a, coef.mean, it.d),
                });
            }
        }
        RegressionReport {
            schema_version: SCHEMA_VERSION,
            kind: Self::KIND.into(),
            space: spec.space,
            transform: spec.transform,
            covariate_names: spec.covariate_names.clone(),
            fixed_items: item_ids
                .iter()
                .zip(&spec.fixed_items)
                .map(|(id, p)| ItemRecord::new(id.clone(), p))
                .collect(),
            priors: spec.priors,
            mcmc: result.config,
            deviance: result.deviance,
            acceptance: result.acceptance.clone(),
            coefficients: result.coefficients.clone(),
            residual_variance: result.residual_variance.clone(),
            unit_change,
            residuals: result.residuals.clone(),
            abilities: result.abilities.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationTruth {
    pub schema_version: u32,
    pub kind: String,
    pub design: SimulationDesign,
    pub model: ModelSpec,
    /// Truth in the parametrization `model` estimates.
    pub parameters: ModelParameters,
    pub item_ids: Vec<String>,
    pub subject_ids: Vec<String>,
}

impl SimulationTruth {
    pub const KIND: &'static str = "simulation_truth";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IccCurve {
    pub item: ItemRecord,
    pub slope_at_b: f64,
    /// `[θ, P(θ)]` pairs.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IccReport {
    pub schema_version: u32,
    pub kind: String,
    pub space: AbilitySpace,
    pub curves: Vec<IccCurve>,
}

impl IccReport {
    pub const KIND: &'static str = "icc";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramReport {
    pub schema_version: u32,
    pub kind: String,
    /// What was binned, e.g. `theta posterior mean`.
    pub quantity: String,
    pub n: usize,
    pub bins: Vec<HistogramBin>,
}

impl HistogramReport {
    pub const KIND: &'static str = "hist";
}

/// Equal-width bins from the smallest to the largest value; the last bin is
/// closed on the right.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(IrtError::config("histogram needs at least one bin"));
    }
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(IrtError::invalid("histogram needs finite values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|k| HistogramBin {
            lower: lo + k as f64 * width,
            upper: if k + 1 == n_bins && hi > lo { hi } else { lo + (k + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &v in values {
        let k = (((v - lo) / width) as usize).min(n_bins - 1);
        bins[k].count += 1;
    }
    Ok(bins)
}

/// Machine-readable record written to stderr on failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub kind: String,
    pub code: String,
    pub exit_code: i32,
    pub message: String,
    pub row: Option<usize>,
    pub column: Option<usize>,
}

impl ErrorReport {
    pub const KIND: &'static str = "error";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v = [0.0, 0.1, 0.5, 0.9, 1.0];
        let bins = histogram(&v, 2).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 5);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[1].upper, 1.0);
        assert_eq!(histogram(&[3.0, 3.0], 4).unwrap()[0].count, 2);
        assert!(histogram(&v, 0).is_err());
    }

    #[test]
    fn header_checks() {
        assert!(check_header(1, "fit", "fit").is_ok());
        assert!(check_header(2, "fit", "fit").is_err());
        assert!(check_header(1, "anchor", "fit").is_err());
    }
}
