//! Synthetic abilities and responses from known parameters.
//!
//! Randomness is consumed in a fixed order: one standard draw per subject for
//! the ability, then one uniform per cell in row-major (subject, item) order.
//! Two designs that differ only by a reparametrization of the scale therefore
//! see the same random numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::mcmc::{FitResult, GuessingMode, ModelParameters, ModelSpec, ParameterClass, SlopeMode};
use crate::model::{icc, AbilitySpace, ItemParameters};

/// Population of the simulated abilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbilityDistribution {
    Normal { mean: f64, sd: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Uniform { lower: f64, upper: f64 },
    /// Every subject at the same ability.
    Constant { value: f64 },
    /// `g(θ_j) = x_jᵀβ + σ·z_j`, with `g` the space's transformation.
    Regression {
        covariates: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        residual_sd: f64,
    },
}

impl AbilityDistribution {
    /// `N(0, 1)`, `LN(1.64, 1)` or `U(0, R)` according to the space.
    pub fn default_for(space: &AbilitySpace) -> Self {
        match *space {
            AbilitySpace::RealLine => AbilityDistribution::Normal { mean: 0.0, sd: 1.0 },
            AbilitySpace::PositiveHalfLine => AbilityDistribution::LogNormal {
                meanlog: 1.64,
                sdlog: 1.0,
            },
            AbilitySpace::BoundedInterval { upper, .. } => {
                AbilityDistribution::Uniform { lower: 0.0, upper }
            }
        }
    }

    fn validate(&self, space: &AbilitySpace, n: usize) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let ok = match self {
            AbilityDistribution::Normal { mean, sd } => {
                matches!(space, AbilitySpace::RealLine) && mean.is_finite() && positive(*sd)
            }
            AbilityDistribution::LogNormal { meanlog, sdlog } => {
                !matches!(space, AbilitySpace::BoundedInterval { .. })
                    && meanlog.is_finite()
                    && positive(*sdlog)
            }
            AbilityDistribution::Uniform { lower, upper } => {
                let inside = match *space {
                    AbilitySpace::RealLine => lower.is_finite() && upper.is_finite(),
                    AbilitySpace::PositiveHalfLine => *lower >= 0.0 && upper.is_finite(),
                    AbilitySpace::BoundedInterval { upper: r, .. } => *lower >= 0.0 && *upper <= r,
                };
                inside && lower < upper
            }
            AbilityDistribution::Constant { value } => space.contains(*value),
            AbilityDistribution::Regression {
                covariates,
                coefficients,
                residual_sd,
            } => {
                if covariates.len() != n {
                    return Err(IrtError::config(format!(
                        "{} covariate rows for {n} subjects",
                        covariates.len()
                    )));
                }
                covariates.iter().all(|row| row.len() == coefficients.len())
                    && !coefficients.is_empty()
                    && *residual_sd >= 0.0
                    && residual_sd.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(IrtError::config(format!(
                "ability distribution {self:?} is not supported on the {space} space"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDesign {
    pub space: AbilitySpace,
    pub n_subjects: usize,
    /// Item curves in the ordinary `D·a·(g(θ) − g(b))` form.
    pub items: Vec<ItemParameters>,
    pub abilities: AbilityDistribution,
    pub seed: u64,
}

impl SimulationDesign {
    /// A design whose items follow the shared-dispersion predictor
    /// `β·g(θ) − g(b_i)`, with `difficulties` the `b_i` of that form.
    pub fn shared_dispersion(
        space: AbilitySpace,
        n_subjects: usize,
        beta: f64,
        difficulties: &[f64],
        seed: u64,
    ) -> Result<Self> {
        let spec = ModelSpec::dispersion(space);
        let params = ModelParameters {
            slopes: vec![beta],
            guessing: Vec::new(),
            difficulties: difficulties.to_vec(),
            abilities: Vec::new(),
        };
        if !(beta.is_finite() && beta > 0.0) {
            return Err(IrtError::invalid(format!("dispersion {beta} must be > 0")));
        }
        for &b in difficulties {
            space.check("difficulty b", b)?;
        }
        Ok(SimulationDesign {
            space,
            n_subjects,
            items: spec.item_parameters(&params),
            abilities: AbilityDistribution::default_for(&space),
            seed,
        })
    }

    pub fn with_abilities(mut self, abilities: AbilityDistribution) -> Self {
        self.abilities = abilities;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.n_subjects < 2 || self.items.len() < 2 {
            return Err(IrtError::invalid(format!(
                "a design needs at least 2 subjects and 2 items, got {} x {}",
                self.n_subjects,
                self.items.len()
            )));
        }
        for it in &self.items {
            it.validate(&self.space)?;
        }
        self.abilities.validate(&self.space, self.n_subjects)
    }
}

/// `k` difficulties whose transforms `g(b_i)` are equally spaced on
/// `[−2, 2]`, so they satisfy the zero-sum constraint exactly.
pub fn spread_difficulties(space: &AbilitySpace, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![space.untransform(0.0)];
    }
    (0..k)
        .map(|i| space.untransform(-2.0 + 4.0 * i as f64 / (k - 1) as f64))
        .collect()
}

/// Abilities and responses generated from a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub design: SimulationDesign,
    pub abilities: Vec<f64>,
    pub responses: ResponseMatrix,
}

fn draw_ability(
    dist: &AbilityDistribution,
    space: &AbilitySpace,
    j: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    // Continuous draws can round onto a boundary; redraw until interior.
    for _ in 0..64 {
        let theta = match dist {
            AbilityDistribution::Normal { mean, sd } => {
                mean + sd * rng.sample::<f64, _>(StandardNormal)
            }
            AbilityDistribution::LogNormal { meanlog, sdlog } => {
                (meanlog + sdlog * rng.sample::<f64, _>(StandardNormal)).exp()
            }
            AbilityDistribution::Uniform { lower, upper } => {
                lower + (upper - lower) * rng.sample::<f64, _>(Open01)
            }
            AbilityDistribution::Constant { value } => *value,
            AbilityDistribution::Regression {
                covariates,
                coefficients,
                residual_sd,
            } => {
                let mean: f64 = covariates[j].iter().zip(coefficients).map(|(x, b)| x * b).sum();
                space.untransform(mean + residual_sd * rng.sample::<f64, _>(StandardNormal))
            }
        };
        if space.contains(theta) {
            return Ok(theta);
        }
    }
    Err(IrtError::Numerical(format!(
        "could not draw an interior ability for subject {}",
        j + 1
    )))
}

/// Draws abilities, then Bernoulli responses with probabilities from the
/// item curves.
pub fn simulate(design: &SimulationDesign) -> Result<Simulated> {
    design.validate()?;
    let space = &design.space;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let abilities = (0..design.n_subjects)
        .map(|j| draw_ability(&design.abilities, space, j, &mut rng))
        .collect::<Result<Vec<f64>>>()?;
    let n_items = design.items.len();
    let mut cells = Vec::with_capacity(design.n_subjects * n_items);
    for &theta in &abilities {
        for item in &design.items {
            let p = icc(theta, item, space)?;
            cells.push(u8::from(rng.random::<f64>() < p));
        }
    }
    let subjects = (1..=design.n_subjects).map(|j| format!("s{j}")).collect();
    let items = (1..=n_items).map(|i| format!("i{i}")).collect();
    Ok(Simulated {
        design: design.clone(),
        abilities,
        responses: ResponseMatrix::new(subjects, items, cells)?,
    })
}

/// True parameters expressed in the parametrization a model estimates.
pub fn truth_parameters(
    spec: &ModelSpec,
    items: &[ItemParameters],
    abilities: &[f64],
) -> Result<ModelParameters> {
    let guessing = match spec.guessing {
        GuessingMode::Fixed => Vec::new(),
        GuessingMode::Free => items.iter().map(|it| it.c).collect(),
    };
    let (slopes, difficulties) = match spec.slope {
        SlopeMode::SharedDispersion => {
            let (beta, b) = spec.dispersion_parameters(items)?;
            (vec![beta], b)
        }
        SlopeMode::PerItem => (
            items.iter().map(|it| it.a).collect(),
            items.iter().map(|it| it.b).collect(),
        ),
    };
    Ok(ModelParameters {
        slopes,
        guessing,
        difficulties,
        abilities: abilities.to_vec(),
    })
}

/// Pearson correlation; `NaN` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRecovery {
    pub class: ParameterClass,
    pub count: usize,
    /// Mean of posterior mean minus truth.
    pub bias: f64,
    pub rmse: f64,
    /// Fraction of 95% intervals containing the truth.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryReport {
    pub classes: Vec<ClassRecovery>,
    pub difficulty_correlation: f64,
    pub ability_correlation: f64,
    /// Dispersion truth, when the model has one.
    pub dispersion_truth: Option<f64>,
    pub dispersion_estimate: Option<f64>,
    pub coverage: f64,
}

impl RecoveryReport {
    pub fn class(&self, class: ParameterClass) -> Option<&ClassRecovery> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Compares a fit against the truth it was generated from.
pub fn recovery_report(truth: &Simulated, fit: &FitResult) -> Result<RecoveryReport> {
    let layout = &fit.samples.layout;
    if layout.items.len() != truth.design.items.len()
        || layout.subjects.len() != truth.abilities.len()
    {
        return Err(IrtError::invalid("fit and truth differ in dimensions"));
    }
    let t = truth_parameters(&fit.spec, &truth.design.items, &truth.abilities)?;
    let truth_row: Vec<f64> = [&t.slopes, &t.guessing, &t.difficulties, &t.abilities]
        .into_iter()
        .flatten()
        .copied()
        .collect();

    let order = [
        ParameterClass::Dispersion,
        ParameterClass::Discrimination,
        ParameterClass::Guessing,
        ParameterClass::Difficulty,
        ParameterClass::Ability,
    ];
    let mut classes = Vec::new();
    let mut covered_total = 0usize;
    for class in order {
        let cols: Vec<usize> = (0..truth_row.len())
            .filter(|&c| layout.class_of(c) == class)
            .collect();
        if cols.is_empty() {
            continue;
        }
        let k = cols.len() as f64;
        let errors: Vec<f64> = cols
            .iter()
            .map(|&c| fit.summaries[c].mean - truth_row[c])
            .collect();
        let covered = cols
            .iter()
            .filter(|&&c| fit.summaries[c].covers(truth_row[c]))
            .count();
        covered_total += covered;
        classes.push(ClassRecovery {
            class,
            count: cols.len(),
            bias: errors.iter().sum::<f64>() / k,
            rmse: (errors.iter().map(|e| e * e).sum::<f64>() / k).sqrt(),
            coverage: covered as f64 / k,
        });
    }

    let means = |class| -> Vec<f64> {
        fit.summaries
            .iter()
            .enumerate()
            .filter(|(c, _)| layout.class_of(*c) == class)
            .map(|(_, s)| s.mean)
            .collect()
    };
    let shared = fit.spec.slope == SlopeMode::SharedDispersion;
    Ok(RecoveryReport {
        classes,
        difficulty_correlation: pearson(&means(ParameterClass::Difficulty), &t.difficulties),
        ability_correlation: pearson(&means(ParameterClass::Ability), &t.abilities),
        dispersion_truth: shared.then(|| t.slopes[0]),
        dispersion_estimate: fit.dispersion().map(|s| s.mean),
        coverage: covered_total as f64 / truth_row.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{fit, McmcConfig, PriorSpec};
    use crate::model::Link;

    fn equally_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    #[test]
    fn seeded_runs_repeat() {
        let d = SimulationDesign::shared_dispersion(
            AbilitySpace::RealLine,
            50,
            1.0,
            &equally_spaced(-2.0, 2.0, 5),
            9,
        )
        .unwrap();
        assert_eq!(simulate(&d).unwrap(), simulate(&d).unwrap());
        let other = simulate(&SimulationDesign { seed: 10, ..d.clone() }).unwrap();
        assert_ne!(other.responses, simulate(&d).unwrap().responses);
    }

    #[test]
    fn near_one_asymptote_gives_all_correct() {
        let items = vec![ItemParameters::new(1.0, 0.0, 1.0 - 1e-9); 3];
        let d = SimulationDesign {
            space: AbilitySpace::RealLine,
            n_subjects: 500,
            items,
            abilities: AbilityDistribution::Normal { mean: 0.0, sd: 1.0 },
            seed: 1,
        };
        let s = simulate(&d).unwrap();
        assert!(s.responses.item_totals().iter().all(|&t| t == 500));
    }

    #[test]
    fn midpoint_proportion() {
        let d = SimulationDesign {
            space: AbilitySpace::RealLine,
            n_subjects: 10_000,
            items: vec![ItemParameters::new(1.3, 0.7, 0.0); 2],
            abilities: AbilityDistribution::Constant { value: 0.7 },
            seed: 4,
        };
        let s = simulate(&d).unwrap();
        let p = s.responses.item_totals()[0] as f64 / 10_000.0;
        assert!((p - 0.5).abs() < 0.015, "{p}");
    }

    #[test]
    fn bounded_proportions_match_integrated_curves() {
        let space = AbilitySpace::BoundedInterval { upper: 5.0, link: Link::Logit };
        let b: Vec<f64> = (0..6).map(|i| 0.5 + 4.0 * (i as f64 + 0.5) / 6.0).collect();
        let d = SimulationDesign::shared_dispersion(space, 10_000, 0.6, &b, 21).unwrap();
        let s = simulate(&d).unwrap();
        // midpoint rule over U(0, 5)
        let m = 20_000;
        for (i, item) in d.items.iter().enumerate() {
            let expected: f64 = (0..m)
                .map(|k| icc(5.0 * (k as f64 + 0.5) / m as f64, item, &space).unwrap())
                .sum::<f64>()
                / m as f64;
            let observed = s.responses.item_totals()[i] as f64 / 10_000.0;
            assert!((observed - expected).abs() < 0.02, "item {i}: {observed} vs {expected}");
        }
    }

    #[test]
    fn ability_distributions_respect_support() {
        let n = 4000;
        let d = SimulationDesign::shared_dispersion(
            AbilitySpace::RealLine,
            n,
            1.0,
            &[-1.0, 1.0],
            3,
        )
        .unwrap();
        let s = simulate(&d).unwrap();
        let mean = s.abilities.iter().sum::<f64>() / n as f64;
        let sd = (s.abilities.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64)
            .sqrt();
        let tol = 4.0 / (n as f64).sqrt();
        assert!(mean.abs() < tol && (sd - 1.0).abs() < tol);

        let space = AbilitySpace::BoundedInterval { upper: 5.0, link: Link::Probit };
        let u = simulate(&SimulationDesign::shared_dispersion(space, n, 1.0, &[1.0, 4.0], 3).unwrap())
            .unwrap();
        assert!(u.abilities.iter().all(|&t| t > 0.0 && t < 5.0));

        let bad = d.clone().with_abilities(AbilityDistribution::Normal { mean: 0.0, sd: 1.0 });
        let bad = SimulationDesign {
            space: AbilitySpace::PositiveHalfLine,
            items: vec![ItemParameters::new(1.0, 1.0, 0.0); 2],
            ..bad
        };
        assert!(matches!(simulate(&bad), Err(IrtError::Config(_))));
    }

    #[test]
    fn exponentiated_design_reproduces_responses() {
        let items: Vec<_> = equally_spaced(-1.5, 1.5, 7)
            .into_iter()
            .map(|b| ItemParameters::new(0.9, b, 0.1))
            .collect();
        let real = SimulationDesign {
            space: AbilitySpace::RealLine,
            n_subjects: 300,
            items: items.clone(),
            abilities: AbilityDistribution::Normal { mean: 0.0, sd: 1.0 },
            seed: 77,
        };
        let pos = SimulationDesign {
            space: AbilitySpace::PositiveHalfLine,
            items: items.iter().map(|it| ItemParameters { b: it.b.exp(), ..*it }).collect(),
            abilities: AbilityDistribution::LogNormal { meanlog: 0.0, sdlog: 1.0 },
            ..real.clone()
        };
        let a = simulate(&real).unwrap();
        let b = simulate(&pos).unwrap();
        assert_eq!(a.responses, b.responses);
        for (x, y) in a.abilities.iter().zip(&b.abilities) {
            assert!((x.exp() - y).abs() <= 1e-15 * y);
        }
    }

    #[test]
    fn regression_abilities_follow_the_linear_predictor() {
        let n = 3000;
        let covariates: Vec<Vec<f64>> = (0..n).map(|j| vec![1.0, (j % 2) as f64]).collect();
        let d = SimulationDesign {
            space: AbilitySpace::PositiveHalfLine,
            n_subjects: n,
            items: vec![ItemParameters::new(1.0, 1.0, 0.0); 2],
            abilities: AbilityDistribution::Regression {
                covariates,
                coefficients: vec![0.5, -0.4],
                residual_sd: 0.0,
            },
            seed: 0,
        };
        let s = simulate(&d).unwrap();
        assert!((s.abilities[0] - 0.5f64.exp()).abs() < 1e-15);
        assert!((s.abilities[1] - 0.1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn recovery_and_shuffled_truth() {
        let b = equally_spaced(-2.0, 2.0, 12);
        let d = SimulationDesign::shared_dispersion(AbilitySpace::RealLine, 400, 1.0, &b, 5).unwrap();
        let s = simulate(&d).unwrap();
        let spec = ModelSpec::model_1a();
        let cfg = McmcConfig::default().schedule(2, 1500, 500, 2).with_seed(3);
        let f = fit(&s.responses, &spec, &PriorSpec::default_for(&spec.space), &cfg).unwrap();
        let report = recovery_report(&s, &f).unwrap();
        assert!(report.difficulty_correlation > 0.95, "{report:?}");
        assert!(report.ability_correlation > 0.7);
        assert!((report.dispersion_estimate.unwrap() - 1.0).abs() < 0.2);
        let cov = report.class(ParameterClass::Ability).unwrap().coverage;
        assert!((0.85..=1.0).contains(&cov), "{cov}");

        // interleave the truth so it is nearly uncorrelated with itself
        let order = [0, 6, 11, 5, 1, 7, 10, 4, 2, 8, 9, 3];
        let shuffled: Vec<f64> = order.iter().map(|&k| b[k]).collect();
        let oracle = pearson(&shuffled, &b);
        let mut wrong = s.clone();
        wrong.design = SimulationDesign::shared_dispersion(AbilitySpace::RealLine, 400, 1.0, &shuffled, 5)
            .unwrap();
        let bad = recovery_report(&wrong, &f).unwrap();
        assert!(oracle.abs() < 0.2);
        assert!((bad.difficulty_correlation - oracle).abs() < 0.1, "{}", bad.difficulty_correlation);
    }
}
