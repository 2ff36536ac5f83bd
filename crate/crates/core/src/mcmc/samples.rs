use serde::{Deserialize, Serialize};

use super::{GuessingMode, SlopeMode};

/// Which parameter sits at which column of a retained draw.
///
/// Columns are ordered slope parameters, guessing parameters (when free),
/// difficulties, then abilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub slope: SlopeMode,
    pub guessing: GuessingMode,
    pub items: Vec<String>,
    pub subjects: Vec<String>,
}

/// Coarse grouping used for diagnostics and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterClass {
    Dispersion,
    Discrimination,
    Guessing,
    Difficulty,
    Ability,
}

impl ParameterLayout {
    pub fn n_slope(&self) -> usize {
        match self.slope {
            SlopeMode::SharedDispersion => 1,
            SlopeMode::PerItem => self.items.len(),
        }
    }

    pub fn n_guessing(&self) -> usize {
        match self.guessing {
            GuessingMode::Fixed => 0,
            GuessingMode::Free => self.items.len(),
        }
    }

    pub fn guessing_offset(&self) -> usize {
        self.n_slope()
    }

    pub fn difficulty_offset(&self) -> usize {
        self.n_slope() + self.n_guessing()
    }

    pub fn ability_offset(&self) -> usize {
        self.difficulty_offset() + self.items.len()
    }

    pub fn n_params(&self) -> usize {
        self.ability_offset() + self.subjects.len()
    }

    pub fn class_of(&self, col: usize) -> ParameterClass {
        if col < self.n_slope() {
            match self.slope {
                SlopeMode::SharedDispersion => ParameterClass::Dispersion,
                SlopeMode::PerItem => ParameterClass::Discrimination,
            }
        } else if col < self.difficulty_offset() {
            ParameterClass::Guessing
        } else if col < self.ability_offset() {
            ParameterClass::Difficulty
        } else {
            ParameterClass::Ability
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        match self.slope {
            SlopeMode::SharedDispersion => names.push("beta".to_string()),
            SlopeMode::PerItem => names.extend(self.items.iter().map(|id| format!("a[{id}]"))),
        }
        if self.guessing == GuessingMode::Free {
            names.extend(self.items.iter().map(|id| format!("c[{id}]")));
        }
        names.extend(self.items.iter().map(|id| format!("b[{id}]")));
        names.extend(self.subjects.iter().map(|id| format!("theta[{id}]")));
        names
    }
}

/// Retained draws from every chain, on the natural parameter scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub layout: ParameterLayout,
    /// One buffer per chain, `draws × n_params`, row-major.
    pub chains: Vec<Vec<f64>>,
}

impl PosteriorSamples {
    pub fn new(layout: ParameterLayout, chains: Vec<Vec<f64>>) -> Self {
        PosteriorSamples { layout, chains }
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_params(&self) -> usize {
        self.layout.n_params()
    }

    /// Retained draws per chain (the shortest chain, should they differ).
    pub fn draws_per_chain(&self) -> usize {
        let p = self.n_params();
        self.chains.iter().map(|c| c.len() / p).min().unwrap_or(0)
    }

    pub fn total_draws(&self) -> usize {
        self.draws_per_chain() * self.n_chains()
    }

    pub fn draw(&self, chain: usize, k: usize) -> &[f64] {
        let p = self.n_params();
        &self.chains[chain][k * p..(k + 1) * p]
    }

    /// Iterates over every retained draw, chain by chain.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let p = self.n_params();
        let n = self.draws_per_chain();
        self.chains
            .iter()
            .flat_map(move |c| c.chunks_exact(p).take(n))
    }

    pub fn chain_trace(&self, chain: usize, col: usize) -> Vec<f64> {
        let p = self.n_params();
        self.chains[chain]
            .chunks_exact(p)
            .take(self.draws_per_chain())
            .map(|row| row[col])
            .collect()
    }

    pub fn pooled(&self, col: usize) -> Vec<f64> {
        self.iter_draws().map(|row| row[col]).collect()
    }
}

/// Posterior summary for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    /// `None` when the diagnostic is unavailable (fewer than two chains).
    pub rhat: Option<f64>,
}

impl ParameterSummary {
    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

/// Mean that is exact when all values are identical.
pub(crate) fn stable_mean(xs: &[f64]) -> f64 {
    let Some(&first) = xs.first() else {
        return f64::NAN;
    };
    first + xs.iter().map(|x| x - first).sum::<f64>() / xs.len() as f64
}

pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = stable_mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let w = pos - lo as f64;
            sorted[lo] + w * (sorted[hi] - sorted[lo])
        }
    }
}

pub(crate) fn summarize(name: String, draws: &[f64], rhat: Option<f64>) -> ParameterSummary {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    ParameterSummary {
        name,
        mean: stable_mean(draws),
        sd: sample_variance(draws).sqrt(),
        q025: quantile_sorted(&sorted, 0.025),
        q50: quantile_sorted(&sorted, 0.5),
        q975: quantile_sorted(&sorted, 0.975),
        rhat,
    }
}
