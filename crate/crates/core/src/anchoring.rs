//! Scale anchoring: which items characterize which region of the latent scale.
//!
//! An item anchors level `θ_p` (relative to `θ_{p−1}`) when
//! `P(θ_p) ≥ 0.65`, `P(θ_{p−1}) < 0.5` and `P(θ_p) − P(θ_{p−1}) ≥ 0.30`.
//! Each item has a shortest interval `(θ_ℓ, θ_h)` over which those criteria
//! can hold; sweeping the sorted intervals and cutting at the gaps yields the
//! performance levels.

use serde::{Deserialize, Serialize};

use crate::error::{IrtError, Result};
use crate::model::{icc_invert, AbilitySpace, ItemParameters};

pub const MIN_PROB_AT_LEVEL: f64 = 0.65;
pub const MAX_PROB_AT_PREVIOUS: f64 = 0.5;
pub const MIN_PROB_GAP: f64 = 0.30;

/// Slack on the two `≥` criteria so curve values hit by exact inversion count.
const CRITERION_TOL: f64 = 1e-9;

/// Largest offset accepted for the high-guessing case.
pub const MAX_EPSILON: f64 = 0.15;

/// The three anchor-item criteria.
pub fn anchor_check(p_at_level: f64, p_at_prev: f64) -> bool {
    p_at_level >= MIN_PROB_AT_LEVEL - CRITERION_TOL
        && p_at_prev < MAX_PROB_AT_PREVIOUS
        && p_at_level - p_at_prev >= MIN_PROB_GAP - CRITERION_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorOptions {
    /// Offset `ε` applied to both targets when `0.35 ≤ c < 0.5`.
    pub epsilon: f64,
}

impl Default for AnchorOptions {
    fn default() -> Self {
        AnchorOptions { epsilon: 0.0 }
    }
}

impl AnchorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_EPSILON).contains(&self.epsilon) {
            return Err(IrtError::config(format!(
                "anchor epsilon {} must lie in [0, {MAX_EPSILON}]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibleReason {
    /// `c ≥ 0.5`: no pair of abilities meets all three criteria.
    GuessingTooHigh,
    /// The lower probability target does not exceed the asymptote `c`.
    TargetBelowAsymptote,
    /// A target ability falls outside the ability domain numerically.
    OutsideDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorInterval {
    pub item: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub feasible: bool,
    pub reason: Option<InfeasibleReason>,
}

impl AnchorInterval {
    pub fn feasible(item: impl Into<String>, lower: f64, upper: f64) -> Self {
        AnchorInterval {
            item: item.into(),
            lower: Some(lower),
            upper: Some(upper),
            feasible: true,
            reason: None,
        }
    }

    fn infeasible(item: &str, reason: InfeasibleReason) -> Self {
        AnchorInterval {
            item: item.to_string(),
            lower: None,
            upper: None,
            feasible: false,
            reason: Some(reason),
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match (self.feasible, self.lower, self.upper) {
            (true, Some(l), Some(h)) => Some((l, h)),
            _ => None,
        }
    }
}

/// Probability targets `(P(θ_ℓ), P(θ_h))` for an item with `n_params`
/// parameters and asymptote `c`.
///
/// With `ε = 0` and `0.35 ≤ c < 0.5` the lower target is exactly 0.5, which
/// sits on the strict `< 0.5` bound of [`anchor_check`]; pick `ε > 0` for a
/// strict pair.
pub fn anchor_targets(
    c: f64,
    n_params: u8,
    options: &AnchorOptions,
) -> std::result::Result<(f64, f64), InfeasibleReason> {
    let targets = match n_params {
        1 | 2 => (0.35, 0.65),
        _ if c < 0.3 => ((1.0 + c) / 2.0 - 0.15, (1.0 + c) / 2.0 + 0.15),
        _ if c < 0.35 => (0.35, 0.65),
        _ if c < 0.5 => (0.5 - options.epsilon, 0.8 - options.epsilon),
        _ => return Err(InfeasibleReason::GuessingTooHigh),
    };
    if targets.0 <= c {
        return Err(InfeasibleReason::TargetBelowAsymptote);
    }
    Ok(targets)
}

/// Shortest interval on which `item` can anchor a level.
pub fn anchor_interval(
    id: &str,
    item: &ItemParameters,
    space: &AbilitySpace,
    n_params: u8,
    options: &AnchorOptions,
) -> Result<AnchorInterval> {
    if !(1..=3).contains(&n_params) {
        return Err(IrtError::invalid(format!(
            "n_params must be 1, 2 or 3, got {n_params}"
        )));
    }
    options.validate()?;
    item.validate(space)?;
    let (p_lo, p_hi) = match anchor_targets(item.c, n_params, options) {
        Ok(t) => t,
        Err(reason) => return Ok(AnchorInterval::infeasible(id, reason)),
    };
    match (icc_invert(item, space, p_lo), icc_invert(item, space, p_hi)) {
        (Ok(lo), Ok(hi)) if lo < hi => Ok(AnchorInterval::feasible(id, lo, hi)),
        (Err(IrtError::NoSolution { .. }), _) => Ok(AnchorInterval::infeasible(
            id,
            InfeasibleReason::TargetBelowAsymptote,
        )),
        _ => Ok(AnchorInterval::infeasible(id, InfeasibleReason::OutsideDomain)),
    }
}

/// Anchor intervals for a whole item bank.
pub fn anchor_intervals(
    ids: &[String],
    items: &[ItemParameters],
    space: &AbilitySpace,
    n_params: u8,
    options: &AnchorOptions,
) -> Result<Vec<AnchorInterval>> {
    if ids.len() != items.len() {
        return Err(IrtError::invalid("item ids and parameters differ in length"));
    }
    ids.iter()
        .zip(items)
        .map(|(id, it)| anchor_interval(id, it, space, n_params, options))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorLevels {
    /// `θ_0 < θ_1 < … < θ_P`.
    pub cut_points: Vec<f64>,
    /// Items of level `p` (1-based) at index `p − 1`.
    pub levels: Vec<Vec<String>>,
    /// Items without a feasible interval.
    pub unplaced: Vec<String>,
}

impl AnchorLevels {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// 1-based level of an item, if placed.
    pub fn level_of(&self, item: &str) -> Option<usize> {
        self.levels
            .iter()
            .position(|lvl| lvl.iter().any(|i| i == item))
            .map(|p| p + 1)
    }
}

/// Partitions the scale into performance levels.
///
/// Intervals are sorted by lower bound (ties by item id). The first lower
/// bound is `θ_0` and the first upper bound the running candidate. Each
/// subsequent interval either straddles the candidate (the candidate moves to
/// its upper bound), nests under it (no change), or starts at or beyond it, in
/// which case the candidate becomes the next cut point and that interval
/// opens a new level. The last candidate closes the top level.
pub fn find_levels(intervals: &[AnchorInterval]) -> Result<AnchorLevels> {
    let mut placed: Vec<(&str, f64, f64)> = intervals
        .iter()
        .filter_map(|iv| iv.bounds().map(|(l, h)| (iv.item.as_str(), l, h)))
        .collect();
    let unplaced = intervals
        .iter()
        .filter(|iv| iv.bounds().is_none())
        .map(|iv| iv.item.clone())
        .collect();
    placed.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let (&(first, lo, hi), rest) = placed.split_first().ok_or(IrtError::EmptyResult)?;
    let mut cut_points = vec![lo];
    let mut candidate = hi;
    let mut levels = vec![vec![first.to_string()]];
    for &(item, lower, upper) in rest {
        if lower < candidate && candidate < upper {
            candidate = upper;
        } else if candidate < upper {
            // candidate <= lower: a gap closes the current level
            cut_points.push(candidate);
            candidate = upper;
            levels.push(Vec::new());
        }
        levels.last_mut().expect("at least one level").push(item.to_string());
    }
    cut_points.push(candidate);

    Ok(AnchorLevels {
        cut_points,
        levels,
        unplaced,
    })
}
