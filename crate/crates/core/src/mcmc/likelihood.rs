use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::model::{logistic, softplus, AbilitySpace, ItemParameters};

use super::{ModelParameters, ModelSpec, SlopeMode};

/// Per-item coefficients of the transformed-scale predictor
/// `x_ij = slope_i · g(θ_j) − offset_i`.
#[derive(Debug, Clone)]
pub(crate) struct ItemKernel {
    pub slope: Vec<f64>,
    pub offset: Vec<f64>,
    pub guessing: Vec<f64>,
}

impl ItemKernel {
    /// `slopes` are natural-scale (`[β]` or `a_i`), `gamma` are `g(b_i)`.
    pub fn new(spec: &ModelSpec, slopes: &[f64], gamma: &[f64], guessing: &[f64]) -> Self {
        let n_items = gamma.len();
        let (slope, offset) = match spec.slope {
            SlopeMode::SharedDispersion => (vec![slopes[0]; n_items], gamma.to_vec()),
            SlopeMode::PerItem => {
                let s: Vec<f64> = slopes.iter().map(|a| spec.scaling * a).collect();
                let t = s.iter().zip(gamma).map(|(s, g)| s * g).collect();
                (s, t)
            }
        };
        let guessing = if guessing.is_empty() {
            vec![0.0; n_items]
        } else {
            guessing.to_vec()
        };
        ItemKernel {
            slope,
            offset,
            guessing,
        }
    }

    pub fn from_parameters(spec: &ModelSpec, params: &ModelParameters) -> Self {
        let gamma: Vec<f64> = params
            .difficulties
            .iter()
            .map(|&b| spec.space.transform(b))
            .collect();
        Self::new(spec, &params.slopes, &gamma, &params.guessing)
    }

    /// Fixed curves in the ordinary `D·a·(g(θ) − g(b))` form.
    pub fn from_items(items: &[ItemParameters], space: &AbilitySpace) -> Self {
        ItemKernel {
            slope: items.iter().map(|it| it.logit_slope()).collect(),
            offset: items
                .iter()
                .map(|it| it.logit_slope() * space.transform(it.b))
                .collect(),
            guessing: items.iter().map(|it| it.c).collect(),
        }
    }

    /// Log-likelihood of one subject's row given `eta = g(θ_j)`.
    #[inline]
    pub fn row_log_likelihood(&self, row: &[u8], eta: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..row.len() {
            let x = self.slope[i] * eta - self.offset[i];
            total += cell_log_likelihood(row[i] == 1, x, self.guessing[i]);
        }
        total
    }
}

/// Bernoulli log-likelihood of one cell with logit-scale predictor `x` and
/// lower asymptote `c`.
#[inline]
pub(crate) fn cell_log_likelihood(positive: bool, x: f64, c: f64) -> f64 {
    if c == 0.0 {
        if positive {
            -softplus(-x)
        } else {
            -softplus(x)
        }
    } else if positive {
        (c + (1.0 - c) * logistic(x)).ln()
    } else {
        (-c).ln_1p() - softplus(x)
    }
}

/// `Σ_ij u_ij ln p_ij + (1 − u_ij) ln(1 − p_ij)` with `p_ij` from the item
/// characteristic curves, summed subject by subject.
pub fn log_likelihood(
    u: &ResponseMatrix,
    abilities: &[f64],
    items: &[ItemParameters],
    spec: &ModelSpec,
) -> Result<f64> {
    if abilities.len() != u.n_subjects() || items.len() != u.n_items() {
        return Err(IrtError::invalid(format!(
            "{} abilities and {} items for a {} x {} response matrix",
            abilities.len(),
            items.len(),
            u.n_subjects(),
            u.n_items()
        )));
    }
    let space = &spec.space;
    for it in items {
        it.validate(space)?;
    }
    for &t in abilities {
        space.check("ability θ", t)?;
    }
    let gb: Vec<f64> = items.iter().map(|it| space.transform(it.b)).collect();
    let mut total = 0.0;
    for (j, &theta) in abilities.iter().enumerate() {
        let gt = space.transform(theta);
        for (i, it) in items.iter().enumerate() {
            let x = it.logit_slope() * (gt - gb[i]);
            total += cell_log_likelihood(u.get(j, i), x, it.c);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{icc, AbilitySpace};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn midpoint_cells_contribute_log_half() {
        let u = ResponseMatrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 1]]).unwrap();
        let items: Vec<_> = [-0.5, 0.0, 1.2]
            .iter()
            .map(|&b| ItemParameters::new(1.3, b, 0.0))
            .collect();
        // θ_j = b_i for all pairs requires equal difficulties; use a shared b
        let same: Vec<_> = items.iter().map(|it| ItemParameters { b: 0.4, ..*it }).collect();
        let ll = log_likelihood(&u, &[0.4, 0.4], &same, &ModelSpec::model_1a()).unwrap();
        assert!((ll - 6.0 * 0.5f64.ln()).abs() < 1e-14);
        assert!(log_likelihood(&u, &[0.4], &items, &ModelSpec::model_1a()).is_err());
    }

    #[test]
    fn matches_cell_by_cell_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let space = AbilitySpace::BoundedInterval {
            upper: 5.0,
            link: crate::model::Link::Logit,
        };
        let spec = ModelSpec::model_3a(5.0);
        let rows: Vec<Vec<u8>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let u = ResponseMatrix::from_rows(&rows).unwrap();
        let theta: Vec<f64> = (0..5).map(|_| rng.random_range(0.2..4.8)).collect();
        let items: Vec<_> = (0..3)
            .map(|_| {
                ItemParameters::new(
                    rng.random_range(0.3..2.0),
                    rng.random_range(0.5..4.5),
                    rng.random_range(0.0..0.3),
                )
            })
            .collect();
        let mut oracle = 0.0;
        for j in 0..5 {
            for i in 0..3 {
                let p = icc(theta[j], &items[i], &space).unwrap();
                oracle += if rows[j][i] == 1 { p.ln() } else { (1.0 - p).ln() };
            }
        }
        let ll = log_likelihood(&u, &theta, &items, &spec).unwrap();
        assert!((ll - oracle).abs() < 1e-10, "{ll} vs {oracle}");
    }

    #[test]
    fn cell_forms_agree() {
        for &x in &[-30.0, -2.0, 0.0, 0.7, 25.0] {
            for &c in &[0.0, 0.2] {
                let p = c + (1.0 - c) * logistic(x);
                assert!((cell_log_likelihood(true, x, c) - p.ln()).abs() < 1e-12);
                if x < 20.0 {
                    assert!((cell_log_likelihood(false, x, c) - (1.0 - p).ln()).abs() < 1e-10);
                }
            }
        }
    }
}
