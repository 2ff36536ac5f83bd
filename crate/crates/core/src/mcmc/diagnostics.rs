use super::samples::{sample_variance, stable_mean, PosteriorSamples};

/// Fewest retained draws per chain for which R-hat is reported.
pub const MIN_DRAWS_FOR_RHAT: usize = 10;

/// Potential scale reduction factor of one parameter across equal-length chains.
///
/// Returns 1 when the pooled variance is zero and `+∞` when chains are
/// individually constant but disagree.
pub fn potential_scale_reduction(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let means: Vec<f64> = chains.iter().map(|c| stable_mean(&c[..n])).collect();
    let within = chains.iter().map(|c| sample_variance(&c[..n])).sum::<f64>() / m as f64;
    let between_over_n = sample_variance(&means);
    let nf = n as f64;
    let pooled = (nf - 1.0) / nf * within + between_over_n;
    if pooled == 0.0 {
        return 1.0;
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    (pooled / within).sqrt()
}

/// R-hat for every parameter, or `None` when fewer than two chains or fewer
/// than [`MIN_DRAWS_FOR_RHAT`] draws per chain are available.
pub fn gelman_rubin(samples: &PosteriorSamples) -> Option<Vec<f64>> {
    if samples.n_chains() < 2 || samples.draws_per_chain() < MIN_DRAWS_FOR_RHAT {
        return None;
    }
    Some(
        (0..samples.n_params())
            .map(|col| {
                let traces: Vec<Vec<f64>> = (0..samples.n_chains())
                    .map(|c| samples.chain_trace(c, col))
                    .collect();
                potential_scale_reduction(&traces)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{GuessingMode, ParameterLayout, SlopeMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn samples_from(traces: Vec<Vec<f64>>) -> PosteriorSamples {
        // a layout with exactly one column: the dispersion parameter, no items/subjects
        let layout = ParameterLayout {
            slope: SlopeMode::SharedDispersion,
            guessing: GuessingMode::Fixed,
            items: vec![],
            subjects: vec![],
        };
        PosteriorSamples::new(layout, traces)
    }

    #[test]
    fn identical_constant_chains_give_one() {
        let s = samples_from(vec![vec![2.5; 50], vec![2.5; 50]]);
        assert_eq!(gelman_rubin(&s).unwrap(), vec![1.0]);
    }

    #[test]
    fn same_distribution_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let traces = (0..4)
            .map(|_| (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let r = gelman_rubin(&samples_from(traces)).unwrap()[0];
        assert!(r < 1.1, "{r}");
    }

    #[test]
    fn offset_chain_diverges() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..500)
            .map(|_| 10.0 + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let r = gelman_rubin(&samples_from(vec![a, b])).unwrap()[0];
        assert!(r > 5.0, "{r}");
    }

    #[test]
    fn unavailable_for_single_chain_or_short_runs() {
        assert!(gelman_rubin(&samples_from(vec![vec![1.0; 100]])).is_none());
        assert!(gelman_rubin(&samples_from(vec![vec![1.0; 5], vec![1.0; 5]])).is_none());
    }
}
