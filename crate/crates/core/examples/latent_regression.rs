//! Regresses abilities on covariates with the items held at known values,
//! then reads a coefficient as an odds multiplier per item.

use bounded_irt::mcmc::McmcConfig;
use bounded_irt::regression::{fit_regression, unit_change_factor, RegressionSpec};
use bounded_irt::simulation::{simulate, spread_difficulties, AbilityDistribution, SimulationDesign};
use bounded_irt::AbilitySpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bounded_irt::Result<()> {
    let space = AbilitySpace::RealLine;
    let n = 1500;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let covariates: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![1.0, rng.random_range(-1.0..1.0)])
        .collect();
    let design = SimulationDesign::shared_dispersion(space, n, 1.0, &spread_difficulties(&space, 15), 9)?
        .with_abilities(AbilityDistribution::Regression {
            covariates: covariates.clone(),
            coefficients: vec![0.3, 0.5],
            residual_sd: 1.0,
        });
    let u = simulate(&design)?.responses;

    let spec = RegressionSpec::new(
        space,
        vec!["intercept".into(), "hours".into()],
        covariates,
        design.items.clone(),
    );
    let cfg = McmcConfig::default().schedule(1, 3000, 1000, 2).with_seed(2);
    let res = fit_regression(&u, &spec, &cfg)?;

    for c in &res.coefficients {
        println!("{:<10} {:>7.3} [{:.3}, {:.3}]", c.name, c.mean, c.q025, c.q975);
    }
    let s2 = &res.residual_variance;
    println!("sigma^2    {:>7.3} [{:.3}, {:.3}]", s2.mean, s2.q025, s2.q975);

    let hours = res.coefficient("hours").expect("named covariate").mean;
    for (k, it) in design.items.iter().enumerate().step_by(5) {
        println!(
            "item {}: one more unit of hours multiplies the odds factor by {:.3}",
            k + 1,
            unit_change_factor(it.a, hours, it.d)
        );
    }
    Ok(())
}
