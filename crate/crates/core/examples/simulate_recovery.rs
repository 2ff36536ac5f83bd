//! A small recovery study: simulate, fit, compare with the truth.
//!
//! cargo run --release --example simulate_recovery -- 4

use bounded_irt::mcmc::{fit, McmcConfig, ModelSpec, ParameterClass, PriorSpec};
use bounded_irt::simulation::{recovery_report, simulate, spread_difficulties, SimulationDesign};
use bounded_irt::AbilitySpace;

fn main() -> bounded_irt::Result<()> {
    let reps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let space = AbilitySpace::RealLine;
    let spec = ModelSpec::model_1a();
    let priors = PriorSpec::default_for(&space);

    println!("rep  corr(b)  corr(theta)  beta   bias(b)  rmse(b)  coverage");
    for rep in 0..reps {
        let design =
            SimulationDesign::shared_dispersion(space, 1000, 1.0, &spread_difficulties(&space, 15), rep)?;
        let sim = simulate(&design)?;
        let cfg = McmcConfig::default().schedule(2, 2000, 500, 2).with_seed(100 + rep);
        let f = fit(&sim.responses, &spec, &priors, &cfg)?;
        let r = recovery_report(&sim, &f)?;
        let b = r.class(ParameterClass::Difficulty).expect("difficulties");
        println!(
            "{rep:>3}  {:.4}   {:.4}       {:.3}  {:>7.4}  {:.4}   {:.2}",
            r.difficulty_correlation,
            r.ability_correlation,
            r.dispersion_estimate.unwrap_or(f64::NAN),
            b.bias,
            b.rmse,
            r.coverage
        );
    }
    Ok(())
}
