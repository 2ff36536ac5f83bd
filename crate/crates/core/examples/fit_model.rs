//! Simulates a bounded-scale data set and fits it.
//!
//! cargo run --release --example fit_model

use bounded_irt::mcmc::{fit, McmcConfig, ModelSpec, PriorSpec};
use bounded_irt::simulation::{simulate, spread_difficulties, SimulationDesign};
use bounded_irt::{AbilitySpace, Link};

fn main() -> bounded_irt::Result<()> {
    let space = AbilitySpace::bounded(5.0, Link::Logit)?;
    let design =
        SimulationDesign::shared_dispersion(space, 800, 0.6, &spread_difficulties(&space, 12), 42)?;
    let sim = simulate(&design)?;

    let spec = ModelSpec::dispersion(space);
    let cfg = McmcConfig::default().schedule(2, 3000, 1000, 2).with_seed(1);
    let f = fit(&sim.responses, &spec, &PriorSpec::default_for(&space), &cfg)?;

    let beta = f.dispersion().expect("shared dispersion");
    println!("beta {:.3} [{:.3}, {:.3}] (truth 0.6)", beta.mean, beta.q025, beta.q975);
    for (p, truth) in f.difficulties().iter().zip(&design.items) {
        // truth is in ordinary curve form; the fitted b is on the dispersion scale
        println!("{:<8} {:>6.3}  sd {:.3}  truth-curve b {:.3}", p.name, p.mean, p.sd, truth.b);
    }
    println!(
        "DIC {:.1}  p_D {:.1}  max R-hat {:.3}",
        f.deviance.dic,
        f.deviance.p_d,
        f.max_rhat().unwrap_or(f64::NAN)
    );
    for a in &f.acceptance {
        println!("acceptance {:<12} {:.2}", a.block, a.rate);
    }
    Ok(())
}
