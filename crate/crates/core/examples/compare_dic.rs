//! Data generated on the half line, fitted with the real-line and log models.
//! The lower DIC should go to the log model.

use bounded_irt::mcmc::{fit, McmcConfig, ModelSpec, PriorSpec};
use bounded_irt::simulation::{simulate, spread_difficulties, SimulationDesign};
use bounded_irt::AbilitySpace;

fn main() -> bounded_irt::Result<()> {
    let space = AbilitySpace::PositiveHalfLine;
    let design =
        SimulationDesign::shared_dispersion(space, 600, 1.0, &spread_difficulties(&space, 12), 7)?;
    let u = simulate(&design)?.responses;
    let cfg = McmcConfig::default().schedule(2, 3000, 1000, 5).with_seed(3);

    for spec in [ModelSpec::model_1a(), ModelSpec::model_2a()] {
        let f = fit(&u, &spec, &PriorSpec::default_for(&spec.space), &cfg)?;
        let d = f.deviance;
        println!(
            "{:<20} Dbar {:>9.1}  Dhat {:>9.1}  p_D {:>6.1}  DIC {:>9.1}",
            format!("{:?}", spec.space),
            d.mean_deviance,
            d.deviance_at_mean,
            d.p_d,
            d.dic
        );
    }
    Ok(())
}
