//! Prints one item's curve on each ability scale, with its midpoint and slope.

use bounded_irt::{icc, icc_slope_at_b, AbilitySpace, ItemParameters, Link};

fn main() -> bounded_irt::Result<()> {
    let spaces = [
        (AbilitySpace::RealLine, 0.5),
        (AbilitySpace::PositiveHalfLine, 1.5),
        (AbilitySpace::bounded(5.0, Link::Logit)?, 2.5),
        (AbilitySpace::bounded(5.0, Link::Cloglog)?, 2.5),
    ];
    for (space, b) in spaces {
        let item = ItemParameters::new(1.2, b, 0.2);
        println!(
            "{space:?}\n  P(b) = {:.3}, slope at b = {:.4}",
            icc(b, &item, &space)?,
            icc_slope_at_b(&item, &space)?
        );
        let grid: Vec<f64> = match space {
            AbilitySpace::RealLine => (0..9).map(|k| -4.0 + k as f64).collect(),
            AbilitySpace::PositiveHalfLine => (0..9).map(|k| 0.25 * 1.6f64.powi(k)).collect(),
            AbilitySpace::BoundedInterval { upper, .. } => {
                (1..10).map(|k| upper * k as f64 / 10.0).collect()
            }
        };
        for t in grid {
            let p = icc(t, &item, &space)?;
            println!("  {t:>7.3}  {p:.3}  {}", "#".repeat((p * 40.0) as usize));
        }
    }
    Ok(())
}
