//! Anchor intervals and performance levels for a small 3PL bank.

use bounded_irt::anchoring::{anchor_intervals, find_levels, AnchorOptions};
use bounded_irt::{AbilitySpace, ItemParameters};

fn main() -> bounded_irt::Result<()> {
    let space = AbilitySpace::RealLine;
    let bank = [
        ("easy", ItemParameters::new(1.1, -1.5, 0.15)),
        ("warmup", ItemParameters::new(0.9, -1.2, 0.2)),
        ("middle", ItemParameters::new(1.4, 0.0, 0.25)),
        ("tricky", ItemParameters::new(1.0, 0.3, 0.4)),
        ("hard", ItemParameters::new(1.3, 1.6, 0.1)),
        ("lucky", ItemParameters::new(1.0, 0.8, 0.55)),
    ];
    let ids: Vec<String> = bank.iter().map(|(id, _)| id.to_string()).collect();
    let items: Vec<ItemParameters> = bank.iter().map(|(_, it)| *it).collect();

    let opts = AnchorOptions { epsilon: 0.05 };
    let intervals = anchor_intervals(&ids, &items, &space, 3, &opts)?;
    for iv in &intervals {
        match iv.bounds() {
            Some((lo, hi)) => println!("{:<7} [{lo:.3}, {hi:.3}]", iv.item),
            None => println!("{:<7} infeasible: {:?}", iv.item, iv.reason),
        }
    }

    let levels = find_levels(&intervals)?;
    println!("cut points {:?}", levels.cut_points);
    for (k, items) in levels.levels.iter().enumerate() {
        println!("level {}: {}", k + 1, items.join(", "));
    }
    println!("unplaced: {:?}", levels.unplaced);
    Ok(())
}
