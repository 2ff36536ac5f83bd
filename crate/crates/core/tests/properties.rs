use bounded_irt::anchoring::{find_levels, AnchorInterval};
use bounded_irt::{icc, icc_invert, AbilitySpace, ItemParameters, Link};
use proptest::prelude::*;

fn space() -> impl Strategy<Value = AbilitySpace> {
    prop_oneof![
        Just(AbilitySpace::RealLine),
        Just(AbilitySpace::PositiveHalfLine),
        (1.0f64..20.0, 0usize..4).prop_map(|(r, k)| AbilitySpace::BoundedInterval {
            upper: r,
            link: Link::ALL[k],
        }),
    ]
}

/// A space, an item on it, and two interior abilities given as fractions of
/// the scale.
fn case() -> impl Strategy<Value = (AbilitySpace, ItemParameters, f64, f64)> {
    (space(), 0.2f64..3.0, 0.05f64..0.95, 0.0f64..0.6, 0.01f64..0.99, 0.01f64..0.99).prop_map(
        |(space, a, fb, c, f1, f2)| {
            let at = |f: f64| match space {
                AbilitySpace::RealLine => -4.0 + 8.0 * f,
                AbilitySpace::PositiveHalfLine => (-3.0 + 6.0 * f).exp(),
                AbilitySpace::BoundedInterval { upper, .. } => upper * f,
            };
            (space, ItemParameters::new(a, at(fb), c), at(f1), at(f2))
        },
    )
}

proptest! {
    #[test]
    fn icc_is_monotone_and_above_asymptote((space, item, t1, t2) in case()) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let (p_lo, p_hi) = (icc(lo, &item, &space).unwrap(), icc(hi, &item, &space).unwrap());
        prop_assert!(p_lo <= p_hi);
        prop_assert!(p_lo >= item.c && p_hi <= 1.0);
    }

    #[test]
    fn icc_inverts((space, item, t, _) in case()) {
        let p = icc(t, &item, &space).unwrap();
        prop_assume!(p > item.c + 1e-6 && p < 1.0 - 1e-6);
        let back = icc_invert(&item, &space, p).unwrap();
        prop_assert!((space.transform(back) - space.transform(t)).abs() < 1e-6);
    }

    #[test]
    fn levels_ignore_input_order(
        raw in prop::collection::vec((-3.0f64..3.0, 0.01f64..1.5), 1..12),
        seed in any::<u64>(),
    ) {
        let intervals: Vec<AnchorInterval> = raw
            .iter()
            .enumerate()
            .map(|(k, &(lo, w))| AnchorInterval::feasible(format!("i{k}"), lo, lo + w))
            .collect();
        let mut shuffled = intervals.clone();
        // deterministic Fisher-Yates from the proptest seed
        let mut s = seed;
        for k in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(k, (s >> 33) as usize % (k + 1));
        }
        let a = find_levels(&intervals).unwrap();
        let b = find_levels(&shuffled).unwrap();
        prop_assert_eq!(&a, &b);
        let placed: usize = a.levels.iter().map(Vec::len).sum();
        prop_assert_eq!(placed, intervals.len());
        prop_assert!(a.cut_points.windows(2).all(|w| w[0] < w[1]));
    }
}
