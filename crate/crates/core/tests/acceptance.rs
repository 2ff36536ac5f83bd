//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines reach the terminal
//! directly. Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use bounded_irt::anchoring::{
    anchor_interval, anchor_targets, find_levels, AnchorInterval, AnchorOptions,
    InfeasibleReason,
};
use bounded_irt::io::report::FitReport;
use bounded_irt::mcmc::{fit, FitResult, McmcConfig, ModelSpec, PriorSpec};
use bounded_irt::model::{icc, icc_slope_at_b, logistic, logit, AbilitySpace, ItemParameters, Link};
use bounded_irt::regression::{fit_regression, RegressionSpec};
use bounded_irt::simulation::{
    recovery_report, simulate, spread_difficulties, AbilityDistribution, SimulationDesign,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_space(rng: &mut ChaCha8Rng, k: usize) -> AbilitySpace {
    match k % 6 {
        0 => AbilitySpace::RealLine,
        1 => AbilitySpace::PositiveHalfLine,
        f => AbilitySpace::BoundedInterval {
            upper: rng.random_range(1.0..10.0),
            link: Link::ALL[f - 2],
        },
    }
}

fn random_item(rng: &mut ChaCha8Rng, space: &AbilitySpace) -> ItemParameters {
    let b = match *space {
        AbilitySpace::RealLine => rng.random_range(-3.0..3.0),
        AbilitySpace::PositiveHalfLine => rng.random_range(-2.0f64..2.0).exp(),
        AbilitySpace::BoundedInterval { upper, .. } => upper * rng.random_range(0.02..0.98),
    };
    ItemParameters::new(rng.random_range(0.2..3.0), b, rng.random_range(0.0..0.5))
        .with_scaling(rng.random_range(0.5..2.5))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let space = random_space(&mut rng, k);
        let item = random_item(&mut rng, &space);
        let p = icc(item.b, &item, &space).unwrap();
        worst = worst.max((p - (1.0 + item.c) / 2.0).abs());
    }
    outcome(
        worst < 1e-12,
        format!("max |icc(b) - (1+c)/2| = {worst:.2e} over 1000 draws, all families and links"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let space = random_space(&mut rng, k);
        let item = random_item(&mut rng, &space);
        let y = space.transform(item.b);
        let (lo, hi) = (space.untransform(y - h), space.untransform(y + h));
        let fd = (icc(hi, &item, &space).unwrap() - icc(lo, &item, &space).unwrap()) / (hi - lo);
        let analytic = icc_slope_at_b(&item, &space).unwrap();
        worst = worst.max(((analytic - fd) / analytic).abs());
    }
    outcome(
        worst < 1e-6,
        format!("max relative error vs central difference (step 1e-5 in g-space) = {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r = rng.random_range(1.0..10.0);
        let bounded = AbilitySpace::BoundedInterval { upper: r, link: Link::Logit };
        let item = random_item(&mut rng, &AbilitySpace::RealLine);
        let theta = rng.random_range(-4.0..4.0);
        let p_real = icc(theta, &item, &AbilitySpace::RealLine).unwrap();
        let half = ItemParameters { b: item.b.exp(), ..item };
        let p_half = icc(theta.exp(), &half, &AbilitySpace::PositiveHalfLine).unwrap();
        let bnd = ItemParameters { b: r * logistic(item.b), ..item };
        let p_bnd = icc(r * logistic(theta), &bnd, &bounded).unwrap();
        worst = worst.max((p_real - p_half).abs()).max((p_real - p_bnd).abs());
    }

    // one standard-normal draw per subject, mapped onto each scale
    let items: Vec<ItemParameters> = (0..8)
        .map(|i| ItemParameters::new(1.1, -1.5 + 3.0 * i as f64 / 7.0, 0.1))
        .collect();
    let n = 400;
    let real = SimulationDesign {
        space: AbilitySpace::RealLine,
        n_subjects: n,
        items: items.clone(),
        abilities: AbilityDistribution::Normal { mean: 0.0, sd: 1.0 },
        seed: 33,
    };
    let half = SimulationDesign {
        space: AbilitySpace::PositiveHalfLine,
        items: items.iter().map(|it| ItemParameters { b: it.b.exp(), ..*it }).collect(),
        abilities: AbilityDistribution::LogNormal { meanlog: 0.0, sdlog: 1.0 },
        ..real.clone()
    };
    let bounded = SimulationDesign {
        space: AbilitySpace::BoundedInterval { upper: 5.0, link: Link::Logit },
        items: items
            .iter()
            .map(|it| ItemParameters { b: 5.0 * logistic(it.b), ..*it })
            .collect(),
        abilities: AbilityDistribution::Regression {
            covariates: vec![vec![1.0]; n],
            coefficients: vec![0.0],
            residual_sd: 1.0,
        },
        ..real.clone()
    };
    let u_real = simulate(&real).unwrap().responses;
    let same = u_real == simulate(&half).unwrap().responses
        && u_real == simulate(&bounded).unwrap().responses;
    outcome(
        worst < 1e-12 && same,
        format!(
            "max probability gap {worst:.2e} over 1000 draws; simulated matrices identical across scales: {same}"
        ),
    )
}

/// Gap between the anchor bounds and their probability targets, or `None`
/// when the item was rejected as outside the domain. A rejection must be
/// genuine: some exact target ability rounds onto the domain boundary.
fn target_gap(
    item: &ItemParameters,
    space: &AbilitySpace,
    n_params: u8,
    opts: &AnchorOptions,
    honest: &mut bool,
) -> Option<f64> {
    let (p_lo, p_hi) = anchor_targets(item.c, n_params, opts).unwrap();
    let iv = anchor_interval("x", item, space, n_params, opts).unwrap();
    match iv.bounds() {
        Some((lo, hi)) => Some(
            (icc(lo, item, space).unwrap() - p_lo)
                .abs()
                .max((icc(hi, item, space).unwrap() - p_hi).abs()),
        ),
        None => {
            let target = |p: f64| {
                let x = logit((p - item.c) / (1.0 - item.c)) / (item.d * item.a);
                space.untransform(space.transform(item.b) + x)
            };
            *honest &= iv.reason == Some(InfeasibleReason::OutsideDomain)
                && !(space.contains(target(p_lo)) && space.contains(target(p_hi)));
            None
        }
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let opts = AnchorOptions::default();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut at_boundary = 0;
    let mut honest = true;
    let mut infeasible_ok = true;
    for k in 0..600 {
        let space = random_space(&mut rng, k);
        let mut item = random_item(&mut rng, &space);
        // two-parameter items, then three-parameter items with c below 0.3
        item.c = 0.0;
        let two = target_gap(&item, &space, 2, &opts, &mut honest);
        item.c = rng.random_range(0.0..0.3);
        let three = target_gap(&item, &space, 3, &opts, &mut honest);
        for gap in [two, three] {
            match gap {
                Some(g) => {
                    worst = worst.max(g);
                    checked += 1;
                }
                None => at_boundary += 1,
            }
        }
        // and at or above 0.5
        item.c = rng.random_range(0.5..0.99);
        let iv = anchor_interval("x", &item, &space, 3, &opts).unwrap();
        infeasible_ok &= iv.reason == Some(InfeasibleReason::GuessingTooHigh)
            && anchor_targets(item.c, 3, &opts).is_err();
    }
    outcome(
        worst < 1e-10 && honest && infeasible_ok,
        format!(
            "max target gap {worst:.2e} over {checked} intervals (2PL and 3PL c<0.3); \
             {at_boundary} rejected with a target rounding onto the domain edge, all genuine: {honest}; \
             c >= 0.5 always infeasible: {infeasible_ok}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let fixture = [
        AnchorInterval::feasible("1", 0.1, 0.4),
        AnchorInterval::feasible("2", 0.15, 0.45),
        AnchorInterval::feasible("3", 1.0, 1.3),
    ];
    let expected = find_levels(&fixture).unwrap();
    let traced = expected.cut_points == vec![0.1, 0.45, 1.3]
        && expected.levels == vec![vec!["1".to_string(), "2".into()], vec!["3".to_string()]];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let invariant = perms.iter().all(|p| {
        let shuffled: Vec<_> = p.iter().map(|&k| fixture[k].clone()).collect();
        find_levels(&shuffled).unwrap() == expected
    });
    outcome(
        traced && invariant,
        format!(
            "cut points {:?}, levels {:?}; identical over 6 permutations: {invariant}",
            expected.cut_points, expected.levels
        ),
    )
}

const N_RECOVERY: usize = 2000;
const I_RECOVERY: usize = 22;

fn full_schedule(seed: u64) -> McmcConfig {
    McmcConfig::default().schedule(4, 10_000, 2_000, 5).with_seed(seed)
}

fn recovery_fit(space: AbilitySpace, beta: f64, sim_seed: u64, fit_seed: u64) -> (FitResult, String) {
    let design = SimulationDesign::shared_dispersion(
        space,
        N_RECOVERY,
        beta,
        &spread_difficulties(&space, I_RECOVERY),
        sim_seed,
    )
    .unwrap();
    let sim = simulate(&design).unwrap();
    let spec = ModelSpec::dispersion(space);
    let f = fit(&sim.responses, &spec, &PriorSpec::default_for(&space), &full_schedule(fit_seed))
        .unwrap();
    let report = recovery_report(&sim, &f).unwrap();
    let json = serde_json::to_string(&FitReport::new(&f, &sim.responses)).unwrap();
    let beta_hat = report.dispersion_estimate.unwrap();
    let rhat = f.max_rhat().unwrap();
    let pass = report.difficulty_correlation > 0.95 && (beta_hat - beta).abs() <= 0.15 && rhat < 1.1;
    let detail = format!(
        "n={N_RECOVERY}, I={I_RECOVERY}, 4x10000 (burn 2000, thin 5): corr(b) = {:.4}, beta = {beta_hat:.3} (truth {beta}), max R-hat = {rhat:.4}",
        report.difficulty_correlation
    );
    (f, format!("{}|{}|{}", pass, detail, json))
}

fn split(tagged: &str) -> (bool, String, String) {
    let mut parts = tagged.splitn(3, '|');
    let pass = parts.next().unwrap() == "true";
    let detail = parts.next().unwrap().to_string();
    let json = parts.next().unwrap().to_string();
    (pass, detail, json)
}

fn criterion_6(report_json: &mut Option<String>) -> Outcome {
    let (_, tagged) = recovery_fit(AbilitySpace::RealLine, 1.0, 6, 60);
    let (pass, detail, json) = split(&tagged);
    *report_json = Some(json);
    outcome(pass, detail)
}

fn criterion_7() -> Outcome {
    let space = AbilitySpace::BoundedInterval { upper: 5.0, link: Link::Logit };
    let (_, tagged) = recovery_fit(space, 0.6, 7, 70);
    let (pass, detail, _) = split(&tagged);
    outcome(pass, detail)
}

fn criterion_8() -> Outcome {
    let space = AbilitySpace::PositiveHalfLine;
    let (n, items) = (1000, 15);
    let mut wins = 0;
    let mut gaps = Vec::new();
    for seed in 0..10u64 {
        let design = SimulationDesign::shared_dispersion(
            space,
            n,
            1.0,
            &spread_difficulties(&space, items),
            800 + seed,
        )
        .unwrap();
        let u = simulate(&design).unwrap().responses;
        let cfg = McmcConfig::default().schedule(2, 4000, 1000, 5).with_seed(seed);
        let dic = |spec: ModelSpec| {
            fit(&u, &spec, &PriorSpec::default_for(&spec.space), &cfg)
                .unwrap()
                .deviance
                .dic
        };
        let (d1, d2) = (dic(ModelSpec::model_1a()), dic(ModelSpec::model_2a()));
        if d2 < d1 {
            wins += 1;
        }
        gaps.push(format!("{:.0}", d1 - d2));
    }
    outcome(
        wins >= 8,
        format!(
            "Model 2a data (n={n}, I={items}, 2x4000): 2a has lowest DIC in {wins}/10; DIC(1a)-DIC(2a) = [{}]",
            gaps.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let space = AbilitySpace::RealLine;
    let n = 2000;
    let items = SimulationDesign::shared_dispersion(
        space,
        n,
        1.0,
        &spread_difficulties(&space, I_RECOVERY),
        0,
    )
    .unwrap()
    .items;
    let mut excluded = 0;
    let mut covered = 0;
    let reps = 20;
    for rep in 0..reps as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + rep);
        let covariates: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let sex = f64::from(rng.random_bool(0.5));
                let grade = rng.random_range(6..=11) as f64 - 8.5;
                vec![1.0, sex, grade]
            })
            .collect();
        let design = SimulationDesign {
            space,
            n_subjects: n,
            items: items.clone(),
            abilities: AbilityDistribution::Regression {
                covariates: covariates.clone(),
                coefficients: vec![0.0, 0.0, -0.15],
                residual_sd: 1.0,
            },
            seed: 950 + rep,
        };
        let u = simulate(&design).unwrap().responses;
        let spec = RegressionSpec::new(
            space,
            vec!["intercept".into(), "sex".into(), "grade".into()],
            covariates,
            items.clone(),
        );
        let cfg = McmcConfig::default().schedule(1, 3000, 1000, 2).with_seed(rep);
        let res = fit_regression(&u, &spec, &cfg).unwrap();
        let grade = res.coefficient("grade").unwrap();
        if rep < 10 && grade.mean < 0.0 && grade.q975 < 0.0 {
            excluded += 1;
        }
        if res.coefficient("sex").unwrap().covers(0.0) {
            covered += 1;
        }
    }
    outcome(
        excluded >= 8 && covered * 5 >= reps * 4,
        format!(
            "grade effect -0.15 negative with 95% interval excluding 0 in {excluded}/10; zero sex effect covered in {covered}/{reps}"
        ),
    )
}

fn criterion_10(first: Option<&str>) -> Outcome {
    let Some(first) = first else {
        return outcome(false, "criterion 6 produced no report to compare".into());
    };
    let (_, tagged) = recovery_fit(AbilitySpace::RealLine, 1.0, 6, 60);
    let (_, _, json) = split(&tagged);
    let same = json == first;
    outcome(
        same,
        format!("repeated criterion-6 run, {} report bytes, bit-identical: {same}", json.len()),
    )
}

fn run(k: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed: Duration = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "criterion {k:>2} {} {name}: {detail} ({:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn main() {
    let mut report_json = None;
    let results = [
        run(1, "midpoint identity", criterion_1),
        run(2, "slope formulas", criterion_2),
        run(3, "reparametrization equivalence", criterion_3),
        run(4, "anchor interval closed form", criterion_4),
        run(5, "level finding", criterion_5),
        run(6, "parameter recovery, real line", || criterion_6(&mut report_json)),
        run(7, "parameter recovery, bounded (0, 5)", criterion_7),
        run(8, "DIC selection", criterion_8),
        run(9, "regression recovery", criterion_9),
        run(10, "determinism", || criterion_10(report_json.as_deref())),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
