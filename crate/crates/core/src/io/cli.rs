//! The `birt` command line.
//!
//! Exit codes: 0 success, 2 usage, 65 bad input data, 70 numerical or
//! sampler failure, 74 file system, 78 configuration. Failures also print a
//! JSON [`ErrorReport`] on stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::anchoring::{anchor_intervals, find_levels, AnchorOptions};
use crate::error::{IrtError, Result};
use crate::io::report::{
    histogram, AnchorReport, ErrorReport, FitReport, HistogramReport, IccCurve, IccReport,
    RegressionReport, SimulationTruth, SCHEMA_VERSION,
};
use crate::io::{
    read_covariates, read_item_bank, read_json, read_responses, write_json, write_responses,
    Dichotomization, ItemBank, ItemRecord,
};
use crate::mcmc::{fit, GuessingMode, McmcConfig, ModelSpec, PriorSpec, SlopeMode};
use crate::model::{icc, icc_slope_at_b, AbilitySpace, ItemParameters, Link, DEFAULT_SCALING};
use crate::regression::{fit_regression, RegressionSpec};
use crate::simulation::{simulate, spread_difficulties, truth_parameters, SimulationDesign};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NUMERICAL: i32 = 70;
pub const EXIT_IO: i32 = 74;
pub const EXIT_CONFIG: i32 = 78;

#[derive(Debug, Parser)]
#[command(
    name = "birt",
    version,
    about = "Bayesian item response models on the real line, (0, inf) and (0, R)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model by MCMC and write fit.json and items.json.
    Fit(FitArgs),
    /// Anchor intervals and performance levels for an item bank.
    Anchor(AnchorArgs),
    /// Latent regression on covariates with fixed items.
    Regress(RegressArgs),
    /// Simulate responses from a shared-dispersion model.
    Simulate(SimulateArgs),
    /// Item characteristic curve points.
    Icc(IccArgs),
    /// Histogram of posterior-mean abilities from a fit report.
    Hist(HistArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelFamily {
    /// Abilities on the real line.
    #[value(name = "3pl")]
    ThreePl,
    /// Abilities on (0, inf) through the log.
    Log,
    /// Abilities on (0, R) through a link.
    Bounded,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value = "3pl")]
    pub model: ModelFamily,
    #[arg(long, default_value_t = Link::Logit)]
    pub link: Link,
    /// Upper bound of the bounded scale.
    #[arg(long = "R")]
    pub upper: Option<f64>,
}

impl SpaceArgs {
    pub fn space(&self) -> Result<AbilitySpace> {
        match (self.model, self.upper) {
            (ModelFamily::Bounded, Some(r)) => AbilitySpace::bounded(r, self.link),
            (ModelFamily::Bounded, None) => {
                Err(IrtError::config("--model bounded requires --R"))
            }
            (_, Some(_)) => Err(IrtError::config("--R applies only to --model bounded")),
            (ModelFamily::ThreePl, None) => Ok(AbilitySpace::RealLine),
            (ModelFamily::Log, None) => Ok(AbilitySpace::PositiveHalfLine),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct McmcArgs {
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
    /// Drawn at random and recorded in the report when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl McmcArgs {
    pub fn config(&self) -> Result<McmcConfig> {
        let seed = self.seed.unwrap_or_else(|| rand::rng().random());
        let cfg = McmcConfig::default()
            .schedule(self.chains, self.iters, self.burnin, self.thin)
            .with_seed(seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Response CSV: header of item ids, first column subject ids.
    #[arg(long)]
    pub data: PathBuf,
    /// Treat cells as 0/1/2 answers; answers at or above the threshold
    /// (default 2) become 1.
    #[arg(long, num_args = 0..=1, default_missing_value = "2", value_name = "THRESHOLD")]
    pub dichotomize: Option<u8>,
}

impl DataArgs {
    fn rule(&self) -> Result<Option<Dichotomization>> {
        match self.dichotomize {
            Some(t) if !(1..=2).contains(&t) => Err(IrtError::config(format!(
                "--dichotomize threshold {t} must be 1 or 2"
            ))),
            t => Ok(t.map(|threshold| Dichotomization { threshold })),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// One discrimination per item instead of a shared dispersion.
    #[arg(long)]
    pub per_item: bool,
    /// Estimate a lower asymptote per item.
    #[arg(long)]
    pub free_guessing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnchorArgs {
    /// Item bank JSON (as written by `fit` or `simulate`).
    #[arg(long)]
    pub items: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub n_params: u8,
    /// Offset for items with 0.35 <= c < 0.5.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RegressArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Item bank whose curves are held fixed.
    #[arg(long)]
    pub fix_items: PathBuf,
    /// Covariate CSV: header of names, first column subject ids.
    #[arg(long)]
    pub covariates: PathBuf,
    /// Do not prepend an intercept column.
    #[arg(long)]
    pub no_intercept: bool,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 2000)]
    pub subjects: usize,
    #[arg(long, default_value_t = 22)]
    pub items: usize,
    /// Shared dispersion; defaults to 1, or 0.6 on a bounded scale.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct IccArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Item bank JSON; overrides --a/--b/--c/--d.
    #[arg(long)]
    pub items: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_SCALING)]
    pub d: f64,
    /// Explicit abilities, comma separated; otherwise an even grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Directory for icc.json; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HistArgs {
    /// fit.json written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(err: &IrtError) -> i32 {
    match err {
        IrtError::Config(_) => EXIT_CONFIG,
        IrtError::Numerical(_) | IrtError::Initialization(_) => EXIT_NUMERICAL,
        IrtError::Io(_) => EXIT_IO,
        IrtError::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        _ => EXIT_DATA,
    }
}

fn error_code(err: &IrtError) -> &'static str {
    match err {
        IrtError::InvalidInput(_) => "invalid_input",
        IrtError::Domain { .. } => "domain",
        IrtError::NoSolution { .. } => "no_solution",
        IrtError::Config(_) => "config",
        IrtError::Initialization(_) => "initialization",
        IrtError::EmptyResult => "empty_result",
        IrtError::Parse { .. } | IrtError::Csv(_) | IrtError::Json(_) => "parse",
        IrtError::Numerical(_) => "numerical",
        IrtError::Io(_) => "io",
    }
}

pub fn error_report(err: &IrtError) -> ErrorReport {
    let (row, column) = match err {
        IrtError::Parse { row, column, .. } => (Some(*row), Some(*column)),
        _ => (None, None),
    };
    ErrorReport {
        schema_version: SCHEMA_VERSION,
        kind: ErrorReport::KIND.into(),
        code: error_code(err).into(),
        exit_code: exit_code(err),
        message: err.to_string(),
        row,
        column,
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run_fit(args: &FitArgs) -> Result<String> {
    let space = args.space.space()?;
    let spec = ModelSpec::dispersion(space)
        .with_slope(if args.per_item { SlopeMode::PerItem } else { SlopeMode::SharedDispersion })
        .with_guessing(if args.free_guessing { GuessingMode::Free } else { GuessingMode::Fixed });
    spec.validate()?;
    let priors = PriorSpec::default_for(&space);
    let cfg = args.mcmc.config()?;
    let rule = args.data.rule()?;
    let u = read_responses(&args.data.data, rule)?;

    let result = fit(&u, &spec, &priors, &cfg)?;
    let report = FitReport::new(&result, &u);
    prepare_out(&args.out)?;
    write_json(&args.out.join("fit.json"), &report)?;
    write_json(
        &args.out.join("items.json"),
        &ItemBank::new(space, u.item_ids(), &result.item_parameters()),
    )?;
    Ok(format!(
        "fit: DIC {:.1}, p_D {:.1}, max R-hat {} -> {}",
        report.deviance.dic,
        report.deviance.p_d,
        report.max_rhat.map_or("n/a".to_string(), |r| format!("{r:.3}")),
        args.out.display()
    ))
}

fn run_anchor(args: &AnchorArgs) -> Result<String> {
    let options = AnchorOptions { epsilon: args.epsilon };
    options.validate()?;
    let bank = read_item_bank(&args.items)?;
    let intervals = anchor_intervals(
        &bank.ids(),
        &bank.parameters(),
        &bank.space,
        args.n_params,
        &options,
    )?;
    let levels = find_levels(&intervals)?;
    let summary = format!(
        "anchor: {} levels, {} unplaced items -> {}",
        levels.n_levels(),
        levels.unplaced.len(),
        args.out.display()
    );
    let report = AnchorReport::new(bank.space, args.n_params, options, intervals, levels);
    prepare_out(&args.out)?;
    write_json(&args.out.join("anchor.json"), &report)?;
    Ok(summary)
}

fn run_regress(args: &RegressArgs) -> Result<String> {
    let cfg = args.mcmc.config()?;
    let rule = args.data.rule()?;
    let bank = read_item_bank(&args.fix_items)?;
    let u = read_responses(&args.data.data, rule)?;
    if bank.ids() != u.item_ids() {
        return Err(IrtError::invalid(
            "item ids in the bank do not match the response columns",
        ));
    }
    let mut cov = read_covariates(&args.covariates, &u)?;
    if !args.no_intercept {
        cov = cov.with_intercept();
    }
    let spec = RegressionSpec::new(bank.space, cov.names, cov.rows, bank.parameters());
    let result = fit_regression(&u, &spec, &cfg)?;
    let report = RegressionReport::new(&result, u.item_ids());
    prepare_out(&args.out)?;
    write_json(&args.out.join("regression.json"), &report)?;
    let coefs: Vec<String> = report
        .covariate_names
        .iter()
        .zip(&report.coefficients)
        .map(|(n, c)| format!("{n} {:.3} [{:.3}, {:.3}]", c.mean, c.q025, c.q975))
        .collect();
    Ok(format!("regress: {} -> {}", coefs.join("; "), args.out.display()))
}

fn run_simulate(args: &SimulateArgs) -> Result<String> {
    let space = args.space.space()?;
    let beta = args.beta.unwrap_or(match space {
        AbilitySpace::BoundedInterval { .. } => 0.6,
        _ => 1.0,
    });
    let seed = args.seed.unwrap_or_else(|| rand::rng().random());
    let difficulties = spread_difficulties(&space, args.items);
    let design = SimulationDesign::shared_dispersion(space, args.subjects, beta, &difficulties, seed)?;
    let sim = simulate(&design)?;
    let model = ModelSpec::dispersion(space);
    let parameters = truth_parameters(&model, &design.items, &sim.abilities)?;
    let truth = SimulationTruth {
        schema_version: SCHEMA_VERSION,
        kind: SimulationTruth::KIND.into(),
        design: design.clone(),
        model,
        parameters,
        item_ids: sim.responses.item_ids().to_vec(),
        subject_ids: sim.responses.subject_ids().to_vec(),
    };
    prepare_out(&args.out)?;
    write_responses(&args.out.join("responses.csv"), &sim.responses)?;
    write_json(&args.out.join("truth.json"), &truth)?;
    write_json(
        &args.out.join("items.json"),
        &ItemBank::new(space, sim.responses.item_ids(), &design.items),
    )?;
    Ok(format!(
        "simulate: {} x {} responses, seed {seed} -> {}",
        args.subjects,
        args.items,
        args.out.display()
    ))
}

fn default_range(space: &AbilitySpace) -> (f64, f64) {
    match *space {
        AbilitySpace::RealLine => (-4.0, 4.0),
        AbilitySpace::PositiveHalfLine => (0.05, 10.0),
        AbilitySpace::BoundedInterval { upper, .. } => (0.005 * upper, 0.995 * upper),
    }
}

fn run_icc(args: &IccArgs) -> Result<String> {
    let (space, ids, items) = match &args.items {
        Some(path) => {
            let bank = read_item_bank(path)?;
            (bank.space, bank.ids(), bank.parameters())
        }
        None => {
            let space = args.space.space()?;
            let b = args
                .b
                .ok_or_else(|| IrtError::config("--b is required without --items"))?;
            let item = ItemParameters::new(args.a, b, args.c).with_scaling(args.d);
            (space, vec!["item".to_string()], vec![item])
        }
    };
    let thetas: Vec<f64> = if args.theta.is_empty() {
        if args.points < 2 {
            return Err(IrtError::config("--points must be at least 2"));
        }
        let (lo, hi) = default_range(&space);
        let (lo, hi) = (args.from.unwrap_or(lo), args.to.unwrap_or(hi));
        if !(lo < hi) {
            return Err(IrtError::config("--from must be below --to"));
        }
        (0..args.points)
            .map(|k| lo + (hi - lo) * k as f64 / (args.points - 1) as f64)
            .collect()
    } else {
        args.theta.clone()
    };
    let curves = ids
        .iter()
        .zip(&items)
        .map(|(id, it)| {
            let points = thetas
                .iter()
                .map(|&t| icc(t, it, &space).map(|p| [t, p]))
                .collect::<Result<Vec<_>>>()?;
            Ok(IccCurve {
                item: ItemRecord::new(id.clone(), it),
                slope_at_b: icc_slope_at_b(it, &space)?,
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = IccReport {
        schema_version: SCHEMA_VERSION,
        kind: IccReport::KIND.into(),
        space,
        curves,
    };
    match &args.out {
        Some(dir) => {
            prepare_out(dir)?;
            write_json(&dir.join("icc.json"), &report)?;
            Ok(format!("icc: {} curves -> {}", report.curves.len(), dir.display()))
        }
        None => Ok(serde_json::to_string_pretty(&report)?),
    }
}

fn run_hist(args: &HistArgs) -> Result<String> {
    let fit: FitReport = read_json(&args.fit)?;
    fit.validate()?;
    let values = fit.ability_means();
    let report = HistogramReport {
        schema_version: SCHEMA_VERSION,
        kind: HistogramReport::KIND.into(),
        quantity: "theta posterior mean".into(),
        n: values.len(),
        bins: histogram(&values, args.bins)?,
    };
    prepare_out(&args.out)?;
    write_json(&args.out.join("hist.json"), &report)?;
    Ok(format!("hist: {} abilities in {} bins -> {}", report.n, args.bins, args.out.display()))
}

/// Runs one subcommand and returns the line to print on success.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Anchor(a) => run_anchor(a),
        Command::Regress(a) => run_regress(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Icc(a) => run_icc(a),
        Command::Hist(a) => run_hist(a),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(err) => {
            let record = error_report(&err);
            eprintln!(
                "{}",
                serde_json::to_string(&record).unwrap_or_else(|_| err.to_string())
            );
            record.exit_code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn space_flags() {
        let parse = |args: &[&str]| {
            let mut v = vec!["birt", "icc", "--b", "1"];
            v.extend_from_slice(args);
            match Cli::try_parse_from(v).unwrap().command {
                Command::Icc(a) => a.space.space(),
                _ => unreachable!(),
            }
        };
        assert_eq!(parse(&[]).unwrap(), AbilitySpace::RealLine);
        assert_eq!(parse(&["--model", "log"]).unwrap(), AbilitySpace::PositiveHalfLine);
        assert_eq!(
            parse(&["--model", "bounded", "--R", "5", "--link", "cloglog"]).unwrap(),
            AbilitySpace::BoundedInterval { upper: 5.0, link: Link::Cloglog }
        );
        assert!(matches!(parse(&["--model", "bounded"]), Err(IrtError::Config(_))));
        assert!(matches!(parse(&["--R", "5"]), Err(IrtError::Config(_))));
    }

    #[test]
    fn exit_codes_are_distinct() {
        let parse = IrtError::Parse { row: 1, column: 1, message: String::new() };
        let codes = [
            exit_code(&parse),
            exit_code(&IrtError::Config(String::new())),
            exit_code(&IrtError::Numerical(String::new())),
            exit_code(&IrtError::Io(std::io::Error::other("x"))),
        ];
        assert_eq!(codes, [65, 78, 70, 74]);
        let rec = error_report(&parse);
        assert_eq!((rec.row, rec.column, rec.code.as_str()), (Some(1), Some(1), "parse"));
    }
}
