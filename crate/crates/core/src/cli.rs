//! Command-line frontend: `synth | estimate | simulate | forecast | evaluate`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::evaluate::{
    coverage_from_quantiles, default_bins, event_reports, read_event_probabilities, reliability, score_events,
    write_coverage, write_event_probabilities, write_event_summary, write_event_table, write_reliability, CoverageHistogram,
    EventRule, WeightedFit,
};
use crate::physical::{extend_capacity, CapacitySchedule, FitOptions};
use crate::simulate::quantiles::{quantile_panel, read_quantile_csv, write_quantile_csv};
use crate::simulate::{run_ensemble, FailurePolicy, InitState, MarketModel, PathEnsemble, SimulationConfig};
use crate::timebase::HOURS_PER_DAY;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MODEL: i32 = 4;

const ARTIFACT_FORMAT: &str = "epsim-model";
const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "epsim", version, about = "Long-horizon probabilistic electricity price simulation")]
pub struct Cli {
    /// Worker threads for estimation and simulation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic market dataset with a known truth.
    Synth(SynthArgs),
    /// Fit the physical, planned and bid-group models on a dataset.
    Estimate(EstimateArgs),
    /// Simulate an ensemble and dump the raw price paths.
    Simulate(SimulateArgs),
    /// Simulate an ensemble and write quantiles and event probabilities.
    Forecast(SimulateArgs),
    /// Score a forecast against observed prices.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 730)]
    pub days: usize,
    /// Also write a continuation of the truth as `observed.csv`.
    #[arg(long)]
    pub observe_days: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FailureArg {
    FailFast,
    SubstituteMedian,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory holding `model.json` from `estimate`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1095)]
    pub horizon_days: usize,
    /// Longest negative-price run reported.
    #[arg(long = "run-length", default_value_t = 6)]
    pub run_length: usize,
    /// Installed wind capacity growth, GW per year.
    #[arg(long)]
    pub growth_wind: Option<f64>,
    /// Installed solar capacity growth, GW per year.
    #[arg(long)]
    pub growth_solar: Option<f64>,
    #[arg(long, value_enum, default_value_t = FailureArg::FailFast)]
    pub failure: FailureArg,
    /// Count zero prices as negative.
    #[arg(long)]
    pub include_zero: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Output directory of `forecast`.
    #[arg(long)]
    pub forecast: PathBuf,
    /// Observed prices `date,hour,price`.
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Run length scored in the reliability table.
    #[arg(long = "run-length", default_value_t = 1)]
    pub run_length: usize,
    /// Equal-count bins over nonzero forecast probabilities.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Seed for randomized coverage ties.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub include_zero: bool,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Run(e) if e.is_model_error() => EXIT_MODEL,
            Failure::Run(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Fitted market plus everything a forecast needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub crate_version: String,
    pub dataset_seed: Option<u64>,
    pub model: MarketModel,
    pub init: InitState,
    pub capacity: CapacitySchedule,
    /// Last observed day of prices, for run stitching at the origin.
    pub history_prices: Option<Vec<f64>>,
}

impl ModelArtifact {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let a: ModelArtifact = serde_json::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if a.format != ARTIFACT_FORMAT || a.version != ARTIFACT_VERSION {
            return Err(Error::Model(format!(
                "{}: unsupported artifact {} version {}",
                path.display(),
                a.format,
                a.version
            )));
        }
        a.model.validate()?;
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Provenance written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub crate_version: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_days: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usable_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_paths: Vec<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub growth_gw_per_year: BTreeMap<String, f64>,
    #[serde(default)]
    pub include_zero: bool,
}

impl RunRecord {
    fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            paths: None,
            horizon_days: None,
            first_date: None,
            usable_paths: None,
            failed_paths: Vec::new(),
            growth_gw_per_year: BTreeMap::new(),
            include_zero: false,
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn require_file(path: &Path, what: &str) -> CmdResult {
    if !path.is_file() {
        return Err(Failure::Usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("epsim: {f}");
            f.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> CmdResult {
    let work = || match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    };
    match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Usage(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

pub fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let spec = SyntheticSpec::reference(a.seed)?;
    let market = data::generate_synthetic(&spec, a.days)?;
    for w in &market.warnings {
        eprintln!("warning: {w}");
    }
    data::write_dataset(&market.dataset, &a.out)?;
    if let Some(days) = a.observe_days {
        let next = data::continue_synthetic(&spec, &market.state, days, 0)?;
        let prices = next.dataset.prices.as_ref().expect("synthetic prices");
        crate::data::io::write_prices(&a.out.join("observed.csv"), next.dataset.origin(), 0, prices)?;
    }
    let p = market.dataset.prices.as_ref().expect("synthetic prices");
    let neg = p.iter().filter(|&&x| x < 0.0).count() as f64 / p.len() as f64;
    eprintln!(
        "wrote {} days from {} to {} ({:.2}% negative hours)",
        a.days,
        market.dataset.origin(),
        a.out.display(),
        100.0 * neg
    );
    Ok(())
}

fn summarize(model: &MarketModel) -> serde_json::Value {
    let physical: Vec<_> = model
        .physical
        .equations
        .iter()
        .map(|e| serde_json::json!({"equation": e.name, "active": e.df(), "bic": e.bic, "lambda": e.lambda}))
        .collect();
    let panels = |m: &crate::expectations::ExpectationModel| -> Vec<serde_json::Value> {
        m.spec
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let eqs: Vec<_> = (0..m.hours_per_day()).map(|h| m.equation(i, h)).collect();
                serde_json::json!({
                    "series": t,
                    "active_per_hour": eqs.iter().map(|e| e.df()).collect::<Vec<_>>(),
                    "bic_per_hour": eqs.iter().map(|e| e.bic).collect::<Vec<_>>(),
                })
            })
            .collect()
    };
    serde_json::json!({
        "archive_days": model.n_archive_days(),
        "supply_groups": model.supply.n_groups(),
        "demand_groups": model.demand.n_groups(),
        "physical": physical,
        "planned": panels(&model.planned),
        "bid_groups": panels(&model.bids),
    })
}

pub fn estimate(ds: &Dataset) -> Result<ModelArtifact> {
    let fit = data::fit_market(ds, &FitOptions::default())?;
    let init = fit.init_state(ds)?;
    let history_prices = ds.prices.as_ref().map(|p| p[p.len() - HOURS_PER_DAY..].to_vec());
    Ok(ModelArtifact {
        format: ARTIFACT_FORMAT.into(),
        version: ARTIFACT_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        dataset_seed: ds.seed,
        model: fit.model,
        init,
        capacity: ds.capacity.clone(),
        history_prices,
    })
}

pub fn cmd_estimate(a: &EstimateArgs) -> CmdResult {
    require_file(&a.manifest, "manifest")?;
    let ds = data::ingest(&a.manifest)?;
    eprintln!("dataset: {} days from {}", ds.n_days(), ds.origin());
    let artifact = estimate(&ds)?;
    out_dir(&a.out)?;
    artifact.save(&a.out.join("model.json"))?;
    let summary = summarize(&artifact.model);
    write_json(&a.out.join("estimate.json"), &summary)?;
    for e in &artifact.model.physical.equations {
        eprintln!("physical {:<16} active {:>4}  bic {:.1}", e.name, e.df(), e.bic);
    }
    for (name, m) in [("planned", &artifact.model.planned), ("bids", &artifact.model.bids)] {
        for (i, t) in m.spec.targets.iter().enumerate() {
            let active: usize = (0..m.hours_per_day()).map(|h| m.equation(i, h).df()).sum();
            eprintln!("{name} {t:<24} active {active:>5} over {} hours", m.hours_per_day());
        }
    }
    Ok(())
}

fn load_artifact(dir: &Path) -> std::result::Result<ModelArtifact, Failure> {
    let path = if dir.is_dir() { dir.join("model.json") } else { dir.to_path_buf() };
    require_file(&path, "model artifact")?;
    Ok(ModelArtifact::load(&path)?)
}

fn simulation(a: &SimulateArgs, command: &str) -> std::result::Result<(ModelArtifact, PathEnsemble, RunRecord), Failure> {
    if a.paths == 0 || a.horizon_days == 0 {
        return Err(Failure::Usage("--paths and --horizon-days must be at least 1".into()));
    }
    let art = load_artifact(&a.model)?;
    let mut cfg = SimulationConfig::new(a.paths, a.horizon_days, a.seed);
    if let Some(g) = a.growth_wind {
        cfg.growth_gw_per_year.insert("wind".into(), g);
    }
    if let Some(g) = a.growth_solar {
        cfg.growth_gw_per_year.insert("solar".into(), g);
    }
    cfg.failure = match a.failure {
        FailureArg::FailFast => FailurePolicy::FailFast,
        FailureArg::SubstituteMedian => FailurePolicy::SubstituteMedian,
    };
    let capacity = extend_capacity(&art.capacity, a.horizon_days, &cfg.growth_gw_per_year)?;
    let ens = run_ensemble(&art.model, &art.init, &capacity, &cfg)?;
    let mut rec = RunRecord::new(command, a.seed);
    rec.paths = Some(a.paths);
    rec.horizon_days = Some(a.horizon_days);
    rec.first_date = Some(ens.date(0));
    rec.usable_paths = Some(ens.n_usable());
    rec.failed_paths = ens.failed();
    rec.growth_gw_per_year = cfg.growth_gw_per_year.clone();
    rec.include_zero = a.include_zero;
    if !rec.failed_paths.is_empty() {
        eprintln!("{} of {} paths failed", rec.failed_paths.len(), a.paths);
    }
    Ok((art, ens, rec))
}

/// Raw ensemble: `ensemble.json` metadata and `prices.bin`, little-endian
/// f64 values path-major and day-major within a path.
pub fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let (_, ens, rec) = simulation(a, "simulate")?;
    out_dir(&a.out)?;
    let path = a.out.join("prices.bin");
    let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = std::io::BufWriter::new(f);
    for p in &ens.paths {
        for v in &p.prices {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let status: Vec<_> = ens.paths.iter().map(|p| p.status).collect();
    write_json(&a.out.join("ensemble.json"), &serde_json::json!({"run": rec, "status": status}))?;
    eprintln!("simulated {} paths x {} days", a.paths, a.horizon_days);
    Ok(())
}

pub fn cmd_forecast(a: &SimulateArgs) -> CmdResult {
    if a.run_length == 0 {
        return Err(Failure::Usage("--run-length must be at least 1".into()));
    }
    let (art, ens, rec) = simulation(a, "forecast")?;
    out_dir(&a.out)?;
    let panel = quantile_panel(&ens, &crate::evaluate::percentiles())?;
    write_quantile_csv(&a.out.join("quantiles.csv"), &ens, &panel)?;
    let rule = EventRule {
        include_zero: a.include_zero,
    };
    let reports = event_reports(&ens, a.run_length, art.history_prices.as_deref(), &[], rule)?;
    write_event_probabilities(&a.out.join("event_probabilities.csv"), &ens, &reports)?;
    write_event_table(&a.out.join("table1.csv"), &reports)?;
    write_event_summary(&a.out.join("event_summary.csv"), &reports)?;
    write_json(&a.out.join("run.json"), &rec)?;
    for r in &reports {
        eprintln!("c={} mean forecast probability {:.3}%", r.c, 100.0 * r.mean_probability);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationRecord {
    run: RunRecord,
    forecast_seed: u64,
    overlap_hours: usize,
    run_length: usize,
    reliability_fit: Option<WeightedFit>,
    coverage: CoverageHistogram,
    coverage_cells_within_band: usize,
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CmdResult {
    if a.run_length == 0 || a.bins == 0 {
        return Err(Failure::Usage("--run-length and --bins must be at least 1".into()));
    }
    require_file(&a.observed, "observed prices")?;
    let run_path = a.forecast.join("run.json");
    require_file(&run_path, "forecast record")?;
    let text = std::fs::read_to_string(&run_path).map_err(|e| Error::io(&run_path, e))?;
    let rec: RunRecord = serde_json::from_str(&text).map_err(|e| Error::Schema {
        file: run_path.display().to_string(),
        detail: e.to_string(),
    })?;
    let (q0, panel) = read_quantile_csv(&a.forecast.join("quantiles.csv"))?;
    let (e0, probs) = read_event_probabilities(&a.forecast.join("event_probabilities.csv"))?;
    if q0 != e0 {
        return Err(Failure::Run(Error::InvalidInput("quantile and event files start on different dates".into())));
    }
    let (o0, observed) = data::io::read_prices(&a.observed)?;
    let n = panel.values[0].len();
    // hour offset of the first forecast hour within the observed series
    let shift = (q0 - o0).num_days() * HOURS_PER_DAY as i64;
    let from = shift.max(0) as usize;
    let to = (shift + n as i64).min(observed.len() as i64);
    if to <= from as i64 {
        return Err(Failure::Run(Error::InvalidInput("observed prices do not overlap the forecast".into())));
    }
    let to = to as usize;
    let t0 = (from as i64 - shift) as usize;
    let overlap = &observed[from..to];
    let history = (from > 0).then(|| &observed[..from]);
    let rule = EventRule {
        include_zero: a.include_zero,
    };

    let mut reports = Vec::new();
    for (c, p) in &probs {
        let mut r = score_events(*c, &p[t0..t0 + overlap.len()], overlap, history, rule)?;
        r.n_paths = rec.usable_paths.unwrap_or(0);
        reports.push(r);
    }
    let scored = reports
        .iter()
        .find(|r| r.c == a.run_length)
        .ok_or_else(|| Failure::Usage(format!("forecast has no probabilities for run length {}", a.run_length)))?;
    let table = reliability(scored, &default_bins(&scored.probabilities, a.bins))?;
    let points: Vec<(usize, f64)> = overlap.iter().enumerate().map(|(k, &y)| (t0 + k, y)).collect();
    let cov = coverage_from_quantiles(&panel, &points, a.seed)?;

    out_dir(&a.out)?;
    write_reliability(&a.out.join("reliability.csv"), &table)?;
    write_coverage(&a.out.join("coverage.csv"), &cov)?;
    write_event_table(&a.out.join("table1.csv"), &reports)?;
    write_event_summary(&a.out.join("event_summary.csv"), &reports)?;
    let mut run = RunRecord::new("evaluate", a.seed);
    run.include_zero = a.include_zero;
    let within = cov.cells_within_band();
    write_json(
        &a.out.join("evaluation.json"),
        &EvaluationRecord {
            run,
            forecast_seed: rec.seed,
            overlap_hours: overlap.len(),
            run_length: a.run_length,
            reliability_fit: table.fit,
            coverage_cells_within_band: within,
            coverage: cov,
        },
    )?;
    match table.fit {
        Some(f) => eprintln!("reliability c={}: slope {:.3} intercept {:.4} R2 {:.3}", a.run_length, f.slope, f.intercept, f.r_squared),
        None => eprintln!("reliability c={}: fit undefined (single bin)", a.run_length),
    }
    eprintln!("coverage: {within} of 100 cells inside the binomial 99% band over {} hours", overlap.len());
    Ok(())
}
