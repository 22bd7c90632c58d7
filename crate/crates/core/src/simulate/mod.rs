//! Residual-bootstrap ensemble: physical stepping, expectation formation,
//! bid-group stepping and clearing, day by day along independent paths.

pub mod quantiles;

pub use quantiles::{quantile_panel, write_quantile_csv, QuantilePanel};

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{clear_curves, GroupScheme, ReconstructedCurve, Side};
use crate::error::{Error, Result};
use crate::expectations::{step_panels, DayHourPanel, ExpectationModel, MAX_LAG_DAYS};
use crate::physical::{physical_state, step_physical_with, CapacitySchedule, PhysicalModel, PhysicalState, MEMORY_HOURS};
use crate::timebase::{HourlySeries, HOURS_PER_DAY};

/// Every fitted component of the market, sharing one residual archive
/// index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketModel {
    pub physical: PhysicalModel,
    /// Planned processes; drivers are physical process names.
    pub planned: ExpectationModel,
    /// Bid groups, supply groups first; drivers are the planned series.
    pub bids: ExpectationModel,
    pub supply: GroupScheme<f64>,
    pub demand: GroupScheme<f64>,
}

impl MarketModel {
    pub fn new(
        physical: PhysicalModel,
        planned: ExpectationModel,
        bids: ExpectationModel,
        supply: GroupScheme<f64>,
        demand: GroupScheme<f64>,
    ) -> Result<Self> {
        let m = Self {
            physical,
            planned,
            bids,
            supply,
            demand,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for d in &self.planned.spec.drivers {
            self.physical.graph.index(d)?;
        }
        if self.bids.spec.drivers != self.planned.spec.targets {
            return Err(Error::Model("bid equations must be driven by exactly the planned series".into()));
        }
        if self.supply.side != Side::Supply || self.demand.side != Side::Demand {
            return Err(Error::Model("group schemes must be (supply, demand)".into()));
        }
        let groups = self.supply.n_groups() + self.demand.n_groups();
        if self.bids.spec.targets.len() != groups {
            return Err(Error::Model(format!(
                "{} bid equations for {groups} groups",
                self.bids.spec.targets.len()
            )));
        }
        if self.planned.hours_per_day() != HOURS_PER_DAY || self.bids.hours_per_day() != HOURS_PER_DAY {
            return Err(Error::Model("day-hour systems must have 24 hours".into()));
        }
        let n = self.physical.n_archive_days();
        let aligned = [&self.planned, &self.bids]
            .iter()
            .all(|m| m.n_archive_days() == n && m.fit_start_day == self.physical.fit_start_day);
        if !aligned || n == 0 {
            return Err(Error::Model("residual archives are not aligned on a common window".into()));
        }
        Ok(())
    }

    pub fn n_archive_days(&self) -> usize {
        self.physical.n_archive_days()
    }

    fn truth_sources(&self) -> Vec<usize> {
        self.planned
            .spec
            .drivers
            .iter()
            .map(|d| self.physical.graph.index(d).expect("validated"))
            .collect()
    }
}

/// Group names used for bid panels.
pub fn group_names(supply: usize, demand: usize) -> Vec<String> {
    (0..supply)
        .map(|g| format!("supply_{g:03}"))
        .chain((0..demand).map(|g| format!("demand_{g:03}")))
        .collect()
}

/// State from which every path starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitState {
    pub physical: PhysicalState,
    /// Absolute truth panels of the planned series' counterparts.
    pub truth: Vec<DayHourPanel>,
    pub planned: Vec<DayHourPanel>,
    pub groups: Vec<DayHourPanel>,
}

impl InitState {
    /// Last days of history, enough for every memory.
    pub fn from_history(
        model: &MarketModel,
        physical: &[HourlySeries],
        capacity: &CapacitySchedule,
        planned: &[DayHourPanel],
        groups: &[DayHourPanel],
    ) -> Result<Self> {
        let mut state = physical_state(&model.physical.graph, physical, capacity)?;
        let end = state.next_day();
        let truth: Vec<DayHourPanel> = model
            .truth_sources()
            .into_iter()
            .zip(&model.planned.spec.drivers)
            .map(|(j, name)| DayHourPanel::from_day_major(name.clone(), state.first_day, HOURS_PER_DAY, &state.absolute[j]))
            .collect::<Result<_>>()?;
        let keep = MAX_LAG_DAYS + 1;
        state.truncate_front(keep.max(MEMORY_HOURS.div_ceil(HOURS_PER_DAY)));
        let mut init = Self {
            physical: state,
            truth,
            planned: planned.to_vec(),
            groups: groups.to_vec(),
        };
        for p in init.truth.iter_mut().chain(&mut init.planned).chain(&mut init.groups) {
            if p.next_day() != end {
                return Err(Error::InvalidInput(format!(
                    "history of {} ends on day {}, physical history on day {}",
                    p.name,
                    p.next_day() - 1,
                    end - 1
                )));
            }
            p.truncate_front(keep);
        }
        init.check(model)?;
        Ok(init)
    }

    pub fn next_day(&self) -> i64 {
        self.physical.next_day()
    }

    fn check(&self, model: &MarketModel) -> Result<()> {
        let day = self.next_day();
        if self.physical.n_days() * HOURS_PER_DAY < MEMORY_HOURS {
            return Err(Error::InsufficientHistory {
                what: "initial physical hours".into(),
                required: MEMORY_HOURS,
                available: self.physical.n_days() * HOURS_PER_DAY,
            });
        }
        let names = |ps: &[DayHourPanel]| ps.iter().map(|p| p.name.clone()).collect::<Vec<_>>();
        if names(&self.planned) != model.planned.spec.targets || names(&self.groups) != model.bids.spec.targets {
            return Err(Error::InvalidInput("initial panels do not match the model's series".into()));
        }
        for p in self.truth.iter().chain(&self.planned).chain(&self.groups) {
            if p.next_day() != day || p.first_day > day - MAX_LAG_DAYS as i64 {
                return Err(Error::InsufficientHistory {
                    what: format!("initial days of {}", p.name),
                    required: MAX_LAG_DAYS,
                    available: p.n_days(),
                });
            }
        }
        Ok(())
    }
}

/// Treatment of paths with non-finite values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Drop the path and report it.
    #[default]
    FailFast,
    /// Fill the failed path from the failure day on with the cross-path
    /// median of the successful paths.
    SubstituteMedian,
}

/// Source of the residual day-vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShockMode {
    /// One archive day drawn uniformly per simulated day, shared by all
    /// equations.
    #[default]
    Bootstrap,
    /// All residuals zero.
    Zero,
    /// Archive days in order, starting at `first`.
    Replay { first: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub horizon_days: usize,
    pub seed: u64,
    /// Capacity growth in GW per year by source, applied by the caller
    /// through [`crate::physical::extend_capacity`].
    pub growth_gw_per_year: BTreeMap<String, f64>,
    pub failure: FailurePolicy,
    pub shocks: ShockMode,
    /// Retain physical, planned and group panels per path.
    pub keep_panels: bool,
}

impl SimulationConfig {
    pub fn new(n_paths: usize, horizon_days: usize, seed: u64) -> Self {
        Self {
            n_paths,
            horizon_days,
            seed,
            growth_gw_per_year: BTreeMap::new(),
            failure: FailurePolicy::FailFast,
            shocks: ShockMode::Bootstrap,
            keep_panels: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.horizon_days == 0 {
            return Err(Error::InvalidInput("need at least one path and one horizon day".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PathStatus {
    Ok,
    /// Dropped after a non-finite value on horizon day `day`.
    Failed { day: usize },
    /// Filled with the ensemble median from horizon day `day` on.
    Substituted { day: usize },
}

/// Day-major simulated panels of one path, absolute units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathPanels {
    pub physical: Vec<Vec<f64>>,
    pub planned: Vec<Vec<f64>>,
    pub groups: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub status: PathStatus,
    /// Day-major clearing prices, `horizon_days * 24` values (NaN after a
    /// failure under fail-fast).
    pub prices: Vec<f64>,
    /// Bid-group values clamped at zero.
    pub clamped: usize,
    /// Degenerate clearings (cap, floor or flat intersection).
    pub degenerate: usize,
    pub panels: Option<PathPanels>,
}

impl PathResult {
    pub fn is_usable(&self) -> bool {
        !matches!(self.status, PathStatus::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub origin: NaiveDate,
    /// Day index of the first simulated day.
    pub first_day: i64,
    pub horizon_days: usize,
    pub seed: u64,
    pub paths: Vec<PathResult>,
}

impl PathEnsemble {
    /// Ensemble of externally produced day-major price paths.
    pub fn from_prices(origin: NaiveDate, first_day: i64, seed: u64, prices: Vec<Vec<f64>>) -> Result<Self> {
        let n = prices.first().map_or(0, |p| p.len());
        if n == 0 || !n.is_multiple_of(HOURS_PER_DAY) || prices.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidInput("price paths must share a whole number of days".into()));
        }
        Ok(Self {
            origin,
            first_day,
            horizon_days: n / HOURS_PER_DAY,
            seed,
            paths: prices
                .into_iter()
                .map(|prices| PathResult {
                    status: PathStatus::Ok,
                    prices,
                    clamped: 0,
                    degenerate: 0,
                    panels: None,
                })
                .collect(),
        })
    }

    pub fn n_hours(&self) -> usize {
        self.horizon_days * HOURS_PER_DAY
    }

    /// Paths entering quantiles and event probabilities.
    pub fn usable(&self) -> impl Iterator<Item = &PathResult> {
        self.paths.iter().filter(|p| p.is_usable())
    }

    pub fn n_usable(&self) -> usize {
        self.usable().count()
    }

    pub fn failed(&self) -> Vec<usize> {
        self.paths
            .iter()
            .enumerate()
            .filter(|(_, p)| !matches!(p.status, PathStatus::Ok))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn date(&self, horizon_day: usize) -> NaiveDate {
        self.origin + chrono::Duration::days(self.first_day + horizon_day as i64)
    }
}

/// Keyed generator for one (path, day): reproducible under any schedule.
fn day_rng(seed: u64, path: usize, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng.set_word_pos(day as u128 * 64);
    rng
}

/// Draws the archive day used on horizon day `day` of `path`.
pub fn archive_draw(seed: u64, path: usize, day: usize, archive_days: usize) -> usize {
    day_rng(seed, path, day).random_range(0..archive_days)
}

/// Calendar parts and capacities shared by all paths.
struct Horizon {
    deterministic: Vec<Vec<[f64; HOURS_PER_DAY]>>,
    factors: Vec<Vec<f64>>,
}

impl Horizon {
    fn new(model: &PhysicalModel, capacity: &CapacitySchedule, first_day: i64, days: usize) -> Result<Self> {
        let layouts = model.layouts();
        let mut deterministic = Vec::with_capacity(days);
        let mut factors = Vec::with_capacity(days);
        for k in 0..days {
            let day = first_day + k as i64;
            deterministic.push(model.deterministic(&layouts, day));
            factors.push(model.capacity_factors(capacity, day).map_err(|e| {
                Error::InvalidInput(format!("capacity schedule does not cover the horizon: {e}"))
            })?);
        }
        Ok(Self { deterministic, factors })
    }
}

const ZERO_DAY: [f64; HOURS_PER_DAY] = [0.0; HOURS_PER_DAY];

struct PathWork {
    physical: PhysicalState,
    truth: Vec<DayHourPanel>,
    planned: Vec<DayHourPanel>,
    groups: Vec<DayHourPanel>,
}

impl PathWork {
    fn trim(&mut self) {
        let keep = MAX_LAG_DAYS + 1;
        if self.groups[0].n_days() > 4 * keep {
            self.physical.truncate_front(keep.max(MEMORY_HOURS.div_ceil(HOURS_PER_DAY)));
            for p in self.truth.iter_mut().chain(&mut self.planned).chain(&mut self.groups) {
                p.truncate_front(keep);
            }
        }
    }
}

/// Clearing prices of one day from the group panels.
fn clear_day(model: &MarketModel, groups: &[DayHourPanel], day: i64, out: &mut [f64]) -> Result<usize> {
    let ns = model.supply.n_groups();
    let mut degenerate = 0;
    let mut sv = vec![0.0; ns];
    let mut dv = vec![0.0; model.demand.n_groups()];
    for (h, o) in out.iter_mut().enumerate() {
        for (g, v) in sv.iter_mut().enumerate() {
            *v = groups[g].get(day, h);
        }
        for (g, v) in dv.iter_mut().enumerate() {
            *v = groups[ns + g].get(day, h);
        }
        let s = ReconstructedCurve::new(&model.supply, &sv)?;
        let d = ReconstructedCurve::new(&model.demand, &dv)?;
        let r = clear_curves(&s, &d);
        degenerate += r.degenerate as usize;
        *o = r.price;
    }
    Ok(degenerate)
}

fn simulate_path(model: &MarketModel, init: &InitState, horizon: &Horizon, cfg: &SimulationConfig, path: usize) -> PathResult {
    let mut w = PathWork {
        physical: init.physical.clone(),
        truth: init.truth.clone(),
        planned: init.planned.clone(),
        groups: init.groups.clone(),
    };
    let sources = model.truth_sources();
    let archive = model.n_archive_days();
    let mut prices = vec![f64::NAN; cfg.horizon_days * HOURS_PER_DAY];
    let mut panels = cfg.keep_panels.then(|| PathPanels {
        physical: vec![Vec::new(); model.physical.equations.len()],
        planned: vec![Vec::new(); w.planned.len()],
        groups: vec![Vec::new(); w.groups.len()],
    });
    let (mut clamped, mut degenerate) = (0, 0);
    let mut status = PathStatus::Ok;
    for k in 0..cfg.horizon_days {
        let day = init.next_day() + k as i64;
        let r = match cfg.shocks {
            ShockMode::Bootstrap => Some(archive_draw(cfg.seed, path, k, archive)),
            ShockMode::Zero => None,
            ShockMode::Replay { first } => Some((first + k) % archive),
        };
        let step = (|| -> Result<()> {
            step_physical_with(&model.physical, &mut w.physical, &horizon.deterministic[k], &horizon.factors[k], |i| {
                r.map_or(&ZERO_DAY[..], |r| model.physical.residual_day(i, r))
            })?;
            for (t, &j) in w.truth.iter_mut().zip(&sources) {
                t.push_day(w.physical.day_absolute(j, day))?;
            }
            clamped += step_panels(&model.planned, &w.truth, &mut w.planned, |i| {
                r.map_or(&ZERO_DAY[..], |r| model.planned.residual_day(i, r))
            })?;
            clamped += step_panels(&model.bids, &w.planned, &mut w.groups, |i| {
                r.map_or(&ZERO_DAY[..], |r| model.bids.residual_day(i, r))
            })?;
            degenerate += clear_day(model, &w.groups, day, &mut prices[k * HOURS_PER_DAY..(k + 1) * HOURS_PER_DAY])?;
            Ok(())
        })();
        if step.is_err() {
            status = PathStatus::Failed { day: k };
            break;
        }
        if let Some(p) = panels.as_mut() {
            for (i, v) in p.physical.iter_mut().enumerate() {
                v.extend_from_slice(w.physical.day_absolute(i, day));
            }
            for (v, src) in p.planned.iter_mut().zip(&w.planned) {
                v.extend(src.day(day));
            }
            for (v, src) in p.groups.iter_mut().zip(&w.groups) {
                v.extend(src.day(day));
            }
        }
        w.trim();
    }
    PathResult {
        status,
        prices,
        clamped,
        degenerate,
        panels,
    }
}

/// Simulates `cfg.n_paths` independent paths starting after `init`.
///
/// `capacity` must already cover the horizon (see
/// [`crate::physical::extend_capacity`]). Output is identical for any
/// thread count.
pub fn run_ensemble(model: &MarketModel, init: &InitState, capacity: &CapacitySchedule, cfg: &SimulationConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    model.validate()?;
    init.check(model)?;
    if let ShockMode::Replay { first } = cfg.shocks {
        if first + cfg.horizon_days > model.n_archive_days() {
            return Err(Error::InvalidInput(format!(
                "replay of {} days from archive day {first} exceeds the {} archived days",
                cfg.horizon_days,
                model.n_archive_days()
            )));
        }
    }
    let horizon = Horizon::new(&model.physical, capacity, init.next_day(), cfg.horizon_days)?;
    let mut paths: Vec<PathResult> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| simulate_path(model, init, &horizon, cfg, p))
        .collect();
    if cfg.failure == FailurePolicy::SubstituteMedian {
        substitute_median(&mut paths)?;
    }
    Ok(PathEnsemble {
        origin: model.physical.origin,
        first_day: init.next_day(),
        horizon_days: cfg.horizon_days,
        seed: cfg.seed,
        paths,
    })
}

fn substitute_median(paths: &mut [PathResult]) -> Result<()> {
    let failed: Vec<(usize, usize)> = paths
        .iter()
        .enumerate()
        .filter_map(|(k, p)| match p.status {
            PathStatus::Failed { day } => Some((k, day)),
            _ => None,
        })
        .collect();
    if failed.is_empty() {
        return Ok(());
    }
    let ok: Vec<usize> = (0..paths.len()).filter(|&k| paths[k].status == PathStatus::Ok).collect();
    if ok.is_empty() {
        return Err(Error::Model("every path failed; no median to substitute".into()));
    }
    let n = paths[0].prices.len();
    let first = failed.iter().map(|f| f.1).min().unwrap_or(0) * HOURS_PER_DAY;
    let mut median = vec![f64::NAN; n];
    let mut buf = Vec::with_capacity(ok.len());
    for (t, m) in median.iter_mut().enumerate().skip(first) {
        buf.clear();
        buf.extend(ok.iter().map(|&k| paths[k].prices[t]));
        buf.sort_by(f64::total_cmp);
        *m = buf[(buf.len() - 1) / 2];
    }
    for (k, day) in failed {
        let p = &mut paths[k];
        p.prices[day * HOURS_PER_DAY..].copy_from_slice(&median[day * HOURS_PER_DAY..]);
        p.status = PathStatus::Substituted { day };
    }
    Ok(())
}
