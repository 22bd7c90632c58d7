//! Day-by-hour models: planned (day-ahead expected) processes conditioned on
//! their realized counterparts, and bid-group volumes conditioned on those
//! expectations. Each (series, hour) pair is one lasso equation on days.

mod panel;

pub use panel::DayHourPanel;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{fit_path, Column, DesignProblem};
use crate::physical::{exact_residual, EdgeKind, FitOptions, FIT_START_DAY};
use crate::timebase::{build_daily_regressors, weekday_index, RegressorMatrix};

/// Longest day lag of any equation (same series, same hour).
pub const MAX_LAG_DAYS: usize = 36;
/// Longest day lag across series or across hours, but not both.
pub const CROSS_LAG_DAYS: usize = 8;
/// Minimum number of estimation days after the lag warm-up.
pub const MIN_OBS_DAYS: usize = 14;

/// Lag set for a dependence of kind `kind` between a target and a source,
/// `same_series` when the source is the target itself (or its realized
/// counterpart) and `same_hour` when both refer to the same hour.
#[allow(clippy::reversed_empty_ranges)]
pub fn lag_set(kind: EdgeKind, same_series: bool, same_hour: bool) -> std::ops::RangeInclusive<usize> {
    let max = match (same_series, same_hour) {
        (true, true) => MAX_LAG_DAYS,
        (true, false) | (false, true) => CROSS_LAG_DAYS,
        (false, false) => 1,
    };
    match kind {
        EdgeKind::None => 1..=0,
        EdgeKind::Autoregressive => 1..=max,
        EdgeKind::Causal => 0..=max,
    }
}

/// Source panel of a design column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelRef {
    /// Conditioning panel (realized truth, or expectations for bid groups).
    Driver(usize),
    /// One of the modelled panels.
    Target(usize),
}

/// A candidate column of one day-hour equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PanelColumn {
    Weekday(usize),
    Lag { source: PanelRef, hour: usize, lag: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelTerm {
    pub source: PanelRef,
    pub hour: usize,
    pub lag: usize,
    pub coef: f64,
}

/// Dependency structure of a day-hour system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub hours_per_day: usize,
    pub drivers: Vec<String>,
    pub targets: Vec<String>,
    /// Driver that counts as the same series as each target, if any.
    pub counterpart: Vec<Option<usize>>,
    /// `driver_edges[i][j]`: dependence of target `i` on driver `j`.
    pub driver_edges: Vec<Vec<EdgeKind>>,
    /// `target_edges[i][j]`: dependence of target `i` on target `j`.
    pub target_edges: Vec<Vec<EdgeKind>>,
    /// Clamp simulated values at zero.
    pub nonnegative: Vec<bool>,
}

impl PanelSpec {
    /// Planned processes: each depends causally on its own realized
    /// counterpart only, plus weekday effects.
    pub fn planned(truth: &[String], planned: &[String], hours_per_day: usize) -> Result<Self> {
        if truth.len() != planned.len() {
            return Err(Error::DimensionMismatch {
                what: "realized counterparts of planned series".into(),
                expected: planned.len(),
                found: truth.len(),
            });
        }
        let n = planned.len();
        let driver_edges = (0..n)
            .map(|i| (0..n).map(|j| if i == j { EdgeKind::Causal } else { EdgeKind::None }).collect())
            .collect();
        Self::new(
            hours_per_day,
            truth.to_vec(),
            planned.to_vec(),
            (0..n).map(Some).collect(),
            driver_edges,
            vec![vec![EdgeKind::None; n]; n],
            vec![true; n],
        )
    }

    /// Bid groups: causal in every expectation panel, autoregressive in
    /// every group panel.
    pub fn bid_groups(expectations: &[String], groups: &[String], hours_per_day: usize) -> Result<Self> {
        let (e, g) = (expectations.len(), groups.len());
        Self::new(
            hours_per_day,
            expectations.to_vec(),
            groups.to_vec(),
            vec![None; g],
            vec![vec![EdgeKind::Causal; e]; g],
            vec![vec![EdgeKind::Autoregressive; g]; g],
            vec![true; g],
        )
    }

    pub fn new(
        hours_per_day: usize,
        drivers: Vec<String>,
        targets: Vec<String>,
        counterpart: Vec<Option<usize>>,
        driver_edges: Vec<Vec<EdgeKind>>,
        target_edges: Vec<Vec<EdgeKind>>,
        nonnegative: Vec<bool>,
    ) -> Result<Self> {
        let (e, g) = (drivers.len(), targets.len());
        if hours_per_day == 0 || g == 0 {
            return Err(Error::InvalidInput("day-hour system needs at least one target and one hour".into()));
        }
        if counterpart.len() != g
            || nonnegative.len() != g
            || driver_edges.len() != g
            || target_edges.len() != g
            || driver_edges.iter().any(|r| r.len() != e)
            || target_edges.iter().any(|r| r.len() != g)
        {
            return Err(Error::InvalidInput(format!("edge tables must be {g}x{e} and {g}x{g}")));
        }
        if let Some(j) = counterpart.iter().flatten().find(|&&j| j >= e) {
            return Err(Error::InvalidInput(format!("counterpart driver {j} does not exist")));
        }
        for (i, row) in target_edges.iter().enumerate() {
            // groups are evaluated jointly from their shocks, so no target
            // may read another target's same-day value
            if row.contains(&EdgeKind::Causal) {
                return Err(Error::InvalidInput(format!(
                    "target {} cannot depend on same-day values of modelled panels",
                    targets[i]
                )));
            }
        }
        Ok(Self {
            hours_per_day,
            drivers,
            targets,
            counterpart,
            driver_edges,
            target_edges,
            nonnegative,
        })
    }

    /// Every lag column of equation `(i, h)` in design order, after the
    /// weekday columns.
    pub fn lag_columns(&self, i: usize, h: usize) -> Vec<PanelColumn> {
        let mut out = Vec::new();
        let hours = self.hours_per_day;
        for (j, &kind) in self.driver_edges[i].iter().enumerate() {
            let same = self.counterpart[i] == Some(j);
            for l in 0..hours {
                for lag in lag_set(kind, same, l == h) {
                    out.push(PanelColumn::Lag { source: PanelRef::Driver(j), hour: l, lag });
                }
            }
        }
        for (j, &kind) in self.target_edges[i].iter().enumerate() {
            for l in 0..hours {
                for lag in lag_set(kind, i == j, l == h) {
                    out.push(PanelColumn::Lag { source: PanelRef::Target(j), hour: l, lag });
                }
            }
        }
        out
    }
}

/// One fitted `(target, hour)` equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelEquation {
    pub target: usize,
    pub hour: usize,
    pub intercept: f64,
    /// Coefficient per weekday, Monday first; zero when inactive.
    pub weekday: [f64; 7],
    pub terms: Vec<PanelTerm>,
    pub lambda: f64,
    pub bic: f64,
    pub n_obs: usize,
}

impl PanelEquation {
    pub fn df(&self) -> usize {
        self.weekday.iter().filter(|v| **v != 0.0).count() + self.terms.len()
    }

    pub fn coef(&self, source: PanelRef, hour: usize, lag: usize) -> f64 {
        self.terms
            .iter()
            .find(|t| t.source == source && t.hour == hour && t.lag == lag)
            .map_or(0.0, |t| t.coef)
    }
}

/// Fitted day-hour system with its residual archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationModel {
    pub spec: PanelSpec,
    /// Indexed `target * hours_per_day + hour`.
    pub equations: Vec<PanelEquation>,
    pub origin: NaiveDate,
    pub fit_start_day: usize,
    pub n_days: usize,
    /// Per target, residuals day-major over the estimation window; archive
    /// day `r` is data day `fit_start_day + r`.
    pub residuals: Vec<Vec<f64>>,
}

impl ExpectationModel {
    pub fn hours_per_day(&self) -> usize {
        self.spec.hours_per_day
    }

    pub fn equation(&self, target: usize, hour: usize) -> &PanelEquation {
        &self.equations[target * self.spec.hours_per_day + hour]
    }

    pub fn n_archive_days(&self) -> usize {
        self.n_days - self.fit_start_day
    }

    /// Residual day-vector of `target` on archive day `r`.
    pub fn residual_day(&self, target: usize, r: usize) -> &[f64] {
        let h = self.spec.hours_per_day;
        &self.residuals[target][r * h..(r + 1) * h]
    }

    /// Hand-specified system, for tests and synthetic truths.
    pub fn from_equations(spec: PanelSpec, origin: NaiveDate, equations: Vec<PanelEquation>) -> Result<Self> {
        if equations.len() != spec.targets.len() * spec.hours_per_day {
            return Err(Error::DimensionMismatch {
                what: "day-hour equations".into(),
                expected: spec.targets.len() * spec.hours_per_day,
                found: equations.len(),
            });
        }
        for (k, eq) in equations.iter().enumerate() {
            if eq.target * spec.hours_per_day + eq.hour != k {
                return Err(Error::InvalidInput(format!("equation {k} is out of order")));
            }
        }
        Ok(Self {
            residuals: vec![Vec::new(); spec.targets.len()],
            spec,
            equations,
            origin,
            fit_start_day: FIT_START_DAY,
            n_days: FIT_START_DAY,
        })
    }
}

fn source_panel<'a>(source: PanelRef, drivers: &'a [DayHourPanel], targets: &'a [DayHourPanel]) -> &'a DayHourPanel {
    match source {
        PanelRef::Driver(j) => &drivers[j],
        PanelRef::Target(j) => &targets[j],
    }
}

/// Deterministic part of equation `eq` on `day`; shared by estimation
/// residuals and stepping so replay is exact.
fn deterministic(eq: &PanelEquation, origin: NaiveDate, drivers: &[DayHourPanel], targets: &[DayHourPanel], day: i64) -> f64 {
    let w = weekday_index(origin + chrono::Duration::days(day)) as usize;
    let mut acc = eq.intercept + eq.weekday[w];
    for t in &eq.terms {
        acc += t.coef * source_panel(t.source, drivers, targets).get(day - t.lag as i64, t.hour);
    }
    acc
}

fn check_panels(spec: &PanelSpec, drivers: &[DayHourPanel], targets: &[DayHourPanel]) -> Result<()> {
    if drivers.len() != spec.drivers.len() {
        return Err(Error::DimensionMismatch {
            what: "driver panels".into(),
            expected: spec.drivers.len(),
            found: drivers.len(),
        });
    }
    if targets.len() != spec.targets.len() {
        return Err(Error::DimensionMismatch {
            what: "target panels".into(),
            expected: spec.targets.len(),
            found: targets.len(),
        });
    }
    for (p, name) in drivers.iter().zip(&spec.drivers).chain(targets.iter().zip(&spec.targets)) {
        if &p.name != name {
            return Err(Error::InvalidInput(format!("expected panel {name}, found {}", p.name)));
        }
        if p.n_hours() != spec.hours_per_day {
            return Err(Error::DimensionMismatch {
                what: format!("hours per day of panel {name}"),
                expected: spec.hours_per_day,
                found: p.n_hours(),
            });
        }
    }
    Ok(())
}

fn design_slices<'a>(
    weekdays: &'a RegressorMatrix,
    lag_cols: &[PanelColumn],
    drivers: &'a [DayHourPanel],
    targets: &'a [DayHourPanel],
    d0: usize,
    d1: usize,
) -> Vec<Column<'a, f64>> {
    let mut columns: Vec<Column<'a, f64>> = (0..7).map(|k| weekdays.column(k)).collect();
    for c in lag_cols {
        if let PanelColumn::Lag { source, hour, lag } = *c {
            let p = source_panel(source, drivers, targets);
            columns.push(Column::Dense(&p.hour_values(hour)[d0 - lag..d1 - lag]));
        }
    }
    columns
}

/// Candidate columns of equation `(i, h)` in design order.
pub fn design_columns(spec: &PanelSpec, i: usize, h: usize) -> Vec<PanelColumn> {
    (0..7).map(PanelColumn::Weekday).chain(spec.lag_columns(i, h)).collect()
}

/// The design matrix handed to the estimator for equation `(i, h)`, one
/// dense column per entry of [`design_columns`], rows over the estimation
/// window.
pub fn design_matrix(
    spec: &PanelSpec,
    drivers: &[DayHourPanel],
    targets: &[DayHourPanel],
    origin: NaiveDate,
    i: usize,
    h: usize,
) -> Result<Vec<Vec<f64>>> {
    check_panels(spec, drivers, targets)?;
    let n_days = targets[0].n_days();
    if n_days <= FIT_START_DAY {
        return Err(Error::InsufficientHistory {
            what: "day-hour panel days".into(),
            required: FIT_START_DAY + 1,
            available: n_days,
        });
    }
    let dates: Vec<NaiveDate> = (FIT_START_DAY..n_days).map(|d| origin + chrono::Duration::days(d as i64)).collect();
    let weekdays = build_daily_regressors(&dates)?;
    let cols = design_slices(&weekdays, &spec.lag_columns(i, h), drivers, targets, FIT_START_DAY, n_days);
    Ok(cols
        .iter()
        .map(|c| {
            let mut v = vec![0.0; c.len()];
            c.add_scaled(1.0, &mut v);
            v
        })
        .collect())
}

/// Fits one lasso equation per target and hour on the common window.
///
/// All panels must start on the same day and have the same length.
pub fn fit_panels(spec: &PanelSpec, drivers: &[DayHourPanel], targets: &[DayHourPanel], origin: NaiveDate, options: &FitOptions) -> Result<ExpectationModel> {
    check_panels(spec, drivers, targets)?;
    let n_days = targets[0].n_days();
    for p in drivers.iter().chain(targets) {
        if p.first_day != 0 || p.n_days() != n_days {
            return Err(Error::InvalidInput(format!(
                "panel {} is not aligned with {} (days {}..{} vs 0..{n_days})",
                p.name,
                targets[0].name,
                p.first_day,
                p.next_day()
            )));
        }
    }
    let required = FIT_START_DAY + MIN_OBS_DAYS;
    if n_days < required {
        return Err(Error::InsufficientHistory {
            what: "day-hour panel days".into(),
            required,
            available: n_days,
        });
    }
    let (d0, d1) = (FIT_START_DAY, n_days);
    let dates: Vec<NaiveDate> = (d0..d1).map(|d| origin + chrono::Duration::days(d as i64)).collect();
    let weekdays = build_daily_regressors(&dates)?;
    let hours = spec.hours_per_day;
    let jobs: Vec<(usize, usize)> = (0..spec.targets.len()).flat_map(|i| (0..hours).map(move |h| (i, h))).collect();
    let fits: Vec<Result<PanelEquation>> = jobs
        .into_par_iter()
        .map(|(i, h)| {
            let lag_cols = spec.lag_columns(i, h);
            let columns = design_slices(&weekdays, &lag_cols, drivers, targets, d0, d1);
            let response = &targets[i].hour_values(h)[d0..d1];
            let problem = DesignProblem::new(response, columns)?;
            let fit = fit_path(&problem, &options.grid, options.lasso)
                .map_err(|e| Error::Model(format!("equation {} hour {h}: {e}", spec.targets[i])))?;
            let mut weekday = [0.0; 7];
            let mut terms = Vec::new();
            for (k, b) in fit.active() {
                if k < 7 {
                    weekday[k] = b;
                } else if let PanelColumn::Lag { source, hour, lag } = lag_cols[k - 7] {
                    terms.push(PanelTerm { source, hour, lag, coef: b });
                }
            }
            Ok(PanelEquation {
                target: i,
                hour: h,
                intercept: fit.intercept,
                weekday,
                terms,
                lambda: fit.lambda,
                bic: fit.bic,
                n_obs: d1 - d0,
            })
        })
        .collect();
    let equations = crate::physical::collect_fits(fits)?;
    let mut model = ExpectationModel {
        spec: spec.clone(),
        equations,
        origin,
        fit_start_day: d0,
        n_days,
        residuals: Vec::new(),
    };
    model.residuals = (0..spec.targets.len())
        .map(|i| {
            let mut out = Vec::with_capacity((d1 - d0) * hours);
            for day in d0..d1 {
                for h in 0..hours {
                    let det = deterministic(model.equation(i, h), origin, drivers, targets, day as i64);
                    out.push(exact_residual(targets[i].get(day as i64, h), det));
                }
            }
            out
        })
        .collect();
    Ok(model)
}

/// Fits the planned-process equations; `truth[i]` is the realized
/// counterpart of `planned[i]` (in absolute units).
pub fn fit_expectations(truth: &[DayHourPanel], planned: &[DayHourPanel], origin: NaiveDate, options: &FitOptions) -> Result<ExpectationModel> {
    let hours = planned.first().map_or(0, |p| p.n_hours());
    let spec = PanelSpec::planned(
        &truth.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
        &planned.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
        hours,
    )?;
    fit_panels(&spec, truth, planned, origin, options)
}

/// Fits the bid-group equations on expectation panels and group histories.
pub fn fit_bid_groups(expectations: &[DayHourPanel], groups: &[DayHourPanel], origin: NaiveDate, options: &FitOptions) -> Result<ExpectationModel> {
    let hours = groups.first().map_or(0, |p| p.n_hours());
    let spec = PanelSpec::bid_groups(
        &expectations.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
        &groups.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
        hours,
    )?;
    fit_panels(&spec, expectations, groups, origin, options)
}

/// Appends the next day of every target panel. Drivers must already cover
/// that day; `shock(i)` is the residual day-vector of target `i`.
///
/// Returns the number of values clamped at zero.
pub fn step_panels<'a>(
    model: &ExpectationModel,
    drivers: &[DayHourPanel],
    targets: &mut [DayHourPanel],
    shock: impl Fn(usize) -> &'a [f64],
) -> Result<usize> {
    check_panels(&model.spec, drivers, targets)?;
    let day = targets[0].next_day();
    let earliest = day - MAX_LAG_DAYS as i64;
    for p in drivers.iter().chain(targets.iter()) {
        if p.first_day > earliest {
            return Err(Error::InsufficientHistory {
                what: format!("history of panel {} before day {day}", p.name),
                required: MAX_LAG_DAYS,
                available: (day - p.first_day).max(0) as usize,
            });
        }
    }
    for p in targets.iter() {
        if p.next_day() != day {
            return Err(Error::InvalidInput(format!("panel {} does not end on day {}", p.name, day - 1)));
        }
    }
    for p in drivers {
        if p.next_day() <= day {
            return Err(Error::InsufficientHistory {
                what: format!("panel {} through day {day}", p.name),
                required: (day - p.first_day + 1) as usize,
                available: p.n_days(),
            });
        }
    }
    let hours = model.spec.hours_per_day;
    let mut clamped = 0;
    let mut rows = Vec::with_capacity(targets.len());
    for i in 0..targets.len() {
        let s = shock(i);
        if s.len() != hours {
            return Err(Error::DimensionMismatch {
                what: format!("shock of {}", model.spec.targets[i]),
                expected: hours,
                found: s.len(),
            });
        }
        let mut row = Vec::with_capacity(hours);
        for (h, e) in s.iter().enumerate() {
            let mut v = deterministic(model.equation(i, h), model.origin, drivers, targets, day) + e;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("simulated {} on day {day} hour {h}", model.spec.targets[i])));
            }
            if model.spec.nonnegative[i] && v < 0.0 {
                v = 0.0;
                clamped += 1;
            }
            row.push(v);
        }
        rows.push(row);
    }
    for (p, row) in targets.iter_mut().zip(&rows) {
        p.push_day(row)?;
    }
    Ok(clamped)
}

/// Next day of the planned panels from the simulated truth, which must
/// already include that day.
pub fn derive_expectation<'a>(
    model: &ExpectationModel,
    simulated_truth: &[DayHourPanel],
    planned: &mut [DayHourPanel],
    shock: impl Fn(usize) -> &'a [f64],
) -> Result<usize> {
    step_panels(model, simulated_truth, planned, shock)
}

/// Next day of the bid-group panels from expectations covering that day.
pub fn step_bid_groups<'a>(
    model: &ExpectationModel,
    expectations: &[DayHourPanel],
    groups: &mut [DayHourPanel],
    shock: impl Fn(usize) -> &'a [f64],
) -> Result<usize> {
    step_panels(model, expectations, groups, shock)
}
