//! Hourly model of the physical market: weather, capacity-adjusted
//! renewables, load and generation, each regressed on calendar dummies and
//! up to 360 hours of its drivers' history.

mod capacity;

pub use capacity::{capacity_adjust, capacity_restore, extend_capacity, CapacitySchedule, DAYS_PER_YEAR};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{fit_path, Column, DesignProblem, LambdaGrid, LassoOptions};
use crate::timebase::{
    build_hourly_regressors, stamps, Families, HolidayCalendar, HourStamp, HourlyLayout, HourlySeries, HOURS_PER_DAY,
};

/// Longest lag, in hours, of any physical equation.
pub const MEMORY_HOURS: usize = 360;
/// First day of every estimation window. It leaves room for the longest
/// day-level memory of the expectation and bid equations, so residual
/// archives of all stages line up on the same day index.
pub const FIT_START_DAY: usize = 36;
/// Minimum data length accepted by [`fit_physical`].
pub const MIN_DAYS: usize = 375;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessClass {
    Meteorological,
    Human,
}

/// How equation `i` may use the history of process `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    None,
    /// Lags 1 to 360.
    Autoregressive,
    /// Lags 0 to 360.
    Causal,
}

impl EdgeKind {
    #[allow(clippy::reversed_empty_ranges)]
    pub fn lags(&self) -> std::ops::RangeInclusive<usize> {
        match self {
            EdgeKind::None => 1..=0,
            EdgeKind::Autoregressive => 1..=MEMORY_HOURS,
            EdgeKind::Causal => 0..=MEMORY_HOURS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub name: String,
    pub class: ProcessClass,
    /// Capacity source when the process is modelled as a share of installed capacity.
    pub capacity_source: Option<String>,
    /// Clamp simulated values at zero.
    pub nonnegative: bool,
}

impl ProcessSpec {
    pub fn new(name: &str, class: ProcessClass) -> Self {
        Self {
            name: name.into(),
            class,
            capacity_source: None,
            nonnegative: false,
        }
    }

    pub fn capacity_adjusted(mut self, source: &str) -> Self {
        self.capacity_source = Some(source.into());
        self.nonnegative = true;
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.nonnegative = true;
        self
    }
}

/// Processes and their dependency structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessGraph {
    pub processes: Vec<ProcessSpec>,
    /// `edges[i][j]`: dependence of process `i` on process `j`.
    pub edges: Vec<Vec<EdgeKind>>,
    order: Vec<usize>,
}

impl ProcessGraph {
    pub fn new(processes: Vec<ProcessSpec>, edges: Vec<Vec<EdgeKind>>) -> Result<Self> {
        let d = processes.len();
        if d == 0 {
            return Err(Error::InvalidInput("process graph has no processes".into()));
        }
        if edges.len() != d || edges.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput(format!("edge table must be {d}x{d}")));
        }
        for (i, p) in processes.iter().enumerate() {
            if processes[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidInput(format!("duplicate process {}", p.name)));
            }
            if edges[i][i] == EdgeKind::Causal {
                return Err(Error::InvalidInput(format!("process {} cannot depend on its own current value", p.name)));
            }
            if p.class == ProcessClass::Meteorological {
                for (j, q) in processes.iter().enumerate() {
                    if q.class == ProcessClass::Human && edges[i][j] != EdgeKind::None {
                        return Err(Error::InvalidInput(format!(
                            "weather process {} cannot depend on {}",
                            p.name, q.name
                        )));
                    }
                }
            }
        }
        let order = contemporaneous_order(&processes, &edges)?;
        Ok(Self { processes, edges, order })
    }

    /// Graph without edges, to be filled with [`ProcessGraph::with_edge`].
    pub fn without_edges(processes: Vec<ProcessSpec>) -> Result<Self> {
        let d = processes.len();
        Self::new(processes, vec![vec![EdgeKind::None; d]; d])
    }

    /// Adds (or replaces) the dependence of `target` on `source`.
    pub fn with_edge(self, target: &str, source: &str, kind: EdgeKind) -> Result<Self> {
        let i = self.index(target)?;
        let j = self.index(source)?;
        let mut edges = self.edges;
        edges[i][j] = kind;
        Self::new(self.processes, edges)
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.processes
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown process {name}")))
    }

    /// Evaluation order within one hour: weather first, then by
    /// contemporaneous dependencies, ties by declared position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn families(&self, i: usize) -> Families {
        match self.processes[i].class {
            ProcessClass::Meteorological => Families::meteorological(),
            ProcessClass::Human => Families::human(),
        }
    }

    /// Whether equation `i` reads process `j` in absolute units rather than
    /// on the modelled (capacity-adjusted) scale.
    pub fn reads_absolute(&self, i: usize, j: usize) -> bool {
        i != j && self.processes[j].capacity_source.is_some() && self.processes[i].class == ProcessClass::Human
    }
}

fn contemporaneous_order(processes: &[ProcessSpec], edges: &[Vec<EdgeKind>]) -> Result<Vec<usize>> {
    let d = processes.len();
    let mut placed = vec![false; d];
    let mut order = Vec::with_capacity(d);
    while order.len() < d {
        let ready = |i: usize| !placed[i] && (0..d).all(|j| j == i || edges[i][j] != EdgeKind::Causal || placed[j]);
        let pick = (0..d)
            .filter(|&i| ready(i))
            .min_by_key(|&i| (processes[i].class == ProcessClass::Human, i));
        match pick {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => {
                return Err(Error::InvalidInput(
                    "contemporaneous dependencies contain a cycle".into(),
                ))
            }
        }
    }
    Ok(order)
}

/// A column of one physical equation's design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignColumn {
    Dummy(usize),
    Lag { source: usize, lag: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagTerm {
    pub source: usize,
    pub lag: usize,
    pub absolute: bool,
    pub coef: f64,
}

/// One fitted equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessEquation {
    pub name: String,
    pub families: Families,
    pub intercept: f64,
    /// Nonzero dummy coefficients `(column, value)`.
    pub dummies: Vec<(u32, f64)>,
    pub lags: Vec<LagTerm>,
    /// Every candidate column offered to the estimator, in design order.
    pub columns: Vec<DesignColumn>,
    pub lambda: f64,
    pub bic: f64,
    pub n_obs: usize,
}

impl ProcessEquation {
    pub fn df(&self) -> usize {
        self.dummies.len() + self.lags.len()
    }

    pub fn lag_coef(&self, source: usize, lag: usize) -> f64 {
        self.lags
            .iter()
            .find(|t| t.source == source && t.lag == lag)
            .map_or(0.0, |t| t.coef)
    }

    /// Hand-specified equation, mainly for tests and synthetic truths.
    pub fn from_terms(name: &str, families: Families, intercept: f64, dummies: Vec<(u32, f64)>, lags: Vec<LagTerm>) -> Self {
        Self {
            name: name.into(),
            families,
            intercept,
            dummies,
            lags,
            columns: Vec::new(),
            lambda: 0.0,
            bic: 0.0,
            n_obs: 0,
        }
    }
}

/// Fitted physical system with its residual archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalModel {
    pub graph: ProcessGraph,
    pub calendar: HolidayCalendar,
    pub equations: Vec<ProcessEquation>,
    /// Calendar date of day 0.
    pub origin: NaiveDate,
    /// First data day of the estimation window.
    pub fit_start_day: usize,
    /// Data days used (window is `fit_start_day..n_days`).
    pub n_days: usize,
    /// Per process, hourly residuals over the estimation window; archive
    /// day `r` is data day `fit_start_day + r`.
    pub residuals: Vec<Vec<f64>>,
}

/// Rolling history of all processes, on the modelled and absolute scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalState {
    pub origin: NaiveDate,
    /// Day index (from origin) of the first stored hour.
    pub first_day: i64,
    pub modelled: Vec<Vec<f64>>,
    pub absolute: Vec<Vec<f64>>,
}

impl PhysicalState {
    pub fn n_days(&self) -> usize {
        self.modelled[0].len() / HOURS_PER_DAY
    }

    /// Day index of the next day to be simulated.
    pub fn next_day(&self) -> i64 {
        self.first_day + self.n_days() as i64
    }

    pub fn day_values(&self, process: usize, day: i64) -> &[f64] {
        let d = (day - self.first_day) as usize;
        &self.modelled[process][d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY]
    }

    pub fn day_absolute(&self, process: usize, day: i64) -> &[f64] {
        let d = (day - self.first_day) as usize;
        &self.absolute[process][d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY]
    }

    /// Keeps only the last `days` days.
    pub fn truncate_front(&mut self, days: usize) {
        let n = self.n_days();
        if n > days {
            let cut = (n - days) * HOURS_PER_DAY;
            for v in self.modelled.iter_mut().chain(self.absolute.iter_mut()) {
                v.drain(..cut);
            }
            self.first_day += (n - days) as i64;
        }
    }
}

/// Converts absolute series (graph order) into modelled and absolute
/// arrays. Absolute values of capacity-adjusted processes are rebuilt from
/// the ratio so both scales agree bit for bit with what stepping produces.
pub fn physical_state(
    graph: &ProcessGraph,
    series: &[HourlySeries],
    capacity: &CapacitySchedule,
) -> Result<PhysicalState> {
    if series.len() != graph.len() {
        return Err(Error::DimensionMismatch {
            what: "physical series".into(),
            expected: graph.len(),
            found: series.len(),
        });
    }
    let origin = series[0].origin;
    let n = series[0].values.len();
    let mut modelled = Vec::with_capacity(series.len());
    let mut absolute = Vec::with_capacity(series.len());
    for (p, s) in graph.processes.iter().zip(series) {
        if s.name != p.name {
            return Err(Error::InvalidInput(format!("expected series {}, found {}", p.name, s.name)));
        }
        if s.origin != origin || s.values.len() != n {
            return Err(Error::InvalidInput(format!("series {} is not aligned with {}", s.name, series[0].name)));
        }
        if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("series {} (value {v})", s.name)));
        }
        match &p.capacity_source {
            Some(src) => {
                let ratio = capacity_adjust(s, capacity, src)?;
                let abs = capacity_restore(&ratio, capacity, src)?;
                modelled.push(ratio.values);
                absolute.push(abs.values);
            }
            None => {
                modelled.push(s.values.clone());
                absolute.push(s.values.clone());
            }
        }
    }
    Ok(PhysicalState {
        origin,
        first_day: 0,
        modelled,
        absolute,
    })
}

/// Estimation controls shared by all stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FitOptions {
    pub grid: LambdaGrid,
    pub lasso: LassoOptions,
}

/// Residual `r` with `det + r == value` in floating point whenever possible.
pub(crate) fn exact_residual(value: f64, det: f64) -> f64 {
    let mut r = value - det;
    for _ in 0..4 {
        let back = det + r;
        if back == value {
            break;
        }
        r = if back < value { r.next_up() } else { r.next_down() };
    }
    r
}

/// Intercept plus calendar part of equation `eq` for each hour of a day.
pub fn deterministic_day(eq: &ProcessEquation, layout: &HourlyLayout, origin: NaiveDate, day: i64) -> [f64; HOURS_PER_DAY] {
    let mut out = [0.0; HOURS_PER_DAY];
    let mut row = Vec::with_capacity(16);
    for (h, o) in out.iter_mut().enumerate() {
        let stamp = HourStamp::new(origin, day, h as u8);
        row.clear();
        layout.row(&stamp, &mut row);
        let mut acc = eq.intercept;
        let mut k = 0;
        for &(j, v) in &row {
            while k < eq.dummies.len() && eq.dummies[k].0 < j {
                k += 1;
            }
            if k < eq.dummies.len() && eq.dummies[k].0 == j {
                acc += eq.dummies[k].1 * v;
            }
        }
        *o = acc;
    }
    out
}

#[inline]
fn lag_part(eq: &ProcessEquation, modelled: &[Vec<f64>], absolute: &[Vec<f64>], t: usize) -> f64 {
    let mut acc = 0.0;
    for term in &eq.lags {
        let src = if term.absolute { &absolute[term.source] } else { &modelled[term.source] };
        acc += term.coef * src[t - term.lag];
    }
    acc
}

impl PhysicalModel {
    pub fn layouts(&self) -> Vec<HourlyLayout> {
        self.equations
            .iter()
            .map(|e| HourlyLayout::new(&self.calendar, e.families))
            .collect()
    }

    pub fn n_archive_days(&self) -> usize {
        self.n_days - self.fit_start_day
    }

    /// Residual 24-vector of process `i` on archive day `r`.
    pub fn residual_day(&self, i: usize, r: usize) -> &[f64] {
        &self.residuals[i][r * HOURS_PER_DAY..(r + 1) * HOURS_PER_DAY]
    }

    /// Calendar part of every equation for one day.
    pub fn deterministic(&self, layouts: &[HourlyLayout], day: i64) -> Vec<[f64; HOURS_PER_DAY]> {
        self.equations
            .iter()
            .zip(layouts)
            .map(|(e, l)| deterministic_day(e, l, self.origin, day))
            .collect()
    }

    /// Hourly capacity (MWh) per process for a day, 1 for unadjusted processes.
    pub fn capacity_factors(&self, capacity: &CapacitySchedule, day: i64) -> Result<Vec<f64>> {
        let date = self.origin + chrono::Duration::days(day);
        self.graph
            .processes
            .iter()
            .map(|p| match &p.capacity_source {
                Some(s) => capacity.hourly_mwh(s, date),
                None => Ok(1.0),
            })
            .collect()
    }
}

/// Advances `state` by one day with precomputed calendar parts and capacities.
///
/// `shock(i)` is the residual 24-vector of process `i`.
pub fn step_physical_with<'a>(
    model: &PhysicalModel,
    state: &mut PhysicalState,
    deterministic: &[[f64; HOURS_PER_DAY]],
    factors: &[f64],
    shock: impl Fn(usize) -> &'a [f64],
) -> Result<()> {
    let d = model.equations.len();
    let start = state.modelled[0].len();
    for i in 0..d {
        state.modelled[i].resize(start + HOURS_PER_DAY, 0.0);
        state.absolute[i].resize(start + HOURS_PER_DAY, 0.0);
    }
    for h in 0..HOURS_PER_DAY {
        let t = start + h;
        for &i in model.graph.order() {
            let eq = &model.equations[i];
            let det = deterministic[i][h] + lag_part(eq, &state.modelled, &state.absolute, t);
            let mut v = det + shock(i)[h];
            if !v.is_finite() {
                state.truncate_last(HOURS_PER_DAY);
                return Err(Error::NonFinite(format!(
                    "simulated {} on day {} hour {h}",
                    eq.name,
                    state.first_day + (start / HOURS_PER_DAY) as i64
                )));
            }
            if model.graph.processes[i].nonnegative && v < 0.0 {
                v = 0.0;
            }
            state.modelled[i][t] = v;
            state.absolute[i][t] = if model.graph.processes[i].capacity_source.is_some() { v * factors[i] } else { v };
        }
    }
    Ok(())
}

impl PhysicalState {
    fn truncate_last(&mut self, hours: usize) {
        for v in self.modelled.iter_mut().chain(self.absolute.iter_mut()) {
            let n = v.len() - hours;
            v.truncate(n);
        }
    }
}

/// Advances `state` by one day; `shocks[i]` is the residual 24-vector of process `i`.
pub fn step_physical(model: &PhysicalModel, state: &mut PhysicalState, shocks: &[&[f64]], capacity: &CapacitySchedule) -> Result<()> {
    if shocks.len() != model.equations.len() || shocks.iter().any(|s| s.len() != HOURS_PER_DAY) {
        return Err(Error::DimensionMismatch {
            what: "physical shocks".into(),
            expected: model.equations.len(),
            found: shocks.len(),
        });
    }
    let hist = state.n_days() * HOURS_PER_DAY;
    if hist < MEMORY_HOURS {
        return Err(Error::InsufficientHistory {
            what: "physical state hours".into(),
            required: MEMORY_HOURS,
            available: hist,
        });
    }
    let day = state.next_day();
    let det = model.deterministic(&model.layouts(), day);
    let factors = model.capacity_factors(capacity, day)?;
    step_physical_with(model, state, &det, &factors, |i| shocks[i])
}

/// Fits every equation of the graph on the common window.
pub fn fit_physical(
    series: &[HourlySeries],
    graph: &ProcessGraph,
    calendar: &HolidayCalendar,
    capacity: &CapacitySchedule,
    options: &FitOptions,
) -> Result<PhysicalModel> {
    let state = physical_state(graph, series, capacity)?;
    let n_days = state.n_days();
    if n_days < MIN_DAYS {
        return Err(Error::InsufficientHistory {
            what: "physical data days".into(),
            required: MIN_DAYS,
            available: n_days,
        });
    }
    let t0 = FIT_START_DAY * HOURS_PER_DAY;
    let t1 = n_days * HOURS_PER_DAY;
    let window = stamps(state.origin, FIT_START_DAY as i64, n_days - FIT_START_DAY);

    let fits: Vec<Result<ProcessEquation>> = (0..graph.len())
        .into_par_iter()
        .map(|i| fit_equation(i, graph, calendar, &state, &window, t0, t1, options))
        .collect();
    let equations = collect_fits(fits)?;
    let mut model = PhysicalModel {
        graph: graph.clone(),
        calendar: calendar.clone(),
        equations,
        origin: state.origin,
        fit_start_day: FIT_START_DAY,
        n_days,
        residuals: Vec::new(),
    };
    model.residuals = in_sample_residuals(&model, &state);
    Ok(model)
}

#[allow(clippy::too_many_arguments)]
fn fit_equation(
    i: usize,
    graph: &ProcessGraph,
    calendar: &HolidayCalendar,
    state: &PhysicalState,
    window: &[HourStamp],
    t0: usize,
    t1: usize,
    options: &FitOptions,
) -> Result<ProcessEquation> {
    let families = graph.families(i);
    let dummies = build_hourly_regressors(window, calendar, families)?;
    let mut columns: Vec<Column<'_, f64>> = Vec::new();
    let mut ids = Vec::new();
    for j in 0..dummies.n_columns() {
        columns.push(dummies.column(j));
        ids.push(DesignColumn::Dummy(j));
    }
    for j in 0..graph.len() {
        let src = if graph.reads_absolute(i, j) { &state.absolute[j] } else { &state.modelled[j] };
        for lag in graph.edges[i][j].lags() {
            columns.push(Column::Dense(&src[t0 - lag..t1 - lag]));
            ids.push(DesignColumn::Lag { source: j, lag });
        }
    }
    let response = &state.modelled[i][t0..t1];
    let problem = DesignProblem::new(response, columns)?;
    let fit = fit_path(&problem, &options.grid, options.lasso)
        .map_err(|e| Error::Model(format!("equation {}: {e}", graph.processes[i].name)))?;
    let mut dummy_coefs = Vec::new();
    let mut lags = Vec::new();
    for (k, b) in fit.active() {
        match ids[k] {
            DesignColumn::Dummy(j) => dummy_coefs.push((j as u32, b)),
            DesignColumn::Lag { source, lag } => lags.push(LagTerm {
                source,
                lag,
                absolute: graph.reads_absolute(i, source),
                coef: b,
            }),
        }
    }
    Ok(ProcessEquation {
        name: graph.processes[i].name.clone(),
        families,
        intercept: fit.intercept,
        dummies: dummy_coefs,
        lags,
        columns: ids,
        lambda: fit.lambda,
        bic: fit.bic,
        n_obs: response.len(),
    })
}

/// Every fitted equation, or one error listing all failed equations.
pub(crate) fn collect_fits<T>(fits: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(fits.len());
    let mut failed = Vec::new();
    for f in fits {
        match f {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(e.to_string()),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Model(failed.join("; ")))
    }
}

/// Residuals computed with the stepping arithmetic, so replaying them
/// reproduces the data exactly.
fn in_sample_residuals(model: &PhysicalModel, state: &PhysicalState) -> Vec<Vec<f64>> {
    let layouts = model.layouts();
    (0..model.equations.len())
        .map(|i| {
            let eq = &model.equations[i];
            let mut out = Vec::with_capacity(model.n_archive_days() * HOURS_PER_DAY);
            for day in model.fit_start_day..model.n_days {
                let det = deterministic_day(eq, &layouts[i], model.origin, day as i64);
                for (h, d) in det.iter().enumerate() {
                    let t = day * HOURS_PER_DAY + h;
                    let full = d + lag_part(eq, &state.modelled, &state.absolute, t);
                    out.push(exact_residual(state.modelled[i][t], full));
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn procs() -> Vec<ProcessSpec> {
        vec![
            ProcessSpec::new("temperature", ProcessClass::Meteorological),
            ProcessSpec::new("wind", ProcessClass::Meteorological).capacity_adjusted("wind"),
            ProcessSpec::new("load", ProcessClass::Human),
            ProcessSpec::new("conventional", ProcessClass::Human).nonnegative(),
        ]
    }

    #[test]
    fn lag_sets_by_edge_kind() {
        assert_eq!(EdgeKind::Autoregressive.lags().count(), 360);
        assert_eq!(*EdgeKind::Causal.lags().start(), 0);
        assert_eq!(EdgeKind::Causal.lags().count(), 361);
        assert_eq!(EdgeKind::None.lags().count(), 0);
    }

    #[test]
    fn graph_rules_are_enforced() {
        let g = ProcessGraph::without_edges(procs()).unwrap();
        assert!(g.clone().with_edge("temperature", "load", EdgeKind::Autoregressive).is_err());
        assert!(g.clone().with_edge("load", "load", EdgeKind::Causal).is_err());
        let g = g
            .with_edge("conventional", "load", EdgeKind::Causal)
            .unwrap()
            .with_edge("load", "temperature", EdgeKind::Causal)
            .unwrap();
        assert!(g.clone().with_edge("load", "conventional", EdgeKind::Causal).is_err());
        assert_eq!(g.order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn order_follows_contemporaneous_arrows() {
        let p = vec![
            ProcessSpec::new("gen", ProcessClass::Human),
            ProcessSpec::new("load", ProcessClass::Human),
            ProcessSpec::new("temp", ProcessClass::Meteorological),
        ];
        let g = ProcessGraph::without_edges(p)
            .unwrap()
            .with_edge("gen", "load", EdgeKind::Causal)
            .unwrap();
        assert_eq!(g.order(), &[2, 1, 0]);
    }

    #[test]
    fn exact_residual_round_trips() {
        for (v, d) in [(0.3, 0.1), (41234.7, 40990.123), (5.0, -7.25), (0.0, 0.1), (0.7310001, 0.53)] {
            let r = exact_residual(v, d);
            assert_eq!(d + r, v);
        }
    }
}
