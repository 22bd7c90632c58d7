//! Dataset ingestion, persistence, the synthetic market and the estimation
//! pipeline from a dataset to a [`MarketModel`].

pub mod io;
pub mod manifest;
pub mod synth;

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::curves::{DensityAccumulator, GroupScheme, Side};
use crate::error::{Error, Result};
use crate::expectations::{fit_bid_groups, fit_expectations, DayHourPanel};
use crate::physical::{fit_physical, physical_state, CapacitySchedule, EdgeKind, FitOptions, ProcessGraph};
use crate::simulate::{group_names, InitState, MarketModel};
use crate::timebase::{HolidayCalendar, HourlySeries, HOURS_PER_DAY};

pub use io::HourBids;
pub use manifest::{EdgeEntry, Manifest, PlannedEntry, PlannedSeries, ProcessEntry, Span};
pub use synth::{continue_synthetic, generate_synthetic, SynthState, SyntheticMarket, SyntheticSpec};

/// Everything needed to estimate the market model, on a common window.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub span: Span,
    pub seed: Option<u64>,
    pub graph: ProcessGraph,
    /// Absolute physical series in graph order.
    pub physical: Vec<HourlySeries>,
    pub units: Vec<String>,
    pub planned: Vec<DayHourPanel>,
    /// Physical process planned by each planned series.
    pub planned_truth: Vec<String>,
    /// Bids per delivery hour, day-major.
    pub curves: Vec<HourBids>,
    pub capacity: CapacitySchedule,
    pub calendar: HolidayCalendar,
    /// Historical clearing prices, day-major, when available.
    pub prices: Option<Vec<f64>>,
    pub group_target_mwh: f64,
}

impl Dataset {
    pub fn origin(&self) -> NaiveDate {
        self.span.start
    }

    pub fn n_days(&self) -> usize {
        self.span.days
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.span.days * HOURS_PER_DAY;
        if self.physical.len() != self.graph.len() || self.units.len() != self.graph.len() {
            return Err(Error::DimensionMismatch {
                what: "physical series".into(),
                expected: self.graph.len(),
                found: self.physical.len(),
            });
        }
        for (s, p) in self.physical.iter().zip(&self.graph.processes) {
            if s.name != p.name || s.origin != self.span.start || s.values.len() != n {
                return Err(Error::InvalidInput(format!("series {} does not cover the dataset span", s.name)));
            }
        }
        for p in &self.planned {
            if p.first_day != 0 || p.n_days() != self.span.days || p.n_hours() != HOURS_PER_DAY {
                return Err(Error::InvalidInput(format!("planned panel {} does not cover the dataset span", p.name)));
            }
        }
        if self.planned_truth.len() != self.planned.len() {
            return Err(Error::DimensionMismatch {
                what: "planned counterparts".into(),
                expected: self.planned.len(),
                found: self.planned_truth.len(),
            });
        }
        for t in &self.planned_truth {
            self.graph.index(t)?;
        }
        if self.curves.len() != n {
            return Err(Error::DimensionMismatch {
                what: "curve hours".into(),
                expected: n,
                found: self.curves.len(),
            });
        }
        if let Some(p) = &self.prices {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "price hours".into(),
                    expected: n,
                    found: p.len(),
                });
            }
        }
        Ok(())
    }

    /// Absolute truth panels of the planned series' counterparts.
    pub fn truth_panels(&self) -> Result<Vec<DayHourPanel>> {
        let state = physical_state(&self.graph, &self.physical, &self.capacity)?;
        self.planned_truth
            .iter()
            .map(|t| {
                let j = self.graph.index(t)?;
                DayHourPanel::from_day_major(t.clone(), 0, HOURS_PER_DAY, &state.absolute[j])
            })
            .collect()
    }
}

fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

/// Reads, normalizes and checks every file named by the manifest.
pub fn ingest(manifest_path: &Path) -> Result<Dataset> {
    let m = Manifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    m.check_units()?;
    let graph = m.graph()?;
    let capacity = io::read_capacity(&resolve(dir, &m.capacity))?;
    let physical = m
        .processes
        .iter()
        .map(|p| io::read_series(&resolve(dir, &p.file), &p.name, &m.span))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = m.planned.series.iter().map(|s| s.name.clone()).collect();
    let planned = io::read_planned(&resolve(dir, &m.planned.file), &names, &m.span)?;
    let curves = io::read_curves(&resolve(dir, &m.curves), &m.span)?;
    let calendar = match &m.holidays {
        Some(h) => HolidayCalendar::from_csv(&resolve(dir, h))?,
        None => HolidayCalendar::empty(),
    };
    let prices = match &m.prices {
        Some(p) => {
            let path = resolve(dir, p);
            let (start, values) = io::read_prices(&path)?;
            let offset = (m.span.start - start).num_days();
            let end = offset + m.span.days as i64;
            if offset < 0 || end as usize * HOURS_PER_DAY > values.len() {
                return Err(Error::InvalidInput(format!("{} does not cover the declared span", path.display())));
            }
            Some(values[offset as usize * HOURS_PER_DAY..end as usize * HOURS_PER_DAY].to_vec())
        }
        None => None,
    };
    for p in &m.processes {
        if let Some(src) = &p.capacity_source {
            let (from, to) = capacity
                .span(src)
                .ok_or_else(|| Error::InvalidInput(format!("no capacity schedule for source {src}")))?;
            let last = m.span.start + chrono::Duration::days(m.span.days as i64 - 1);
            if from > m.span.start || to < last {
                return Err(Error::InvalidInput(format!(
                    "capacity of {src} covers {from} to {to}, not the span {} to {last}",
                    m.span.start
                )));
            }
        }
    }
    let ds = Dataset {
        span: m.span,
        seed: m.seed,
        units: m.processes.iter().map(|p| p.unit.clone()).collect(),
        graph,
        physical,
        planned,
        planned_truth: m.planned.series.iter().map(|s| s.truth.clone()).collect(),
        curves,
        capacity,
        calendar,
        prices,
        group_target_mwh: m.group_target_mwh,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes the dataset as CSV files plus `manifest.json` into `dir`.
///
/// Series are written with a fixed `+01:00` offset so that reading them
/// back is lossless. Holiday calendars are not persisted; datasets with a
/// nonempty calendar are rejected.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<Manifest> {
    ds.validate()?;
    if !ds.calendar.fixed.is_empty() || !ds.calendar.varying.is_empty() {
        return Err(Error::InvalidInput("holiday calendars are not written; keep the original file".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut processes = Vec::new();
    for ((s, p), unit) in ds.physical.iter().zip(&ds.graph.processes).zip(&ds.units) {
        let file = PathBuf::from(format!("{}.csv", s.name));
        io::write_series(&dir.join(&file), s, 1)?;
        processes.push(ProcessEntry {
            name: p.name.clone(),
            class: p.class,
            file,
            unit: unit.clone(),
            capacity_source: p.capacity_source.clone(),
            nonnegative: p.nonnegative,
        });
    }
    let mut edges = Vec::new();
    for (i, row) in ds.graph.edges.iter().enumerate() {
        for (j, &kind) in row.iter().enumerate() {
            if kind != EdgeKind::None {
                edges.push(EdgeEntry {
                    target: ds.graph.processes[i].name.clone(),
                    source: ds.graph.processes[j].name.clone(),
                    kind,
                });
            }
        }
    }
    io::write_planned(&dir.join("planned.csv"), ds.origin(), &ds.planned)?;
    io::write_curves(&dir.join("curves.csv"), ds.origin(), &ds.curves)?;
    io::write_capacity(&dir.join("capacity.csv"), &ds.capacity)?;
    if let Some(p) = &ds.prices {
        io::write_prices(&dir.join("prices.csv"), ds.origin(), 0, p)?;
    }
    let unit_of = |name: &str| ds.units[ds.graph.index(name).expect("validated")].clone();
    let manifest = Manifest {
        version: manifest::MANIFEST_VERSION,
        seed: ds.seed,
        span: ds.span,
        processes,
        edges,
        planned: PlannedEntry {
            file: "planned.csv".into(),
            series: ds
                .planned
                .iter()
                .zip(&ds.planned_truth)
                .map(|(p, t)| PlannedSeries {
                    name: p.name.clone(),
                    truth: t.clone(),
                    unit: unit_of(t),
                })
                .collect(),
        },
        capacity: "capacity.csv".into(),
        curves: "curves.csv".into(),
        group_volumes: None,
        holidays: None,
        prices: ds.prices.as_ref().map(|_| "prices.csv".into()),
        group_target_mwh: ds.group_target_mwh,
    };
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Bid-group partitions calibrated on the mean historical bid densities.
pub fn calibrate_schemes(curves: &[HourBids], target_mwh: f64) -> Result<(GroupScheme<f64>, GroupScheme<f64>)> {
    let mut s = DensityAccumulator::new(Side::Supply);
    let mut d = DensityAccumulator::new(Side::Demand);
    for c in curves {
        s.add_bids(&c.supply)?;
        d.add_bids(&c.demand)?;
    }
    Ok((
        GroupScheme::from_density(Side::Supply, &s.mean(), target_mwh)?,
        GroupScheme::from_density(Side::Demand, &d.mean(), target_mwh)?,
    ))
}

/// Group-volume panels (supply groups first) of the historical curves.
pub fn group_panels(curves: &[HourBids], supply: &GroupScheme<f64>, demand: &GroupScheme<f64>) -> Result<Vec<DayHourPanel>> {
    let (ns, nd) = (supply.n_groups(), demand.n_groups());
    let days = curves.len() / HOURS_PER_DAY;
    let mut values = vec![vec![0.0; curves.len()]; ns + nd];
    for (t, c) in curves.iter().enumerate() {
        for (g, v) in supply.volumes_of_bids(&c.supply)?.into_iter().enumerate() {
            values[g][t] = v;
        }
        for (g, v) in demand.volumes_of_bids(&c.demand)?.into_iter().enumerate() {
            values[ns + g][t] = v;
        }
    }
    debug_assert_eq!(days * HOURS_PER_DAY, curves.len());
    group_names(ns, nd)
        .into_iter()
        .zip(values)
        .map(|(name, v)| DayHourPanel::from_day_major(name, 0, HOURS_PER_DAY, &v))
        .collect()
}

/// Fitted market and the historical panels it was estimated on.
#[derive(Debug, Clone)]
pub struct MarketFit {
    pub model: MarketModel,
    pub groups: Vec<DayHourPanel>,
}

impl MarketFit {
    /// Starting state at the end of the dataset.
    pub fn init_state(&self, ds: &Dataset) -> Result<InitState> {
        InitState::from_history(&self.model, &ds.physical, &ds.capacity, &ds.planned, &self.groups)
    }
}

/// Estimates the physical, planned and bid-group systems on the dataset.
pub fn fit_market(ds: &Dataset, options: &FitOptions) -> Result<MarketFit> {
    ds.validate()?;
    let physical = fit_physical(&ds.physical, &ds.graph, &ds.calendar, &ds.capacity, options)?;
    let truth = ds.truth_panels()?;
    let planned = fit_expectations(&truth, &ds.planned, ds.origin(), options)?;
    let (supply, demand) = calibrate_schemes(&ds.curves, ds.group_target_mwh)?;
    let groups = group_panels(&ds.curves, &supply, &demand)?;
    let bids = fit_bid_groups(&ds.planned, &groups, ds.origin(), options)?;
    let model = MarketModel::new(physical, planned, bids, supply, demand)?;
    Ok(MarketFit { model, groups })
}
