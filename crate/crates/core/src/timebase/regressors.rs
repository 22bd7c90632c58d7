use std::f64::consts::TAU;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{weekday_index, HolidayCalendar, HourStamp, HOURS_PER_DAY};
use crate::error::{Error, Result};
use crate::lasso::Column;

pub const YEAR_DAYS: f64 = 365.24;
const SMOOTH_PERIODS: [f64; 2] = [YEAR_DAYS, YEAR_DAYS / 2.0];
pub const N_SMOOTH: usize = 2 * SMOOTH_PERIODS.len();

/// Which deterministic families enter an hourly design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Families {
    pub daily: bool,
    pub weekly: bool,
    pub annual: bool,
    pub smooth_annual: bool,
    pub interactions: bool,
    pub fixed_holidays: bool,
    pub varying_holidays: bool,
}

impl Families {
    /// Everything (consumption and production processes).
    pub fn human() -> Self {
        Self {
            daily: true,
            weekly: true,
            annual: true,
            smooth_annual: true,
            interactions: true,
            fixed_holidays: true,
            varying_holidays: true,
        }
    }

    /// Daily, smooth annual and their interactions only (weather processes).
    pub fn meteorological() -> Self {
        Self {
            daily: true,
            weekly: false,
            annual: false,
            smooth_annual: true,
            interactions: true,
            fixed_holidays: false,
            varying_holidays: false,
        }
    }

    pub fn none() -> Self {
        Self {
            daily: false,
            weekly: false,
            annual: false,
            smooth_annual: false,
            interactions: false,
            fixed_holidays: false,
            varying_holidays: false,
        }
    }
}

/// Column layout of an hourly design for one calendar and family selection.
///
/// Families appear in the order daily, weekly, annual, smooth annual,
/// interactions, fixed holidays, varying holidays. Fixed-date holidays get
/// one column per weekday they can fall on; varying-date holidays get one.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyLayout {
    families: Families,
    calendar: HolidayCalendar,
    names: Vec<String>,
    daily: Option<usize>,
    weekly: Option<usize>,
    annual: Option<usize>,
    smooth: Option<usize>,
    interactions: Option<usize>,
    fixed: Option<usize>,
    varying: Option<usize>,
}

fn smooth_basis(t: f64) -> [f64; N_SMOOTH] {
    let mut out = [0.0; N_SMOOTH];
    for (k, period) in SMOOTH_PERIODS.iter().enumerate() {
        let w = TAU * t / period;
        out[2 * k] = w.sin();
        out[2 * k + 1] = w.cos();
    }
    out
}

const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

impl HourlyLayout {
    pub fn new(calendar: &HolidayCalendar, families: Families) -> Self {
        let mut names = Vec::new();
        let block = |on: bool, names: &mut Vec<String>, mk: &mut dyn FnMut(&mut Vec<String>)| {
            if on {
                let start = names.len();
                mk(names);
                Some(start)
            } else {
                None
            }
        };
        let daily = block(families.daily, &mut names, &mut |n| {
            n.extend((0..24).map(|h| format!("daily_{h}")))
        });
        let weekly = block(families.weekly, &mut names, &mut |n| {
            n.extend((0..168).map(|h| format!("weekly_{h}")))
        });
        let annual = block(families.annual, &mut names, &mut |n| {
            n.extend((1..=365).map(|d| format!("annual_{d}")))
        });
        let smooth_names = ["sin_1y", "cos_1y", "sin_half_y", "cos_half_y"];
        let smooth = block(families.smooth_annual, &mut names, &mut |n| {
            n.extend(smooth_names.iter().map(|s| s.to_string()))
        });
        let interactions = block(families.interactions, &mut names, &mut |n| {
            for h in 0..24 {
                n.extend(smooth_names.iter().map(|s| format!("daily_{h}:{s}")));
            }
        });
        let fixed = block(families.fixed_holidays, &mut names, &mut |n| {
            for (name, _, _) in &calendar.fixed {
                n.extend(WEEKDAYS.iter().map(|w| format!("hol_{name}_{w}")));
            }
        });
        let varying = block(families.varying_holidays, &mut names, &mut |n| {
            n.extend(calendar.varying.iter().map(|v| format!("hol_{}", v.name)))
        });
        Self {
            families,
            calendar: calendar.clone(),
            names,
            daily,
            weekly,
            annual,
            smooth,
            interactions,
            fixed,
            varying,
        }
    }

    pub fn families(&self) -> Families {
        self.families
    }

    pub fn n_columns(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Nonzero entries `(column, value)` of the design row for one hour,
    /// in increasing column order, appended to `out`.
    pub fn row(&self, stamp: &HourStamp, out: &mut Vec<(u32, f64)>) {
        let h = stamp.hour as usize;
        if let Some(o) = self.daily {
            out.push(((o + h) as u32, 1.0));
        }
        if let Some(o) = self.weekly {
            out.push(((o + stamp.week_hour()) as u32, 1.0));
        }
        if let Some(o) = self.annual {
            out.push(((o + stamp.day_of_year as usize - 1) as u32, 1.0));
        }
        if self.smooth.is_some() || self.interactions.is_some() {
            let b = smooth_basis(stamp.continuous_day());
            if let Some(o) = self.smooth {
                for (k, v) in b.iter().enumerate() {
                    out.push(((o + k) as u32, *v));
                }
            }
            if let Some(o) = self.interactions {
                for (k, v) in b.iter().enumerate() {
                    out.push(((o + h * N_SMOOTH + k) as u32, *v));
                }
            }
        }
        if let Some(o) = self.fixed {
            if let Some(f) = self.calendar.fixed_on(stamp.date) {
                out.push(((o + f * 7 + stamp.weekday as usize) as u32, 1.0));
            }
        }
        if let Some(o) = self.varying {
            if let Some(v) = self.calendar.varying_on(stamp.date) {
                out.push(((o + v) as u32, 1.0));
            }
        }
    }

    /// `Σ coef_k U_k` for one hour.
    pub fn evaluate(&self, stamp: &HourStamp, coefficients: &[f64], scratch: &mut Vec<(u32, f64)>) -> f64 {
        scratch.clear();
        self.row(stamp, scratch);
        scratch.iter().map(|&(j, v)| coefficients[j as usize] * v).sum()
    }
}

/// Storage of one regressor column.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressorColumn {
    Dense(Vec<f64>),
    Sparse { rows: Vec<u32>, values: Vec<f64> },
}

/// Named deterministic columns, one row per hour or per day.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorMatrix {
    pub n_rows: usize,
    pub names: Vec<String>,
    pub columns: Vec<RegressorColumn>,
}

impl RegressorMatrix {
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> Column<'_, f64> {
        match &self.columns[j] {
            RegressorColumn::Dense(v) => Column::Dense(v),
            RegressorColumn::Sparse { rows, values } => Column::Sparse {
                len: self.n_rows,
                rows,
                values,
            },
        }
    }

    pub fn value(&self, row: usize, j: usize) -> f64 {
        match &self.columns[j] {
            RegressorColumn::Dense(v) => v[row],
            RegressorColumn::Sparse { rows, values } => match rows.binary_search(&(row as u32)) {
                Ok(k) => values[k],
                Err(_) => 0.0,
            },
        }
    }

    pub fn to_dense(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        self.column(j).add_scaled(1.0, &mut out);
        out
    }

    fn from_rows(n_rows: usize, names: Vec<String>, dense: &[bool], rows: impl Iterator<Item = Vec<(u32, f64)>>) -> Self {
        let mut columns: Vec<RegressorColumn> = dense
            .iter()
            .map(|&d| {
                if d {
                    RegressorColumn::Dense(Vec::with_capacity(n_rows))
                } else {
                    RegressorColumn::Sparse {
                        rows: Vec::new(),
                        values: Vec::new(),
                    }
                }
            })
            .collect();
        for (i, entries) in rows.enumerate() {
            for (j, v) in entries {
                match &mut columns[j as usize] {
                    RegressorColumn::Dense(col) => {
                        col.resize(i, 0.0);
                        col.push(v);
                    }
                    RegressorColumn::Sparse { rows, values } => {
                        rows.push(i as u32);
                        values.push(v);
                    }
                }
            }
        }
        for c in &mut columns {
            if let RegressorColumn::Dense(col) = c {
                col.resize(n_rows, 0.0);
            }
        }
        Self { n_rows, names, columns }
    }
}

/// Hourly design `U_t` for contiguous stamps.
pub fn build_hourly_regressors(
    stamps: &[HourStamp],
    calendar: &HolidayCalendar,
    families: Families,
) -> Result<RegressorMatrix> {
    if stamps.is_empty() {
        return Err(Error::InvalidInput("no hour stamps".into()));
    }
    for w in stamps.windows(2) {
        let a = w[0].day * HOURS_PER_DAY as i64 + w[0].hour as i64;
        let b = w[1].day * HOURS_PER_DAY as i64 + w[1].hour as i64;
        if b != a + 1 {
            return Err(Error::InvalidInput(format!(
                "hour stamps not contiguous between day {} hour {} and day {} hour {}",
                w[0].day, w[0].hour, w[1].day, w[1].hour
            )));
        }
    }
    let layout = HourlyLayout::new(calendar, families);
    let mut dense = vec![false; layout.n_columns()];
    if let Some(o) = layout.smooth {
        dense[o..o + N_SMOOTH].iter_mut().for_each(|d| *d = true);
    }
    let rows = stamps.iter().map(|s| {
        let mut r = Vec::with_capacity(16);
        layout.row(s, &mut r);
        r
    });
    Ok(RegressorMatrix::from_rows(stamps.len(), layout.names.clone(), &dense, rows))
}

/// Weekday indicators `V_d` for contiguous days.
pub fn build_daily_regressors(days: &[NaiveDate]) -> Result<RegressorMatrix> {
    if days.is_empty() {
        return Err(Error::InvalidInput("no days".into()));
    }
    for w in days.windows(2) {
        if (w[1] - w[0]).num_days() != 1 {
            return Err(Error::InvalidInput(format!("days not contiguous between {} and {}", w[0], w[1])));
        }
    }
    let names = WEEKDAYS.iter().map(|w| format!("weekday_{w}")).collect();
    let rows = days.iter().map(|d| vec![(weekday_index(*d) as u32, 1.0)]);
    Ok(RegressorMatrix::from_rows(days.len(), names, &[false; 7], rows))
}
