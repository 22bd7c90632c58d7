//! Calendar arithmetic, DST normalisation and deterministic regressors.

mod holidays;
mod regressors;

pub use holidays::{easter_sunday, HolidayCalendar, VaryingHoliday};
pub use regressors::{
    build_daily_regressors, build_hourly_regressors, Families, HourlyLayout, RegressorColumn, RegressorMatrix,
};

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;

/// Day of year in `1..=365`; Feb 29 shares 59 with Feb 28 and later days
/// of a leap year are shifted back by one.
pub fn day_of_year(date: NaiveDate) -> u16 {
    let ord = date.ordinal() as u16;
    if date.leap_year() && ord >= 60 {
        ord - 1
    } else {
        ord
    }
}

/// Monday = 0 … Sunday = 6.
pub fn weekday_index(date: NaiveDate) -> u8 {
    date.weekday().num_days_from_monday() as u8
}

/// One hour of a normalised series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HourStamp {
    /// Days since the dataset origin.
    pub day: i64,
    pub hour: u8,
    pub weekday: u8,
    pub day_of_year: u16,
    pub date: NaiveDate,
}

impl HourStamp {
    pub fn new(origin: NaiveDate, day: i64, hour: u8) -> Self {
        debug_assert!((hour as usize) < HOURS_PER_DAY);
        let date = origin + chrono::Duration::days(day);
        Self {
            day,
            hour,
            weekday: weekday_index(date),
            day_of_year: day_of_year(date),
            date,
        }
    }

    /// Position within the week, `weekday * 24 + hour`.
    pub fn week_hour(&self) -> usize {
        self.weekday as usize * HOURS_PER_DAY + self.hour as usize
    }

    /// Continuous time in days on a fixed calendar reference, used by the
    /// smooth annual basis.
    pub fn continuous_day(&self) -> f64 {
        let reference = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        (self.date - reference).num_days() as f64 + self.hour as f64 / HOURS_PER_DAY as f64
    }
}

/// Hour stamps for `n_days` whole days starting `first_day` days after `origin`.
pub fn stamps(origin: NaiveDate, first_day: i64, n_days: usize) -> Vec<HourStamp> {
    let mut out = Vec::with_capacity(n_days * HOURS_PER_DAY);
    for d in 0..n_days as i64 {
        let day = HourStamp::new(origin, first_day + d, 0);
        for h in 0..HOURS_PER_DAY as u8 {
            out.push(HourStamp { hour: h, ..day });
        }
    }
    out
}

/// Hourly observations of one process, whole days, no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    pub name: String,
    /// Calendar date of the first hour (local 00:00).
    pub origin: NaiveDate,
    pub values: Vec<f64>,
}

impl HourlySeries {
    pub fn new(name: impl Into<String>, origin: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if !values.len().is_multiple_of(HOURS_PER_DAY) {
            return Err(Error::InvalidInput(format!(
                "series {name}: length {} is not a whole number of days",
                values.len()
            )));
        }
        Ok(Self { name, origin, values })
    }

    pub fn n_days(&self) -> usize {
        self.values.len() / HOURS_PER_DAY
    }

    pub fn day(&self, d: usize) -> &[f64] {
        &self.values[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY]
    }

    pub fn stamps(&self) -> Vec<HourStamp> {
        stamps(self.origin, 0, self.n_days())
    }

    /// Sub-series covering days `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> HourlySeries {
        HourlySeries {
            name: self.name.clone(),
            origin: self.origin + chrono::Duration::days(start as i64),
            values: self.values[start * HOURS_PER_DAY..(start + len) * HOURS_PER_DAY].to_vec(),
        }
    }
}

fn wall(ts: &DateTime<FixedOffset>) -> NaiveDateTime {
    ts.naive_local()
}

/// Turns an offset-stamped hourly record into 24 values per local day.
///
/// The spring-forward hour missing from local time is filled with the
/// midpoint of its two neighbours; the repeated autumn hour is replaced by
/// the mean of its two readings. Timestamps must be strictly increasing in
/// absolute time, on whole hours, one hour apart, and the record must start
/// at local 00:00 and end at local 23:00.
pub fn normalize_dst(name: &str, raw: &[(DateTime<FixedOffset>, f64)]) -> Result<HourlySeries> {
    let first = raw
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("series {name}: no observations")))?;
    for (ts, _) in raw {
        if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
            return Err(Error::InvalidInput(format!("series {name}: timestamp {ts} is not on a whole hour")));
        }
    }
    for w in raw.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::NonMonotoneTimestamps {
                series: name.into(),
                at: w[1].0.to_rfc3339(),
            });
        }
    }
    if wall(&first.0).hour() != 0 {
        return Err(Error::InvalidInput(format!(
            "series {name}: first timestamp {} is not local midnight",
            first.0
        )));
    }
    let mut values = Vec::with_capacity(raw.len() + 1);
    values.push(first.1);
    let mut i = 1;
    while i < raw.len() {
        let (prev_ts, prev_v) = raw[i - 1];
        let (ts, v) = raw[i];
        if (ts - prev_ts).num_seconds() != 3600 {
            return Err(Error::Gap {
                series: name.into(),
                after: prev_ts.to_rfc3339(),
                before: ts.to_rfc3339(),
            });
        }
        let local_step = (wall(&ts) - wall(&prev_ts)).num_seconds();
        let offset_changed = ts.offset() != prev_ts.offset();
        match local_step {
            3600 => values.push(v),
            7200 if offset_changed => {
                values.push(0.5 * (prev_v + v));
                values.push(v);
            }
            0 if offset_changed => {
                let last = values.last_mut().expect("nonempty");
                *last = 0.5 * (prev_v + v);
            }
            _ => {
                return Err(Error::Gap {
                    series: name.into(),
                    after: prev_ts.to_rfc3339(),
                    before: ts.to_rfc3339(),
                });
            }
        }
        i += 1;
    }
    let last = raw.last().expect("nonempty");
    if wall(&last.0).hour() != 23 {
        return Err(Error::InvalidInput(format!(
            "series {name}: last timestamp {} is not local 23:00",
            last.0
        )));
    }
    HourlySeries::new(name, wall(&first.0).date(), values)
}
