use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::HourlySeries;

/// Days per year used when converting annual capacity growth to a slope.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Longest horizon the linear fleet extrapolation is trusted for.
pub const MAX_EXTENSION_DAYS: usize = 3650;

/// Installed capacity in GW per source, piecewise linear between dated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CapacitySchedule {
    pub sources: BTreeMap<String, Vec<(NaiveDate, f64)>>,
}

impl CapacitySchedule {
    pub fn new(sources: BTreeMap<String, Vec<(NaiveDate, f64)>>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (name, mut pts) in sources {
            if pts.is_empty() {
                return Err(Error::InvalidInput(format!("capacity source {name} has no points")));
            }
            pts.sort_by_key(|p| p.0);
            for w in pts.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidInput(format!("capacity source {name}: two values on {}", w[0].0)));
                }
            }
            if let Some(p) = pts.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
                return Err(Error::OutOfRange {
                    what: format!("installed capacity of {name} on {}", p.0),
                    value: p.1,
                });
            }
            out.insert(name, pts);
        }
        Ok(Self { sources: out })
    }

    /// Constant capacity over all dates from `from` to `to`.
    pub fn constant(source: &str, from: NaiveDate, to: NaiveDate, gw: f64) -> Result<Self> {
        let pts = if from == to { vec![(from, gw)] } else { vec![(from, gw), (to, gw)] };
        Self::new([(source.to_string(), pts)].into_iter().collect())
    }

    pub fn merge(mut self, other: CapacitySchedule) -> Self {
        self.sources.extend(other.sources);
        self
    }

    /// Span `(first, last)` covered by a source.
    pub fn span(&self, source: &str) -> Option<(NaiveDate, NaiveDate)> {
        let pts = self.sources.get(source)?;
        Some((pts.first()?.0, pts.last()?.0))
    }

    /// Capacity in GW on `date`, or `None` outside the covered span.
    pub fn capacity_gw(&self, source: &str, date: NaiveDate) -> Option<f64> {
        let pts = self.sources.get(source)?;
        let k = pts.partition_point(|p| p.0 <= date);
        if k == 0 {
            return None;
        }
        let (d0, c0) = pts[k - 1];
        if d0 == date {
            return Some(c0);
        }
        let (d1, c1) = *pts.get(k)?;
        let t = (date - d0).num_days() as f64 / (d1 - d0).num_days() as f64;
        Some(c0 + t * (c1 - c0))
    }

    /// Capacity in MWh per hour (1 GW = 1000 MWh/h), erroring outside the span.
    pub fn hourly_mwh(&self, source: &str, date: NaiveDate) -> Result<f64> {
        let gw = self.capacity_gw(source, date).ok_or_else(|| {
            Error::InvalidInput(format!("capacity schedule for {source} does not cover {date}"))
        })?;
        if !(gw > 0.0) {
            return Err(Error::OutOfRange {
                what: format!("installed capacity of {source} on {date}"),
                value: gw,
            });
        }
        Ok(gw * 1000.0)
    }
}

/// Linear extension of every listed source beyond its last point.
pub fn extend_capacity(schedule: &CapacitySchedule, horizon_days: usize, growth_gw_per_year: &BTreeMap<String, f64>) -> Result<CapacitySchedule> {
    if horizon_days > MAX_EXTENSION_DAYS {
        return Err(Error::OutOfRange {
            what: format!("horizon beyond the {MAX_EXTENSION_DAYS}-day capacity extension"),
            value: horizon_days as f64,
        });
    }
    let mut out = schedule.clone();
    for (source, pts) in out.sources.iter_mut() {
        let g = growth_gw_per_year.get(source).copied().unwrap_or(0.0);
        if !(g >= 0.0) {
            return Err(Error::OutOfRange {
                what: format!("capacity growth of {source}"),
                value: g,
            });
        }
        let &(last_date, last) = pts.last().expect("validated nonempty");
        if horizon_days > 0 {
            let end = last_date + chrono::Duration::days(horizon_days as i64);
            pts.push((end, last + g * horizon_days as f64 / DAYS_PER_YEAR));
        }
    }
    Ok(out)
}

/// Feed-in divided by installed capacity (MWh per MWh of hourly capacity).
pub fn capacity_adjust(feed_in: &HourlySeries, schedule: &CapacitySchedule, source: &str) -> Result<HourlySeries> {
    let factors = day_factors(feed_in, schedule, source)?;
    let values = feed_in
        .values
        .chunks(24)
        .zip(&factors)
        .flat_map(|(day, &c)| day.iter().map(move |v| v / c))
        .collect();
    HourlySeries::new(feed_in.name.clone(), feed_in.origin, values)
}

/// Inverse of [`capacity_adjust`].
pub fn capacity_restore(ratio: &HourlySeries, schedule: &CapacitySchedule, source: &str) -> Result<HourlySeries> {
    let factors = day_factors(ratio, schedule, source)?;
    let values = ratio
        .values
        .chunks(24)
        .zip(&factors)
        .flat_map(|(day, &c)| day.iter().map(move |v| v * c))
        .collect();
    HourlySeries::new(ratio.name.clone(), ratio.origin, values)
}

fn day_factors(series: &HourlySeries, schedule: &CapacitySchedule, source: &str) -> Result<Vec<f64>> {
    (0..series.n_days())
        .map(|d| schedule.hourly_mwh(source, series.origin + chrono::Duration::days(d as i64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn adjust_divides_by_capacity() {
        let s = HourlySeries::new("wind", day(2015, 1, 1), vec![5000.0; 24]).unwrap();
        let cap = CapacitySchedule::constant("wind", day(2015, 1, 1), day(2015, 1, 1), 40.0).unwrap();
        let r = capacity_adjust(&s, &cap, "wind").unwrap();
        assert!(r.values.iter().all(|&v| v == 0.125));
        let back = capacity_restore(&r, &cap, "wind").unwrap();
        assert_eq!(back.values, s.values);
    }

    #[test]
    fn rising_capacity_lowers_ratio() {
        let s = HourlySeries::new("solar", day(2015, 1, 1), vec![1000.0; 24 * 5]).unwrap();
        let cap = CapacitySchedule::new(
            [("solar".to_string(), vec![(day(2015, 1, 1), 30.0), (day(2015, 1, 5), 34.0)])].into_iter().collect(),
        )
        .unwrap();
        let r = capacity_adjust(&s, &cap, "solar").unwrap();
        for d in 1..5 {
            assert!(r.values[d * 24] < r.values[(d - 1) * 24]);
        }
    }

    #[test]
    fn uncovered_or_nonpositive_capacity_is_rejected() {
        let s = HourlySeries::new("wind", day(2015, 1, 1), vec![1.0; 48]).unwrap();
        let cap = CapacitySchedule::constant("wind", day(2015, 1, 1), day(2015, 1, 1), 40.0).unwrap();
        assert!(capacity_adjust(&s, &cap, "wind").is_err());
        let bad = CapacitySchedule::new([("wind".to_string(), vec![(day(2015, 1, 1), 0.0)])].into_iter().collect());
        assert!(bad.is_err());
    }

    #[test]
    fn linear_extension() {
        let solar = CapacitySchedule::constant("solar", day(2014, 1, 1), day(2015, 1, 1), 39.0).unwrap();
        let wind = CapacitySchedule::constant("wind", day(2014, 1, 1), day(2015, 1, 1), 45.0).unwrap();
        let cap = solar.merge(wind);
        let growth: BTreeMap<String, f64> = [("solar".to_string(), 3.0), ("wind".to_string(), 3.25)].into_iter().collect();
        let ext = extend_capacity(&cap, 730, &growth).unwrap();
        assert!((ext.capacity_gw("solar", day(2016, 1, 1)).unwrap() - 42.0).abs() < 1e-12);
        assert!((ext.capacity_gw("wind", day(2016, 12, 31)).unwrap() - 51.5).abs() < 1e-12);
        let flat = extend_capacity(&cap, 100, &BTreeMap::new()).unwrap();
        assert_eq!(flat.capacity_gw("wind", day(2015, 3, 1)), Some(45.0));
    }
}
