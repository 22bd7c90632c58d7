use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::HourlySeries;

/// Values of one series by day and hour, stored hour-major so that a single
/// hour across days is contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayHourPanel {
    pub name: String,
    /// Day index of the first stored day.
    pub first_day: i64,
    hours: Vec<Vec<f64>>,
}

impl DayHourPanel {
    pub fn new(name: impl Into<String>, first_day: i64, hours: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        if hours.is_empty() {
            return Err(Error::InvalidInput(format!("panel {name} has no hours")));
        }
        let n = hours[0].len();
        if let Some(h) = hours.iter().position(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                what: format!("days of panel {name} at hour {h}"),
                expected: n,
                found: hours[h].len(),
            });
        }
        Ok(Self { name, first_day, hours })
    }

    pub fn empty(name: impl Into<String>, first_day: i64, n_hours: usize) -> Self {
        Self {
            name: name.into(),
            first_day,
            hours: vec![Vec::new(); n_hours.max(1)],
        }
    }

    /// Panel from a day-major hourly sequence with `n_hours` values per day.
    pub fn from_day_major(name: impl Into<String>, first_day: i64, n_hours: usize, values: &[f64]) -> Result<Self> {
        let name = name.into();
        if n_hours == 0 || !values.len().is_multiple_of(n_hours) {
            return Err(Error::InvalidInput(format!(
                "panel {name}: {} values do not fill days of {n_hours} hours",
                values.len()
            )));
        }
        let hours = (0..n_hours).map(|h| values.iter().skip(h).step_by(n_hours).copied().collect()).collect();
        Ok(Self { name, first_day, hours })
    }

    /// 24-hour panel of an hourly series, day 0 at the series origin.
    pub fn from_series(series: &HourlySeries) -> Self {
        Self::from_day_major(series.name.clone(), 0, 24, &series.values).expect("hourly series holds whole days")
    }

    pub fn n_hours(&self) -> usize {
        self.hours.len()
    }

    pub fn n_days(&self) -> usize {
        self.hours[0].len()
    }

    /// Day index after the last stored day.
    pub fn next_day(&self) -> i64 {
        self.first_day + self.n_days() as i64
    }

    #[inline]
    pub fn get(&self, day: i64, hour: usize) -> f64 {
        self.hours[hour][(day - self.first_day) as usize]
    }

    /// Values of one hour over all stored days.
    pub fn hour_values(&self, hour: usize) -> &[f64] {
        &self.hours[hour]
    }

    pub fn day(&self, day: i64) -> Vec<f64> {
        (0..self.n_hours()).map(|h| self.get(day, h)).collect()
    }

    pub fn push_day(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_hours() {
            return Err(Error::DimensionMismatch {
                what: format!("hours appended to panel {}", self.name),
                expected: self.n_hours(),
                found: values.len(),
            });
        }
        for (col, &v) in self.hours.iter_mut().zip(values) {
            col.push(v);
        }
        Ok(())
    }

    /// Keeps only the last `days` days.
    pub fn truncate_front(&mut self, days: usize) {
        let n = self.n_days();
        if n > days {
            let cut = n - days;
            for col in &mut self.hours {
                col.drain(..cut);
            }
            self.first_day += cut as i64;
        }
    }

    /// Copy restricted to days `from..to`.
    pub fn window(&self, from: i64, to: i64) -> Result<Self> {
        if from < self.first_day || to > self.next_day() || from > to {
            return Err(Error::InvalidInput(format!(
                "panel {} covers days {}..{}, requested {from}..{to}",
                self.name,
                self.first_day,
                self.next_day()
            )));
        }
        let (a, b) = ((from - self.first_day) as usize, (to - self.first_day) as usize);
        Ok(Self {
            name: self.name.clone(),
            first_day: from,
            hours: self.hours.iter().map(|c| c[a..b].to_vec()).collect(),
        })
    }

    /// Day-major flattening.
    pub fn to_day_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_days() * self.n_hours());
        for d in 0..self.n_days() {
            for col in &self.hours {
                out.push(col[d]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_major_round_trip() {
        let v: Vec<f64> = (0..12).map(f64::from).collect();
        let p = DayHourPanel::from_day_major("x", 3, 4, &v).unwrap();
        assert_eq!(p.n_days(), 3);
        assert_eq!(p.get(4, 2), 6.0);
        assert_eq!(p.hour_values(1), &[1.0, 5.0, 9.0]);
        assert_eq!(p.to_day_major(), v);
        let mut w = p.window(4, 6).unwrap();
        assert_eq!(w.day(5), vec![8.0, 9.0, 10.0, 11.0]);
        w.push_day(&[0.0; 4]).unwrap();
        w.truncate_front(1);
        assert_eq!(w.first_day, 6);
        assert!(w.push_day(&[1.0]).is_err());
    }
}
