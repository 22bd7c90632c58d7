use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gregorian Easter Sunday (anonymous computus).
pub fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).expect("computus yields a valid date")
}

/// A holiday whose date moves but whose weekday is fixed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaryingHoliday {
    pub name: String,
    pub dates: BTreeSet<NaiveDate>,
}

/// Public holidays split by whether the calendar date or the weekday is stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidayCalendar {
    /// `(name, month, day)`
    pub fixed: Vec<(String, u32, u32)>,
    pub varying: Vec<VaryingHoliday>,
}

const GERMAN_FIXED: [(&str, u32, u32); 10] = [
    ("new_year", 1, 1),
    ("epiphany", 1, 6),
    ("labour_day", 5, 1),
    ("german_unity", 10, 3),
    ("reformation_day", 10, 31),
    ("all_saints", 11, 1),
    ("christmas_eve", 12, 24),
    ("christmas_day", 12, 25),
    ("boxing_day", 12, 26),
    ("new_years_eve", 12, 31),
];

/// Offsets from Easter Sunday.
const GERMAN_VARYING: [(&str, i64); 6] = [
    ("good_friday", -2),
    ("easter_sunday", 0),
    ("easter_monday", 1),
    ("ascension_day", 39),
    ("whit_monday", 50),
    ("corpus_christi", 60),
];

impl HolidayCalendar {
    pub fn new(fixed: Vec<(String, u32, u32)>, varying: Vec<VaryingHoliday>) -> Result<Self> {
        for (name, m, d) in &fixed {
            if NaiveDate::from_ymd_opt(2000, *m, *d).is_none() {
                return Err(Error::InvalidInput(format!("holiday {name}: invalid month/day {m}/{d}")));
            }
        }
        let cal = Self { fixed, varying };
        for v in &cal.varying {
            for date in &v.dates {
                if let Some(f) = cal.fixed_on(*date) {
                    return Err(Error::InvalidInput(format!(
                        "{date} is both the fixed holiday {} and the varying holiday {}",
                        cal.fixed[f].0, v.name
                    )));
                }
            }
        }
        Ok(cal)
    }

    pub fn empty() -> Self {
        Self {
            fixed: Vec::new(),
            varying: Vec::new(),
        }
    }

    /// National and major regional German public holidays for the given years.
    pub fn german(years: std::ops::RangeInclusive<i32>) -> Self {
        let fixed: Vec<(String, u32, u32)> = GERMAN_FIXED.iter().map(|&(n, m, d)| (n.to_string(), m, d)).collect();
        let on_fixed = |date: &NaiveDate| fixed.iter().any(|(_, m, d)| date.month() == *m && date.day() == *d);
        // a movable feast landing on a fixed holiday (Ascension on 1 May) counts as the fixed one
        let varying = GERMAN_VARYING
            .iter()
            .map(|&(n, off)| VaryingHoliday {
                name: n.to_string(),
                dates: years
                    .clone()
                    .map(|y| easter_sunday(y) + chrono::Duration::days(off))
                    .filter(|d| !on_fixed(d))
                    .collect(),
            })
            .collect();
        Self { fixed, varying }
    }

    /// German calendar over a range wide enough for any realistic dataset.
    pub fn german_default() -> Self {
        Self::german(1950..=2150)
    }

    /// Index of the fixed holiday on `date`, if any.
    pub fn fixed_on(&self, date: NaiveDate) -> Option<usize> {
        self.fixed
            .iter()
            .position(|(_, m, d)| date.month() == *m && date.day() == *d)
    }

    /// Index of the varying holiday on `date`, if any.
    pub fn varying_on(&self, date: NaiveDate) -> Option<usize> {
        self.varying.iter().position(|v| v.dates.contains(&date))
    }

    /// Reads a `date,name,kind` file where kind is `fixed` or `varying`.
    ///
    /// For fixed holidays only the month and day of the date are used.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["date", "name", "kind"] {
            return Err(Error::Schema {
                file,
                detail: format!("expected header date,name,kind, found {}", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut fixed: Vec<(String, u32, u32)> = Vec::new();
        let mut varying: BTreeMap<String, BTreeSet<NaiveDate>> = BTreeMap::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Schema {
                file: file.clone(),
                detail: format!("row {}: bad date {:?}: {e}", row + 2, &rec[0]),
            })?;
            let name = rec[1].to_string();
            match &rec[2] {
                "fixed" => {
                    if !fixed.iter().any(|(n, _, _)| *n == name) {
                        fixed.push((name, date.month(), date.day()));
                    }
                }
                "varying" => {
                    varying.entry(name).or_default().insert(date);
                }
                other => {
                    return Err(Error::Schema {
                        file,
                        detail: format!("row {}: kind must be fixed or varying, found {other:?}", row + 2),
                    })
                }
            }
        }
        Self::new(
            fixed,
            varying
                .into_iter()
                .map(|(name, dates)| VaryingHoliday { name, dates })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn easter_dates() {
        assert_eq!(easter_sunday(2015), NaiveDate::from_ymd_opt(2015, 4, 5).unwrap());
        assert_eq!(easter_sunday(2019), NaiveDate::from_ymd_opt(2019, 4, 21).unwrap());
        assert_eq!(easter_sunday(2024), NaiveDate::from_ymd_opt(2024, 3, 31).unwrap());
        assert_eq!(easter_sunday(2038), NaiveDate::from_ymd_opt(2038, 4, 25).unwrap());
    }

    #[test]
    fn german_varying_holidays_keep_their_weekday() {
        let cal = HolidayCalendar::german(2010..=2030);
        let weekday = |name: &str| {
            let v = cal.varying.iter().find(|v| v.name == name).unwrap();
            let w: BTreeSet<_> = v.dates.iter().map(|d| d.weekday().num_days_from_monday()).collect();
            assert_eq!(w.len(), 1, "{name}");
            *w.iter().next().unwrap()
        };
        assert_eq!(weekday("good_friday"), 4);
        assert_eq!(weekday("easter_monday"), 0);
        assert_eq!(weekday("ascension_day"), 3);
        assert_eq!(weekday("corpus_christi"), 3);
    }

    #[test]
    fn built_in_calendar_satisfies_its_invariant() {
        let cal = HolidayCalendar::german_default();
        assert!(HolidayCalendar::new(cal.fixed.clone(), cal.varying.clone()).is_ok());
        let may1_2008 = NaiveDate::from_ymd_opt(2008, 5, 1).unwrap();
        assert!(cal.fixed_on(may1_2008).is_some());
        assert!(cal.varying_on(may1_2008).is_none());
    }

    #[test]
    fn rejects_date_in_both_lists() {
        let d = NaiveDate::from_ymd_opt(2020, 5, 1).unwrap();
        let r = HolidayCalendar::new(
            vec![("labour".into(), 5, 1)],
            vec![VaryingHoliday {
                name: "x".into(),
                dates: [d].into_iter().collect(),
            }],
        );
        assert!(r.is_err());
    }
}
