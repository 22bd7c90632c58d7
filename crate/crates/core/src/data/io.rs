//! CSV readers and writers for every on-disk format.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveTime};

use crate::curves::{BidCurve, Side};
use crate::error::{Error, Result};
use crate::expectations::DayHourPanel;
use crate::physical::CapacitySchedule;
use crate::timebase::{normalize_dst, HourlySeries, HOURS_PER_DAY};

use super::Span;

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let headers = r.headers().map_err(|e| schema(path, e.to_string()))?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(schema(path, format!("expected columns {}, found {}", expected.join(","), found.join(","))));
    }
    Ok(r)
}

fn schema(path: &Path, detail: String) -> Error {
    Error::Schema {
        file: path.display().to_string(),
        detail,
    }
}

fn line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, k: usize, what: &str) -> Result<T> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse()
        .map_err(|_| schema(path, format!("line {}: cannot parse {what} from {raw:?}", line(rec))))
}

fn date_field(path: &Path, rec: &csv::StringRecord, k: usize) -> Result<NaiveDate> {
    let raw = rec.get(k).unwrap_or("");
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| schema(path, format!("line {}: bad date {raw:?}", line(rec))))
}

fn hour_field(path: &Path, rec: &csv::StringRecord, k: usize) -> Result<usize> {
    let h: usize = field(path, rec, k, "hour")?;
    if h >= HOURS_PER_DAY {
        return Err(schema(path, format!("line {}: hour {h} outside 0-23", line(rec))));
    }
    Ok(h)
}

fn day_in_span(date: NaiveDate, span: &Span) -> Option<usize> {
    let d = (date - span.start).num_days();
    (d >= 0 && d < span.days as i64).then_some(d as usize)
}

fn finite(path: &Path, rec: &csv::StringRecord, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{} line {}", path.display(), line(rec))));
    }
    Ok(v)
}

/// Reads `timestamp,value` rows, normalizes DST and cuts the declared span.
pub fn read_series(path: &Path, name: &str, span: &Span) -> Result<HourlySeries> {
    let mut r = reader(path, &["timestamp", "value"])?;
    let mut raw: Vec<(DateTime<FixedOffset>, f64)> = Vec::new();
    let mut seen = HashSet::new();
    for rec in r.records() {
        let rec = rec?;
        let ts_raw = rec.get(0).unwrap_or("");
        let ts = DateTime::parse_from_rfc3339(ts_raw)
            .map_err(|_| schema(path, format!("line {}: timestamp {ts_raw:?} is not ISO-8601 with offset", line(&rec))))?;
        if !seen.insert(ts) {
            return Err(Error::Duplicate {
                file: path.display().to_string(),
                row: line(&rec),
                key: ts_raw.to_string(),
            });
        }
        let v: f64 = field(path, &rec, 1, "value")?;
        raw.push((ts, finite(path, &rec, v)?));
    }
    let series = normalize_dst(name, &raw)?;
    let offset = (span.start - series.origin).num_days();
    if offset < 0 || offset as usize + span.days > series.n_days() {
        return Err(Error::InvalidInput(format!(
            "series {name} covers {} to {}, not the declared span {} + {} days",
            series.origin,
            series.origin + chrono::Duration::days(series.n_days() as i64 - 1),
            span.start,
            span.days
        )));
    }
    Ok(series.window(offset as usize, span.days))
}

/// One cell per (day, hour) of the span, filled from rows keyed by `key`.
struct Grid {
    values: Vec<Option<f64>>,
}

impl Grid {
    fn new(days: usize) -> Self {
        Self {
            values: vec![None; days * HOURS_PER_DAY],
        }
    }

    fn set(&mut self, path: &Path, rec: &csv::StringRecord, day: usize, hour: usize, v: f64, key: String) -> Result<()> {
        let cell = &mut self.values[day * HOURS_PER_DAY + hour];
        if cell.is_some() {
            return Err(Error::Duplicate {
                file: path.display().to_string(),
                row: line(rec),
                key,
            });
        }
        *cell = Some(v);
        Ok(())
    }

    fn finish(self, series: &str, span: &Span) -> Result<Vec<f64>> {
        if let Some(t) = self.values.iter().position(|v| v.is_none()) {
            let at = |t: usize| {
                let d = span.start + chrono::Duration::days((t / HOURS_PER_DAY) as i64);
                format!("{d} hour {}", t % HOURS_PER_DAY)
            };
            let end = self.values[t..].iter().position(|v| v.is_some()).map_or(self.values.len(), |k| t + k);
            return Err(Error::Gap {
                series: series.into(),
                after: if t == 0 { "start of span".into() } else { at(t - 1) },
                before: if end == self.values.len() { "end of span".into() } else { at(end) },
            });
        }
        Ok(self.values.into_iter().map(|v| v.expect("checked")).collect())
    }
}

/// Reads `date,hour,series,value` planned rows into one panel per series.
pub fn read_planned(path: &Path, names: &[String], span: &Span) -> Result<Vec<DayHourPanel>> {
    let mut r = reader(path, &["date", "hour", "series", "value"])?;
    let mut grids: BTreeMap<&str, Grid> = names.iter().map(|n| (n.as_str(), Grid::new(span.days))).collect();
    for rec in r.records() {
        let rec = rec?;
        let date = date_field(path, &rec, 0)?;
        let hour = hour_field(path, &rec, 1)?;
        let series = rec.get(2).unwrap_or("");
        let v: f64 = field(path, &rec, 3, "value")?;
        let v = finite(path, &rec, v)?;
        let Some(day) = day_in_span(date, span) else { continue };
        let Some(g) = grids.get_mut(series) else {
            return Err(schema(path, format!("line {}: unknown planned series {series:?}", line(&rec))));
        };
        g.set(path, &rec, day, hour, v, format!("{date},{hour},{series}"))?;
    }
    names
        .iter()
        .map(|n| {
            let v = grids.remove(n.as_str()).expect("declared").finish(n, span)?;
            DayHourPanel::from_day_major(n.clone(), 0, HOURS_PER_DAY, &v)
        })
        .collect()
}

/// Bids of one delivery hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourBids {
    pub supply: BidCurve<f64>,
    pub demand: BidCurve<f64>,
}

/// Reads `auction_date,hour,side,price,volume` incremental bids; returns one
/// entry per delivery hour of the span, day-major.
pub fn read_curves(path: &Path, span: &Span) -> Result<Vec<HourBids>> {
    let mut r = reader(path, &["auction_date", "hour", "side", "price", "volume"])?;
    let n = span.days * HOURS_PER_DAY;
    let mut raw: Vec<[Vec<(f64, f64)>; 2]> = vec![[Vec::new(), Vec::new()]; n];
    for rec in r.records() {
        let rec = rec?;
        // the auction runs the day before delivery
        let date = date_field(path, &rec, 0)? + chrono::Duration::days(1);
        let hour = hour_field(path, &rec, 1)?;
        let side_raw = rec.get(2).unwrap_or("");
        let side = Side::parse(side_raw)
            .ok_or_else(|| schema(path, format!("line {}: side {side_raw:?} is neither supply nor demand", line(&rec))))?;
        let price: f64 = field(path, &rec, 3, "price")?;
        let volume: f64 = field(path, &rec, 4, "volume")?;
        let Some(day) = day_in_span(date, span) else { continue };
        raw[day * HOURS_PER_DAY + hour][(side == Side::Demand) as usize].push((finite(path, &rec, price)?, finite(path, &rec, volume)?));
    }
    let mut out = Vec::with_capacity(n);
    for (t, [s, d]) in raw.into_iter().enumerate() {
        if s.is_empty() || d.is_empty() {
            let date = span.start + chrono::Duration::days((t / HOURS_PER_DAY) as i64);
            return Err(Error::Gap {
                series: format!("{} curves", if s.is_empty() { "supply" } else { "demand" }),
                after: format!("{date} hour {}", t % HOURS_PER_DAY),
                before: format!("{date} hour {}", t % HOURS_PER_DAY),
            });
        }
        out.push(HourBids {
            supply: BidCurve::from_raw(Side::Supply, &s)?,
            demand: BidCurve::from_raw(Side::Demand, &d)?,
        });
    }
    Ok(out)
}

/// Reads `date,hour,side,group_index,volume` rows into group panels,
/// supply groups first.
pub fn read_group_volumes(path: &Path, n_supply: usize, n_demand: usize, span: &Span) -> Result<Vec<DayHourPanel>> {
    let mut r = reader(path, &["date", "hour", "side", "group_index", "volume"])?;
    let mut grids: Vec<Grid> = (0..n_supply + n_demand).map(|_| Grid::new(span.days)).collect();
    for rec in r.records() {
        let rec = rec?;
        let date = date_field(path, &rec, 0)?;
        let hour = hour_field(path, &rec, 1)?;
        let side_raw = rec.get(2).unwrap_or("");
        let side = Side::parse(side_raw).ok_or_else(|| schema(path, format!("line {}: bad side {side_raw:?}", line(&rec))))?;
        let g: usize = field(path, &rec, 3, "group_index")?;
        let v: f64 = field(path, &rec, 4, "volume")?;
        let v = finite(path, &rec, v)?;
        let k = match side {
            Side::Supply if g < n_supply => g,
            Side::Demand if g < n_demand => n_supply + g,
            _ => return Err(schema(path, format!("line {}: {side} group {g} does not exist", line(&rec)))),
        };
        let Some(day) = day_in_span(date, span) else { continue };
        grids[k].set(path, &rec, day, hour, v, format!("{date},{hour},{side},{g}"))?;
    }
    let names = crate::simulate::group_names(n_supply, n_demand);
    grids
        .into_iter()
        .zip(names)
        .map(|(g, name)| {
            let v = g.finish(&name, span)?;
            DayHourPanel::from_day_major(name, 0, HOURS_PER_DAY, &v)
        })
        .collect()
}

/// Reads `date,source,installed_capacity_gw` rows.
pub fn read_capacity(path: &Path) -> Result<CapacitySchedule> {
    let mut r = reader(path, &["date", "source", "installed_capacity_gw"])?;
    let mut sources: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for rec in r.records() {
        let rec = rec?;
        let date = date_field(path, &rec, 0)?;
        let source = rec.get(1).unwrap_or("").to_string();
        let gw: f64 = field(path, &rec, 2, "installed_capacity_gw")?;
        if !seen.insert((date, source.clone())) {
            return Err(Error::Duplicate {
                file: path.display().to_string(),
                row: line(&rec),
                key: format!("{date},{source}"),
            });
        }
        sources.entry(source).or_default().push((date, gw));
    }
    CapacitySchedule::new(sources)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// Writes an hourly series with a fixed UTC offset, one row per hour.
///
/// A fixed offset never produces a 23- or 25-hour day, so reading the
/// file back yields the identical series.
pub fn write_series(path: &Path, series: &HourlySeries, offset_hours: i32) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let sign = if offset_hours < 0 { '-' } else { '+' };
    let off = format!("{sign}{:02}:00", offset_hours.abs());
    writeln!(out, "timestamp,value").map_err(io)?;
    for (d, day) in series.values.chunks(HOURS_PER_DAY).enumerate() {
        let date = series.origin + chrono::Duration::days(d as i64);
        for (h, v) in day.iter().enumerate() {
            let t = date.and_time(NaiveTime::from_hms_opt(h as u32, 0, 0).expect("valid hour"));
            writeln!(out, "{}{off},{v}", t.format("%Y-%m-%dT%H:%M:%S")).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn write_planned(path: &Path, origin: NaiveDate, panels: &[DayHourPanel]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "date,hour,series,value").map_err(io)?;
    let (first, last) = (panels[0].first_day, panels[0].next_day());
    for day in first..last {
        let date = origin + chrono::Duration::days(day);
        for h in 0..HOURS_PER_DAY {
            for p in panels {
                writeln!(out, "{date},{h},{},{}", p.name, p.get(day, h)).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn write_curves(path: &Path, origin: NaiveDate, curves: &[HourBids]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "auction_date,hour,side,price,volume").map_err(io)?;
    for (t, c) in curves.iter().enumerate() {
        let auction = origin + chrono::Duration::days((t / HOURS_PER_DAY) as i64 - 1);
        let h = t % HOURS_PER_DAY;
        for b in [&c.supply, &c.demand] {
            for &(i, v) in &b.bids {
                writeln!(out, "{auction},{h},{},{},{v}", b.side, crate::curves::PriceGrid::price(i as usize)).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn write_group_volumes(path: &Path, origin: NaiveDate, n_supply: usize, groups: &[DayHourPanel]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "date,hour,side,group_index,volume").map_err(io)?;
    let (first, last) = (groups[0].first_day, groups[0].next_day());
    for day in first..last {
        let date = origin + chrono::Duration::days(day);
        for h in 0..HOURS_PER_DAY {
            for (k, g) in groups.iter().enumerate() {
                let (side, idx) = if k < n_supply { ("supply", k) } else { ("demand", k - n_supply) };
                writeln!(out, "{date},{h},{side},{idx},{}", g.get(day, h)).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn write_capacity(path: &Path, schedule: &CapacitySchedule) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "date,source,installed_capacity_gw").map_err(io)?;
    for (source, pts) in &schedule.sources {
        for (d, gw) in pts {
            writeln!(out, "{d},{source},{gw}").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Hourly prices as `date,hour,price`.
pub fn write_prices(path: &Path, origin: NaiveDate, first_day: i64, prices: &[f64]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "date,hour,price").map_err(io)?;
    for (t, p) in prices.iter().enumerate() {
        let date = origin + chrono::Duration::days(first_day + (t / HOURS_PER_DAY) as i64);
        writeln!(out, "{date},{},{p}", t % HOURS_PER_DAY).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads `date,hour,price` rows; returns the first date and day-major
/// prices over the contiguous days covered.
pub fn read_prices(path: &Path) -> Result<(NaiveDate, Vec<f64>)> {
    let mut r = reader(path, &["date", "hour", "price"])?;
    let mut rows: BTreeMap<(NaiveDate, usize), f64> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let date = date_field(path, &rec, 0)?;
        let hour = hour_field(path, &rec, 1)?;
        let p: f64 = field(path, &rec, 2, "price")?;
        if rows.insert((date, hour), finite(path, &rec, p)?).is_some() {
            return Err(Error::Duplicate {
                file: path.display().to_string(),
                row: line(&rec),
                key: format!("{date},{hour}"),
            });
        }
    }
    let Some((&(start, _), _)) = rows.iter().next() else {
        return Err(Error::InvalidInput(format!("{}: no prices", path.display())));
    };
    let days = (rows.keys().last().expect("nonempty").0 - start).num_days() as usize + 1;
    let span = Span { start, days };
    let mut grid = Grid::new(days);
    for ((date, hour), p) in rows {
        let d = (date - start).num_days() as usize;
        grid.values[d * HOURS_PER_DAY + hour] = Some(p);
    }
    Ok((start, grid.finish("prices", &span)?))
}
