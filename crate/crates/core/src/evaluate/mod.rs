//! Negative-price run events, calibration diagnostics and report tables.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::simulate::quantiles::{quantile_panel, QuantilePanel};
use crate::simulate::PathEnsemble;

/// Which prices count as negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EventRule {
    /// Count exactly zero prices as well (`price <= 0`).
    pub include_zero: bool,
}

impl EventRule {
    #[inline]
    pub fn hit(&self, price: f64) -> bool {
        if self.include_zero {
            price <= 0.0
        } else {
            price < 0.0
        }
    }
}

/// `out[t] = 1` iff the `c` prices ending at `t` are all negative.
///
/// `history` holds hours preceding `prices`; only its last `c - 1` entries
/// matter. Without it the first `c - 1` positions can only be 0.
pub fn detect_runs(prices: &[f64], c: usize, history: Option<&[f64]>, rule: EventRule) -> Vec<u8> {
    assert!(c >= 1, "run length must be at least 1");
    let mut run = 0usize;
    if let Some(h) = history {
        run = h.iter().rev().take(c - 1).take_while(|&&p| rule.hit(p)).count();
    }
    prices
        .iter()
        .map(|&p| {
            run = if rule.hit(p) { run + 1 } else { 0 };
            (run >= c) as u8
        })
        .collect()
}

/// Forecast probabilities of a `c`-hour negative run, with realized
/// indicators when observations are supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub c: usize,
    pub n_paths: usize,
    /// Per day-major hour of the horizon.
    pub probabilities: Vec<f64>,
    pub mean_probability: f64,
    /// One indicator sequence per observed path, aligned with `probabilities`.
    pub observed: Vec<Vec<u8>>,
    pub observed_frequency: Option<f64>,
}

/// Observed prices over a horizon, optionally with the hours before it.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub prices: &'a [f64],
    pub history: Option<&'a [f64]>,
}

/// Fraction of usable paths with a `c`-hour run ending at each hour.
///
/// `history` is the observed past before the horizon and is stitched in
/// front of every path.
pub fn event_probabilities(
    ens: &PathEnsemble,
    c: usize,
    history: Option<&[f64]>,
    observed: &[Observation<'_>],
    rule: EventRule,
) -> Result<EventReport> {
    if c == 0 {
        return Err(Error::InvalidInput("run length must be at least 1".into()));
    }
    let n = ens.n_hours();
    let mut counts = vec![0u32; n];
    let mut n_paths = 0;
    for p in ens.usable() {
        n_paths += 1;
        for (k, i) in detect_runs(&p.prices, c, history, rule).into_iter().enumerate() {
            counts[k] += i as u32;
        }
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("ensemble has no usable paths".into()));
    }
    let probabilities: Vec<f64> = counts.iter().map(|&k| k as f64 / n_paths as f64).collect();
    let mean_probability = probabilities.iter().sum::<f64>() / n as f64;
    let mut obs = Vec::with_capacity(observed.len());
    for o in observed {
        if o.prices.len() != n {
            return Err(Error::DimensionMismatch {
                what: "observed hours".into(),
                expected: n,
                found: o.prices.len(),
            });
        }
        obs.push(detect_runs(o.prices, c, o.history, rule));
    }
    let observed_frequency = (!obs.is_empty()).then(|| {
        let hits: usize = obs.iter().flatten().map(|&i| i as usize).sum();
        hits as f64 / (obs.len() * n) as f64
    });
    Ok(EventReport {
        c,
        n_paths,
        probabilities,
        mean_probability,
        observed: obs,
        observed_frequency,
    })
}

/// Reports for run lengths `1..=max_c`.
pub fn event_reports(
    ens: &PathEnsemble,
    max_c: usize,
    history: Option<&[f64]>,
    observed: &[Observation<'_>],
    rule: EventRule,
) -> Result<Vec<EventReport>> {
    (1..=max_c).map(|c| event_probabilities(ens, c, history, observed, rule)).collect()
}

fn pct(x: f64) -> String {
    format!("{:.3}", 100.0 * x)
}

/// Two-row summary: a header of run lengths, then forecast and observed
/// percentages.
pub fn write_event_table(path: &Path, reports: &[EventReport]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let cs: Vec<String> = reports.iter().map(|r| r.c.to_string()).collect();
    writeln!(out, "c,{}", cs.join(",")).map_err(io)?;
    let row = |f: &dyn Fn(&EventReport) -> String| reports.iter().map(f).collect::<Vec<_>>().join(",");
    writeln!(out, "forecasted,{}", row(&|r| pct(r.mean_probability))).map_err(io)?;
    writeln!(out, "observed,{}", row(&|r| r.observed_frequency.map_or(String::new(), pct))).map_err(io)?;
    out.flush().map_err(io)
}

/// Long form `c,forecast_pct,observed_pct`.
pub fn write_event_summary(path: &Path, reports: &[EventReport]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "c,forecast_pct,observed_pct").map_err(io)?;
    for r in reports {
        writeln!(out, "{},{},{}", r.c, pct(r.mean_probability), r.observed_frequency.map_or(String::new(), pct)).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Per-hour probabilities `date,hour,c,probability` for every report.
pub fn write_event_probabilities(path: &Path, ens: &PathEnsemble, reports: &[EventReport]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "# seed={} horizon_days={}", ens.seed, ens.horizon_days).map_err(io)?;
    writeln!(out, "date,hour,c,probability").map_err(io)?;
    for t in 0..ens.n_hours() {
        let date = ens.date(t / 24);
        for r in reports {
            writeln!(out, "{date},{},{},{}", t % 24, r.c, r.probabilities[t]).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Hourly probabilities per run length.
pub type EventColumns = Vec<(usize, Vec<f64>)>;

/// Reads a file written by [`write_event_probabilities`]: the first date
/// and, per run length in file order, the hourly probabilities.
pub fn read_event_probabilities(path: &Path) -> Result<(NaiveDate, EventColumns)> {
    let schema = |detail: String| Error::Schema {
        file: path.display().to_string(),
        detail,
    };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["date", "hour", "c", "probability"] {
        return Err(schema("expected columns date,hour,c,probability".into()));
    }
    let mut first = None;
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || schema(format!("line {}: malformed row", row + 3));
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| bad())?;
        let hour: usize = rec[1].parse().map_err(|_| bad())?;
        let d0 = *first.get_or_insert(date);
        let t = (date - d0).num_days() as usize * 24 + hour;
        rows.push((t, rec[2].parse().map_err(|_| bad())?, rec[3].parse().map_err(|_| bad())?));
    }
    let Some(d0) = first else {
        return Err(schema("no probability rows".into()));
    };
    let cs: Vec<usize> = rows.iter().take_while(|r| r.0 == 0).map(|r| r.1).collect();
    let k = cs.len();
    if !rows.len().is_multiple_of(k) {
        return Err(schema("incomplete final hour".into()));
    }
    let mut out: Vec<(usize, Vec<f64>)> = cs.iter().map(|&c| (c, Vec::with_capacity(rows.len() / k))).collect();
    for (i, &(t, c, p)) in rows.iter().enumerate() {
        if t != i / k || c != cs[i % k] {
            return Err(schema(format!("line {}: rows are not ordered by date, hour and run length", i + 3)));
        }
        out[i % k].1.push(p);
    }
    Ok((d0, out))
}

/// Scores forecast probabilities against one observed path.
///
/// `history` holds the observed hours before the first forecast hour.
pub fn score_events(c: usize, probabilities: &[f64], observed: &[f64], history: Option<&[f64]>, rule: EventRule) -> Result<EventReport> {
    if c == 0 {
        return Err(Error::InvalidInput("run length must be at least 1".into()));
    }
    if probabilities.len() != observed.len() || observed.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "observed hours".into(),
            expected: probabilities.len(),
            found: observed.len(),
        });
    }
    let ind = detect_runs(observed, c, history, rule);
    let hits: usize = ind.iter().map(|&i| i as usize).sum();
    Ok(EventReport {
        c,
        n_paths: 0,
        mean_probability: probabilities.iter().sum::<f64>() / probabilities.len() as f64,
        probabilities: probabilities.to_vec(),
        observed_frequency: Some(hits as f64 / ind.len() as f64),
        observed: vec![ind],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_forecast: f64,
    pub observed_frequency: f64,
}

/// Weighted least-squares line through the bin points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub edges: Vec<f64>,
    /// Nonempty bins only.
    pub bins: Vec<ReliabilityBin>,
    pub total: usize,
    /// `None` when every forecast falls in a single bin.
    pub fit: Option<WeightedFit>,
}

/// Default edges: one bin holding exactly-zero forecasts, then equal-count
/// bins over the nonzero forecasts.
pub fn default_bins(probabilities: &[f64], n_bins: usize) -> Vec<f64> {
    let mut nz: Vec<f64> = probabilities.iter().copied().filter(|&p| p > 0.0).collect();
    if nz.is_empty() {
        return vec![0.0, 1.0];
    }
    nz.sort_by(f64::total_cmp);
    let mut edges = vec![0.0, nz[0]];
    for k in 1..n_bins {
        edges.push(nz[k * nz.len() / n_bins]);
    }
    edges.push(1.0);
    edges.dedup();
    // nz[0] may equal 1 when all nonzero forecasts are certain
    if edges.len() < 2 {
        edges.push(1.0);
    }
    edges
}

/// Bins `[e_k, e_{k+1})`, the last one closed.
fn bin_of(edges: &[f64], p: f64) -> Option<usize> {
    let last = *edges.last()?;
    if !(p >= edges[0] && p <= last) {
        return None;
    }
    let k = edges[1..].partition_point(|&e| e <= p);
    Some(k.min(edges.len() - 2))
}

pub fn weighted_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<WeightedFit> {
    // a weighted mean of equal x need not round back to x, so check directly
    if x.iter().all(|&a| a == x[0]) {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((&a, &b), &v) in x.iter().zip(y).zip(w) {
        sxx += v * (a - mx) * (a - mx);
        sxy += v * (a - mx) * (b - my);
        syy += v * (b - my) * (b - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&a, &b), &v)| v * (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(WeightedFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Observed event frequency per forecast-probability bin, pooling every
/// observed path of the report.
pub fn reliability(report: &EventReport, edges: &[f64]) -> Result<ReliabilityTable> {
    if report.observed.is_empty() {
        return Err(Error::InvalidInput("reliability needs observed indicators".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("bin edges must be strictly increasing".into()));
    }
    let nb = edges.len() - 1;
    let (mut count, mut sum_p, mut hits) = (vec![0usize; nb], vec![0.0; nb], vec![0usize; nb]);
    for obs in &report.observed {
        for (&p, &i) in report.probabilities.iter().zip(obs) {
            let k = bin_of(edges, p).ok_or(Error::OutOfRange {
                what: "forecast probability outside the bins".into(),
                value: p,
            })?;
            count[k] += 1;
            sum_p[k] += p;
            hits[k] += i as usize;
        }
    }
    let bins: Vec<ReliabilityBin> = (0..nb)
        .filter(|&k| count[k] > 0)
        .map(|k| ReliabilityBin {
            lower: edges[k],
            upper: edges[k + 1],
            count: count[k],
            mean_forecast: sum_p[k] / count[k] as f64,
            observed_frequency: hits[k] as f64 / count[k] as f64,
        })
        .collect();
    let x: Vec<f64> = bins.iter().map(|b| b.mean_forecast).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.observed_frequency).collect();
    let w: Vec<f64> = bins.iter().map(|b| b.count as f64).collect();
    Ok(ReliabilityTable {
        edges: edges.to_vec(),
        total: count.iter().sum(),
        fit: if bins.len() > 1 { weighted_fit(&x, &y, &w) } else { None },
        bins,
    })
}

pub fn write_reliability(path: &Path, table: &ReliabilityTable) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    match table.fit {
        Some(f) => writeln!(out, "# slope={} intercept={} r_squared={}", f.slope, f.intercept, f.r_squared),
        None => writeln!(out, "# fit undefined: a single nonempty bin"),
    }
    .map_err(io)?;
    writeln!(out, "bin_lower,bin_upper,count,mean_forecast,observed_frequency").map_err(io)?;
    for b in &table.bins {
        writeln!(out, "{},{},{},{},{}", b.lower, b.upper, b.count, b.mean_forecast, b.observed_frequency).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Number of cells delimited by the 99 percentiles.
pub const COVERAGE_CELLS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageHistogram {
    pub counts: Vec<u64>,
    pub n: u64,
    /// `counts / (n / 100)`.
    pub ratios: Vec<f64>,
    /// Binomial 99% band of the ratio under uniformity.
    pub band: (f64, f64),
}

impl CoverageHistogram {
    pub fn cells_within_band(&self) -> usize {
        self.ratios.iter().filter(|&&r| r >= self.band.0 && r <= self.band.1).count()
    }
}

/// Count band `[lo, hi]` holding a Binomial(n, p) draw with probability
/// at least `level`.
pub fn binomial_band(n: u64, p: f64, level: f64) -> Result<(u64, u64)> {
    let b = Binomial::new(p, n).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let tail = (1.0 - level) / 2.0;
    Ok((b.inverse_cdf(tail), b.inverse_cdf(1.0 - tail)))
}

/// Cell of every observation among the ensemble's 99 percentiles.
///
/// `observed` holds whole observed paths aligned with the horizon (they may
/// be shorter than it). See [`coverage_points`] for the cell rule.
pub fn coverage(ens: &PathEnsemble, observed: &[&[f64]], seed: u64) -> Result<CoverageHistogram> {
    if let Some(o) = observed.iter().find(|o| o.len() > ens.n_hours()) {
        return Err(Error::DimensionMismatch {
            what: "observed hours".into(),
            expected: ens.n_hours(),
            found: o.len(),
        });
    }
    let points: Vec<(usize, f64)> = observed.iter().flat_map(|o| o.iter().copied().enumerate()).collect();
    coverage_points(ens, &points, seed)
}

/// The 99 percentile levels `0.01, ..., 0.99`.
pub fn percentiles() -> Vec<f64> {
    (1..COVERAGE_CELLS).map(|k| k as f64 / 100.0).collect()
}

/// Coverage of observations given as `(horizon hour, value)` pairs.
pub fn coverage_points(ens: &PathEnsemble, points: &[(usize, f64)], seed: u64) -> Result<CoverageHistogram> {
    let panel = quantile_panel(ens, &percentiles())?;
    coverage_from_quantiles(&panel, points, seed)
}

/// Coverage against a panel of the 99 percentiles.
///
/// Observations tied with percentiles are spread uniformly over the cells
/// they touch, using `seed`. Observations below the 1% quantile fall in
/// cell 0 and above the 99% quantile in cell 99.
pub fn coverage_from_quantiles(panel: &QuantilePanel, points: &[(usize, f64)], seed: u64) -> Result<CoverageHistogram> {
    let levels = percentiles();
    if panel.probs.len() != levels.len() || panel.probs.iter().zip(&levels).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::InvalidInput("coverage needs the 99 percentiles 0.01..0.99".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("no observations overlap the forecast".into()));
    }
    let n = panel.values[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; COVERAGE_CELLS];
    let mut q = vec![0.0; levels.len()];
    for &(t, y) in points {
        if t >= n {
            return Err(Error::OutOfRange {
                what: "observation hour beyond the horizon".into(),
                value: t as f64,
            });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("observation at hour {t}")));
        }
        for (v, row) in q.iter_mut().zip(&panel.values) {
            *v = row[t];
        }
        let below = q.partition_point(|&v| v < y);
        let upto = q.partition_point(|&v| v <= y);
        let cell = if below == upto { below } else { rng.random_range(below..=upto) };
        counts[cell] += 1;
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / COVERAGE_CELLS as f64;
    let (lo, hi) = binomial_band(total, 1.0 / COVERAGE_CELLS as f64, 0.99)?;
    Ok(CoverageHistogram {
        ratios: counts.iter().map(|&c| c as f64 / expected).collect(),
        counts,
        n: total,
        band: (lo as f64 / expected, hi as f64 / expected),
    })
}

pub fn write_coverage(path: &Path, hist: &CoverageHistogram) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "# n={} band_low={} band_high={}", hist.n, hist.band.0, hist.band.1).map_err(io)?;
    writeln!(out, "cell,lower_pct,upper_pct,count,ratio").map_err(io)?;
    for (k, (c, r)) in hist.counts.iter().zip(&hist.ratios).enumerate() {
        writeln!(out, "{},{},{},{c},{r}", k + 1, k, k + 1).map_err(io)?;
    }
    out.flush().map_err(io)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}
