use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::timebase::HOURS_PER_DAY;

use super::PathEnsemble;

/// Empirical quantiles across usable paths for every simulated hour.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantilePanel {
    pub probs: Vec<f64>,
    /// `values[k][t]`: quantile `probs[k]` at day-major hour `t`.
    pub values: Vec<Vec<f64>>,
}

/// Nearest-rank index (0-based) of probability `p` among `n` sorted values.
pub(crate) fn nearest_rank(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    // guard against products such as 0.07 * 100 = 7.000000000000001
    let r = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    (r as usize).clamp(1, n) - 1
}

/// Nearest-rank quantiles per day and hour.
pub fn quantile_panel(ens: &PathEnsemble, probs: &[f64]) -> Result<QuantilePanel> {
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::OutOfRange {
            what: "quantile probability".into(),
            value: *p,
        });
    }
    let paths: Vec<&[f64]> = ens.usable().map(|p| p.prices.as_slice()).collect();
    if paths.is_empty() {
        return Err(Error::InvalidInput("ensemble has no usable paths".into()));
    }
    let n = ens.n_hours();
    let ranks: Vec<usize> = probs.iter().map(|&p| nearest_rank(p, paths.len())).collect();
    let mut values = vec![vec![0.0; n]; probs.len()];
    let mut buf = Vec::with_capacity(paths.len());
    for t in 0..n {
        buf.clear();
        buf.extend(paths.iter().map(|p| p[t]));
        buf.sort_by(f64::total_cmp);
        for (k, &r) in ranks.iter().enumerate() {
            values[k][t] = buf[r];
        }
    }
    Ok(QuantilePanel {
        probs: probs.to_vec(),
        values,
    })
}

/// Writes `date,hour,quantile,price` rows, preceded by a `# seed=` line.
pub fn write_quantile_csv(path: &Path, ens: &PathEnsemble, panel: &QuantilePanel) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "# seed={} horizon_days={}", ens.seed, ens.horizon_days).map_err(io)?;
    writeln!(out, "date,hour,quantile,price").map_err(io)?;
    for d in 0..ens.horizon_days {
        let date = ens.date(d);
        for h in 0..HOURS_PER_DAY {
            let t = d * HOURS_PER_DAY + h;
            for (k, p) in panel.probs.iter().enumerate() {
                writeln!(out, "{date},{h},{p},{}", panel.values[k][t]).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

/// Reads a file written by [`write_quantile_csv`]; returns the first date
/// and the panel.
pub fn read_quantile_csv(path: &Path) -> Result<(NaiveDate, QuantilePanel)> {
    let schema = |detail: String| Error::Schema {
        file: path.display().to_string(),
        detail,
    };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["date", "hour", "quantile", "price"] {
        return Err(schema("expected columns date,hour,quantile,price".into()));
    }
    let mut first = None;
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || schema(format!("line {}: malformed row", row + 3));
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| bad())?;
        let hour: usize = rec[1].parse().map_err(|_| bad())?;
        let d0 = *first.get_or_insert(date);
        let t = (date - d0).num_days() as usize * HOURS_PER_DAY + hour;
        rows.push((t, rec[2].parse().map_err(|_| bad())?, rec[3].parse().map_err(|_| bad())?));
    }
    let Some(d0) = first else {
        return Err(schema("no quantile rows".into()));
    };
    let probs: Vec<f64> = rows.iter().take_while(|r| r.0 == 0).map(|r| r.1).collect();
    let k = probs.len();
    if !rows.len().is_multiple_of(k) {
        return Err(schema("incomplete final hour".into()));
    }
    let mut values = vec![Vec::with_capacity(rows.len() / k); k];
    for (i, &(t, p, v)) in rows.iter().enumerate() {
        if t != i / k || p != probs[i % k] {
            return Err(schema(format!("line {}: rows are not ordered by date, hour and quantile", i + 3)));
        }
        values[i % k].push(v);
    }
    Ok((d0, QuantilePanel { probs, values }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_cases() {
        assert_eq!(nearest_rank(0.5, 100), 49);
        assert_eq!(nearest_rank(0.07, 100), 6);
        assert_eq!(nearest_rank(0.99, 100), 98);
        assert_eq!(nearest_rank(0.01, 1), 0);
        assert_eq!(nearest_rank(0.001, 10), 0);
    }
}
