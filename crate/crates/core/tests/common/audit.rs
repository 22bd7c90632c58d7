//! Exhaustive design-matrix audit on tagged miniature panels.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use epsim::expectations::{design_columns, design_matrix, DayHourPanel, PanelColumn, PanelRef, PanelSpec};

pub fn origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 3, 3).unwrap()
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Value encoding panel, hour and day so every design column can be
/// identified from its contents alone.
pub fn tagged(name: &str, p: usize, days: usize, hours: usize) -> DayHourPanel {
    let v: Vec<f64> = (0..days)
        .flat_map(|d| (0..hours).map(move |h| (p * 1_000_000 + h * 10_000 + d) as f64))
        .collect();
    DayHourPanel::from_day_major(name, 0, hours, &v).unwrap()
}

/// Case table for a dependence, written out per case.
pub fn expected_lags(causal: bool, same_series: bool, same_hour: bool) -> BTreeSet<usize> {
    let set: Vec<usize> = match (causal, same_series, same_hour) {
        (true, true, true) => (0..=36).collect(),
        (true, false, true) | (true, true, false) => (0..=8).collect(),
        (true, false, false) => vec![0, 1],
        (false, true, true) => (1..=36).collect(),
        (false, false, true) | (false, true, false) => (1..=8).collect(),
        (false, false, false) => vec![1],
    };
    set.into_iter().collect()
}

/// Decodes every lag column of the realized design into (panel, hour, lag).
pub fn decode(mat: &[Vec<f64>], first_row_day: usize) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for col in &mat[7..] {
        let v0 = col[0] as usize;
        let (p, h, d) = (v0 / 1_000_000, (v0 / 10_000) % 100, v0 % 10_000);
        for (r, v) in col.iter().enumerate() {
            assert_eq!(*v as usize, v0 + r, "column is not one lagged hour of one panel");
        }
        assert!(out.insert((p, h, first_row_day - d)), "duplicate column");
    }
    out
}

pub fn audit(spec: &PanelSpec, drivers: &[DayHourPanel], targets: &[DayHourPanel], expect: impl Fn(usize, usize) -> BTreeSet<(usize, usize, usize)>) -> usize {
    let mut checked = 0;
    let hours = spec.hours_per_day;
    for i in 0..spec.targets.len() {
        for h in 0..hours {
            let mat = design_matrix(spec, drivers, targets, origin(), i, h).unwrap();
            let ids = design_columns(spec, i, h);
            assert_eq!(mat.len(), ids.len());
            // weekday block is one-hot
            for r in 0..mat[0].len() {
                assert_eq!((0..7).map(|k| mat[k][r]).sum::<f64>(), 1.0);
            }
            let got = decode(&mat, 36);
            let want = expect(i, h);
            assert_eq!(got, want, "target {i} hour {h}");
            // labels agree with contents
            for (id, col) in ids[7..].iter().zip(&mat[7..]) {
                let PanelColumn::Lag { source, hour, lag } = *id else { panic!("lag label expected") };
                let p = match source {
                    PanelRef::Driver(j) => j,
                    PanelRef::Target(j) => 10 + j,
                };
                assert_eq!(col[0] as usize, p * 1_000_000 + hour * 10_000 + 36 - lag);
            }
            checked += got.len();
        }
    }
    checked
}

/// Audits planned and bid-group designs; returns the number of lag columns checked.
pub fn miniature_audit() -> usize {
    let (days, hours) = (60, 2);
    let truth: Vec<DayHourPanel> = (0..2).map(|p| tagged(&format!("y{p}"), p, days, hours)).collect();
    let planned: Vec<DayHourPanel> = (0..2).map(|p| tagged(&format!("z{p}"), 10 + p, days, hours)).collect();

    let spec = PanelSpec::planned(&names("y", 2), &names("z", 2), hours).unwrap();
    let n = audit(&spec, &truth, &planned, |i, h| {
        let mut s = BTreeSet::new();
        for l in 0..hours {
            for k in expected_lags(true, true, l == h) {
                s.insert((i, l, k));
            }
        }
        s
    });
    let planned_cols = n;

    let drivers: Vec<DayHourPanel> = (0..2).map(|p| tagged(&format!("e{p}"), p, days, hours)).collect();
    let groups: Vec<DayHourPanel> = (0..2).map(|p| tagged(&format!("g{p}"), 10 + p, days, hours)).collect();
    let spec = PanelSpec::bid_groups(&names("e", 2), &names("g", 2), hours).unwrap();
    let n = audit(&spec, &drivers, &groups, |i, h| {
        let mut s = BTreeSet::new();
        for l in 0..hours {
            for j in 0..2 {
                for k in expected_lags(true, false, l == h) {
                    s.insert((j, l, k));
                }
                for k in expected_lags(false, i == j, l == h) {
                    s.insert((10 + j, l, k));
                }
            }
        }
        s
    });
    planned_cols + n
}
