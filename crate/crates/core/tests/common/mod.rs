//! Shared synthetic fixtures for integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod audit;

use chrono::NaiveDate;
use epsim::physical::{CapacitySchedule, EdgeKind, ProcessClass, ProcessGraph, ProcessSpec};
use epsim::timebase::HourlySeries;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 1, 7).unwrap()
}

/// Wind capacity in GW for the four-process fixture (100 MWh per hour).
pub const WIND_GW: f64 = 0.1;

pub fn four_process_graph() -> ProcessGraph {
    let p = vec![
        ProcessSpec::new("temperature", ProcessClass::Meteorological),
        ProcessSpec::new("wind", ProcessClass::Meteorological).capacity_adjusted("wind"),
        ProcessSpec::new("load", ProcessClass::Human),
        ProcessSpec::new("conventional", ProcessClass::Human).nonnegative(),
    ];
    ProcessGraph::without_edges(p)
        .unwrap()
        .with_edge("temperature", "temperature", EdgeKind::Autoregressive)
        .unwrap()
        .with_edge("wind", "wind", EdgeKind::Autoregressive)
        .unwrap()
        .with_edge("load", "load", EdgeKind::Autoregressive)
        .unwrap()
        .with_edge("load", "temperature", EdgeKind::Causal)
        .unwrap()
        .with_edge("conventional", "conventional", EdgeKind::Autoregressive)
        .unwrap()
        .with_edge("conventional", "load", EdgeKind::Causal)
        .unwrap()
        .with_edge("conventional", "wind", EdgeKind::Causal)
        .unwrap()
}

/// True nonzero lag coefficients `(equation, source, lag, value)` of the fixture.
pub const TRUTH: [(usize, usize, usize, f64); 10] = [
    (0, 0, 1, 0.7),
    (0, 0, 24, 0.25),
    (1, 1, 1, 0.85),
    (2, 2, 1, 0.5),
    (2, 2, 24, 0.3),
    (2, 0, 0, -0.4),
    (3, 3, 1, 0.5),
    (3, 2, 0, 0.4),
    (3, 1, 0, -0.5),
    (3, 3, 168, 0.1),
];

pub const INTERCEPTS: [f64; 4] = [0.5, 0.02, 30.0, 2.0];
pub const NOISE: [f64; 4] = [0.5, 0.02, 1.0, 1.0];

pub fn capacity(days: usize) -> CapacitySchedule {
    CapacitySchedule::constant("wind", origin(), origin() + chrono::Duration::days(days as i64 + 2000), WIND_GW).unwrap()
}

/// Simulates the fixture directly from its defining recursions (absolute
/// units) with a burn-in, independent of the crate's stepping code.
pub fn simulate_four_process(seed: u64, days: usize) -> Vec<HourlySeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 400 * 24;
    let n = burn + days * 24;
    let mut x = vec![vec![0.0f64; n]; 4];
    let normals: Vec<Normal<f64>> = NOISE.iter().map(|&s| Normal::new(0.0, s).unwrap()).collect();
    let start = [10.0, 0.13, 130.0, 118.0];
    for (i, s) in start.iter().enumerate() {
        for t in 0..200 {
            x[i][t] = *s;
        }
    }
    let cap = WIND_GW * 1000.0;
    for t in 200..n {
        for i in 0..4 {
            let mut v = INTERCEPTS[i];
            for &(e, src, lag, c) in TRUTH.iter() {
                if e == i {
                    let val = x[src][t - lag];
                    // conventional reads wind in MWh
                    let val = if e == 3 && src == 1 { val * cap } else { val };
                    v += c * val;
                }
            }
            v += normals[i].sample(&mut rng);
            if (i == 1 || i == 3) && v < 0.0 {
                v = 0.0;
            }
            x[i][t] = v;
        }
    }
    let names = ["temperature", "wind", "load", "conventional"];
    (0..4)
        .map(|i| {
            let vals: Vec<f64> = x[i][burn..]
                .iter()
                .map(|&v| if i == 1 { v * cap } else { v })
                .collect();
            HourlySeries::new(names[i], origin(), vals).unwrap()
        })
        .collect()
}
