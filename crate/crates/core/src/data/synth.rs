//! Synthetic market with a known data-generating process.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::curves::{clear_curves, BidCurve, PriceGrid, Side};
use crate::error::{Error, Result};
use crate::expectations::DayHourPanel;
use crate::physical::{
    step_physical, CapacitySchedule, EdgeKind, LagTerm, PhysicalModel, PhysicalState, ProcessClass, ProcessEquation,
    ProcessGraph, ProcessSpec, MEMORY_HOURS,
};
use crate::timebase::{Families, HolidayCalendar, HourlySeries, HOURS_PER_DAY};

use super::{Dataset, HourBids, Span};

/// Planned series formed as `intercept + slope * truth + noise`, floored at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRule {
    pub name: String,
    pub truth: String,
    pub intercept: f64,
    pub slope: f64,
    pub noise_sd: f64,
}

/// A block of bids spread evenly over fixed price points.
///
/// Its hourly volume is `base[h] + loadings . planned + e`, floored at 0,
/// where `e` follows an AR(1) across days separately for each hour.
#[derive(Debug, Clone, PartialEq)]
pub struct BidComponent {
    pub prices: Vec<f64>,
    pub base: [f64; HOURS_PER_DAY],
    pub loadings: Vec<f64>,
    pub ar: f64,
    pub noise_sd: f64,
}

impl BidComponent {
    /// Price points drawn once from a log-normal density with median
    /// `center`; supply spreads upwards, demand downwards.
    #[allow(clippy::too_many_arguments)]
    pub fn lognormal(
        rng: &mut ChaCha8Rng,
        side: Side,
        center: f64,
        scale: f64,
        points: usize,
        base: [f64; HOURS_PER_DAY],
        loadings: Vec<f64>,
        ar: f64,
        noise_sd: f64,
    ) -> Result<Self> {
        let dist = LogNormal::new(scale.ln(), 0.5).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let sign = if side == Side::Supply { 1.0 } else { -1.0 };
        let prices = (0..points)
            .map(|_| {
                let x: f64 = dist.sample(rng);
                PriceGrid::snap((center + sign * (x - scale)).clamp(PriceGrid::MIN, PriceGrid::MAX))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            prices,
            base,
            loadings,
            ar,
            noise_sd,
        })
    }
}

/// Complete truth of a synthetic market; together with its seed it fixes
/// every generated value.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub start: NaiveDate,
    pub burn_in_days: usize,
    pub graph: ProcessGraph,
    pub units: Vec<String>,
    pub equations: Vec<ProcessEquation>,
    pub noise_sd: Vec<f64>,
    /// Initial values on the modelled scale, held for the first memory span.
    pub start_values: Vec<f64>,
    pub capacity: CapacitySchedule,
    pub planned: Vec<PlannedRule>,
    pub supply: Vec<BidComponent>,
    pub demand: Vec<BidComponent>,
    pub group_target_mwh: f64,
}

fn lag(source: usize, lag: usize, coef: f64) -> LagTerm {
    LagTerm {
        source,
        lag,
        absolute: false,
        coef,
    }
}

fn profile(amplitude: f64, peak_hour: f64) -> [f64; HOURS_PER_DAY] {
    let mut out = [0.0; HOURS_PER_DAY];
    for (h, o) in out.iter_mut().enumerate() {
        *o = amplitude * (2.0 * std::f64::consts::PI * (h as f64 - peak_hour + 6.0) / 24.0).sin();
    }
    out
}

fn flat(v: f64) -> [f64; HOURS_PER_DAY] {
    [v; HOURS_PER_DAY]
}

impl SyntheticSpec {
    /// Four physical processes (temperature, wind, load, conventional),
    /// planned wind and conventional feed-in, six supply and three demand
    /// bid components.
    pub fn reference(seed: u64) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).expect("valid date");
        let graph = ProcessGraph::without_edges(vec![
            ProcessSpec::new("temperature", ProcessClass::Meteorological),
            ProcessSpec::new("wind", ProcessClass::Meteorological).capacity_adjusted("wind"),
            ProcessSpec::new("load", ProcessClass::Human),
            ProcessSpec::new("conventional", ProcessClass::Human).nonnegative(),
        ])?
        .with_edge("temperature", "temperature", EdgeKind::Autoregressive)?
        .with_edge("wind", "wind", EdgeKind::Autoregressive)?
        .with_edge("load", "load", EdgeKind::Autoregressive)?
        .with_edge("load", "temperature", EdgeKind::Causal)?
        .with_edge("conventional", "conventional", EdgeKind::Autoregressive)?
        .with_edge("conventional", "load", EdgeKind::Causal)?
        .with_edge("conventional", "wind", EdgeKind::Causal)?;

        let load_profile = profile(80.0, 12.0);
        let equations = vec![
            ProcessEquation::from_terms("temperature", Families::meteorological(), 0.5, vec![], vec![lag(0, 1, 0.7), lag(0, 24, 0.25)]),
            ProcessEquation::from_terms("wind", Families::meteorological(), 0.006, vec![], vec![lag(1, 1, 0.97)]),
            ProcessEquation::from_terms(
                "load",
                Families::human(),
                1000.0,
                load_profile.iter().enumerate().map(|(h, &v)| (h as u32, v)).collect(),
                vec![lag(2, 1, 0.5), lag(2, 24, 0.3), lag(0, 0, -0.4)],
            ),
            ProcessEquation::from_terms(
                "conventional",
                Families::human(),
                500.0,
                vec![],
                vec![
                    lag(3, 1, 0.5),
                    lag(2, 0, 0.3),
                    LagTerm {
                        source: 1,
                        lag: 0,
                        absolute: true,
                        coef: -0.3,
                    },
                ],
            ),
        ];
        let capacity = CapacitySchedule::new(
            [(
                "wind".to_string(),
                vec![
                    (start - chrono::Duration::days(400), 9.45),
                    (start + chrono::Duration::days(4000), 9.45 + 0.5 * 4400.0 / 365.0),
                ],
            )]
            .into_iter()
            .collect(),
        )?;
        let planned = vec![
            PlannedRule {
                name: "planned_wind".into(),
                truth: "wind".into(),
                intercept: 10.0,
                slope: 0.92,
                noise_sd: 40.0,
            },
            PlannedRule {
                name: "planned_conventional".into(),
                truth: "conventional".into(),
                intercept: 50.0,
                slope: 0.97,
                noise_sd: 60.0,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let s = Side::Supply;
        let supply = vec![
            BidComponent::lognormal(&mut rng, s, -60.0, 8.0, 6, flat(0.0), vec![0.95, 0.0], 0.5, 50.0)?,
            BidComponent::lognormal(&mut rng, s, -15.0, 10.0, 8, flat(1800.0), vec![0.0, 0.0], 0.6, 80.0)?,
            BidComponent::lognormal(&mut rng, s, 25.0, 15.0, 8, flat(800.0), vec![0.0, 0.5], 0.5, 80.0)?,
            BidComponent::lognormal(&mut rng, s, 50.0, 10.0, 8, flat(1500.0), vec![0.0, 0.3], 0.5, 80.0)?,
            BidComponent::lognormal(&mut rng, s, 120.0, 20.0, 6, flat(2500.0), vec![0.0, 0.0], 0.5, 100.0)?,
            BidComponent::lognormal(&mut rng, s, 800.0, 150.0, 6, flat(3000.0), vec![0.0, 0.0], 0.5, 50.0)?,
        ];
        let d = Side::Demand;
        let mut inelastic = profile(700.0, 12.0);
        for v in inelastic.iter_mut() {
            *v += 3600.0;
        }
        let demand = vec![
            BidComponent {
                prices: vec![PriceGrid::MAX],
                base: inelastic,
                loadings: vec![0.0, 0.0],
                ar: 0.6,
                noise_sd: 80.0,
            },
            BidComponent::lognormal(&mut rng, d, 40.0, 10.0, 8, flat(1300.0), vec![0.0, 0.0], 0.5, 60.0)?,
            BidComponent::lognormal(&mut rng, d, -30.0, 8.0, 6, flat(800.0), vec![0.0, 0.0], 0.5, 50.0)?,
        ];
        Ok(Self {
            seed,
            start,
            burn_in_days: 120,
            graph,
            units: vec!["degC".into(), "MWh".into(), "MWh".into(), "MWh".into()],
            equations,
            noise_sd: vec![0.5, 0.015, 30.0, 40.0],
            start_values: vec![10.0, 0.2, 4980.0, 2790.0],
            capacity,
            planned,
            supply,
            demand,
            group_target_mwh: 1000.0,
        })
    }

    /// One process repeating its last value, with noiseless planned and
    /// bid rules: every generated series is constant.
    pub fn persistence(seed: u64, level: f64) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).expect("valid date");
        let graph = ProcessGraph::without_edges(vec![ProcessSpec::new("level", ProcessClass::Human)])?.with_edge(
            "level",
            "level",
            EdgeKind::Autoregressive,
        )?;
        Ok(Self {
            seed,
            start,
            burn_in_days: 0,
            graph,
            units: vec!["MWh".into()],
            equations: vec![ProcessEquation::from_terms("level", Families::none(), 0.0, vec![], vec![lag(0, 1, 1.0)])],
            noise_sd: vec![0.0],
            start_values: vec![level],
            capacity: CapacitySchedule::default(),
            planned: vec![PlannedRule {
                name: "planned_level".into(),
                truth: "level".into(),
                intercept: 0.0,
                slope: 1.0,
                noise_sd: 0.0,
            }],
            supply: vec![BidComponent {
                prices: vec![10.0],
                base: flat(0.0),
                loadings: vec![1.0],
                ar: 0.0,
                noise_sd: 0.0,
            }],
            demand: vec![BidComponent {
                prices: vec![50.0],
                base: flat(level / 2.0),
                loadings: vec![0.0],
                ar: 0.0,
                noise_sd: 0.0,
            }],
            group_target_mwh: 1000.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.graph.len();
        if self.equations.len() != d || self.noise_sd.len() != d || self.start_values.len() != d || self.units.len() != d {
            return Err(Error::InvalidInput(format!("synthetic spec needs {d} equations, noise levels, start values and units")));
        }
        for r in &self.planned {
            self.graph.index(&r.truth)?;
        }
        for c in self.supply.iter().chain(&self.demand) {
            if c.loadings.len() != self.planned.len() {
                return Err(Error::InvalidInput("bid loadings must match the planned series".into()));
            }
            if c.prices.is_empty() {
                return Err(Error::InvalidInput("bid component without price points".into()));
            }
        }
        if self.supply.is_empty() || self.demand.is_empty() {
            return Err(Error::InvalidInput("synthetic market needs supply and demand bids".into()));
        }
        Ok(())
    }

    /// Equations whose own-lag coefficients sum to at least one in absolute
    /// value, which may make the recursion explosive.
    pub fn stationarity_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, eq) in self.equations.iter().enumerate() {
            let own: f64 = eq.lags.iter().filter(|t| t.source == i).map(|t| t.coef.abs()).sum();
            if own >= 1.0 {
                out.push(format!("equation {} has own-lag mass {own}; the process may not be stationary", eq.name));
            }
        }
        for c in self.supply.iter().chain(&self.demand) {
            if c.ar.abs() >= 1.0 {
                out.push(format!("bid noise with AR coefficient {} is not stationary", c.ar));
            }
        }
        out
    }

    fn truth_model(&self) -> PhysicalModel {
        PhysicalModel {
            graph: self.graph.clone(),
            calendar: HolidayCalendar::empty(),
            equations: self.equations.clone(),
            origin: self.start,
            fit_start_day: 0,
            n_days: 0,
            residuals: Vec::new(),
        }
    }
}

/// Generator state at the end of a generated span; continuing from it
/// extends the same truth path.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthState {
    pub physical: PhysicalState,
    /// AR noise per bid component (supply first) and hour.
    pub bid_noise: Vec<[f64; HOURS_PER_DAY]>,
}

impl SynthState {
    pub fn next_day(&self) -> i64 {
        self.physical.next_day()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub dataset: Dataset,
    pub state: SynthState,
    pub warnings: Vec<String>,
}

struct Day {
    physical: Vec<[f64; HOURS_PER_DAY]>,
    planned: Vec<[f64; HOURS_PER_DAY]>,
    curves: Vec<HourBids>,
    prices: [f64; HOURS_PER_DAY],
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("finite sd").sample(rng)
}

fn initial_state(spec: &SyntheticSpec) -> Result<SynthState> {
    let days = MEMORY_HOURS.div_ceil(HOURS_PER_DAY) + 1;
    let first_day = -((spec.burn_in_days + days) as i64);
    let mut modelled = Vec::new();
    let mut absolute = Vec::new();
    for (p, &v) in spec.graph.processes.iter().zip(&spec.start_values) {
        let m = vec![v; days * HOURS_PER_DAY];
        let mut a = Vec::with_capacity(m.len());
        for d in 0..days {
            let date = spec.start + chrono::Duration::days(first_day + d as i64);
            let f = match &p.capacity_source {
                Some(s) => spec.capacity.hourly_mwh(s, date)?,
                None => 1.0,
            };
            a.extend(std::iter::repeat_n(v * f, HOURS_PER_DAY));
        }
        modelled.push(m);
        absolute.push(a);
    }
    Ok(SynthState {
        physical: PhysicalState {
            origin: spec.start,
            first_day,
            modelled,
            absolute,
        },
        bid_noise: vec![[0.0; HOURS_PER_DAY]; spec.supply.len() + spec.demand.len()],
    })
}

fn step_day(spec: &SyntheticSpec, model: &PhysicalModel, st: &mut SynthState, rng: &mut ChaCha8Rng) -> Result<Day> {
    let shocks: Vec<Vec<f64>> = spec
        .noise_sd
        .iter()
        .map(|&sd| (0..HOURS_PER_DAY).map(|_| gaussian(rng, sd)).collect())
        .collect();
    let refs: Vec<&[f64]> = shocks.iter().map(|s| s.as_slice()).collect();
    step_physical(model, &mut st.physical, &refs, &spec.capacity)?;
    let day = st.physical.next_day() - 1;
    let physical: Vec<[f64; HOURS_PER_DAY]> = (0..spec.graph.len())
        .map(|i| st.physical.day_absolute(i, day).try_into().expect("24 hours"))
        .collect();
    if st.physical.n_days() > 4 * MEMORY_HOURS.div_ceil(HOURS_PER_DAY) {
        st.physical.truncate_front(MEMORY_HOURS.div_ceil(HOURS_PER_DAY) + 1);
    }

    let mut planned = Vec::with_capacity(spec.planned.len());
    for r in &spec.planned {
        let truth = &physical[spec.graph.index(&r.truth)?];
        let mut out = [0.0; HOURS_PER_DAY];
        for (o, &t) in out.iter_mut().zip(truth) {
            *o = (r.intercept + r.slope * t + gaussian(rng, r.noise_sd)).max(0.0);
        }
        planned.push(out);
    }

    let mut volumes = Vec::with_capacity(st.bid_noise.len());
    for (c, noise) in spec.supply.iter().chain(&spec.demand).zip(st.bid_noise.iter_mut()) {
        let mut v = [0.0; HOURS_PER_DAY];
        for h in 0..HOURS_PER_DAY {
            noise[h] = c.ar * noise[h] + gaussian(rng, c.noise_sd);
            let driven: f64 = c.loadings.iter().zip(&planned).map(|(l, p)| l * p[h]).sum();
            v[h] = (c.base[h] + driven + noise[h]).max(0.0);
        }
        volumes.push(v);
    }
    let ns = spec.supply.len();
    let mut curves = Vec::with_capacity(HOURS_PER_DAY);
    let mut prices = [0.0; HOURS_PER_DAY];
    for h in 0..HOURS_PER_DAY {
        let raw = |comps: &[BidComponent], vols: &[[f64; HOURS_PER_DAY]]| -> Vec<(f64, f64)> {
            comps
                .iter()
                .zip(vols)
                .flat_map(|(c, v)| {
                    let share = v[h] / c.prices.len() as f64;
                    c.prices.iter().map(move |&p| (p, share))
                })
                .collect()
        };
        let bids = HourBids {
            supply: BidCurve::from_raw(Side::Supply, &raw(&spec.supply, &volumes[..ns]))?,
            demand: BidCurve::from_raw(Side::Demand, &raw(&spec.demand, &volumes[ns..]))?,
        };
        prices[h] = clear_curves(&bids.supply.cumulative(), &bids.demand.cumulative()).price;
        curves.push(bids);
    }
    Ok(Day {
        physical,
        planned,
        curves,
        prices,
    })
}

fn run(spec: &SyntheticSpec, mut state: SynthState, days: usize, rng: &mut ChaCha8Rng) -> Result<SyntheticMarket> {
    if days == 0 {
        return Err(Error::InvalidInput("synthetic span must have at least one day".into()));
    }
    let model = spec.truth_model();
    let first = state.next_day();
    let d = spec.graph.len();
    let mut physical = vec![Vec::with_capacity(days * HOURS_PER_DAY); d];
    let mut planned = vec![Vec::with_capacity(days * HOURS_PER_DAY); spec.planned.len()];
    let mut curves = Vec::with_capacity(days * HOURS_PER_DAY);
    let mut prices = Vec::with_capacity(days * HOURS_PER_DAY);
    for _ in 0..days {
        let day = step_day(spec, &model, &mut state, rng)?;
        for (o, v) in physical.iter_mut().zip(&day.physical) {
            o.extend_from_slice(v);
        }
        for (o, v) in planned.iter_mut().zip(&day.planned) {
            o.extend_from_slice(v);
        }
        curves.extend(day.curves);
        prices.extend_from_slice(&day.prices);
    }
    let start = spec.start + chrono::Duration::days(first);
    let dataset = Dataset {
        span: Span { start, days },
        seed: Some(spec.seed),
        graph: spec.graph.clone(),
        physical: spec
            .graph
            .processes
            .iter()
            .zip(physical)
            .map(|(p, v)| HourlySeries::new(p.name.clone(), start, v))
            .collect::<Result<_>>()?,
        units: spec.units.clone(),
        planned: spec
            .planned
            .iter()
            .zip(planned)
            .map(|(r, v)| DayHourPanel::from_day_major(r.name.clone(), 0, HOURS_PER_DAY, &v))
            .collect::<Result<_>>()?,
        planned_truth: spec.planned.iter().map(|r| r.truth.clone()).collect(),
        curves,
        capacity: spec.capacity.clone(),
        calendar: HolidayCalendar::empty(),
        prices: Some(prices),
        group_target_mwh: spec.group_target_mwh,
    };
    Ok(SyntheticMarket {
        dataset,
        state,
        warnings: spec.stationarity_warnings(),
    })
}

/// Simulates the truth from its start values through the burn-in, then
/// records `days` days starting on `spec.start`.
///
/// Explosive specifications are generated anyway and reported in
/// `warnings`.
pub fn generate_synthetic(spec: &SyntheticSpec, days: usize) -> Result<SyntheticMarket> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut state = initial_state(spec)?;
    let model = spec.truth_model();
    for _ in 0..spec.burn_in_days {
        step_day(spec, &model, &mut state, &mut rng)?;
    }
    run(spec, state, days, &mut rng)
}

/// Independent continuation of the truth from `state`; distinct `stream`
/// values give independent futures of the same history.
pub fn continue_synthetic(spec: &SyntheticSpec, state: &SynthState, days: usize, stream: u64) -> Result<SyntheticMarket> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream.checked_add(2).ok_or_else(|| Error::InvalidInput("stream out of range".into()))?);
    // decorrelate from the price-point draws on stream 1
    let _: u64 = rng.random();
    run(spec, state.clone(), days, &mut rng)
}
