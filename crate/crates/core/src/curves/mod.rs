//! Bid curves on the auction price grid, volume-balanced grouping and
//! market clearing.

mod groups;

pub use groups::{calibrate_groups, group_volumes, reconstruct_curve, DensityAccumulator, GroupScheme, ReconstructedCurve};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The fixed auction price grid: -500 to 3000 EUR/MWh in steps of 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceGrid;

impl PriceGrid {
    pub const MIN: f64 = -500.0;
    pub const MAX: f64 = 3000.0;
    pub const TICK: f64 = 0.1;
    pub const POINTS: usize = 35001;
    const TICKS_PER_UNIT: f64 = 10.0;

    /// Grid price at index `i`, computed from integers so it is exact to
    /// the nearest representable value.
    #[inline]
    pub fn price(i: usize) -> f64 {
        (i as f64 - 5000.0) / Self::TICKS_PER_UNIT
    }

    /// Index of the nearest grid point, rejecting prices off the grid range.
    pub fn index_of(price: f64) -> Result<usize> {
        if !price.is_finite() {
            return Err(Error::NonFinite("bid price".into()));
        }
        let k = ((price - Self::MIN) * Self::TICKS_PER_UNIT).round();
        if k < 0.0 || k > (Self::POINTS - 1) as f64 {
            return Err(Error::OutOfRange {
                what: "bid price".into(),
                value: price,
            });
        }
        Ok(k as usize)
    }

    /// Snap a price to the grid.
    pub fn snap(price: f64) -> Result<f64> {
        Self::index_of(price).map(Self::price)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Supply,
    Demand,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Supply => "supply",
            Side::Demand => "demand",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "supply" | "sell" => Some(Side::Supply),
            "demand" | "purchase" | "buy" => Some(Side::Demand),
            _ => None,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Anything that can report a cumulative volume at a grid index.
pub trait CurveEval<F> {
    fn side(&self) -> Side;
    fn volume_at(&self, i: usize) -> F;
}

/// Cumulative volume at each of the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCurve<F> {
    side: Side,
    volumes: Vec<F>,
}

impl<F: Scalar> StepCurve<F> {
    /// Validates length, sign and the side's monotonicity.
    pub fn new(side: Side, volumes: Vec<F>) -> Result<Self> {
        if volumes.len() != PriceGrid::POINTS {
            return Err(Error::DimensionMismatch {
                what: format!("{side} curve"),
                expected: PriceGrid::POINTS,
                found: volumes.len(),
            });
        }
        for (i, v) in volumes.iter().enumerate() {
            if !v.is_finite() || *v < F::zero() {
                return Err(Error::OutOfRange {
                    what: format!("{side} curve volume at grid index {i}"),
                    value: v.as_f64(),
                });
            }
        }
        for i in 1..volumes.len() {
            let ok = match side {
                Side::Supply => volumes[i] >= volumes[i - 1],
                Side::Demand => volumes[i] <= volumes[i - 1],
            };
            if !ok {
                return Err(Error::NonMonotoneCurve {
                    side: side.to_string(),
                    index: i,
                });
            }
        }
        Ok(Self { side, volumes })
    }

    pub fn zero(side: Side) -> Self {
        Self {
            side,
            volumes: vec![F::zero(); PriceGrid::POINTS],
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn volumes(&self) -> &[F] {
        &self.volumes
    }

    /// Volume bid exactly at each grid point.
    pub fn increments(&self) -> Vec<F> {
        let v = &self.volumes;
        let n = v.len();
        (0..n)
            .map(|i| match self.side {
                Side::Supply => v[i] - if i == 0 { F::zero() } else { v[i - 1] },
                Side::Demand => v[i] - if i + 1 == n { F::zero() } else { v[i + 1] },
            })
            .collect()
    }

    /// Adds the same volume at every price (a parallel shift).
    pub fn shifted(&self, delta: F) -> Result<Self> {
        Self::new(self.side, self.volumes.iter().map(|&v| v + delta).collect())
    }
}

impl<F: Scalar> CurveEval<F> for StepCurve<F> {
    fn side(&self) -> Side {
        self.side
    }

    #[inline]
    fn volume_at(&self, i: usize) -> F {
        self.volumes[i]
    }
}

/// Incremental bids snapped to the grid, sorted by grid index, merged.
#[derive(Debug, Clone, PartialEq)]
pub struct BidCurve<F> {
    pub side: Side,
    pub bids: Vec<(u32, F)>,
}

impl<F: Scalar> BidCurve<F> {
    pub fn from_raw(side: Side, raw: &[(f64, F)]) -> Result<Self> {
        let mut bids = Vec::with_capacity(raw.len());
        for (k, &(price, volume)) in raw.iter().enumerate() {
            let i = PriceGrid::index_of(price).map_err(|_| Error::OutOfRange {
                what: format!("{side} bid {k} price"),
                value: price,
            })?;
            if !volume.is_finite() || volume < F::zero() {
                return Err(Error::OutOfRange {
                    what: format!("{side} bid {k} volume"),
                    value: volume.as_f64(),
                });
            }
            bids.push((i as u32, volume));
        }
        bids.sort_by_key(|b| b.0);
        let mut merged: Vec<(u32, F)> = Vec::with_capacity(bids.len());
        for (i, v) in bids {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        Ok(Self { side, bids: merged })
    }

    pub fn total(&self) -> F {
        self.bids.iter().map(|b| b.1).sum()
    }

    pub fn to_step(&self) -> StepCurve<F> {
        let mut inc = vec![F::zero(); PriceGrid::POINTS];
        for &(i, v) in &self.bids {
            inc[i as usize] += v;
        }
        match self.side {
            Side::Supply => {
                let mut acc = F::zero();
                for x in inc.iter_mut() {
                    acc += *x;
                    *x = acc;
                }
            }
            Side::Demand => {
                let mut acc = F::zero();
                for x in inc.iter_mut().rev() {
                    acc += *x;
                    *x = acc;
                }
            }
        }
        StepCurve {
            side: self.side,
            volumes: inc,
        }
    }
}

impl<F: Scalar> BidCurve<F> {
    /// Cumulative view evaluated by binary search, without materialising
    /// the full grid.
    pub fn cumulative(&self) -> CumulativeBids<F> {
        let mut prefix = Vec::with_capacity(self.bids.len() + 1);
        let mut acc = F::zero();
        prefix.push(acc);
        for &(_, v) in &self.bids {
            acc += v;
            prefix.push(acc);
        }
        CumulativeBids {
            side: self.side,
            index: self.bids.iter().map(|b| b.0).collect(),
            prefix,
        }
    }
}

/// Lazily evaluated cumulative curve of a [`BidCurve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeBids<F> {
    side: Side,
    index: Vec<u32>,
    /// `prefix[k]`: volume of the first `k` bids in price order.
    prefix: Vec<F>,
}

impl<F: Scalar> CurveEval<F> for CumulativeBids<F> {
    fn side(&self) -> Side {
        self.side
    }

    #[inline]
    fn volume_at(&self, i: usize) -> F {
        let n = self.index.len();
        match self.side {
            Side::Supply => self.prefix[self.index.partition_point(|&b| b as usize <= i)],
            Side::Demand => self.prefix[n] - self.prefix[self.index.partition_point(|&b| (b as usize) < i)],
        }
    }
}

/// Snap a list of `(price, volume)` simple orders to the grid and accumulate
/// them in the side's direction.
pub fn discretize_curve<F: Scalar>(raw: &[(f64, F)], side: Side) -> Result<StepCurve<F>> {
    Ok(BidCurve::from_raw(side, raw)?.to_step())
}

/// Outcome of one auction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult<F> {
    pub index: usize,
    pub price: f64,
    pub volume: F,
    /// Clearing at the floor or cap, or on an interval of equal volumes.
    pub degenerate: bool,
}

/// Lowest grid price at which supply covers demand.
///
/// Supply minus demand is non-decreasing along the grid, so the first
/// crossing is found by bisection.
pub fn clear_curves<F: Scalar, S: CurveEval<F> + ?Sized, D: CurveEval<F> + ?Sized>(supply: &S, demand: &D) -> ClearingResult<F> {
    let n = PriceGrid::POINTS;
    let covers = |i: usize| supply.volume_at(i) >= demand.volume_at(i);
    if !covers(n - 1) {
        return ClearingResult {
            index: n - 1,
            price: PriceGrid::MAX,
            volume: supply.volume_at(n - 1),
            degenerate: true,
        };
    }
    let (mut lo, mut hi) = (0usize, n - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if covers(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let i = lo;
    let s = supply.volume_at(i);
    let d = demand.volume_at(i);
    let flat = s == d && i + 1 < n && supply.volume_at(i + 1) == demand.volume_at(i + 1);
    ClearingResult {
        index: i,
        price: PriceGrid::price(i),
        volume: s.min(d),
        degenerate: i == 0 || flat,
    }
}

/// Clears a validated supply/demand pair.
pub fn clear<F: Scalar>(supply: &StepCurve<F>, demand: &StepCurve<F>) -> Result<ClearingResult<F>> {
    if supply.side != Side::Supply || demand.side != Side::Demand {
        return Err(Error::InvalidInput(format!(
            "clear expects (supply, demand), got ({}, {})",
            supply.side, demand.side
        )));
    }
    Ok(clear_curves(supply, demand))
}
