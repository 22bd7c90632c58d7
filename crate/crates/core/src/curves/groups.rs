use serde::{Deserialize, Serialize};

use super::{BidCurve, CurveEval, PriceGrid, Side, StepCurve};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Running sum of per-tick bid volume over a calibration window.
#[derive(Debug, Clone)]
pub struct DensityAccumulator {
    side: Side,
    sums: Vec<f64>,
    count: usize,
}

impl DensityAccumulator {
    pub fn new(side: Side) -> Self {
        Self {
            side,
            sums: vec![0.0; PriceGrid::POINTS],
            count: 0,
        }
    }

    pub fn add_bids<F: Scalar>(&mut self, bids: &BidCurve<F>) -> Result<()> {
        check_side(self.side, bids.side)?;
        for &(i, v) in &bids.bids {
            self.sums[i as usize] += v.as_f64();
        }
        self.count += 1;
        Ok(())
    }

    pub fn add_step<F: Scalar>(&mut self, curve: &StepCurve<F>) -> Result<()> {
        check_side(self.side, curve.side())?;
        for (s, v) in self.sums.iter_mut().zip(curve.increments()) {
            *s += v.as_f64();
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Mean volume per tick.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sums.iter().map(|s| s / n).collect()
    }
}

fn check_side(expected: Side, found: Side) -> Result<()> {
    if expected != found {
        return Err(Error::InvalidInput(format!("expected a {expected} curve, got {found}")));
    }
    Ok(())
}

/// Contiguous partition of the grid into bid groups, with the mean
/// within-group volume profile used to rebuild curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScheme<F> {
    pub side: Side,
    /// First grid index of each group; starts at 0, strictly increasing.
    pub starts: Vec<u32>,
    /// Share of the group's volume already accumulated at each tick, in the
    /// side's direction: for supply the share at or below the price, for
    /// demand the share at or above it.
    pub profile: Vec<F>,
    /// Mean calibration volume per group.
    pub mean_volumes: Vec<f64>,
}

impl<F: Scalar> GroupScheme<F> {
    pub fn n_groups(&self) -> usize {
        self.starts.len()
    }

    /// Half-open grid index range of group `g`.
    pub fn span(&self, g: usize) -> (usize, usize) {
        let a = self.starts[g] as usize;
        let b = self.starts.get(g + 1).map_or(PriceGrid::POINTS, |&s| s as usize);
        (a, b)
    }

    #[inline]
    pub fn group_of(&self, i: usize) -> usize {
        self.starts.partition_point(|&s| s as usize <= i) - 1
    }

    /// Price bounds `(low, high)` of group `g` in EUR/MWh.
    pub fn price_bounds(&self, g: usize) -> (f64, f64) {
        let (a, b) = self.span(g);
        (PriceGrid::price(a), PriceGrid::price(b - 1))
    }

    /// Greedy left-to-right partition of a mean per-tick density.
    ///
    /// A group is closed as soon as its mean volume reaches `target`; the
    /// remainder after the last cut, including trailing empty ticks, joins
    /// the final group.
    pub fn from_density(side: Side, density: &[f64], target: f64) -> Result<Self> {
        if density.len() != PriceGrid::POINTS {
            return Err(Error::DimensionMismatch {
                what: "bid density".into(),
                expected: PriceGrid::POINTS,
                found: density.len(),
            });
        }
        if !(target > 0.0) {
            return Err(Error::InvalidInput(format!("group target volume must be positive, got {target}")));
        }
        let mut starts = vec![0u32];
        let mut acc = 0.0;
        let mut closed_at_end = false;
        for (i, &v) in density.iter().enumerate() {
            acc += v;
            closed_at_end = false;
            if acc >= target {
                if i + 1 < density.len() {
                    starts.push((i + 1) as u32);
                }
                acc = 0.0;
                closed_at_end = true;
            }
        }
        if !closed_at_end && starts.len() > 1 {
            starts.pop();
        }
        let mut mean_volumes = Vec::with_capacity(starts.len());
        let mut profile = vec![F::zero(); PriceGrid::POINTS];
        for g in 0..starts.len() {
            let a = starts[g] as usize;
            let b = starts.get(g + 1).map_or(PriceGrid::POINTS, |&s| s as usize);
            let mass: f64 = density[a..b].iter().sum();
            mean_volumes.push(mass);
            let width = (b - a) as f64;
            match side {
                Side::Supply => {
                    let mut c = 0.0;
                    for i in a..b {
                        c += density[i];
                        let share = if mass > 0.0 { c / mass } else { (i - a + 1) as f64 / width };
                        profile[i] = F::lit(share.min(1.0));
                    }
                    profile[b - 1] = F::one();
                }
                Side::Demand => {
                    let mut c = 0.0;
                    for i in (a..b).rev() {
                        c += density[i];
                        let share = if mass > 0.0 { c / mass } else { (b - i) as f64 / width };
                        profile[i] = F::lit(share.min(1.0));
                    }
                    profile[a] = F::one();
                }
            }
        }
        Ok(Self {
            side,
            starts,
            profile,
            mean_volumes,
        })
    }

    /// Volume per group of a set of bids.
    pub fn volumes_of_bids(&self, bids: &BidCurve<F>) -> Result<Vec<F>> {
        check_side(self.side, bids.side)?;
        let mut out = vec![F::zero(); self.n_groups()];
        for &(i, v) in &bids.bids {
            out[self.group_of(i as usize)] += v;
        }
        Ok(out)
    }

    /// Volume per group of a cumulative curve.
    pub fn volumes_of_step(&self, curve: &StepCurve<F>) -> Result<Vec<F>> {
        check_side(self.side, curve.side())?;
        let v = curve.volumes();
        Ok((0..self.n_groups())
            .map(|g| {
                let (a, b) = self.span(g);
                match self.side {
                    Side::Supply => v[b - 1] - if a == 0 { F::zero() } else { v[a - 1] },
                    Side::Demand => v[a] - if b == PriceGrid::POINTS { F::zero() } else { v[b] },
                }
            })
            .collect())
    }
}

/// Calibrates a scheme from historical cumulative curves of one side.
pub fn calibrate_groups<F: Scalar>(historical: &[StepCurve<F>], side: Side, target: f64) -> Result<GroupScheme<F>> {
    if historical.is_empty() {
        return Err(Error::InsufficientHistory {
            what: format!("{side} calibration curves"),
            required: 1,
            available: 0,
        });
    }
    let mut acc = DensityAccumulator::new(side);
    for c in historical {
        acc.add_step(c)?;
    }
    GroupScheme::from_density(side, &acc.mean(), target)
}

/// Per-group volumes of a set of bids.
pub fn group_volumes<F: Scalar>(bids: &BidCurve<F>, scheme: &GroupScheme<F>) -> Result<Vec<F>> {
    scheme.volumes_of_bids(bids)
}

/// A curve rebuilt from group volumes, evaluated on demand.
#[derive(Debug, Clone)]
pub struct ReconstructedCurve<'s, F> {
    scheme: &'s GroupScheme<F>,
    volumes: Vec<F>,
    /// Volume of all groups before `g` in the side's direction.
    offsets: Vec<F>,
}

impl<'s, F: Scalar> ReconstructedCurve<'s, F> {
    pub fn new(scheme: &'s GroupScheme<F>, volumes: &[F]) -> Result<Self> {
        let g = scheme.n_groups();
        if volumes.len() != g {
            return Err(Error::DimensionMismatch {
                what: format!("{} group volumes", scheme.side),
                expected: g,
                found: volumes.len(),
            });
        }
        if let Some(k) = volumes.iter().position(|v| !v.is_finite() || *v < F::zero()) {
            return Err(Error::OutOfRange {
                what: format!("{} group {k} volume", scheme.side),
                value: volumes[k].as_f64(),
            });
        }
        let mut offsets = vec![F::zero(); g];
        match scheme.side {
            Side::Supply => {
                for k in 1..g {
                    offsets[k] = offsets[k - 1] + volumes[k - 1];
                }
            }
            Side::Demand => {
                for k in (0..g.saturating_sub(1)).rev() {
                    offsets[k] = offsets[k + 1] + volumes[k + 1];
                }
            }
        }
        Ok(Self {
            scheme,
            volumes: volumes.to_vec(),
            offsets,
        })
    }

    pub fn to_step(&self) -> StepCurve<F> {
        let v = (0..PriceGrid::POINTS).map(|i| self.volume_at(i)).collect();
        StepCurve::new(self.scheme.side, v).expect("reconstruction preserves monotonicity")
    }
}

impl<F: Scalar> CurveEval<F> for ReconstructedCurve<'_, F> {
    fn side(&self) -> Side {
        self.scheme.side
    }

    #[inline]
    fn volume_at(&self, i: usize) -> F {
        let g = self.scheme.group_of(i);
        self.offsets[g] + self.volumes[g] * self.scheme.profile[i]
    }
}

/// Rebuilds a full cumulative curve from one volume per group.
pub fn reconstruct_curve<F: Scalar>(volumes: &[F], scheme: &GroupScheme<F>) -> Result<StepCurve<F>> {
    Ok(ReconstructedCurve::new(scheme, volumes)?.to_step())
}
