//! NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod curves;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod expectations;
pub mod lasso;
pub mod physical;
pub mod scalar;
pub mod simulate;
pub mod timebase;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Single-precision instantiations of the generic kernels.
pub mod f32 {
    pub type StepCurve = crate::curves::StepCurve<f32>;
    pub type BidCurve = crate::curves::BidCurve<f32>;
    pub type ClearingResult = crate::curves::ClearingResult<f32>;
    pub type GroupScheme = crate::curves::GroupScheme<f32>;
    pub type LassoFit = crate::lasso::LassoFit<f32>;
    pub type DesignProblem<'a> = crate::lasso::DesignProblem<'a, f32>;
}

/// Double-precision instantiations of the generic kernels.
pub mod f64 {
    pub type StepCurve = crate::curves::StepCurve<f64>;
    pub type BidCurve = crate::curves::BidCurve<f64>;
    pub type ClearingResult = crate::curves::ClearingResult<f64>;
    pub type GroupScheme = crate::curves::GroupScheme<f64>;
    pub type LassoFit = crate::lasso::LassoFit<f64>;
    pub type DesignProblem<'a> = crate::lasso::DesignProblem<'a, f64>;
}
