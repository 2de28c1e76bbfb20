//! Scalar abstraction for the numeric pipeline.
//!
//! Feature extraction, discretisation, classifiers and metrics are generic
//! over the floating-point type. `f64` is the default used by the CLI; `f32`
//! works everywhere but loses precision on epoch-second features.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the pipeline: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for constants and hyperparameters.
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every Scalar")
    }

    /// Lossy conversion from `usize`, for counts and lengths.
    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to every Scalar")
    }

    /// Lossy conversion from `i64`, for epoch seconds and scores.
    fn from_i64_lossy(value: i64) -> Self {
        Self::from_i64(value).expect("i64 converts to every Scalar")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}
