//! Semi-definite concentration bounds for sums of i.i.d. positive
//! semi-definite random matrices, applied to the steady-state error
//! covariance of a Kalman filter whose sensors are drawn with replacement.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod symmat;
pub mod ensemble;
pub mod concentration;
pub mod kalman;
pub mod harness;

pub use error::{Error, Result};
