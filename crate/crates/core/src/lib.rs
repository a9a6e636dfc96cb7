//! Rate-splitting precoder optimization for joint multi-carrier downlink
//! communications and pilot jamming of adversarial users.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the math in the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod expcli;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
