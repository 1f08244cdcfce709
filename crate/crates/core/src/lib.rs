// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod backward;
pub mod demo;
pub mod error;
pub mod gauss;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod pipeline;
pub mod pmb;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
