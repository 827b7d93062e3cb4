// Guards such as `!(x > 0.0)` are written negated on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fd;
pub mod generator;
pub mod matrix;
pub mod metric;
pub mod model;
mod ode;
pub mod path;
pub mod scenario;
pub mod transport;

pub use ode::MIN_STEPS_PER_SEGMENT;
