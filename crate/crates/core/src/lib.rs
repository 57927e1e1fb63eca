#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adhoc;
pub mod bits;
pub mod distance;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod lab;
pub mod oracle;
pub mod reduction;
pub mod rng;
pub mod simulation;
pub mod tree;
mod util;

pub use error::{Error, Result};
