// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod cli;
pub mod config;
pub mod error;
pub mod fitting;
pub mod io;
pub mod nv;
pub mod presets;
pub mod qed;
pub mod quadrature;
pub mod spectroscopy;

pub use error::{Error, Result};
