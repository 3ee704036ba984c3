//! Heavy-tailed nonparametric regression: noise models, sieves, losses,
//! exact and SGD-based ERM, rate formulas, and empirical-process bounds.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod bounds;
pub mod erm;
pub mod error;
pub mod harness;
pub mod losses;
pub mod math;
pub mod matrix;
pub mod noise;
pub mod rates;
pub mod rng;
pub mod sieves;

pub use error::{Error, Result};
