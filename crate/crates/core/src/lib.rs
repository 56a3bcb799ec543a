//! Dimension of average conformal hyperbolic sets.
//!
//! Subshift coding and enumeration ([`symbolic`]), matrix cocycles over it
//! ([`cocycle`]), sub-additive pressure ([`pressure`]), Bowen equations and
//! the dimension report ([`dimension`]), affine horseshoes with box counting
//! ([`geometry`]), and the batch front end ([`cli`]).

// negated float comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod cocycle;
pub mod dimension;
pub mod error;
pub mod export;
pub mod geometry;
mod linalg;
pub mod pressure;
pub mod symbolic;

pub use error::{Error, Result};
