//! Maximum entropy discrimination: large-margin classification and
//! regression with a distribution over the linear rule, and optional
//! discriminative feature selection.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod expfam;
pub mod model;
pub mod objective;
pub mod optimizer;
