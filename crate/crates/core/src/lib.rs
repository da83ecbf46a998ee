//! Robust adaptive beamforming for general-rank signal models.
//!
//! The robust beamformer minimizes `wᴴ(R̂+γI)w` subject to
//! `‖Qw‖ − η‖w‖ ≥ 1`, a non-convex problem. [`potdc::potdc_solve`] solves it
//! by linearizing the single concave term after introducing `α = ‖Qw‖²`;
//! each step is a small SDP that [`inner`] solves through its two-variable
//! dual.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod oracle;
pub mod potdc;
pub mod problem;
pub mod random;
pub mod worst_case;

pub use error::{Error, Result};
pub use problem::RobustProblem;
