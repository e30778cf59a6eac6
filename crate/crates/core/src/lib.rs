//! Stationary distributions of McKean–Vlasov SDEs driven by Lévy noise: noise models,
//! drift families, particle simulation, the stationary fixed-point iteration, explicit
//! sufficient conditions and the scalar self-consistent solver.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod drift_model;
pub mod error;
pub mod fixed_point;
pub mod levy_model;
pub mod measures;
pub mod quadrature;
pub mod rng;
pub mod self_consistent;
pub mod simulate;

pub use drift_model::{A1Case, A1Params, DriftSpec, GFunction};
pub use error::{Error, Result};
pub use levy_model::{LevyKind, LevyMeasureSpec, Region, SigmaSpec};
pub use measures::EmpiricalMeasure;
pub use simulate::{InitialState, SimConfig};
