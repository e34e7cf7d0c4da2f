//! Convex relaxations of radial-network power flow for storage scheduling.
//!
//! The numeric core is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix it to double precision.

// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conic;
pub mod desos;
pub mod distflow;
pub mod feeder;
pub mod hull;
pub mod report;
pub mod scalar;

pub type Feeder64 = feeder::Feeder<f64>;
pub type FeederData64 = feeder::FeederData<f64>;
pub type ConicProblem64 = conic::ConicProblem<f64>;
pub type ConicSolution64 = conic::ConicSolution<f64>;
pub type BranchHull64 = hull::BranchHull<f64>;
pub type DesHull64 = hull::DesHull<f64>;
pub type NetworkState64 = distflow::NetworkState<f64>;
pub type DesosProblem64 = desos::DesosProblem<f64>;

pub type Feeder32 = feeder::Feeder<f32>;
pub type ConicProblem32 = conic::ConicProblem<f32>;
pub type BranchHull32 = hull::BranchHull<f32>;
