//! Monte Carlo estimation of the exponential stability index of the
//! nonlinear filter for slowly switching finite-state Markov chains, with
//! the closed-form bounds it is compared against.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod filter;
pub mod model;
pub mod noise;
pub mod sim;

pub use bounds::{bound_report, BoundReport, BscQuantities};
pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, GammaDecomposition, Method, MisclassificationEstimate, RateEstimate};
pub use filter::{FilterPair, FilterState, WedgeState};
pub use model::{BscParams, HmmSpec, SimplexVector, TransitionMatrix};
pub use noise::{AssumptionReport, Likelihoods, NoiseModel};
pub use sim::{InitialState, Step, Trajectory, TrajectorySampler};
