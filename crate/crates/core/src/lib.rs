//! Price of anarchy in two-echelon and serial supply chains under generalized newsvendor
//! models: equilibria, analytic bounds, and an autoregressive demand simulator.

pub mod ar_simulator;
pub mod demand_models;
pub mod error;
pub mod exec;
pub mod generalized_model;
pub mod numeric;
pub mod poa_bounds;
pub mod solver;
pub mod sweep;
pub mod validation;

pub use error::{PoaError, Result};
pub use exec::Execution;
