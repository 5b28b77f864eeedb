//! Planning algorithms for influence maximization over partially known social
//! networks: uncertain-edge networks, the sequential multi-round problem and
//! its POMDP, the PSINET and HEAL planners, and the contingency-aware CAIMS
//! planner together with an experiment harness.

pub mod error;
pub mod rng;
pub mod netcore;
pub mod influence;
pub mod dime;
pub mod psinet;
pub mod heal;
pub mod caims;
pub mod harness;

pub use error::{Error, Result};
