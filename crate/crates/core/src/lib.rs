//! Record-based leader election.
//!
//! In each round every remaining player draws an independent value and only
//! the players holding a record (a value larger than those of all players
//! with smaller numbers) stay in the game. This crate simulates the process,
//! estimates its limit laws under tetration-type normalizations, and
//! provides the Poisson-Dirichlet coalescent block-count chain that shares
//! the law of the number of conclusive rounds.

pub mod coalescent;
pub mod election;
pub mod error;
pub mod export;
pub mod limits;
pub mod numerics;
pub mod population;
pub mod records;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use numerics::TowerReal;
