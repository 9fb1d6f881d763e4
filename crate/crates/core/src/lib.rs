//! Principal-agent Coin Game.
//!
//! A contract-issuing principal and two independently learning agents with
//! hidden types play a two-player Coin Game. The principal offers one linear
//! contract share per step; agents accept by acting or reject by standing
//! still. Principals can be greedy, fixed, welfare-regularized or
//! fairness-regularized. Also includes a tabular solver for small games and
//! a multi-seed experiment runner.

pub mod contract;
pub mod env;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nets;
pub mod objectives;
pub mod oracle;
pub mod ppo;

pub use error::{Error, Result};
