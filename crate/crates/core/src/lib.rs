//! Exact-rational super-replication pricing under proportional transaction
//! costs on finite event trees.

pub mod cones;
pub mod cps;
pub mod error;
pub mod formats;
pub mod lp;
pub mod market_tree;
pub mod pricing;
pub mod rational;
pub mod strategies;
pub mod verify;

pub use cones::{Position, SolvencyCone};
pub use cps::{CpsSearch, CpsValidity, PriceSystem};
pub use error::{Error, Result};
pub use market_tree::{Claim, MarketTree, Node, NodeId, StoppingTime};
pub use pricing::{Mode, PriceReport, Strictness};
pub use rational::Rational;
pub use strategies::{Strategy, Trade};
pub use verify::{OracleConfig, SuiteReport};
