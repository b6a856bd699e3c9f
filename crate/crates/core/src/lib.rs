//! Constructive maximin-share (MMS) allocations for `n` agents and `n + c`
//! indivisible goods or chores.
//!
//! Instances are reduced step by step (every step provably keeps an MMS
//! allocation possible) until a base case applies, and every result is
//! certified against exact MMS values. All arithmetic is exact.

pub mod bounds;
pub mod domination;
pub mod error;
pub mod instance;
pub mod io;
pub mod matching;
pub mod mms;
pub mod reductions;
mod search;
pub mod solver;
pub mod value;

pub use error::{Error, Result};
pub use instance::{
    bundle_value, lift_allocation, make_instance, to_ordered, AgentId, Allocation, Bundle, Instance, ItemId, ItemKind,
    OrderedInstance, PartitionType,
};
pub use mms::{mms_all, mms_value, MmsRecord, OracleMethod, ThresholdVector};
pub use reductions::{ReductionStep, ReductionTrace, Rule};
pub use solver::{solve, solve_chores, SolveOutcome, SolverConfig, Status};
pub use value::Rational;
