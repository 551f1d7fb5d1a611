use thiserror::Error;

use crate::subset::Subset;

/// Errors raised by the mechanism-design pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("item index {index} out of range for {n} items")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("kappa must be positive, got {0}")]
    NonPositiveKappa(String),

    #[error("item {item} has zero low value; the structured pipeline needs a_i > 0")]
    ZeroLowValue { item: usize },

    #[error("infeasible parameters: B = {budget} does not exceed sum p_i x_i = {weighted}")]
    InfeasibleParameters { budget: String, weighted: String },

    #[error("node {0} is a positive node besides the full set")]
    ExtraPositiveNode(Subset),

    #[error("the full set is not a positive node")]
    NoPositiveNode,

    #[error("enumeration guard exceeded: n = {n} > {limit} ({what})")]
    GuardExceeded { what: &'static str, n: usize, limit: usize },

    #[error("solution is not optimal")]
    NotOptimal,

    #[error("degenerate flow: supply is positive but no node absorbed it")]
    DegenerateFlow,

    #[error("invalid reduction input: {0}")]
    InvalidReduction(String),

    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(String),

    #[error("eps = {eps} must lie in (0, {bound})")]
    EpsOutOfRange { eps: String, bound: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
