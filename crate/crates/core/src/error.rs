//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by constructions and checks in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element index {index} out of range for group of order {order}")]
    InvalidElement { index: usize, order: usize },

    #[error("group order {order} exceeds the multiplication-table bound {max}")]
    GroupTooLarge { order: usize, max: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("coordinate index {index} out of range for dimension {dim}")]
    InvalidIndex { index: usize, dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("element is not a member of {group}")]
    NotMember { group: String },

    #[error("subgroup is not normal: conjugate of member {member} by {by} falls outside")]
    NotNormal { member: usize, by: usize },

    #[error("relation is not an equivalence: {0}")]
    NotEquivalence(String),

    #[error("relation is not invariant: pair ({x},{y}) leaves the relation under generator {g}")]
    NotInvariant { x: usize, y: usize, g: usize },

    #[error("system is not minimal")]
    NotMinimal,

    #[error("budget exceeded in {context}: visited {visited} states with budget {budget}{detail}")]
    BudgetExceeded {
        context: String,
        visited: u64,
        budget: u64,
        detail: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid vertex set: {0}")]
    InvalidVertexSet(String),

    #[error("invalid word letter: {0}")]
    InvalidLetter(String),

    #[error("target system has a nontrivial relation at order {d}")]
    TargetNotOrderD { d: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("internal invariant violation: {0}")]
    InternalInvariantViolation(String),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn budget(context: impl Into<String>, visited: u64, budget: u64) -> Self {
        Error::BudgetExceeded {
            context: context.into(),
            visited,
            budget,
            detail: String::new(),
        }
    }

    pub(crate) fn budget_detail(
        context: impl Into<String>,
        visited: u64,
        budget: u64,
        detail: impl Into<String>,
    ) -> Self {
        Error::BudgetExceeded {
            context: context.into(),
            visited,
            budget,
            detail: format!("; {}", detail.into()),
        }
    }
}
