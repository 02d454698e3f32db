//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::netmodel::NodeId;

/// Errors returned by topology, optimization, policy and simulation operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown link {0}-{1}")]
    UnknownLink(NodeId, NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate link {0}-{1}")]
    DuplicateLink(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("node {dst} is unreachable from node {from}")]
    Unreachable { from: NodeId, dst: NodeId },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("conflicting rules at node {node}: {detail}")]
    ConflictingRules { node: NodeId, detail: String },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("event for link {got} does not match monitored link {expected}")]
    MismatchedLink { expected: String, got: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    /// Well-formed line whose content does not resolve (dangling id, undeclared category).
    #[error("line {line}: {reason}")]
    Semantic { line: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
