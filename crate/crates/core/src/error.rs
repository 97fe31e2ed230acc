use thiserror::Error;

use crate::model::{MessageId, PartyId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("party {0} does not exist")]
    UnknownParty(PartyId),
    #[error("message {0} is not pending")]
    NotPending(MessageId),
    #[error("party {0} has no enabled step")]
    NotEnabled(PartyId),
    #[error("probabilistic object {0:?} is not registered")]
    UnknownObject(String),
    #[error("probabilistic object {id:?} is malformed: {reason}")]
    MalformedObject { id: String, reason: String },
    #[error("strategy violation: {0}")]
    StrategyViolation(String),
    #[error("ensemble is truncated (residual mass {0}); an exact answer needs a complete ensemble")]
    Truncated(String),
    #[error("node {0} is not part of this ensemble")]
    UnknownNode(usize),
    #[error("local ensembles belong to different parties ({0} vs {1})")]
    PartyMismatch(PartyId, PartyId),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed document: {0}")]
    Document(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
