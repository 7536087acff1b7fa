use thiserror::Error;

use crate::engine::{EntityId, Faction};

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("value {value} at index {index} lies outside the unit interval")]
    OutsideUnitCube { index: usize, value: f64 },

    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown or dead entity {0}")]
    UnknownEntity(EntityId),

    #[error("entity {entity} does not belong to the acting faction {acting}")]
    WrongFaction { entity: EntityId, acting: Faction },

    #[error("the game is already over")]
    GameOver,

    #[error("gaussian process fit failed: {0}")]
    Surrogate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("replay diverged at record {line}: {reason}")]
    ReplayMismatch { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
