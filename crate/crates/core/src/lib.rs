pub mod agents;
pub mod engine;
pub mod error;
pub mod evaluator;
pub mod optimizer;
pub mod rule_space;
pub mod seeding;
pub mod synthetic;

pub use error::{Error, Result};
