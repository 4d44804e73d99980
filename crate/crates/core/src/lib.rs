//! Small-talk training engine: scoring, dialogue orchestration, scheduling,
//! persistence and analysis.

pub mod analytics;
pub mod engine;
pub mod observer;
pub mod presence;
pub mod scheduler;
pub mod sim;
pub mod speakers;
pub mod storage;
pub mod text;
pub mod types;

pub use types::{Criterion, Speaker, ViolationCounts};
