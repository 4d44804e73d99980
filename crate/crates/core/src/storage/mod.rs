//! Append-only JSON Lines transcripts, day rotation, and the configuration
//! document.

mod config;
mod event;
mod transcript;

pub use config::{load_config, ConfigError, LexiconPaths, NotifierTarget, TrainingConfig};
pub use event::{EventRecord, EventType};
pub use transcript::{
    day_file_name, read_transcript_dir, Durability, ReadReport, StorageError, TranscriptStore,
};
