//! Speaking models behind the observer loop, the feedback generator, the
//! bundled demonstrations and the simulated trainees.

mod demonstration;
mod feedback;
mod llm;
mod scripted;
mod simulated;
mod user_agent;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observer::DialogueContext;

pub use demonstration::{build_demonstration, Character, DemonstrationLine, DemonstrationScript};
pub use feedback::{
    generate_macro_feedback, generate_micro_feedback, rephrase_feedback, FeedbackError, FeedbackItem,
    FeedbackLevel, Improvement, MACRO_IMPROVEMENT_CAP, MACRO_WARNING_LEVEL,
};
pub use llm::{ChatClient, EndpointProbe, LlmConfig, ENV_LLM_KEY, ENV_LLM_MODEL, ENV_LLM_URL};
pub use scripted::{ScriptLibrary, ScriptedSpeaker, GREET_SCRIPT};
pub use simulated::SimulatedRobot;
pub use user_agent::{user_agent_respond, AgentReply, UserAgentProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeakerError {
    #[error("speaker unavailable: {0}")]
    Unavailable(String),
    #[error("malformed reply: {0}")]
    MalformedReply(String),
    #[error("script {script} has no line {index}")]
    ScriptExhausted { script: String, index: usize },
    #[error("unknown script {0}")]
    UnknownScript(String),
}

/// What the observer loop sends to a speaking model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerRequest {
    pub context: DialogueContext,
    /// Persona plus the observer's current corrective directive. Never empty.
    pub system_directive: String,
    /// Candidates the loop can still accept, counting this one.
    pub max_candidates_hint: usize,
}

/// A model that proposes robot utterances. Calls on one handle are
/// serialized by `&mut self`.
pub trait SpeakerModel: Send {
    fn respond(&mut self, request: &SpeakerRequest) -> Result<String, SpeakerError>;
}

impl<T: SpeakerModel + ?Sized> SpeakerModel for Box<T> {
    fn respond(&mut self, request: &SpeakerRequest) -> Result<String, SpeakerError> {
        (**self).respond(request)
    }
}

/// Liveness probe used by the daily health check.
pub trait ReachabilityProbe: Send + Sync {
    fn is_reachable(&self) -> bool;
}

/// Probe with a fixed answer, for offline runs and fault injection.
#[derive(Debug, Clone, Copy)]
pub struct StaticProbe(pub bool);

impl ReachabilityProbe for StaticProbe {
    fn is_reachable(&self) -> bool {
        self.0
    }
}
