//! Operational surface of the trainer: the engine thread, the HTTP and
//! event-stream API, and the command-line tools.

pub mod api;
pub mod bus;
pub mod commands;
pub mod runner;

use std::future::Future;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use anyhow::Context;
use talktrainer_core::engine::{Engine, EngineConfig};
use talktrainer_core::observer::Observer;
use talktrainer_core::presence::{AlwaysPresent, PresenceDetector, Scenario};
use talktrainer_core::speakers::{ChatClient, SimulatedRobot, SpeakerModel};
use talktrainer_core::storage::{TrainingConfig, TranscriptStore};

pub use api::{router, AppState};
pub use bus::{ApiEvent, EventBus};
pub use runner::{RunnerHandle, RunnerOptions, Snapshot};

/// Observer with the configured thresholds and lexicon files.
pub fn observer_for(config: &TrainingConfig) -> anyhow::Result<Observer> {
    Observer::with_lexicon_files(
        config.observer.clone(),
        config.lexicons.valence.as_deref(),
        config.lexicons.descriptive.as_deref(),
    )
    .context("loading lexicons")
}

type Speakers = (Box<dyn SpeakerModel>, Option<Box<dyn SpeakerModel>>);

/// The chat-completion client when an endpoint is configured, else the
/// offline simulated robot.
fn speaker_for(config: &TrainingConfig) -> anyhow::Result<Speakers> {
    let llm = config.speaker.clone().with_env();
    if llm.url.is_some() {
        let main = ChatClient::new(llm.clone()).context("speaker endpoint")?;
        let feedback = ChatClient::new(llm).context("speaker endpoint")?;
        Ok((Box::new(main), Some(Box::new(feedback))))
    } else {
        log::warn!("no speaker endpoint configured; using the offline simulated robot");
        Ok((Box::new(SimulatedRobot::new(config.seed)), None))
    }
}

fn detector_for(config: &TrainingConfig) -> anyhow::Result<Box<dyn PresenceDetector>> {
    match &config.presence_scenario {
        Some(path) => {
            let scenario = Scenario::load(path)
                .with_context(|| format!("reading {}", path.display()))??
                .with_origin(chrono::Utc::now().timestamp_millis());
            Ok(Box::new(scenario))
        }
        None => Ok(Box::new(AlwaysPresent)),
    }
}

/// Opens storage, restores the engine from its transcripts and starts the
/// engine thread.
pub fn start(
    config: TrainingConfig,
    mut options: RunnerOptions,
) -> anyhow::Result<(AppState, JoinHandle<()>)> {
    let store = TranscriptStore::open(&config.storage_root)
        .with_context(|| format!("opening {}", config.storage_root.display()))?;
    let report = store.read_all().context("reading transcripts")?;
    if report.corrupt_lines > 0 {
        log::warn!("{} corrupt transcript lines skipped", report.corrupt_lines);
    }
    let observer = observer_for(&config)?;
    let (speaker, feedback) = speaker_for(&config)?;
    let mut engine_config =
        EngineConfig { fading: config.fading.clone(), seed: config.seed, ..EngineConfig::default() };
    if let Some(p) = &config.persona {
        engine_config.persona = p.clone();
    }
    let mut engine = Engine::new(Arc::new(observer), speaker, engine_config);
    if let Some(f) = feedback {
        engine = engine.with_feedback_speaker(f);
    }
    let engine = engine.restore(&report.records);
    log::info!(
        "resuming at {} with {} conversations done",
        engine.session_id(),
        engine.session_conversations().len()
    );
    options.windows = config.windows.clone();
    options.target_conversations = config.target_conversations;
    options.seed = config.seed;
    let detector = detector_for(&config)?;
    let (runner, join) = runner::spawn(engine, store, detector, options);
    let state = AppState {
        runner,
        storage_root: config.storage_root.clone(),
        speaker: Arc::new(config.speaker.clone().with_env()),
        config: Arc::new(config),
    };
    Ok((state, join))
}

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Loads and validates a configuration file.
pub fn load(path: &Path) -> anyhow::Result<TrainingConfig> {
    talktrainer_core::storage::load_config(path).with_context(|| format!("loading {}", path.display()))
}
