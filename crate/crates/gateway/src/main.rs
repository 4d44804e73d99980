use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use talktrainer_core::observer::ObserverThresholds;
use talktrainer_core::storage::TrainingConfig;
use talktrainer_gateway::commands::{self, EvalArgs, SimulateArgs, EXIT_BAD_INPUT};
use talktrainer_gateway::RunnerOptions;

#[derive(Parser)]
#[command(name = "talktrainer", version, about = "Small-talk training companion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trainer: engine, scheduler and HTTP API.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "TT_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "0.0.0.0")]
        bind: String,
        /// Multiplier on every real-time delay. For demos and tests.
        #[arg(long, default_value_t = 1.0, hide = true)]
        time_scale: f64,
    },
    /// Score one utterance with the observer.
    Eval {
        #[arg(long)]
        text: String,
        /// Prior turns, one per line, optionally prefixed `robot:` / `user:`.
        #[arg(long)]
        context: Option<PathBuf>,
        /// Take thresholds and lexicon paths from this config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        valence_lexicon: Option<PathBuf>,
        #[arg(long)]
        descriptive_lexicon: Option<PathBuf>,
    },
    /// Run accelerated sessions against a simulated trainee.
    Simulate {
        #[arg(long)]
        sessions: u32,
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to sim-<profile>-seed<seed>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute study measures from a transcript directory.
    Analyze { dir: PathBuf },
    /// Write the health report.
    Report {
        #[arg(long, required = true)]
        daily: bool,
        #[arg(long, default_value = "talktrainer.toml")]
        config: PathBuf,
        /// Day to audit, UTC; today by default.
        #[arg(long)]
        date: Option<NaiveDate>,
    },
}

fn run(config: PathBuf, port: u16, bind: String, time_scale: f64) -> anyhow::Result<()> {
    let config = talktrainer_gateway::load(&config)?;
    let options = RunnerOptions { time_scale, ..RunnerOptions::default() };
    let (state, join) = talktrainer_gateway::start(config, options)?;
    let runner = state.runner.clone();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((bind.as_str(), port)).await?;
        println!("listening on {}", listener.local_addr()?);
        io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        };
        talktrainer_gateway::serve(listener, state, shutdown).await
    })?;
    runner.shutdown();
    let _ = join.join();
    rt.shutdown_timeout(Duration::from_secs(1));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let mut out = io::stdout();
    let code = match cli.command {
        Command::Run { config, port, bind, time_scale } => match run(config, port, bind, time_scale) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_BAD_INPUT
            }
        },
        Command::Eval { text, context, config, valence_lexicon, descriptive_lexicon } => {
            let loaded = match config.as_deref().map(talktrainer_gateway::load).transpose() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(EXIT_BAD_INPUT as u8);
                }
            };
            let thresholds = loaded.as_ref().map_or_else(ObserverThresholds::default, |c| c.observer.clone());
            let valence =
                valence_lexicon.or_else(|| loaded.as_ref().and_then(|c| c.lexicons.valence.clone()));
            let descriptive =
                descriptive_lexicon.or_else(|| loaded.as_ref().and_then(|c| c.lexicons.descriptive.clone()));
            commands::eval(
                &EvalArgs {
                    text: &text,
                    context: context.as_deref(),
                    thresholds,
                    valence: valence.as_deref(),
                    descriptive: descriptive.as_deref(),
                },
                &mut out,
            )
        }
        Command::Simulate { sessions, profile, seed, out: dir } => {
            commands::simulate(&SimulateArgs { sessions, profile, seed, out: dir }, &mut out)
        }
        Command::Analyze { dir } => commands::analyze(&dir, &mut out),
        Command::Report { config, date, .. } => {
            // An unreadable config is itself a finding; the report still runs.
            let config = match talktrainer_gateway::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("warning: {e:#}");
                    TrainingConfig::default()
                }
            };
            let date = date.unwrap_or_else(|| chrono::Utc::now().date_naive());
            commands::report_daily(&config, date, &mut out)
        }
    };
    let _ = out.flush();
    ExitCode::from(code.clamp(0, 255) as u8)
}
