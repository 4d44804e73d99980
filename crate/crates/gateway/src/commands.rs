//! The one-shot subcommands. Each returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::Context;
use chrono::NaiveDate;
use serde_json::json;
use talktrainer_core::analytics::{
    daily_health_report, metrics_from_records, publish_report, study_trend, HealthReport, SessionMetrics,
    TrendMetric,
};
use talktrainer_core::observer::{DialogueContext, Observer, ObserverThresholds};
use talktrainer_core::sim::{run_simulation, SimConfig, SimError};
use talktrainer_core::speakers::EndpointProbe;
use talktrainer_core::storage::{read_transcript_dir, TrainingConfig, TranscriptStore};
use talktrainer_core::Speaker;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;

/// `robot: ...` / `user: ...` lines; unprefixed lines alternate, starting
/// with the robot. Blank lines and `#` comments are ignored.
pub fn parse_context(text: &str) -> DialogueContext {
    let mut ctx = DialogueContext::new();
    let mut next = Speaker::Robot;
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (speaker, body) = match line.split_once(':') {
            Some((who, rest)) if who.trim().eq_ignore_ascii_case("robot") => (Speaker::Robot, rest),
            Some((who, rest)) if who.trim().eq_ignore_ascii_case("user") => (Speaker::User, rest),
            _ => (next, line),
        };
        ctx.push(speaker, body.trim());
        next = match speaker {
            Speaker::Robot => Speaker::User,
            Speaker::User => Speaker::Robot,
        };
    }
    ctx
}

pub struct EvalArgs<'a> {
    pub text: &'a str,
    pub context: Option<&'a Path>,
    pub thresholds: ObserverThresholds,
    pub valence: Option<&'a Path>,
    pub descriptive: Option<&'a Path>,
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> i32 {
    let observer = match Observer::with_lexicon_files(args.thresholds.clone(), args.valence, args.descriptive)
    {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let context = match args.context {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => parse_context(&t),
            Err(e) => {
                let _ = writeln!(out, "error: {}: {e}", p.display());
                return EXIT_BAD_INPUT;
            }
        },
        None => DialogueContext::new(),
    };
    let verdict = observer.evaluate(args.text, &context);
    for s in &verdict.scores {
        let mark = if s.passed { "pass" } else { "FAIL" };
        let _ = writeln!(out, "{:<12} {mark}  {:>8.3}  {}", s.criterion.as_str(), s.value, s.detail);
    }
    let _ = writeln!(out, "overall      {}", if verdict.overall_pass { "pass" } else { "FAIL" });
    if let Some(d) = &verdict.directive {
        let _ = writeln!(out, "directive    {d}");
    }
    if verdict.overall_pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn metrics_table(sessions: &[SessionMetrics], out: &mut dyn Write) {
    let _ = writeln!(
        out,
        "{:>7} {:>10} {:>10} {:>10} {:>8} {:>8}",
        "session", "initiation", "user_turn", "inter_turn", "balance", "eye"
    );
    for m in sessions {
        let _ = writeln!(
            out,
            "{:>7} {:>10.3} {:>10.2} {:>10.2} {:>8.3} {:>8}",
            m.session_index,
            m.initiation_rate,
            m.mean_user_turn_s,
            m.mean_inter_turn_s,
            m.mean_balance,
            fmt_opt(m.eye_contact_rate)
        );
    }
}

fn trend_table(sessions: &[SessionMetrics], out: &mut dyn Write) -> serde_json::Value {
    let _ = writeln!(out, "{:<18} {:>9} {:>9} {:>7} {:>4}", "trend", "beta", "p", "r2", "n");
    let mut all = serde_json::Map::new();
    for metric in TrendMetric::ALL {
        match study_trend(sessions, metric) {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{:<18} {:>9.4} {:>9.4} {:>7.3} {:>4}",
                    metric.as_str(),
                    r.beta,
                    r.p_value,
                    r.r_squared,
                    r.n
                );
                all.insert(metric.as_str().into(), serde_json::to_value(r).unwrap_or_default());
            }
            Err(e) => {
                let _ = writeln!(out, "{:<18} n/a ({e})", metric.as_str());
                all.insert(metric.as_str().into(), json!({ "error": e.to_string() }));
            }
        }
    }
    serde_json::Value::Object(all)
}

pub struct SimulateArgs {
    pub sessions: u32,
    pub profile: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> i32 {
    let config = match SimConfig::new(args.sessions, &args.profile, args.seed) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let dir =
        args.out.clone().unwrap_or_else(|| PathBuf::from(format!("sim-{}-seed{}", args.profile, args.seed)));
    if dir.join("transcripts").exists() {
        // Transcripts append; a rerun into the same place starts clean.
        if let Err(e) = fs::remove_dir_all(dir.join("transcripts")) {
            let _ = writeln!(out, "error: {e}");
            return EXIT_FAIL;
        }
    }
    let started = Instant::now();
    let report = match run_simulation(&config, &dir) {
        Ok(r) => r,
        Err(e @ SimError::UnknownProfile(_)) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_BAD_INPUT;
        }
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_FAIL;
        }
    };
    let elapsed = started.elapsed();
    let _ = writeln!(
        out,
        "{} sessions, profile {}, seed {}: {} records in {}",
        args.sessions,
        args.profile,
        args.seed,
        report.records,
        report.transcript_dir.display()
    );
    metrics_table(&report.sessions, out);
    let trends = trend_table(&report.sessions, out);
    let _ = writeln!(
        out,
        "initiation rate first {} final {}",
        fmt_opt(report.first_rate()),
        fmt_opt(report.final_rate())
    );
    let summary = json!({
        "sessions": args.sessions,
        "profile": args.profile,
        "seed": args.seed,
        "records": report.records,
        "elapsed_ms": elapsed.as_millis() as u64,
        "first_rate": report.first_rate(),
        "final_rate": report.final_rate(),
        "initiation_trend": report.initiation_trend,
        "trends": trends,
        "metrics": report.sessions,
    });
    if let Err(e) = write_json(&dir.join("summary.json"), &summary) {
        let _ = writeln!(out, "error: {e:#}");
        return EXIT_FAIL;
    }
    EXIT_OK
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// A storage root (with `transcripts/`) or a directory of day files.
fn transcript_dir(dir: &Path) -> PathBuf {
    let nested = dir.join("transcripts");
    if nested.is_dir() {
        nested
    } else {
        dir.to_owned()
    }
}

pub fn analyze(dir: &Path, out: &mut dyn Write) -> i32 {
    let tdir = transcript_dir(dir);
    let report = match read_transcript_dir(&tdir) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "error: {}: {e}", tdir.display());
            return EXIT_FAIL;
        }
    };
    if report.files == 0 || report.records.is_empty() {
        let _ = writeln!(out, "error: no transcript records in {}", tdir.display());
        return EXIT_FAIL;
    }
    if report.corrupt_lines > 0 {
        let _ = writeln!(out, "warning: skipped {} corrupt lines", report.corrupt_lines);
    }
    let sessions = metrics_from_records(&report.records);
    let _ = writeln!(
        out,
        "{} records from {} files, {} sessions",
        report.records.len(),
        report.files,
        sessions.len()
    );
    metrics_table(&sessions, out);
    let trends = trend_table(&sessions, out);
    let doc = json!({
        "records": report.records.len(),
        "files": report.files,
        "corrupt_lines": report.corrupt_lines,
        "sessions": sessions,
        "trends": trends,
    });
    if let Err(e) = write_json(&dir.join("analysis.json"), &doc) {
        let _ = writeln!(out, "error: {e:#}");
        return EXIT_FAIL;
    }
    EXIT_OK
}

/// Builds, writes and announces the health report. Exit 0 only when every
/// check passed.
pub fn report_daily(config: &TrainingConfig, date: NaiveDate, out: &mut dyn Write) -> i32 {
    let probe = EndpointProbe::new(&config.speaker.clone().with_env(), Duration::from_secs(2));
    let report = match TranscriptStore::open(&config.storage_root) {
        Ok(store) => daily_health_report(&store, &probe, config, date),
        Err(e) => {
            let _ = writeln!(out, "warning: {e}");
            HealthReport {
                date,
                storage_writable: false,
                speaker_reachable: talktrainer_core::speakers::ReachabilityProbe::is_reachable(&probe),
                config_valid: config.validate().is_ok(),
                greetings_delivered: 0,
                user_responses: 0,
                files_ok: false,
            }
        }
    };
    match publish_report(&report, &config.storage_root, &config.notifier) {
        Ok(path) => {
            let _ = writeln!(out, "report written to {}", path.display());
        }
        Err(e) => {
            let _ = writeln!(out, "warning: report not written: {e}");
        }
    }
    if report.all_ok() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}
