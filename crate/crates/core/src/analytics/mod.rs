//! Study measures, trend regression and the daily health report.

mod health;
mod metrics;
mod ols;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use health::{daily_health_report, publish_report, report_path, HealthReport};
pub use metrics::{
    conversations_by_session, detect_greeting, eye_contact_rate, initiation_rate, metrics_from_records,
    session_metrics, turn_metrics, SessionMetrics, TurnMetrics, GREETING_PHRASES,
};
pub use ols::{ln_gamma, ols, regularized_incomplete_beta, student_t_two_sided, RegressionResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("session has no conversations")]
    EmptySession,
    #[error("utterance {index} starts before its predecessor or ends before it starts")]
    NonChronological { index: usize },
    #[error("no utterance carries an eye-contact label")]
    NoLabels,
    #[error("x is constant")]
    DegenerateX,
    #[error("need at least 3 points, got {n}")]
    TooFewPoints { n: usize },
    #[error("x has {x} values but y has {y}")]
    LengthMismatch { x: usize, y: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendMetric {
    InitiationRate,
    MeanUserTurn,
    MeanInterTurn,
    MeanBalance,
    EyeContactRate,
}

impl TrendMetric {
    pub const ALL: [TrendMetric; 5] = [
        TrendMetric::InitiationRate,
        TrendMetric::MeanUserTurn,
        TrendMetric::MeanInterTurn,
        TrendMetric::MeanBalance,
        TrendMetric::EyeContactRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrendMetric::InitiationRate => "initiation_rate",
            TrendMetric::MeanUserTurn => "mean_user_turn_s",
            TrendMetric::MeanInterTurn => "mean_inter_turn_s",
            TrendMetric::MeanBalance => "mean_balance",
            TrendMetric::EyeContactRate => "eye_contact_rate",
        }
    }

    pub fn value(self, m: &SessionMetrics) -> Option<f64> {
        match self {
            TrendMetric::InitiationRate => Some(m.initiation_rate),
            TrendMetric::MeanUserTurn => Some(m.mean_user_turn_s),
            TrendMetric::MeanInterTurn => Some(m.mean_inter_turn_s),
            TrendMetric::MeanBalance => Some(m.mean_balance),
            TrendMetric::EyeContactRate => m.eye_contact_rate,
        }
    }
}

/// Regresses `metric` on session index. Sessions without a value are left
/// out.
pub fn study_trend(
    sessions: &[SessionMetrics],
    metric: TrendMetric,
) -> Result<RegressionResult, AnalyticsError> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        sessions.iter().filter_map(|s| metric.value(s).map(|v| (f64::from(s.session_index), v))).unzip();
    ols(&x, &y)
}
