//! Social-presence gating: whether now is an appropriate time to start a
//! conversation, plus timeline-driven detector stubs.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Readings older than this are refused.
pub const FRESHNESS_MS: i64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresenceError {
    #[error("reading is {age_ms} ms old")]
    StaleReading { age_ms: i64 },
    #[error("co-present conversation reported without speech")]
    Inconsistent,
    #[error("scenario line {line}: {reason}")]
    Scenario { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    Engage,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresenceReading {
    pub person_count: u32,
    pub speech_present: bool,
    /// Speech is a live conversation between people rather than media audio.
    pub copresent_conversation: bool,
    pub at_ms: i64,
}

impl PresenceReading {
    pub fn new(
        person_count: u32,
        speech_present: bool,
        copresent_conversation: bool,
        at_ms: i64,
    ) -> Result<Self, PresenceError> {
        if copresent_conversation && !speech_present {
            return Err(PresenceError::Inconsistent);
        }
        Ok(Self { person_count, speech_present, copresent_conversation, at_ms })
    }
}

/// Skip when nobody is there, or when two or more people are talking with
/// each other. Media audio alone never blocks engagement.
pub fn gate_decision(reading: &PresenceReading, now_ms: i64) -> Result<GateDecision, PresenceError> {
    let age_ms = now_ms - reading.at_ms;
    if age_ms > FRESHNESS_MS {
        return Err(PresenceError::StaleReading { age_ms });
    }
    let busy = reading.person_count >= 2 && reading.copresent_conversation;
    Ok(if busy || reading.person_count == 0 { GateDecision::Skip } else { GateDecision::Engage })
}

/// Source of presence readings.
pub trait PresenceDetector: Send {
    fn read(&self, now_ms: i64) -> PresenceReading;
}

/// One person, quiet room. Used when no scenario is configured.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysPresent;

impl PresenceDetector for AlwaysPresent {
    fn read(&self, now_ms: i64) -> PresenceReading {
        PresenceReading {
            person_count: 1,
            speech_present: false,
            copresent_conversation: false,
            at_ms: now_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPoint {
    pub t_offset_s: f64,
    pub person_count: u32,
    pub speech: bool,
    pub copresent: bool,
}

/// Piecewise-constant detector timeline, offsets relative to `origin_ms`.
///
/// CSV form: `t_offset_s,person_count,speech,copresent`, booleans as
/// `true`/`false` or `1`/`0`. A header line is optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    points: Vec<ScenarioPoint>,
    origin_ms: i64,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

impl Scenario {
    pub fn new(mut points: Vec<ScenarioPoint>) -> Self {
        points.sort_by(|a, b| a.t_offset_s.total_cmp(&b.t_offset_s));
        Self { points, origin_ms: 0 }
    }

    pub fn with_origin(mut self, origin_ms: i64) -> Self {
        self.origin_ms = origin_ms;
        self
    }

    pub fn parse_csv(text: &str) -> Result<Self, PresenceError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 1;
            let bad = |reason: &str| PresenceError::Scenario { line, reason: reason.to_owned() };
            let rec = rec.map_err(|e| bad(&e.to_string()))?;
            if rec.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let Ok(t) = rec[0].parse::<f64>() else {
                if line == 1 {
                    continue; // header
                }
                return Err(bad("t_offset_s is not a number"));
            };
            let count = rec[1].parse::<u32>().map_err(|_| bad("bad person_count"))?;
            let speech = parse_bool(&rec[2]).ok_or_else(|| bad("bad speech flag"))?;
            let copresent = parse_bool(&rec[3]).ok_or_else(|| bad("bad copresent flag"))?;
            if copresent && !speech {
                return Err(bad("copresent requires speech"));
            }
            points.push(ScenarioPoint { t_offset_s: t, person_count: count, speech, copresent });
        }
        Ok(Self::new(points))
    }

    pub fn load(path: &Path) -> io::Result<Result<Self, PresenceError>> {
        Ok(Self::parse_csv(&std::fs::read_to_string(path)?))
    }

    fn active(&self, now_ms: i64) -> Option<&ScenarioPoint> {
        let t = (now_ms - self.origin_ms) as f64 / 1000.0;
        self.points.iter().take_while(|p| p.t_offset_s <= t).last()
    }

    /// Person count at `now_ms`; 0 before the first point or when empty.
    pub fn stub_person_count(&self, now_ms: i64) -> u32 {
        self.active(now_ms).map_or(0, |p| p.person_count)
    }

    /// `(speech_present, copresent_conversation)` at `now_ms`.
    pub fn stub_social_presence(&self, now_ms: i64) -> (bool, bool) {
        self.active(now_ms).map_or((false, false), |p| (p.speech, p.copresent))
    }
}

impl PresenceDetector for Scenario {
    fn read(&self, now_ms: i64) -> PresenceReading {
        let (speech, copresent) = self.stub_social_presence(now_ms);
        PresenceReading {
            person_count: self.stub_person_count(now_ms),
            speech_present: speech,
            copresent_conversation: copresent,
            at_ms: now_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(count: u32, speech: bool, copresent: bool) -> PresenceReading {
        PresenceReading::new(count, speech, copresent, 0).unwrap()
    }

    #[test]
    fn decision_table() {
        use GateDecision::*;
        // (count, copresent) -> decision; copresent rows carry speech.
        let table = [
            (0, false, Skip),
            (0, true, Skip),
            (1, false, Engage),
            (1, true, Engage),
            (2, false, Engage),
            (2, true, Skip),
            (5, true, Skip),
            (5, false, Engage),
        ];
        for (count, copresent, want) in table {
            let r = reading(count, copresent, copresent);
            assert_eq!(gate_decision(&r, 0).unwrap(), want, "count {count} copresent {copresent}");
        }
        // Media audio with two people still engages.
        assert_eq!(gate_decision(&reading(2, true, false), 0).unwrap(), Engage);
    }

    #[test]
    fn stale_reading() {
        let r = reading(1, false, false);
        assert!(gate_decision(&r, FRESHNESS_MS).is_ok());
        assert_eq!(
            gate_decision(&r, FRESHNESS_MS + 1),
            Err(PresenceError::StaleReading { age_ms: FRESHNESS_MS + 1 })
        );
    }

    #[test]
    fn inconsistent_reading_rejected() {
        assert_eq!(PresenceReading::new(2, false, true, 0), Err(PresenceError::Inconsistent));
    }

    #[test]
    fn person_count_timeline() {
        let s = Scenario::parse_csv("0,1,false,false\n60,2,false,false\n").unwrap();
        assert_eq!(s.stub_person_count(30_000), 1);
        assert_eq!(s.stub_person_count(61_000), 2);
        assert_eq!(Scenario::default().stub_person_count(5_000), 0);
    }

    #[test]
    fn social_presence_scenes() {
        let s = Scenario::parse_csv(
            "t_offset_s,person_count,speech,copresent\n\
             0,1,true,false\n\
             100,3,true,true\n\
             200,1,false,false\n",
        )
        .unwrap();
        assert_eq!(s.stub_social_presence(50_000), (true, false)); // TV on
        assert_eq!(s.stub_social_presence(150_000), (true, true)); // dinner chat
        assert_eq!(s.stub_social_presence(250_000), (false, false)); // silence
        assert_eq!(s.read(150_000).person_count, 3);
    }

    #[test]
    fn scenario_rejects_bad_rows() {
        assert!(Scenario::parse_csv("0,1,false,true\n").is_err());
        assert!(Scenario::parse_csv("0,1,maybe,false\n").is_err());
        assert!(Scenario::parse_csv("0,1,false\n").is_err());
    }
}
