//! Skip-and-compress over many seeded windows.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use talktrainer_core::presence::GateDecision;
use talktrainer_core::scheduler::{IntervalBounds, ScheduleAction, Scheduler};

const WINDOW_MS: i64 = 3 * 3_600_000;

struct Trial {
    completed: u32,
    target: u32,
    bounds_ok: bool,
}

/// One window. Each due slot is gated off with probability `skip_p`; an
/// engaged conversation lasts a uniform draw from `talk_ms` (inclusive).
fn run_window(seed: u64, skip_p: f64, talk_ms: (i64, i64)) -> Trial {
    let target = 10;
    let mut sched = Scheduler::new(0, WINDOW_MS, target, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9));
    let mut bounds_ok = true;
    // Bounds in force when each gap was drawn.
    let mut expected = vec![IntervalBounds::new(WINDOW_MS as f64 / 1000.0, target).unwrap()];
    loop {
        let now = sched.state().next_due_ms;
        let gate = if rng.random_bool(skip_p) { GateDecision::Skip } else { GateDecision::Engage };
        match sched.tick(now, gate) {
            Some(ScheduleAction::StartConversation) => {
                let end = now + rng.random_range(talk_ms.0..=talk_ms.1);
                if sched.on_conversation_complete(end).is_err() {
                    break;
                }
                if sched.state().remaining_count() > 0 {
                    let rem = sched.state().remaining_time_s(end);
                    expected.push(IntervalBounds::new(rem, sched.state().remaining_count()).unwrap());
                }
            }
            Some(ScheduleAction::Skip) => {
                let rem = sched.state().remaining_time_s(now);
                if let Ok(b) = IntervalBounds::new(rem, sched.state().remaining_count()) {
                    expected.push(b);
                }
            }
            Some(ScheduleAction::EndWindowFeedback) | None => break,
        }
    }
    for (gap, b) in sched.intervals().iter().zip(&expected) {
        if *gap < b.lo - 1e-9 || *gap > b.hi + 1e-9 {
            bounds_ok = false;
        }
    }
    bounds_ok &= sched.intervals().len() == expected.len();
    Trial { completed: sched.state().completed, target, bounds_ok }
}

fn met(skip_p: f64, talk_ms: (i64, i64)) -> (usize, bool) {
    let trials: Vec<Trial> = (0..1000).map(|s| run_window(s, skip_p, talk_ms)).collect();
    let met = trials.iter().filter(|t| t.completed == t.target).count();
    (met, trials.iter().all(|t| t.bounds_ok))
}

#[test]
fn thousand_windows_meet_target() {
    let t = Instant::now();
    // The scheduler in isolation: a conversation ends the moment it starts.
    let (n, bounds_ok) = met(0.3, (0, 0));
    let elapsed = t.elapsed();
    assert!(bounds_ok);
    assert!(n >= 990, "only {n}/1000 windows met the target");
    assert!(elapsed < Duration::from_secs(5), "{elapsed:?}");
}

#[test]
fn realistic_talk_time_costs_slots() {
    // With 90 to 240 s of talk per conversation the gaps are still drawn
    // over the full remaining time, so the last slots can run out.
    let (n, bounds_ok) = met(0.3, (90_000, 240_000));
    assert!(bounds_ok);
    assert!((550..990).contains(&n), "{n}/1000");
}

#[test]
fn no_skips_always_meets_target() {
    assert!((0..200).all(|s| run_window(s, 0.0, (90_000, 240_000)).completed == 10));
}
