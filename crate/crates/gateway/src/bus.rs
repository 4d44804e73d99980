//! Fan-out of persisted records to event-stream clients.

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use talktrainer_core::storage::{EventRecord, EventType};
use tokio::sync::broadcast;

/// Events kept for `Last-Event-ID` replay.
const HISTORY: usize = 10_000;

/// Wire form of one published record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEvent {
    #[serde(rename = "type")]
    pub kind: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<String>,
    pub payload: serde_json::Value,
    pub seq: u64,
}

struct Inner {
    next_seq: u64,
    history: VecDeque<ApiEvent>,
}

pub struct EventBus {
    inner: Mutex<Inner>,
    tx: broadcast::Sender<ApiEvent>,
}

impl Default for EventBus {
    fn default() -> Self {
        Self::new()
    }
}

impl EventBus {
    pub fn new() -> Self {
        let (tx, _) = broadcast::channel(4096);
        Self { inner: Mutex::new(Inner { next_seq: 1, history: VecDeque::new() }), tx }
    }

    pub fn publish(&self, record: &EventRecord, indicator: Option<&str>) -> ApiEvent {
        let mut inner = self.inner.lock().expect("bus lock");
        let event = ApiEvent {
            kind: record.event_type,
            indicator: indicator.map(str::to_owned),
            payload: serde_json::to_value(record).unwrap_or_default(),
            seq: inner.next_seq,
        };
        inner.next_seq += 1;
        inner.history.push_back(event.clone());
        if inner.history.len() > HISTORY {
            inner.history.pop_front();
        }
        // Sent under the lock so a subscriber never sees a gap between the
        // replayed history and the live stream.
        let _ = self.tx.send(event.clone());
        event
    }

    /// Events after `after` (all kept history when `None`) plus a receiver
    /// for everything later.
    pub fn subscribe(&self, after: Option<u64>) -> (Vec<ApiEvent>, broadcast::Receiver<ApiEvent>) {
        let inner = self.inner.lock().expect("bus lock");
        let rx = self.tx.subscribe();
        let backlog = match after {
            Some(a) => inner.history.iter().filter(|e| e.seq > a).cloned().collect(),
            None => Vec::new(),
        };
        (backlog, rx)
    }

    pub fn last_seq(&self) -> u64 {
        self.inner.lock().expect("bus lock").next_seq - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ts: i64) -> EventRecord {
        EventRecord::new(ts, "session-0000", EventType::Wake)
    }

    #[test]
    fn seq_is_strictly_increasing() {
        let bus = EventBus::new();
        let a = bus.publish(&rec(1), None);
        let b = bus.publish(&rec(2), Some("normal"));
        assert_eq!((a.seq, b.seq), (1, 2));
        assert_eq!(bus.last_seq(), 2);
    }

    #[test]
    fn replay_then_live() {
        let bus = EventBus::new();
        for i in 0..5 {
            bus.publish(&rec(i), None);
        }
        let (backlog, mut rx) = bus.subscribe(Some(3));
        assert_eq!(backlog.iter().map(|e| e.seq).collect::<Vec<_>>(), vec![4, 5]);
        bus.publish(&rec(9), None);
        assert_eq!(rx.try_recv().unwrap().seq, 6);
        assert!(bus.subscribe(None).0.is_empty());
    }

    #[test]
    fn wire_form() {
        let bus = EventBus::new();
        let e = bus.publish(&rec(7), Some("feedback_blue"));
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["type"], "wake");
        assert_eq!(v["indicator"], "feedback_blue");
        assert_eq!(v["payload"]["ts_ms"], 7);
        assert_eq!(v["seq"], 1);
    }
}
