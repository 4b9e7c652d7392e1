//! Composing-session protocol: classification trigger timing, swipe
//! position tracking, and derivation of implicit emotion labels from the
//! session's event log.
//!
//! Trigger rules:
//! - a spacebar press fires a trigger unless the previous trigger was less
//!   than `throttle_ms` ago;
//! - otherwise, once input has been idle for `pause_ms`, exactly one pause
//!   trigger fires, as soon as the throttle allows it.
//!
//! Label rules, evaluated when the log reaches `Send`:
//! - Select: the text at the last trigger before the selection is labeled
//!   with the emotion of the selected slot;
//! - Swipe: without a selection, a final swipe position other than the top
//!   prediction, held for at least `dwell_ms` before sending, labels the
//!   text with that slot's emotion.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::emotion::Emotion;
use crate::error::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    pub throttle_ms: u64,
    pub pause_ms: u64,
    pub dwell_ms: u64,
    /// Wrap around at the ends of the color bar instead of clamping.
    pub wrap_swipes: bool,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            throttle_ms: 400,
            pause_ms: 500,
            dwell_ms: 3000,
            wrap_swipes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerReason {
    Spacebar,
    Pause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    KeyPress { ch: char },
    Spacebar,
    SwipeLeft,
    SwipeRight,
    /// The circle button: the composed text is replaced by the slot's suggestion.
    Select,
    Send,
    /// A new swipe payload was shown; `order` is its emotion order.
    Payload { order: Vec<Emotion> },
    ClassifyTrigger { reason: TriggerReason },
}

impl EventKind {
    fn is_text_input(&self) -> bool {
        matches!(self, EventKind::KeyPress { .. } | EventKind::Spacebar)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub t: u64,
    /// Composed text after the event.
    #[serde(default)]
    pub text: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SessionEvent {
    pub fn new(t: u64, text: impl Into<String>, kind: EventKind) -> Self {
        SessionEvent {
            t,
            text: text.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyTrigger {
    pub t: u64,
    pub reason: TriggerReason,
    pub text: String,
}

impl ClassifyTrigger {
    pub fn to_event(&self) -> SessionEvent {
        SessionEvent::new(self.t, self.text.clone(), EventKind::ClassifyTrigger { reason: self.reason })
    }
}

/// Timing half of the session state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TriggerClock {
    pub last_input_t: Option<u64>,
    pub last_trigger_t: Option<u64>,
    /// Input arrived since the last trigger.
    pub pending_input: bool,
}

impl TriggerClock {
    fn throttle_allows(&self, now: u64, timing: &TimingConfig) -> bool {
        self.last_trigger_t
            .is_none_or(|last| now.saturating_sub(last) >= timing.throttle_ms)
    }

    fn fire(&mut self, now: u64) {
        self.last_trigger_t = Some(now);
        self.pending_input = false;
    }

    /// Records text input; returns true if a spacebar trigger fires.
    pub fn on_input(&mut self, now: u64, spacebar: bool, timing: &TimingConfig) -> bool {
        self.last_input_t = Some(now);
        self.pending_input = true;
        if spacebar && self.throttle_allows(now, timing) {
            self.fire(now);
            return true;
        }
        false
    }

    /// Fires the pause trigger for the current idle period, at most once.
    pub fn check_pause(&mut self, now: u64, timing: &TimingConfig) -> bool {
        let Some(last_input) = self.last_input_t else {
            return false;
        };
        if self.pending_input && now.saturating_sub(last_input) >= timing.pause_ms && self.throttle_allows(now, timing) {
            self.fire(now);
            return true;
        }
        false
    }

    /// Earliest time at which [`check_pause`](Self::check_pause) would fire.
    pub fn next_pause_deadline(&self, timing: &TimingConfig) -> Option<u64> {
        if !self.pending_input {
            return None;
        }
        let idle = self.last_input_t? + timing.pause_ms;
        let throttle = self.last_trigger_t.map_or(0, |t| t + timing.throttle_ms);
        Some(idle.max(throttle))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionState {
    pub timing: TimingConfig,
    pub clock: TriggerClock,
    pub current_text: String,
    pub last_event_t: Option<u64>,
    pub payload_order: Option<Vec<Emotion>>,
    pub swipe_position: usize,
    pub dwell_start_t: u64,
}

impl SessionState {
    pub fn new(timing: TimingConfig) -> Self {
        SessionState {
            timing,
            ..SessionState::default()
        }
    }

    fn check_order(&mut self, t: u64) -> Result<(), SessionError> {
        if let Some(last) = self.last_event_t {
            if t < last {
                return Err(SessionError::OutOfOrder { last_seen: last, got: t });
            }
        }
        self.last_event_t = Some(t);
        Ok(())
    }

    /// Applies a live client event and returns the trigger it fires, if any.
    /// Logged `ClassifyTrigger` events are accepted and update the clock.
    pub fn on_input(&mut self, event: &SessionEvent) -> Result<Option<ClassifyTrigger>, SessionError> {
        self.check_order(event.t)?;
        let now = event.t;
        if event.kind.is_text_input() {
            self.current_text.clone_from(&event.text);
            let spacebar = event.kind == EventKind::Spacebar;
            if self.clock.on_input(now, spacebar, &self.timing) {
                return Ok(Some(ClassifyTrigger {
                    t: now,
                    reason: TriggerReason::Spacebar,
                    text: self.current_text.clone(),
                }));
            }
            return Ok(None);
        }
        match &event.kind {
            EventKind::SwipeLeft => self.on_swipe(SwipeDirection::Left, now),
            EventKind::SwipeRight => self.on_swipe(SwipeDirection::Right, now),
            EventKind::Payload { order } => self.show_payload(order.clone(), now),
            EventKind::ClassifyTrigger { .. } => self.clock.fire(now),
            EventKind::Select => self.current_text.clone_from(&event.text),
            EventKind::Send => {
                let timing = self.timing;
                *self = SessionState {
                    timing,
                    last_event_t: Some(now),
                    ..SessionState::default()
                };
            }
            EventKind::KeyPress { .. } | EventKind::Spacebar => unreachable!(),
        }
        Ok(None)
    }

    /// Pull-based pause detection, called periodically by a scheduler.
    pub fn check_pause(&mut self, now: u64) -> Option<ClassifyTrigger> {
        if self.clock.check_pause(now, &self.timing) {
            self.last_event_t = Some(self.last_event_t.map_or(now, |t| t.max(now)));
            Some(ClassifyTrigger {
                t: now,
                reason: TriggerReason::Pause,
                text: self.current_text.clone(),
            })
        } else {
            None
        }
    }

    pub fn show_payload(&mut self, order: Vec<Emotion>, now: u64) {
        self.payload_order = Some(order);
        self.swipe_position = 0;
        self.dwell_start_t = now;
    }

    pub fn on_swipe(&mut self, direction: SwipeDirection, now: u64) {
        let Some(order) = &self.payload_order else {
            debug!(t = now, "swipe ignored: no payload shown yet");
            return;
        };
        let last = order.len().saturating_sub(1);
        self.swipe_position = match (direction, self.timing.wrap_swipes) {
            (SwipeDirection::Right, false) => (self.swipe_position + 1).min(last),
            (SwipeDirection::Left, false) => self.swipe_position.saturating_sub(1),
            (SwipeDirection::Right, true) => (self.swipe_position + 1) % order.len(),
            (SwipeDirection::Left, true) => (self.swipe_position + last) % order.len(),
        };
        self.dwell_start_t = now;
    }

    pub fn current_emotion(&self) -> Option<Emotion> {
        self.payload_order.as_ref()?.get(self.swipe_position).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwipeDirection {
    Left,
    Right,
}

/// Drives a session through a client event stream with a scheduler that
/// calls `check_pause` every `tick_ms` (and once more at each event time,
/// before the event). Returns the client events interleaved with the
/// triggers that fired. Ticking continues after the last event until no
/// pause trigger is pending.
pub fn run_timeline(
    events: &[SessionEvent],
    timing: TimingConfig,
    tick_ms: u64,
) -> Result<Vec<SessionEvent>, SessionError> {
    assert!(tick_ms > 0, "tick_ms must be positive");
    let mut state = SessionState::new(timing);
    let mut out = Vec::with_capacity(events.len() * 2);
    let mut next_tick = 0u64;
    let tick_until = |state: &mut SessionState, out: &mut Vec<SessionEvent>, until: u64, next_tick: &mut u64| {
        while *next_tick <= until {
            if let Some(trigger) = state.check_pause(*next_tick) {
                out.push(trigger.to_event());
            }
            *next_tick += tick_ms;
        }
    };
    for event in events {
        tick_until(&mut state, &mut out, event.t, &mut next_tick);
        let trigger = state.on_input(event)?;
        out.push(event.clone());
        if let Some(trigger) = trigger {
            out.push(trigger.to_event());
        }
    }
    while let Some(deadline) = state.clock.next_pause_deadline(&timing) {
        tick_until(&mut state, &mut out, deadline.max(next_tick), &mut next_tick);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Select,
    Swipe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub typed_text: String,
    pub emotion: Emotion,
    pub provenance: Provenance,
    pub typed_at: u64,
    pub labeled_at: u64,
    pub session_id: String,
}

/// Derives at most one label from a log ending in `Send`. Only the events
/// after the previous `Send` (if any) are considered.
pub fn derive_labels(
    events: &[SessionEvent],
    session_id: &str,
    timing: &TimingConfig,
) -> Result<Vec<LabelRecord>, SessionError> {
    let Some((send, body)) = events.split_last() else {
        return Err(SessionError::IncompleteSession);
    };
    if send.kind != EventKind::Send {
        return Err(SessionError::IncompleteSession);
    }
    let start = body
        .iter()
        .rposition(|e| e.kind == EventKind::Send)
        .map_or(0, |i| i + 1);

    let mut state = SessionState::new(*timing);
    let mut typed: Option<(String, u64)> = None;
    let mut last_trigger: Option<(String, u64)> = None;
    let mut selected: Option<(String, u64, Emotion, u64)> = None;
    for event in &body[start..] {
        state.on_input(event)?;
        match &event.kind {
            k if k.is_text_input() => typed = Some((event.text.clone(), event.t)),
            EventKind::ClassifyTrigger { .. } => last_trigger = Some((event.text.clone(), event.t)),
            EventKind::Select => match (state.current_emotion(), last_trigger.clone().or_else(|| typed.clone())) {
                (Some(emotion), Some((text, at))) => selected = Some((text, at, emotion, event.t)),
                _ => debug!(t = event.t, "select ignored: nothing to label"),
            },
            _ => {}
        }
    }
    if send.t < state.last_event_t.unwrap_or(0) {
        return Err(SessionError::OutOfOrder {
            last_seen: state.last_event_t.unwrap_or(0),
            got: send.t,
        });
    }

    let record = if let Some((typed_text, typed_at, emotion, at)) = selected {
        Some(LabelRecord {
            typed_text,
            emotion,
            provenance: Provenance::Select,
            typed_at,
            labeled_at: at,
            session_id: session_id.to_string(),
        })
    } else {
        let dwelled = send.t.saturating_sub(state.dwell_start_t) >= timing.dwell_ms;
        match (state.current_emotion(), last_trigger.or(typed)) {
            (Some(emotion), Some((typed_text, typed_at))) if state.swipe_position != 0 && dwelled => Some(LabelRecord {
                typed_text,
                emotion,
                provenance: Provenance::Swipe,
                typed_at,
                labeled_at: send.t,
                session_id: session_id.to_string(),
            }),
            _ => None,
        }
    };
    Ok(record.into_iter().filter(|r| !r.typed_text.trim().is_empty()).collect())
}

/// Labels for every completed message in a multi-message log.
pub fn derive_all_labels(
    events: &[SessionEvent],
    session_id: &str,
    timing: &TimingConfig,
) -> Result<Vec<LabelRecord>, SessionError> {
    let mut labels = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.kind == EventKind::Send {
            labels.extend(derive_labels(&events[..=i], session_id, timing)?);
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub accepted: usize,
    pub duplicate: bool,
    pub labels: Vec<LabelRecord>,
}

/// Server-side log of one session. Batches are all-or-nothing and may carry
/// an idempotency key; a replayed key is acknowledged without effect.
#[derive(Debug, Clone, Default)]
pub struct SessionLog {
    events: Vec<SessionEvent>,
    seen_keys: HashSet<String>,
}

impl SessionLog {
    /// Rebuilds a log from persisted events without deriving labels again.
    /// Idempotency keys are not part of the event stream and start empty.
    pub fn restore(events: Vec<SessionEvent>) -> Result<Self, SessionError> {
        for w in events.windows(2) {
            if w[1].t < w[0].t {
                return Err(SessionError::OutOfOrder {
                    last_seen: w[0].t,
                    got: w[1].t,
                });
            }
        }
        Ok(SessionLog {
            events,
            seen_keys: HashSet::new(),
        })
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn last_t(&self) -> Option<u64> {
        self.events.last().map(|e| e.t)
    }

    pub fn append_batch(
        &mut self,
        session_id: &str,
        idempotency_key: Option<&str>,
        batch: &[SessionEvent],
        timing: &TimingConfig,
    ) -> Result<BatchOutcome, SessionError> {
        if let Some(key) = idempotency_key {
            if self.seen_keys.contains(key) {
                return Ok(BatchOutcome {
                    accepted: 0,
                    duplicate: true,
                    labels: Vec::new(),
                });
            }
        }
        let mut last = self.last_t();
        for e in batch {
            if let Some(prev) = last {
                if e.t < prev {
                    return Err(SessionError::OutOfOrder { last_seen: prev, got: e.t });
                }
            }
            last = Some(e.t);
        }

        let mut labels = Vec::new();
        for e in batch {
            self.events.push(e.clone());
            if e.kind == EventKind::Send {
                labels.extend(derive_labels(&self.events, session_id, timing)?);
            }
        }
        if let Some(key) = idempotency_key {
            self.seen_keys.insert(key.to_string());
        }
        Ok(BatchOutcome {
            accepted: batch.len(),
            duplicate: false,
            labels,
        })
    }
}
