use std::collections::VecDeque;

use super::{ticks_for, SimError};

/// Plant mutation fired at a scheduled time.
#[derive(Debug, Clone, PartialEq)]
pub enum EventAction {
    /// Scale the grid source amplitude per phase (p.u. residual voltage).
    FaultApply { residual: [f64; 3] },
    /// Restore all phases to 1.0 p.u.
    FaultClear,
    /// Overwrite a named plant parameter, e.g. `load.b3.p`.
    ParameterSet { path: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub fire_t: f64,
    pub action: EventAction,
}

impl Event {
    pub fn new(fire_t: f64, action: EventAction) -> Self {
        Self { fire_t, action }
    }

    /// First tick whose time reaches `fire_t`. Times within a relative
    /// 1e-9 of a tick boundary snap to that tick, so `0.2` fires at tick
    /// 4000 for a 50 µs step regardless of binary rounding.
    pub fn fire_tick(&self, dt: f64) -> u64 {
        ticks_for(self.fire_t, dt).unwrap_or_else(|| (self.fire_t / dt).ceil() as u64)
    }

    pub fn is_fault_edge(&self) -> bool {
        matches!(self.action, EventAction::FaultApply { .. } | EventAction::FaultClear)
    }
}

/// Events ordered by fire time; each fires exactly once.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    pending: VecDeque<Event>,
}

/// Stable sort by fire time; equal times keep declaration order.
pub fn schedule(events: Vec<Event>, duration: f64) -> Result<EventQueue, SimError> {
    for ev in &events {
        if !ev.fire_t.is_finite() || ev.fire_t < 0.0 || ev.fire_t > duration {
            return Err(SimError::InvalidEvent {
                fire_t: ev.fire_t,
                duration,
            });
        }
    }
    let mut events = events;
    events.sort_by(|a, b| a.fire_t.total_cmp(&b.fire_t));
    Ok(EventQueue { pending: events.into() })
}

impl EventQueue {
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.pending.iter()
    }

    /// Remove and return every event due at or before `tick`, in queue order.
    pub fn pop_due_tick(&mut self, tick: u64, dt: f64) -> Vec<Event> {
        let mut due = Vec::new();
        while self.pending.front().is_some_and(|ev| ev.fire_tick(dt) <= tick) {
            due.extend(self.pending.pop_front());
        }
        due
    }

    /// Remove and return every event with `fire_t <= t`, in queue order.
    pub fn pop_due(&mut self, t: f64) -> Vec<Event> {
        let mut due = Vec::new();
        while self.pending.front().is_some_and(|ev| ev.fire_t <= t) {
            due.extend(self.pending.pop_front());
        }
        due
    }
}
