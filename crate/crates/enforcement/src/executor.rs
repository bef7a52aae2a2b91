//! Obligation-to-task translation and temporal scheduling.
//!
//! The executor is a plain state machine driven by the caller's clock
//! readings, which keeps timer behaviour exact under a virtual clock:
//! a timer due at `t` always produces tasks stamped `issued_at = t`,
//! however late it is polled.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use sleec_core::syntax::Modifier;
use sleec_core::{ObligationDirective, ObligationSet, Provenance};
use thiserror::Error;

use crate::config::TaskSpec;
use crate::messages::{FulfillmentAck, TaskKind, TaskRequest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutorError {
    #[error("capability `{0}` has no task mapping")]
    UnmappedCapability(String),
}

impl ExecutorError {
    pub fn code(&self) -> &'static str {
        "UNMAPPED_CAPABILITY"
    }
}

/// Capability to ordered task sequence; an empty sequence does nothing.
pub type TaskMap = BTreeMap<String, Vec<TaskSpec>>;

/// Expands `d` into its task sequence for `capability` (the directive's own
/// capability, or its fallback).
pub fn plan_tasks(
    d: &ObligationDirective,
    capability: &str,
    map: &TaskMap,
    step: u64,
    kind: TaskKind,
    issued_at: u64,
) -> Result<Vec<TaskRequest>, ExecutorError> {
    if capability == sleec_core::syntax::NOOP {
        return Ok(Vec::new());
    }
    let specs = map
        .get(capability)
        .ok_or_else(|| ExecutorError::UnmappedCapability(capability.to_string()))?;
    Ok(specs
        .iter()
        .map(|spec| TaskRequest {
            task: spec.task().to_string(),
            params: spec.params().to_vec(),
            capability: capability.to_string(),
            directive: d.capability.clone(),
            provenance: d.provenance.clone(),
            step,
            kind,
            issued_at,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TimerAction {
    /// AFTER: dispatch the directive's own tasks.
    Delayed,
    /// WITHIN: dispatch the fallback unless acknowledged first.
    Deadline { fallback: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Timer {
    due: u64,
    seq: u64,
    step: u64,
    directive: ObligationDirective,
    action: TimerAction,
}

impl Ord for Timer {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.due, self.seq).cmp(&(other.due, other.seq))
    }
}

impl PartialOrd for Timer {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckOutcome {
    /// This many armed deadlines were cleared.
    Cancelled(usize),
    /// The deadline had already expired and the fallback was dispatched.
    Late,
    /// Nothing was waiting for this capability.
    Unmatched,
}

pub struct Executor {
    map: TaskMap,
    timers: BinaryHeap<Reverse<Timer>>,
    cancelled: HashSet<u64>,
    /// `(capability, provenance)` of deadlines that fired, for late-ack reporting.
    expired: HashSet<(String, Vec<Provenance>)>,
    handled: HashSet<(u64, String)>,
    next_seq: u64,
}

impl Executor {
    pub fn new(map: TaskMap) -> Self {
        Executor {
            map,
            timers: BinaryHeap::new(),
            cancelled: HashSet::new(),
            expired: HashSet::new(),
            handled: HashSet::new(),
            next_seq: 0,
        }
    }

    pub fn set_task_map(&mut self, map: TaskMap) {
        self.map = map;
    }

    /// Checks every capability (and fallback) of `set` is mapped.
    pub fn check(&self, set: &ObligationSet) -> Result<(), ExecutorError> {
        for d in &set.directives {
            plan_tasks(d, &d.capability, &self.map, 0, TaskKind::Immediate, 0)?;
            if let Modifier::Within { fallback, .. } = &d.modifier {
                plan_tasks(d, fallback, &self.map, 0, TaskKind::Fallback, 0)?;
            }
        }
        Ok(())
    }

    /// Handles the directives of one step at time `now`: immediate tasks are
    /// returned, AFTER and WITHIN timers are armed. A directive already
    /// handled for this step is ignored. Nothing is dispatched or armed if
    /// any capability is unmapped.
    pub fn handle(
        &mut self,
        step: u64,
        set: &ObligationSet,
        now: u64,
    ) -> Result<Vec<TaskRequest>, ExecutorError> {
        self.check(set)?;
        let mut out = Vec::new();
        for d in &set.directives {
            if !self.handled.insert((step, d.capability.clone())) {
                continue;
            }
            match &d.modifier {
                Modifier::Immediate => out.extend(plan_tasks(
                    d,
                    &d.capability,
                    &self.map,
                    step,
                    TaskKind::Immediate,
                    now,
                )?),
                Modifier::After(delay) => self.arm(
                    now.saturating_add(delay.as_nanos_u64()),
                    step,
                    d,
                    TimerAction::Delayed,
                ),
                Modifier::Within { deadline, fallback } => {
                    out.extend(plan_tasks(
                        d,
                        &d.capability,
                        &self.map,
                        step,
                        TaskKind::Immediate,
                        now,
                    )?);
                    let action = TimerAction::Deadline {
                        fallback: fallback.clone(),
                    };
                    self.arm(now.saturating_add(deadline.as_nanos_u64()), step, d, action);
                }
            }
        }
        Ok(out)
    }

    fn arm(&mut self, due: u64, step: u64, d: &ObligationDirective, action: TimerAction) {
        self.next_seq += 1;
        self.timers.push(Reverse(Timer {
            due,
            seq: self.next_seq,
            step,
            directive: d.clone(),
            action,
        }));
    }

    /// Clears armed deadlines for the acknowledged capability. An ack
    /// without provenance matches every deadline on that capability.
    pub fn ack(&mut self, ack: &FulfillmentAck) -> AckOutcome {
        let matches = |d: &ObligationDirective| {
            d.capability == ack.capability
                && (ack.provenance.is_empty() || d.provenance == ack.provenance)
        };
        let mut cleared = 0;
        for Reverse(t) in &self.timers {
            if matches!(t.action, TimerAction::Deadline { .. })
                && matches(&t.directive)
                && self.cancelled.insert(t.seq)
            {
                cleared += 1;
            }
        }
        if cleared > 0 {
            return AckOutcome::Cancelled(cleared);
        }
        let late = self.expired.iter().any(|(cap, prov)| {
            cap == &ack.capability && (ack.provenance.is_empty() || prov == &ack.provenance)
        });
        if late {
            AckOutcome::Late
        } else {
            AckOutcome::Unmatched
        }
    }

    /// Earliest live timer.
    pub fn next_deadline(&mut self) -> Option<u64> {
        self.discard_cancelled();
        self.timers.peek().map(|Reverse(t)| t.due)
    }

    fn discard_cancelled(&mut self) {
        while let Some(Reverse(t)) = self.timers.peek() {
            if self.cancelled.remove(&t.seq) {
                self.timers.pop();
            } else {
                break;
            }
        }
    }

    /// Fires every timer due at or before `now`, in due order.
    pub fn poll(&mut self, now: u64) -> Vec<TaskRequest> {
        let mut out = Vec::new();
        while let Some(due) = self.next_deadline() {
            if due > now {
                break;
            }
            let Reverse(t) = self.timers.pop().expect("peeked timer");
            let planned = match &t.action {
                TimerAction::Delayed => plan_tasks(
                    &t.directive,
                    &t.directive.capability,
                    &self.map,
                    t.step,
                    TaskKind::Delayed,
                    t.due,
                ),
                TimerAction::Deadline { fallback } => {
                    self.expired.insert((
                        t.directive.capability.clone(),
                        t.directive.provenance.clone(),
                    ));
                    plan_tasks(
                        &t.directive,
                        fallback,
                        &self.map,
                        t.step,
                        TaskKind::Fallback,
                        t.due,
                    )
                }
            };
            // Mappings were checked when the timer was armed; a hot swap that
            // dropped one leaves nothing sensible to dispatch.
            out.extend(planned.unwrap_or_default());
        }
        out
    }

    pub fn pending_timers(&mut self) -> usize {
        self.discard_cancelled();
        self.timers.len() - self.cancelled.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sleec_core::syntax::{TimeDuration, TimeUnit};

    const MIN: u64 = 60_000_000_000;

    fn directive(cap: &str, modifier: Modifier) -> ObligationDirective {
        ObligationDirective {
            capability: cap.into(),
            modifier,
            provenance: vec![Provenance {
                rule: "R".into(),
                clause: 0,
            }],
        }
    }

    fn map() -> TaskMap {
        let mut m = TaskMap::new();
        m.insert(
            "alertNurse".into(),
            vec![
                TaskSpec::Name("compose_alert".into()),
                TaskSpec::Full {
                    task: "send_message".into(),
                    params: vec!["nurse_channel".into()],
                },
            ],
        );
        m.insert(
            "wakeUpUser".into(),
            vec![TaskSpec::Name("play_chime".into())],
        );
        m.insert(
            "showNextExercise".into(),
            vec![TaskSpec::Name("display".into())],
        );
        m.insert("letUserSleep".into(), vec![]);
        m
    }

    fn within() -> ObligationSet {
        ObligationSet::from_directives(vec![directive(
            "wakeUpUser",
            Modifier::Within {
                deadline: TimeDuration::new(5, TimeUnit::Minute),
                fallback: "alertNurse".into(),
            },
        )])
    }

    #[test]
    fn plan_expands_in_order() {
        let d = directive("alertNurse", Modifier::Immediate);
        let tasks = plan_tasks(&d, "alertNurse", &map(), 1, TaskKind::Immediate, 7).unwrap();
        let names: Vec<&str> = tasks.iter().map(|t| t.task.as_str()).collect();
        assert_eq!(names, ["compose_alert", "send_message"]);
        assert_eq!(tasks[1].params, ["nurse_channel"]);
        assert!(plan_tasks(&d, "noop", &map(), 1, TaskKind::Immediate, 7)
            .unwrap()
            .is_empty());
        let d = directive("fly", Modifier::Immediate);
        assert_eq!(
            plan_tasks(&d, "fly", &map(), 1, TaskKind::Immediate, 7),
            Err(ExecutorError::UnmappedCapability("fly".into()))
        );
    }

    #[test]
    fn after_fires_exactly_once_at_due_time() {
        let mut ex = Executor::new(map());
        let set = ObligationSet::from_directives(vec![directive(
            "showNextExercise",
            Modifier::After(TimeDuration::new(1, TimeUnit::Minute)),
        )]);
        assert!(ex.handle(1, &set, 1_000).unwrap().is_empty());
        assert!(ex.handle(1, &set, 1_000).unwrap().is_empty());
        assert_eq!(ex.next_deadline(), Some(1_000 + MIN));
        assert!(ex.poll(1_000 + MIN - 1).is_empty());
        let fired = ex.poll(1_000 + 2 * MIN);
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].issued_at, 1_000 + MIN);
        assert_eq!(fired[0].kind, TaskKind::Delayed);
        assert_eq!(ex.next_deadline(), None);
    }

    #[test]
    fn within_fallback_and_ack() {
        let mut ex = Executor::new(map());
        let primary = ex.handle(1, &within(), 0).unwrap();
        assert_eq!(primary.len(), 1);
        let fired = ex.poll(5 * MIN);
        assert_eq!(fired.len(), 2);
        assert!(fired
            .iter()
            .all(|t| t.kind == TaskKind::Fallback && t.issued_at == 5 * MIN));
        let ack = FulfillmentAck {
            capability: "wakeUpUser".into(),
            provenance: vec![],
            timestamp: 6 * MIN,
        };
        assert_eq!(ex.ack(&ack), AckOutcome::Late);

        let mut ex = Executor::new(map());
        ex.handle(1, &within(), 0).unwrap();
        assert_eq!(ex.ack(&ack), AckOutcome::Cancelled(1));
        assert_eq!(ex.pending_timers(), 0);
        assert!(ex.poll(10 * MIN).is_empty());
        assert_eq!(ex.ack(&ack), AckOutcome::Unmatched);
    }

    #[test]
    fn unmapped_fallback_rejects_whole_step() {
        let mut m = map();
        m.remove("alertNurse");
        let mut ex = Executor::new(m);
        assert!(ex.handle(1, &within(), 0).is_err());
        assert_eq!(ex.next_deadline(), None);
    }
}
