//! Spawns the monitor, enforcer and executor as concurrent tasks.
//!
//! ```text
//! probes -> Monitor -> conditions -> Enforcer -> obligations -> Executor -> tasks
//!                                        |                         ^   |
//!                                        +-------> records <-------+   acks
//! ```
//!
//! Respectful steps never reach the executor; their record is published by
//! the enforcer directly. Every probe batch yields exactly one message on
//! the records channel: a record, `Unchanged` or `ProbeRejected`.

use std::fs::File;
use std::future::Future;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use sleec_core::syntax::ParseError;
use sleec_core::{parse_ruleset, Ruleset};
use thiserror::Error;
use tokio::sync::mpsc::UnboundedReceiver;
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::bus::{InProcessBus, Transport};
use crate::clock::{Clock, VirtualClock, WallClock};
use crate::config::{Channels, ClockMode, ConfigError, LoopConfig};
use crate::enforcer::{Enforcer, EnforcerError};
use crate::executor::{AckOutcome, Executor, TaskMap};
use crate::messages::{
    BusMessage, ConditionsUpdate, EnforcementRecord, ObligationsUpdate, ProbeBatch, ProbeSample,
    RecordError,
};
use crate::monitor::Monitor;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("{}", .0.render("model"))]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Enforcer(#[from] EnforcerError),
    #[error("no model: set `model_path` in the configuration")]
    NoModel,
    #[error("cannot use `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl LoopError {
    pub fn code(&self) -> &'static str {
        match self {
            LoopError::Parse(_) => "PARSE_ERROR",
            LoopError::Config(e) => e.code(),
            LoopError::Enforcer(e) => e.code(),
            LoopError::NoModel => "NO_MODEL",
            LoopError::Io { .. } => "IO_ERROR",
        }
    }
}

/// A running loop.
pub struct LoopHandle {
    bus: Arc<dyn Transport>,
    config: LoopConfig,
    clock: Arc<dyn Clock>,
    enforcer: Arc<Enforcer>,
    rules: watch::Sender<Arc<Ruleset>>,
    stop: watch::Sender<bool>,
    stop_writer: watch::Sender<bool>,
    components: Vec<JoinHandle<()>>,
    writer: JoinHandle<std::io::Result<()>>,
}

/// Uploads `model`, then starts the three components on `bus`.
pub async fn start(
    config: LoopConfig,
    model: &str,
    bus: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
) -> Result<LoopHandle, LoopError> {
    let ruleset = Arc::new(parse_ruleset(model)?);
    config.validate_for(&ruleset)?;
    let log = match &config.record_log {
        Some(path) => Some(BufWriter::new(File::create(path).map_err(|source| {
            LoopError::Io {
                path: path.clone(),
                source,
            }
        })?)),
        None => None,
    };
    let enforcer = Arc::new(
        Enforcer::connect(
            &config.server_url,
            model,
            config.session_id.as_deref(),
            config.snapshot_mode,
            config.retry,
            clock.clone(),
        )
        .await?,
    );

    let ch = &config.channels;
    let (rules, rules_rx) = watch::channel(ruleset.clone());
    let (stop, stop_rx) = watch::channel(false);
    let (stop_writer, writer_rx) = watch::channel(false);
    let task_map: TaskMap = config
        .capabilities
        .keys()
        .map(|c| (c.clone(), config.tasks_for(c).unwrap_or_default()))
        .collect();

    let monitor = Monitor::new(ruleset, &config.thresholds, config.snapshot_mode);
    let components = vec![
        tokio::spawn(run_monitor(
            monitor,
            bus.subscribe(&ch.probes),
            rules_rx,
            bus.clone(),
            ch.clone(),
            clock.clone(),
            stop_rx.clone(),
        )),
        tokio::spawn(run_enforcer(
            enforcer.clone(),
            bus.subscribe(&ch.conditions),
            bus.clone(),
            ch.clone(),
            stop_rx.clone(),
        )),
        tokio::spawn(run_executor(
            Executor::new(task_map),
            bus.subscribe(&ch.obligations),
            bus.subscribe(&ch.acks),
            bus.clone(),
            ch.clone(),
            clock.clone(),
            stop_rx,
        )),
    ];
    let writer = tokio::spawn(run_writer(log, bus.subscribe(&ch.records), writer_rx));
    Ok(LoopHandle {
        bus,
        config,
        clock,
        enforcer,
        rules,
        stop,
        stop_writer,
        components,
        writer,
    })
}

impl LoopHandle {
    pub fn bus(&self) -> Arc<dyn Transport> {
        self.bus.clone()
    }

    pub fn channels(&self) -> &Channels {
        &self.config.channels
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        self.clock.clone()
    }

    pub fn session_id(&self) -> &str {
        self.enforcer.session_id()
    }

    /// Publishes one probe batch on the probes channel.
    pub fn inject(&self, case: Option<String>, samples: Vec<ProbeSample>) {
        self.bus.publish(
            &self.config.channels.probes,
            BusMessage::Probes(ProbeBatch { case, samples }),
        );
    }

    /// Replaces the running model. Later steps use the new rules; the loop
    /// keeps running and armed timers are kept.
    pub async fn hot_swap(&self, model: &str) -> Result<(), LoopError> {
        let ruleset = parse_ruleset(model)?;
        self.config.validate_for(&ruleset)?;
        self.enforcer.replace_model(model).await?;
        self.rules.send_replace(Arc::new(ruleset));
        Ok(())
    }

    /// Stops the components, then drains and flushes the record log.
    pub async fn shutdown(self) -> Result<(), LoopError> {
        self.stop.send_replace(true);
        for c in self.components {
            let _ = c.await;
        }
        self.stop_writer.send_replace(true);
        let path = self.config.record_log.clone().unwrap_or_default();
        match self.writer.await {
            Ok(Ok(())) => Ok(()),
            Ok(Err(source)) => Err(LoopError::Io { path, source }),
            Err(e) => Err(LoopError::Io {
                path,
                source: std::io::Error::other(e),
            }),
        }
    }
}

/// Runs the loop described by `config` until `shutdown` completes.
pub async fn run_loop(
    config: LoopConfig,
    shutdown: impl Future<Output = ()>,
) -> Result<(), LoopError> {
    let path = config.model_path.clone().ok_or(LoopError::NoModel)?;
    let model = std::fs::read_to_string(&path).map_err(|source| LoopError::Io { path, source })?;
    let clock: Arc<dyn Clock> = match config.clock {
        ClockMode::Wall => Arc::new(WallClock::new()),
        ClockMode::Virtual => Arc::new(VirtualClock::new(0)),
    };
    let handle = start(config, &model, Arc::new(InProcessBus::new()), clock).await?;
    shutdown.await;
    handle.shutdown().await
}

async fn run_monitor(
    mut monitor: Monitor,
    mut probes: UnboundedReceiver<BusMessage>,
    mut rules: watch::Receiver<Arc<Ruleset>>,
    bus: Arc<dyn Transport>,
    ch: Channels,
    clock: Arc<dyn Clock>,
    mut stop: watch::Receiver<bool>,
) {
    loop {
        tokio::select! {
            biased;
            _ = stop.changed() => break,
            Ok(()) = rules.changed() => {
                let rs = rules.borrow_and_update().clone();
                monitor.replace_ruleset(rs);
            }
            msg = probes.recv() => {
                let Some(msg) = msg else { break };
                let BusMessage::Probes(batch) = msg else { continue };
                let t_probe = clock.now();
                match monitor.process_batch(&batch.samples) {
                    Ok(Some(delta)) => bus.publish(&ch.conditions, BusMessage::Conditions(ConditionsUpdate {
                        case: batch.case,
                        changed: delta.changed,
                        snapshot: delta.snapshot,
                        t_probe,
                        t_conditions_published: clock.now(),
                    })),
                    Ok(None) => bus.publish(&ch.records, BusMessage::Unchanged { case: batch.case, t_probe }),
                    Err(e) => bus.publish(&ch.records, BusMessage::ProbeRejected {
                        case: batch.case,
                        error: format!("{}: {e}", e.code()),
                    }),
                }
            }
        }
    }
}

async fn run_enforcer(
    enforcer: Arc<Enforcer>,
    mut conditions: UnboundedReceiver<BusMessage>,
    bus: Arc<dyn Transport>,
    ch: Channels,
    mut stop: watch::Receiver<bool>,
) {
    loop {
        let msg = tokio::select! {
            biased;
            _ = stop.changed() => break,
            msg = conditions.recv() => msg,
        };
        let Some(msg) = msg else { break };
        let BusMessage::Conditions(update) = msg else {
            continue;
        };
        let mut record = EnforcementRecord {
            case: update.case,
            t_probe: update.t_probe,
            t_conditions_published: update.t_conditions_published,
            ..EnforcementRecord::default()
        };
        match enforcer.step(&update.snapshot).await {
            Ok(out) => {
                record.step = Some(out.step);
                record.t_enforcer_in = out.t_enforcer_in;
                record.t_server_in = out.t_server_in;
                record.t_server_out = out.t_server_out;
                record.t_enforcer_out = out.t_enforcer_out;
                record.t_tasks_dispatched = out.t_enforcer_out;
                record.server_us = out.server_us;
                record.obligations = Some(out.obligations.clone());
                if out.obligations.is_respectful() {
                    bus.publish(&ch.records, BusMessage::Record(record));
                } else {
                    bus.publish(
                        &ch.obligations,
                        BusMessage::Obligations(ObligationsUpdate {
                            step: out.step,
                            obligations: out.obligations,
                            record,
                        }),
                    );
                }
            }
            Err(e) => {
                // Keep the timeline ordered even though the step never completed.
                let t = record.t_conditions_published;
                record.t_enforcer_in = t;
                record.t_server_in = t;
                record.t_server_out = t;
                record.t_enforcer_out = t;
                record.t_tasks_dispatched = t;
                let code = match &e {
                    EnforcerError::StepRejected { code, .. } => Some(code.clone()),
                    _ => None,
                };
                record.error = Some(RecordError {
                    kind: e.code().to_string(),
                    code,
                    message: e.to_string(),
                });
                bus.publish(&ch.records, BusMessage::Record(record));
            }
        }
    }
}

async fn run_executor(
    mut executor: Executor,
    mut obligations: UnboundedReceiver<BusMessage>,
    mut acks: UnboundedReceiver<BusMessage>,
    bus: Arc<dyn Transport>,
    ch: Channels,
    clock: Arc<dyn Clock>,
    mut stop: watch::Receiver<bool>,
) {
    let dispatch = |tasks: Vec<crate::messages::TaskRequest>| {
        let n = tasks.len();
        for t in tasks {
            bus.publish(&ch.tasks, BusMessage::Task(t));
        }
        n
    };
    loop {
        let timer = match executor.next_deadline() {
            Some(due) => clock.sleep_until(due),
            None => Box::pin(std::future::pending()),
        };
        tokio::select! {
            biased;
            _ = stop.changed() => break,
            msg = obligations.recv() => {
                let Some(msg) = msg else { break };
                let BusMessage::Obligations(update) = msg else { continue };
                let mut record = update.record;
                match executor.handle(update.step, &update.obligations, clock.now()) {
                    Ok(tasks) => record.tasks = dispatch(tasks),
                    Err(e) => {
                        record.error = Some(RecordError {
                            kind: e.code().to_string(),
                            code: None,
                            message: e.to_string(),
                        })
                    }
                }
                record.t_tasks_dispatched = clock.now().max(record.t_enforcer_out);
                bus.publish(&ch.records, BusMessage::Record(record));
            }
            msg = acks.recv() => {
                let Some(msg) = msg else { break };
                let BusMessage::Ack(ack) = msg else { continue };
                if executor.ack(&ack) == AckOutcome::Late {
                    bus.publish(&ch.records, BusMessage::Notice {
                        message: format!("late ack for `{}`: fallback already dispatched", ack.capability),
                    });
                }
            }
            () = timer => {
                dispatch(executor.poll(clock.now()));
            }
        }
    }
}

async fn run_writer(
    mut log: Option<BufWriter<File>>,
    mut records: UnboundedReceiver<BusMessage>,
    mut stop: watch::Receiver<bool>,
) -> std::io::Result<()> {
    let mut write = |msg: BusMessage| -> std::io::Result<()> {
        if let (Some(out), BusMessage::Record(r)) = (log.as_mut(), msg) {
            serde_json::to_writer(&mut *out, &r)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        Ok(())
    };
    loop {
        tokio::select! {
            biased;
            msg = records.recv() => match msg {
                Some(msg) => write(msg)?,
                None => return Ok(()),
            },
            _ = stop.changed() => break,
        }
    }
    while let Ok(msg) = records.try_recv() {
        write(msg)?;
    }
    Ok(())
}
