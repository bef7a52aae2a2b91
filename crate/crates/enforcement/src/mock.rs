//! Stand-in for the managed system: records every task it is sent and
//! optionally acknowledges capabilities.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::bus::Transport;
use crate::clock::Clock;
use crate::config::Channels;
use crate::messages::{BusMessage, FulfillmentAck, TaskKind, TaskRequest};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AckPolicy {
    #[default]
    Never,
    /// Acknowledge every primary task on receipt.
    All,
    /// Acknowledge only these capabilities.
    Only(BTreeSet<String>),
}

impl AckPolicy {
    fn acks(&self, capability: &str) -> bool {
        match self {
            AckPolicy::Never => false,
            AckPolicy::All => true,
            AckPolicy::Only(caps) => caps.contains(capability),
        }
    }
}

pub struct ManagedSystemMock {
    log: Arc<Mutex<Vec<TaskRequest>>>,
    count: watch::Receiver<usize>,
    task: JoinHandle<()>,
}

impl ManagedSystemMock {
    pub fn spawn(
        bus: Arc<dyn Transport>,
        channels: &Channels,
        clock: Arc<dyn Clock>,
        policy: AckPolicy,
    ) -> Self {
        let mut tasks = bus.subscribe(&channels.tasks);
        let acks = channels.acks.clone();
        let log = Arc::new(Mutex::new(Vec::new()));
        let (count_tx, count) = watch::channel(0);
        let shared = log.clone();
        let task = tokio::spawn(async move {
            while let Some(msg) = tasks.recv().await {
                let BusMessage::Task(t) = msg else { continue };
                if t.kind != TaskKind::Fallback && policy.acks(&t.capability) {
                    bus.publish(
                        &acks,
                        BusMessage::Ack(FulfillmentAck {
                            capability: t.capability.clone(),
                            provenance: t.provenance.clone(),
                            timestamp: clock.now(),
                        }),
                    );
                }
                let n = {
                    let mut log = shared.lock().expect("mock log");
                    log.push(t);
                    log.len()
                };
                count_tx.send_replace(n);
            }
        });
        ManagedSystemMock { log, count, task }
    }

    pub fn tasks(&self) -> Vec<TaskRequest> {
        self.log.lock().expect("mock log").clone()
    }

    /// Waits until at least `n` tasks arrived; returns `false` on timeout.
    pub async fn wait_for(&self, n: usize, timeout: Duration) -> bool {
        self.wait_until(|tasks| tasks.len() >= n, timeout).await
    }

    /// Waits until `done` holds for the received tasks; returns `false` on
    /// timeout.
    pub async fn wait_until(
        &self,
        done: impl Fn(&[TaskRequest]) -> bool,
        timeout: Duration,
    ) -> bool {
        let mut count = self.count.clone();
        let log = self.log.clone();
        let check = move |_: &usize| done(&log.lock().expect("mock log"));
        tokio::time::timeout(timeout, count.wait_for(check))
            .await
            .is_ok_and(|r| r.is_ok())
    }
}

impl Drop for ManagedSystemMock {
    fn drop(&mut self) {
        self.task.abort();
    }
}
