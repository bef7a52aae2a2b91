//! Named-channel publish/subscribe.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use crate::messages::BusMessage;

/// Delivery mechanism behind the bus.
pub trait Transport: Send + Sync + 'static {
    /// Delivers `msg` to every current subscriber of `channel`.
    fn publish(&self, channel: &str, msg: BusMessage);
    /// Receives every message published on `channel` from now on.
    fn subscribe(&self, channel: &str) -> UnboundedReceiver<BusMessage>;
}

/// In-process transport. Each subscriber gets its own unbounded queue, so a
/// slow subscriber never causes loss. Clones share the channel table.
#[derive(Debug, Clone, Default)]
pub struct InProcessBus {
    channels: Arc<Mutex<HashMap<String, Vec<UnboundedSender<BusMessage>>>>>,
}

impl InProcessBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscriber_count(&self, channel: &str) -> usize {
        self.channels
            .lock()
            .expect("bus lock")
            .get(channel)
            .map_or(0, |subs| subs.iter().filter(|s| !s.is_closed()).count())
    }
}

impl Transport for InProcessBus {
    fn publish(&self, channel: &str, msg: BusMessage) {
        let mut table = self.channels.lock().expect("bus lock");
        if let Some(subs) = table.get_mut(channel) {
            subs.retain(|s| s.send(msg.clone()).is_ok());
        }
    }

    fn subscribe(&self, channel: &str) -> UnboundedReceiver<BusMessage> {
        let (tx, rx) = unbounded_channel();
        self.channels
            .lock()
            .expect("bus lock")
            .entry(channel.to_string())
            .or_default()
            .push(tx);
        rx
    }
}
