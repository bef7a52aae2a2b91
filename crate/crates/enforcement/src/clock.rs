//! Injectable monotonic clocks measured in nanoseconds.

use std::future::Future;
use std::pin::Pin;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::sync::watch;

pub type Sleep = Pin<Box<dyn Future<Output = ()> + Send + 'static>>;

pub trait Clock: Send + Sync + 'static {
    /// Nanoseconds since the clock's origin.
    fn now(&self) -> u64;

    /// Completes once `now() >= deadline`.
    fn sleep_until(&self, deadline: u64) -> Sleep;
}

/// Real time, measured from construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock {
            origin: Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }

    fn sleep_until(&self, deadline: u64) -> Sleep {
        let wait = deadline.saturating_sub(self.now());
        Box::pin(tokio::time::sleep(Duration::from_nanos(wait)))
    }
}

/// Time that only moves when told to. Clones share the same timeline.
#[derive(Debug, Clone)]
pub struct VirtualClock {
    now: Arc<AtomicU64>,
    tick: Arc<watch::Sender<u64>>,
}

impl VirtualClock {
    pub fn new(start: u64) -> Self {
        VirtualClock {
            now: Arc::new(AtomicU64::new(start)),
            tick: Arc::new(watch::channel(start).0),
        }
    }

    pub fn advance(&self, by: u64) -> u64 {
        let t = self.now.fetch_add(by, Ordering::SeqCst) + by;
        self.tick.send_replace(t);
        t
    }

    /// Moves time forward to `t`; earlier values are ignored.
    pub fn set(&self, t: u64) {
        let prev = self.now.fetch_max(t, Ordering::SeqCst);
        self.tick.send_replace(prev.max(t));
    }
}

impl Default for VirtualClock {
    fn default() -> Self {
        Self::new(0)
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep_until(&self, deadline: u64) -> Sleep {
        let mut rx = self.tick.subscribe();
        Box::pin(async move {
            while *rx.borrow_and_update() < deadline {
                if rx.changed().await.is_err() {
                    std::future::pending::<()>().await;
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn virtual_sleep_wakes_at_deadline() {
        let clock = VirtualClock::new(10);
        let sleeper = tokio::spawn(clock.sleep_until(100));
        clock.advance(50);
        tokio::task::yield_now().await;
        assert!(!sleeper.is_finished());
        clock.set(100);
        sleeper.await.unwrap();
        assert_eq!(clock.now(), 100);
    }

    #[test]
    fn wall_clock_is_monotone() {
        let c = WallClock::new();
        let a = c.now();
        let b = c.now();
        assert!(b >= a);
    }
}
