use std::io::Write;
use std::sync::{Arc, Mutex};

use serde::Serialize;

/// One line of the request log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestLogEntry {
    pub method: String,
    pub path: String,
    pub session: Option<String>,
    pub step: Option<u64>,
    pub server_us: Option<u64>,
    pub status: u16,
}

/// Sink writing one JSON object per line. Cloning shares the sink.
#[derive(Clone)]
pub struct RequestLog {
    sink: Arc<Mutex<Box<dyn Write + Send>>>,
}

impl RequestLog {
    pub fn new(sink: impl Write + Send + 'static) -> Self {
        RequestLog {
            sink: Arc::new(Mutex::new(Box::new(sink))),
        }
    }

    pub fn stderr() -> Self {
        Self::new(std::io::stderr())
    }

    pub fn record(&self, entry: &RequestLogEntry) {
        let Ok(line) = serde_json::to_string(entry) else {
            return;
        };
        if let Ok(mut sink) = self.sink.lock() {
            let _ = writeln!(sink, "{line}");
            let _ = sink.flush();
        }
    }
}

impl std::fmt::Debug for RequestLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RequestLog")
    }
}
