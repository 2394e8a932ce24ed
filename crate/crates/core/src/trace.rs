//! JSON-lines event trace.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde_json::{Map, Value};

type Sink = Arc<Mutex<Box<dyn Write + Send>>>;

/// A cheap-to-clone handle; every clone writes to the same sink.
#[derive(Clone, Default)]
pub struct Trace {
    sink: Option<Sink>,
}

impl std::fmt::Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.sink.is_some() { "Trace(on)" } else { "Trace(off)" })
    }
}

/// In-memory trace contents, for tests and reports.
#[derive(Clone, Default)]
pub struct TraceBuffer(Arc<Mutex<Vec<u8>>>);

impl Write for TraceBuffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().expect("trace buffer poisoned").extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl TraceBuffer {
    pub fn events(&self) -> Vec<Value> {
        let bytes = self.0.lock().expect("trace buffer poisoned").clone();
        String::from_utf8_lossy(&bytes)
            .lines()
            .filter_map(|l| serde_json::from_str(l).ok())
            .collect()
    }
}

impl Trace {
    pub fn off() -> Self {
        Trace { sink: None }
    }

    pub fn to_writer(w: impl Write + Send + 'static) -> Self {
        Trace {
            sink: Some(Arc::new(Mutex::new(Box::new(w)))),
        }
    }

    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::to_writer(BufWriter::new(File::create(path)?)))
    }

    pub fn memory() -> (Self, TraceBuffer) {
        let buf = TraceBuffer::default();
        (Self::to_writer(buf.clone()), buf)
    }

    pub fn is_on(&self) -> bool {
        self.sink.is_some()
    }

    /// Writes `{"event": event, ...fields}` as one line. `fields` must be an object.
    pub fn emit(&self, event: &str, fields: Value) {
        let Some(sink) = &self.sink else { return };
        let mut obj = match fields {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        obj.insert("event".into(), Value::String(event.into()));
        let line = Value::Object(obj).to_string();
        let mut w = sink.lock().expect("trace sink poisoned");
        let _ = writeln!(w, "{line}");
        let _ = w.flush();
    }
}
