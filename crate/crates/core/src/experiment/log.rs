use std::time::Instant;

use serde_json::{json, Map, Value};

/// Line-delimited JSON events on stderr.
#[derive(Clone, Debug)]
pub struct Log {
    enabled: bool,
    started: Instant,
}

impl Log {
    pub fn stderr() -> Self {
        Self {
            enabled: true,
            started: Instant::now(),
        }
    }

    pub fn silent() -> Self {
        Self {
            enabled: false,
            ..Self::stderr()
        }
    }

    /// `fields` must be a JSON object; `event` and `elapsed` are added.
    pub fn event(&self, event: &str, fields: Value) {
        if !self.enabled {
            return;
        }
        let mut obj = match fields {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        obj.insert("event".into(), json!(event));
        obj.insert(
            "elapsed".into(),
            json!(self.started.elapsed().as_secs_f64()),
        );
        eprintln!("{}", Value::Object(obj));
    }
}
