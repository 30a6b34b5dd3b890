use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable `name: value` lines.
    #[default]
    Text,
    /// One JSON object per line, each with a leading `record` field.
    Records,
}

pub struct Out {
    format: Format,
}

fn plain(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Out {
    pub fn new(format: Format) -> Self {
        Out { format }
    }

    /// Prints one record. `fields` must serialize to a JSON object.
    pub fn emit(&self, record: &str, fields: impl serde::Serialize) {
        let fields = match serde_json::to_value(fields).expect("records always serialize") {
            Value::Object(map) => map,
            other => {
                let mut map = Map::new();
                map.insert("value".into(), other);
                map
            }
        };
        match self.format {
            Format::Records => {
                let mut line = format!("{{\"record\":{}", Value::from(record));
                for (key, value) in &fields {
                    line.push_str(&format!(",{}:{}", Value::from(key.as_str()), value));
                }
                line.push('}');
                println!("{line}");
            }
            Format::Text => {
                let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={}", plain(v))).collect();
                println!("{record}: {}", body.join(" "));
            }
        }
    }

    /// A single named value, as in a trace.
    pub fn value(&self, name: &str, value: &str) {
        match self.format {
            Format::Records => self.emit("value", serde_json::json!({ "name": name, "value": value })),
            Format::Text => println!("{name} = {value}"),
        }
    }
}
