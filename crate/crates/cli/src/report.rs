use std::io::Write;

use serde_json::{json, Map, Value};

use crate::args::{Common, Format};

pub const METRIC_CONVENTION: &str = "g = squared norm";
pub const RESOLVENT_CONVENTION: &str = "(V - z)^-1; pencil A(z) = sum z_j A_j";

/// A command result: structured data for JSON and a flat table for CSV.
#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub data: Value,
    pub table: Option<Table>,
}

/// Rows for CSV output; complex values are split into `_re`/`_im` columns.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(command: &'static str, data: Value) -> Self {
        Self {
            command,
            parameters: Map::new(),
            data,
            table: None,
        }
    }

    pub fn param(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.into(), value);
        self
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    fn metadata(&self, common: &Common) -> Value {
        json!({
            "tool": "resgeom",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "conventions": {
                "metric": METRIC_CONVENTION,
                "resolvent": RESOLVENT_CONVENTION,
                "complex": "[re, im]",
            },
            "tolerances": {
                "singular": common.tol_sing,
                "quadrature": common.tol_quad,
            },
            "parameters": self.parameters,
        })
    }

    pub fn render(&self, common: &Common) -> String {
        match common.format {
            Format::Json => {
                let doc = json!({ "metadata": self.metadata(common), "result": self.data });
                let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
                s.push('\n');
                s
            }
            Format::Csv => self.render_csv(common),
        }
    }

    fn render_csv(&self, common: &Common) -> String {
        let mut out = String::new();
        let mut meta = Vec::new();
        flatten("", &self.metadata(common), &mut meta);
        for (k, v) in meta {
            out.push_str(&format!("# {k}: {}\n", cell(&v)));
        }
        let fallback;
        let table = match &self.table {
            Some(t) => t,
            None => {
                let mut pairs = Vec::new();
                flatten("", &self.data, &mut pairs);
                fallback = Table {
                    columns: vec!["key".into(), "value".into()],
                    rows: pairs.into_iter().map(|(k, v)| vec![Value::String(k), v]).collect(),
                };
                &fallback
            }
        };
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, common: &Common) -> std::io::Result<()> {
        let text = self.render(common);
        match &common.out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}

/// Dotted paths to scalar leaves, in document order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf.clone())),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
