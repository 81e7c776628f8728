//! Records printed by the scalar subcommands, in table, JSON-lines or CSV
//! form.

use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Field {
    /// Floats use Rust's shortest round-trip digits, in exponent form when
    /// plain notation would be long.
    fn plain(&self) -> String {
        match self {
            Field::Num(v) => number(*v),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.clone(),
            Field::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Field::Int(v) => Value::from(*v),
            Field::Text(s) => Value::from(s.clone()),
            Field::Bool(b) => Value::from(*b),
        }
    }
}

pub fn number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Named fields in insertion order.
#[derive(Clone, Debug, Default)]
pub struct Record(pub Vec<(String, Field)>);

impl Record {
    pub fn num(mut self, key: &str, v: f64) -> Self {
        self.0.push((key.into(), Field::Num(v)));
        self
    }

    pub fn int(mut self, key: &str, v: usize) -> Self {
        self.0.push((key.into(), Field::Int(v as u64)));
        self
    }

    pub fn text(mut self, key: &str, v: impl Into<String>) -> Self {
        self.0.push((key.into(), Field::Text(v.into())));
        self
    }

    pub fn flag(mut self, key: &str, v: bool) -> Self {
        self.0.push((key.into(), Field::Bool(v)));
        self
    }

    fn keys(&self) -> Vec<&str> {
        self.0.iter().map(|(k, _)| k.as_str()).collect()
    }
}

pub fn render(records: &[Record], format: Format) -> Result<String> {
    match format {
        Format::Table => Ok(table(records)),
        Format::Json => {
            let mut s = String::new();
            for r in records {
                let obj: Map<String, Value> = r.0.iter().map(|(k, v)| (k.clone(), v.json())).collect();
                s.push_str(&serde_json::to_string(&obj)?);
                s.push('\n');
            }
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if let Some(first) = records.first() {
                w.write_record(first.keys())?;
            }
            for r in records {
                w.write_record(r.0.iter().map(|(_, v)| v.plain()))?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
    }
}

/// One record prints as `key  value` lines, several as columns.
fn table(records: &[Record]) -> String {
    let mut s = String::new();
    match records {
        [] => {}
        [one] => {
            let width = one.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &one.0 {
                let _ = writeln!(s, "{k:<width$}  {}", v.plain());
            }
        }
        many => {
            let cells: Vec<Vec<String>> = many.iter().map(|r| r.0.iter().map(|(_, v)| v.plain()).collect()).collect();
            let keys = many[0].keys();
            let widths: Vec<usize> =
                (0..keys.len()).map(|j| cells.iter().map(|row| row.get(j).map_or(0, |c| c.len())).max().unwrap_or(0).max(keys[j].len())).collect();
            let line = |row: Vec<&str>| row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ");
            let _ = writeln!(s, "{}", line(keys.clone()).trim_end());
            for row in &cells {
                let _ = writeln!(s, "{}", line(row.iter().map(String::as_str).collect()).trim_end());
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip() {
        let v = 0.1 + 0.2;
        let out = render(&[Record::default().num("x", v).text("label", "a,b")], Format::Csv).unwrap();
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("x,label"));
        let row = lines.next().unwrap();
        assert_eq!(row, "0.30000000000000004,\"a,b\"");
        assert_eq!(row.split(',').next().unwrap().parse::<f64>().unwrap(), v);
        for v in [8.481479150569372e-16, -1.5e20, 123.25, f64::INFINITY, 1e-4] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(number(8.481479150569372e-16), "8.481479150569372e-16");
    }

    #[test]
    fn json_maps_nan_to_null() {
        let out = render(&[Record::default().num("x", f64::NAN).int("k", 3)], Format::Json).unwrap();
        assert_eq!(out, "{\"x\":null,\"k\":3}\n");
    }

    #[test]
    fn table_layouts() {
        let r = Record::default().num("value", 1.5).text("family", "base");
        assert_eq!(render(std::slice::from_ref(&r), Format::Table).unwrap(), "value   1.5\nfamily  base\n");
        let t = render(&[r.clone(), r], Format::Table).unwrap();
        assert_eq!(t.lines().next(), Some("value  family"));
        assert_eq!(t.lines().count(), 3);
    }
}
