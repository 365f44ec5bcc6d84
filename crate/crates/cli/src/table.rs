//! Report tables. Numbers print in shortest round-trip form (exponent
//! notation outside `1e-5..1e16`), so equal values always give equal bytes.

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(u64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) if x.is_finite() => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Num(_) | Cell::Empty => String::new(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Text(t) => s.serialize_str(t),
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Int(n) => s.serialize_u64(*n),
            Cell::Num(_) | Cell::Empty => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

struct RowRef<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for RowRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

struct Rows<'a>(&'a Table);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for r in &self.0.rows {
            seq.serialize_element(&RowRef(&self.0.columns, r))?;
        }
        seq.end()
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    command: &'a str,
    config: &'a RunConfig,
    rows: Rows<'a>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Comma separated, LF line endings, fields quoted only when needed.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_json(&self, command: &str, config: &RunConfig) -> String {
        let mut s = serde_json::to_string_pretty(&JsonReport { command, config, rows: Rows(self) }).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_when_needed_and_uses_lf() {
        let mut t = Table::new(vec!["method", "price", "diagnostics"]);
        t.push(vec!["mc".into(), 4.97.into(), "a=1, b=2".into()]);
        t.push(vec!["fd".into(), Cell::Num(f64::NAN), Cell::Empty]);
        assert_eq!(t.to_csv(), "method,price,diagnostics\nmc,4.97,\"a=1, b=2\"\nfd,,\n");
    }

    #[test]
    fn numbers_round_trip() {
        let x = 0.1 + 0.2;
        let t = Table { columns: vec!["x"], rows: vec![vec![x.into()]] };
        let back: f64 = t.to_csv().lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(back, x);
    }
}
