//! Result tables and their CSV / JSON renderings.
//!
//! Reals are written with 9 significant digits (`{:.8e}`) in both formats, so
//! the JSON mirror carries exactly the numbers of the CSV file.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) if v.is_finite() => {
                let rounded: f64 = format_real(*v).parse().unwrap_or(*v);
                Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
            Cell::Real(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        // print -0 as 0 so equal results give equal bytes
        let v = if v == 0.0 { 0.0 } else { v };
        format!("{v:.8e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Ordered columns plus rows of cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Collects one row as `(column, cell)` pairs; the first row fixes the header.
#[derive(Debug, Default)]
pub struct RowBuilder {
    pairs: Vec<(String, Cell)>,
}

impl RowBuilder {
    pub fn real(&mut self, name: &str, v: f64) -> &mut Self {
        self.pairs.push((name.into(), Cell::Real(v)));
        self
    }

    pub fn int(&mut self, name: &str, v: u64) -> &mut Self {
        self.pairs.push((name.into(), Cell::Int(v)));
        self
    }

    pub fn text(&mut self, name: &str, v: impl Into<String>) -> &mut Self {
        self.pairs.push((name.into(), Cell::Text(v.into())));
        self
    }

    pub fn flag(&mut self, name: &str, v: bool) -> &mut Self {
        self.pairs.push((name.into(), Cell::Bool(v)));
        self
    }

    pub fn opt_real(&mut self, name: &str, v: Option<f64>) -> &mut Self {
        self.pairs.push((name.into(), v.map_or(Cell::Empty, Cell::Real)));
        self
    }

    pub fn finish(self) -> Vec<(String, Cell)> {
        self.pairs
    }
}

impl Table {
    pub fn from_rows(rows: Vec<Vec<(String, Cell)>>) -> Self {
        let mut table = Table::default();
        for row in rows {
            if table.columns.is_empty() {
                table.columns = row.iter().map(|(c, _)| c.clone()).collect();
            }
            debug_assert_eq!(table.columns.len(), row.len());
            table.rows.push(row.into_iter().map(|(_, v)| v).collect());
        }
        table
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("columns".into(), Value::from(self.columns.clone()));
        doc.insert("rows".into(), Value::Array(rows));
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("tables always serialize");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut a = RowBuilder::default();
        a.real("mu", 1e4).int("k", 101).text("modes", "inf").opt_real("gap", None);
        let mut b = RowBuilder::default();
        b.real("mu", 0.1234567891234).int("k", 3).text("modes", "2").opt_real("gap", Some(-0.0));
        Table::from_rows(vec![a.finish(), b.finish()])
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            sample().to_csv(),
            "mu,k,modes,gap\n1.00000000e4,101,inf,\n1.23456789e-1,3,2,0.00000000e0\n"
        );
    }

    #[test]
    fn json_mirrors_csv_numbers() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["columns"][0], "mu");
        assert_eq!(v["rows"][1]["mu"].as_f64().unwrap(), 0.123456789);
        assert!(v["rows"][0]["gap"].is_null());
        assert_eq!(v["rows"][0]["modes"], "inf");
    }

    #[test]
    fn non_finite_reals() {
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(format_real(f64::NAN), "nan");
        assert_eq!(Cell::Real(f64::INFINITY).json(), Value::Null);
    }
}
