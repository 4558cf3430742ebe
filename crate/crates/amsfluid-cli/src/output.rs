//! Tabular output in CSV or JSON with a versioned header.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use amsfluid::model::DerivedParams;
use clap::ValueEnum;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits; scientific with explicit exponent below 1e-4.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.16e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if v.abs() < 1e-4 || exp >= 17 {
        return s;
    }
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::with_capacity(24);
    if neg {
        out.push('-');
    }
    if exp >= 0 {
        let e = exp as usize + 1;
        out.push_str(&digits[..e]);
        if e < digits.len() {
            out.push('.');
            out.push_str(&digits[e..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-exp - 1) as usize));
        out.push_str(&digits);
    }
    out
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata: comment lines in CSV, top-level keys in JSON.
    pub extra: Vec<(String, Value)>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table { name: name.into(), columns: columns.to_vec(), rows: Vec::new(), extra: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn header(&self, p: &DerivedParams) -> String {
        format!(
            "# amsfluid {} v{SCHEMA_VERSION} n={} lambda={} c={} gamma={}",
            self.name,
            p.n,
            num(p.lambda),
            num(p.c),
            num(p.gamma)
        )
    }

    pub fn write_csv<W: Write>(&self, p: &DerivedParams, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header(p))?;
        for (k, v) in &self.extra {
            writeln!(w, "# {k}: {v}")?;
        }
        let mut cw = csv::WriterBuilder::new().from_writer(w);
        cw.write_record(&self.columns)?;
        for row in &self.rows {
            cw.write_record(row.iter().map(Cell::csv))?;
        }
        cw.flush()
    }

    pub fn to_json(&self, p: &DerivedParams) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
            .collect();
        let mut m = Map::new();
        m.insert("schema".into(), json!(format!("amsfluid/{}/v{SCHEMA_VERSION}", self.name)));
        m.insert("params".into(), json!({ "n": p.n, "lambda": p.lambda, "c": p.c, "gamma": p.gamma }));
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        m.insert("columns".into(), json!(self.columns));
        m.insert("rows".into(), Value::Array(rows));
        Value::Object(m)
    }
}

/// Writes one or more tables to stdout or `out`.  With several tables `out`
/// names a directory that receives one file per table.
pub fn emit(tables: &[Table], p: &DerivedParams, format: Format, out: Option<&Path>) -> io::Result<()> {
    match (out, tables.len()) {
        (Some(dir), n) if n > 1 => {
            fs::create_dir_all(dir)?;
            for t in tables {
                let f = io::BufWriter::new(fs::File::create(dir.join(format!("{}.{}", t.name, format.ext())))?);
                write_one(t, p, format, f)?;
            }
            Ok(())
        }
        (Some(path), _) => {
            let f = io::BufWriter::new(fs::File::create(path)?);
            write_many(tables, p, format, f)
        }
        (None, _) => write_many(tables, p, format, io::stdout().lock()),
    }
}

fn write_one<W: Write>(t: &Table, p: &DerivedParams, format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Csv => t.write_csv(p, w),
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &t.to_json(p))?;
            writeln!(w)
        }
    }
}

fn write_many<W: Write>(tables: &[Table], p: &DerivedParams, format: Format, mut w: W) -> io::Result<()> {
    if tables.len() == 1 {
        return write_one(&tables[0], p, format, w);
    }
    match format {
        Format::Csv => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(w)?;
                }
                t.write_csv(p, &mut w)?;
            }
            Ok(())
        }
        Format::Json => {
            let all: Vec<Value> = tables.iter().map(|t| t.to_json(p)).collect();
            serde_json::to_writer_pretty(&mut w, &json!({ "tables": all }))?;
            writeln!(w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn significant(s: &str) -> usize {
        let mant = s.split('e').next().unwrap();
        mant.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count()
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for &v in &[1.0, -2.5, 0.1, 1.0 / 3.0, 123456.789, 8.578e-19, 1e-4, 9.99e-5, -3.2e40, 1e17, 0.00012345] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert_eq!(significant(&s), 17, "{s}");
        }
    }

    #[test]
    fn notation_switches_below_1e_minus_4() {
        assert_eq!(num(1e-5), "1.0000000000000001e-5");
        assert_eq!(num(-1e-5), "-1.0000000000000001e-5");
        assert_eq!(num(0.5), "0.50000000000000000");
        assert_eq!(num(-12.0), "-12.000000000000000");
        assert_eq!(num(0.001), "0.0010000000000000000");
        assert_eq!(num(0.0), "0");
    }
}
