//! Tables written as CSV or JSON.

use std::io::Write;

use serde_json::{Map, Number, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Unit {
    Nats,
    Bits,
}

impl Unit {
    /// Nats to the output unit.
    pub fn of_nats(self, x: f64) -> f64 {
        match self {
            Unit::Nats => x,
            Unit::Bits => x / std::f64::consts::LN_2,
        }
    }

    /// The output unit to nats, for rates given on the command line.
    pub fn to_nats(self, x: f64) -> f64 {
        match self {
            Unit::Nats => x,
            Unit::Bits => x * std::f64::consts::LN_2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// An information quantity in nats; converted with `--unit`.
    Nats(f64),
    /// A probability, a parameter or any other unitless number.
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self, unit: Unit) -> String {
        match self {
            Cell::Nats(x) => sci(unit.of_nats(*x)),
            Cell::Num(x) => sci(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => quote(t),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self, unit: Unit) -> Value {
        let num = |x: f64| Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null);
        match self {
            Cell::Nats(x) => num(unit.of_nats(*x)),
            Cell::Num(x) => num(*x),
            Cell::Int(k) => Value::from(*k),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(t) => Value::String(t.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

/// C's `%.12e`: twelve fractional digits and an exponent of at least two digits.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn quote(t: &str) -> String {
    if t.contains([',', '"', '\n']) {
        format!("\"{}\"", t.replace('"', "\"\""))
    } else {
        t.to_string()
    }
}

/// A header and rows. A `single` table is a report and serializes to one JSON
/// object rather than an array.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub single: bool,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new(), single: false }
    }

    pub fn report(fields: Vec<(&'static str, Cell)>) -> Self {
        let (columns, row): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
        Table { columns, rows: vec![row], single: true }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: &mut dyn Write, format: Format, unit: Unit) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(|c| c.csv(unit)).collect();
                    writeln!(out, "{}", line.join(","))?;
                }
            }
            Format::Json => {
                let objects: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let map: Map<String, Value> =
                            self.columns.iter().zip(row).map(|(k, c)| (k.to_string(), c.json(unit))).collect();
                        Value::Object(map)
                    })
                    .collect();
                let value = if self.single && objects.len() == 1 {
                    objects.into_iter().next().unwrap()
                } else {
                    Value::Array(objects)
                };
                serde_json::to_writer_pretty(&mut *out, &value)?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
