//! Result tables and their CSV/JSON encodings.

use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Missing,
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
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(v as i64)
            }
        }
    )*};
}
int_cell!(u8, u32, usize, i64);

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => fmt_num(*v),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Missing => Value::Null,
        }
    }
}

/// Long-format table: one header row, uniform width.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Array of objects keyed by header.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.headers.iter().cloned().zip(r.iter().map(Cell::json)).collect::<Map<_, _>>()))
                .collect(),
        )
    }
}

/// 17 significant digits, positional unless the magnitude is extreme.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-20..=20).contains(&exp) {
        return sci;
    }
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let body = if exp < 0 {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{digits}{}", "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    format!("{sign}{body}")
}

/// Closed-form values from the golden fixtures.
const GOLDEN: [(i64, i64); 12] = [
    (1, 8),
    (1, 12),
    (1, 4),
    (319, 528),
    (2173, 1152),
    (2173, 696),
    (7093, 17424),
    (27073, 278784),
    (18049, 69696),
    (59497, 278784),
    (83521, 278784),
    (5, 1),
];

/// `p/q` when `v` sits on a known closed form.
pub fn golden(v: f64) -> Cell {
    GOLDEN
        .iter()
        .find(|(p, q)| (v - *p as f64 / *q as f64).abs() <= 1e-9)
        .map_or(Cell::Missing, |(p, q)| Cell::Text(if *q == 1 { p.to_string() } else { format!("{p}/{q}") }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_num(0.125), "0.12500000000000000");
        assert_eq!(fmt_num(1.0 / 12.0), "0.083333333333333329");
        assert_eq!(fmt_num(-2.5), "-2.5000000000000000");
        assert_eq!(fmt_num(3.0f64.powi(4)), "81.000000000000000");
        assert_eq!(fmt_num(1e17), "100000000000000000");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1e-30), "1.0000000000000001e-30");
        for v in [0.1, 1.0 / 3.0, 2173.0 / 1152.0, 1e-19, 123456.789] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn golden_side_column() {
        assert_eq!(golden(0.125 + 1e-12), Cell::Text("1/8".into()));
        assert_eq!(golden(2173.0 / 1152.0), Cell::Text("2173/1152".into()));
        assert_eq!(golden(0.3), Cell::Missing);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["n", "value", "exact"]);
        t.push(vec![1u32.into(), 0.125.into(), golden(0.125)]);
        t.push(vec![2u32.into(), Cell::Missing, Cell::Missing]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,value,exact\n1,0.12500000000000000,1/8\n2,,\n");
    }
}
