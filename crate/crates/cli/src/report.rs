//! Report assembly and rendering.

use std::fmt::Write as _;

use clap::ValueEnum;
use envlab_core::{BigRational, C64};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Structured,
}

/// Outcome of a computation that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    /// The computation ran but a verified property failed.
    Failed,
}

/// Key–value fields plus an optional table.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub fields: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub status: Status,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            fields: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            status: Status::Passed,
        }
    }

    pub fn field(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn columns(&mut self, cols: &[&str]) -> &mut Self {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    pub fn fail_if(&mut self, failed: bool) -> &mut Self {
        if failed {
            self.status = Status::Failed;
        }
        self
    }
}

/// Float at 12 significant digits, trailing zeros trimmed.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let text = if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        format!("{}e{exp}", trim(mantissa.to_string()))
    };
    if text == "-0" {
        "0".into()
    } else {
        text
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn frac(q: &BigRational) -> String {
    envlab_core::born::fraction_string(q)
}

pub fn complex(z: C64) -> String {
    let re = num(z.re);
    if z.im == 0.0 {
        return re;
    }
    let im = num(z.im.abs());
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{re}{sign}{im}i")
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

pub fn list<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Table => table(report),
        Format::Csv => csv_text(report),
        Format::Structured => structured(report),
    }
}

fn table(report: &Report) -> String {
    let mut out = String::new();
    let key_width = report
        .fields
        .iter()
        .map(|(k, _)| k.len())
        .max()
        .unwrap_or(0);
    for (k, v) in &report.fields {
        let _ = writeln!(out, "{k:<key_width$}  {v}");
    }
    if report.columns.is_empty() {
        return out;
    }
    if !report.fields.is_empty() {
        out.push('\n');
    }
    let mut widths: Vec<usize> = report.columns.iter().map(|c| c.len()).collect();
    for row in &report.rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&report.columns));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in &report.rows {
        let _ = writeln!(out, "{}", line(row));
    }
    out
}

/// Table rows when the report has columns, otherwise `key,value` pairs.
fn csv_text(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if report.columns.is_empty() {
        w.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in &report.fields {
            w.write_record([k, v]).expect("in-memory write");
        }
    } else {
        w.write_record(&report.columns).expect("in-memory write");
        for row in &report.rows {
            w.write_record(row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

fn structured(report: &Report) -> String {
    let fields: Map<String, Value> = report
        .fields
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            let obj: Map<String, Value> = report
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| (c.clone(), Value::String(v.clone())))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "command": report.command,
        "status": match report.status { Status::Passed => "passed", Status::Failed => "failed" },
        "fields": fields,
        "columns": report.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(2.0 * 2f64.sqrt() / 3.0), "0.942809041582");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1234.5), "1234.5");
        assert_eq!(num(1e-9), "1e-9");
        assert_eq!(num(-2.5e13), "-2.5e13");
        assert_eq!(num(-0.0), "0");
    }

    #[test]
    fn fractions_render_exactly() {
        let q = BigRational::new(1.into(), 3.into());
        assert_eq!(frac(&q), "1/3");
    }

    #[test]
    fn formats() {
        let mut r = Report::new("demo");
        r.field("total", "4")
            .columns(&["n", "count"])
            .row(vec!["0".into(), "1".into()]);
        assert_eq!(render(&r, Format::Csv), "n,count\n0,1\n");
        assert!(render(&r, Format::Table).starts_with("total  4\n\n"));
        let v: Value = serde_json::from_str(&render(&r, Format::Structured)).unwrap();
        assert_eq!(v["rows"][0]["count"], "1");
        assert_eq!(complex(C64::new(0.5, -0.25)), "0.5-0.25i");
    }
}
