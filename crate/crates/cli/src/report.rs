use std::fmt::Write as _;

use crate::error::Result;

pub const HEADER: [&str; 9] = ["impl", "k", "n", "N", "p", "c", "avg_us", "min_us", "verified"];

/// One result line.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub imp: String,
    pub k: usize,
    pub n: usize,
    pub nodes: usize,
    pub p: usize,
    pub c: usize,
    pub avg_us: f64,
    pub min_us: f64,
    pub verified: bool,
}

impl Row {
    fn fields(&self) -> [String; 9] {
        [
            self.imp.clone(),
            self.k.to_string(),
            self.n.to_string(),
            self.nodes.to_string(),
            self.p.to_string(),
            self.c.to_string(),
            format!("{:.2}", self.avg_us),
            format!("{:.2}", self.min_us),
            self.verified.to_string(),
        ]
    }
}

/// CSV with the fixed header, rows in the given order.
pub fn emit_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Aligned plain-text table preceded by `note` lines.
pub fn emit_table(rows: &[Row], notes: &[String]) -> String {
    let cells: Vec<[String; 9]> = rows.iter().map(Row::fields).collect();
    let width = |i: usize| cells.iter().map(|r| r[i].len()).chain([HEADER[i].len()]).max().unwrap_or(0);
    let widths: Vec<usize> = (0..9).map(width).collect();
    let mut out = String::new();
    for note in notes {
        let _ = writeln!(out, "# {note}");
    }
    let line = |fields: &[&str]| {
        fields.iter().zip(&widths).map(|(f, w)| format!("{f:>w$}")).collect::<Vec<_>>().join("  ")
    };
    let _ = writeln!(out, "{}", line(&HEADER));
    for r in &cells {
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{}", line(&refs));
    }
    out
}
