//! Tables printed to stdout and mirrored to CSV or JSON.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::CliError;

/// How the cells of a table are rendered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CellFormat {
    /// Two decimals.
    #[default]
    Percent,
    /// Four decimals; values below 0.05 are flagged with `*` in text output.
    PValue,
    /// Four decimals.
    Number,
    /// Integers.
    Count,
}

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    /// One format per column.
    #[serde(skip)]
    pub formats: Vec<CellFormat>,
}

/// Rounds percentages to hundredths so that they still sum to exactly 100:
/// floor every entry, then hand the missing hundredths to the largest
/// remainders (earlier entries win ties).
pub fn reconcile_percentages(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if values.is_empty() || total <= 0.0 {
        return values.to_vec();
    }
    let scaled: Vec<f64> = values.iter().map(|v| v / total * 10_000.0).collect();
    let mut units: Vec<i64> = scaled.iter().map(|v| v.floor() as i64).collect();
    let missing = 10_000 - units.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(missing.max(0) as usize) {
        units[i] += 1;
    }
    units.into_iter().map(|u| u as f64 / 100.0).collect()
}

impl ReportTable {
    pub fn new(title: impl Into<String>, columns: Vec<String>, format: CellFormat) -> Self {
        let formats = vec![format; columns.len()];
        Self::with_formats(title, columns, formats)
    }

    pub fn with_formats(title: impl Into<String>, columns: Vec<String>, formats: Vec<CellFormat>) -> Self {
        assert_eq!(columns.len(), formats.len());
        Self {
            title: title.into(),
            columns,
            rows: Vec::new(),
            formats,
        }
    }

    fn is_percent(&self) -> bool {
        !self.formats.is_empty() && self.formats.iter().all(|f| *f == CellFormat::Percent)
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.columns.len());
        let values = if self.is_percent() {
            reconcile_percentages(&values)
        } else {
            values
        };
        self.rows.push(Row {
            name: name.into(),
            values,
        });
    }

    fn cell(&self, col: usize, v: f64) -> String {
        if !v.is_finite() {
            return "nan".into();
        }
        match self.formats[col] {
            CellFormat::Percent => format!("{v:.2}"),
            CellFormat::PValue | CellFormat::Number => format!("{v:.4}"),
            CellFormat::Count => format!("{v:.0}"),
        }
    }

    fn text_cell(&self, col: usize, v: f64) -> String {
        let mut s = self.cell(col, v);
        if self.formats[col] == CellFormat::PValue && v < SIGNIFICANCE {
            s.push('*');
        }
        s
    }

    /// Aligned plain text.
    pub fn render_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![std::iter::once(String::new())
            .chain(self.columns.iter().cloned())
            .collect()];
        for r in &self.rows {
            grid.push(
                std::iter::once(r.name.clone())
                    .chain(r.values.iter().enumerate().map(|(c, &v)| self.text_cell(c, v)))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..=self.columns.len())
            .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n", self.title);
        for row in &grid {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if c == 0 {
                        format!("{s:<w$}", w = widths[c])
                    } else {
                        format!("{s:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        if self.formats.contains(&CellFormat::PValue) {
            out.push_str("(* p < 0.05)\n");
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = format!("name,{}\n", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.values.iter().enumerate().map(|(c, &v)| self.cell(c, v)).collect();
            let _ = writeln!(out, "{},{}", r.name, cells.join(","));
        }
        out
    }

    pub fn render_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))
    }

    /// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<(), CliError> {
        let (ext, body) = match format {
            OutputFormat::Csv => ("csv", self.render_csv()),
            OutputFormat::Json => ("json", self.render_json()? + "\n"),
        };
        crate::write_file(&dir.join(format!("{stem}.{ext}")), body.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirds_reconcile_to_hundred() {
        let r = reconcile_percentages(&[100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0]);
        assert_eq!(r, vec![33.34, 33.33, 33.33]);
        let r = reconcile_percentages(&[100.0, 0.0]);
        assert_eq!(r, vec![100.0, 0.0]);
        let r = reconcile_percentages(&[12.345, 20.005, 67.65]);
        assert!((r.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn renderings() {
        let mut t = ReportTable::new("p", vec!["MWU".into(), "t-test".into()], CellFormat::PValue);
        t.push("GD", vec![0.01, 0.5]);
        let text = t.render_text();
        assert!(text.contains("0.0100*"));
        assert!(text.contains("0.5000") && !text.contains("0.5000*"));
        assert_eq!(t.render_csv(), "name,MWU,t-test\nGD,0.0100,0.5000\n");
        let json: serde_json::Value = serde_json::from_str(&t.render_json().unwrap()).unwrap();
        assert_eq!(json["rows"][0]["name"], "GD");
        assert_eq!(json["columns"][1], "t-test");
        assert_eq!(json.as_object().unwrap().len(), 3);
    }
}
