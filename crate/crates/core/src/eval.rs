//! Confusion matrices, metrics and comparison tables.
//!
//! Any ratio with a zero denominator is reported as 0.0 rather than NaN, which
//! is how a classifier that never predicts the positive class ends up with 0%
//! precision and recall.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive class is 1 (exoplanet).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// 2x2 grid, rows = actual, columns = predicted.
    pub fn render_grid(&self) -> String {
        let cells = [self.tn, self.fp, self.fn_, self.tp].map(|c| c.to_string());
        let w = cells.iter().map(String::len).max().unwrap_or(1).max(6);
        let mut s = String::new();
        let _ = writeln!(s, "{:<19} | {:>w$} | {:>w$}", "actual \\ predicted", "0", "1");
        let _ = writeln!(s, "{:-<19}-+-{:-<w$}-+-{:-<w$}", "", "", "");
        let _ = writeln!(s, "{:<19} | {:>w$} | {:>w$}", "0 (non-exoplanet)", cells[0], cells[1]);
        let _ = writeln!(s, "{:<19} | {:>w$} | {:>w$}", "1 (exoplanet)", cells[2], cells[3]);
        s
    }

    /// Heatmap with cell shading proportional to the count.
    pub fn render_svg(&self, title: &str) -> String {
        let cells = [[self.tn, self.fp], [self.fn_, self.tp]];
        let max = cells.iter().flatten().copied().max().unwrap_or(0).max(1);
        let cell = 120;
        let (ox, oy) = (110, 60);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">"#,
            ox + 2 * cell + 20,
            oy + 2 * cell + 50
        );
        let _ = writeln!(s, r#"  <text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#, ox + cell, xml_escape(title));
        for (r, row) in cells.iter().enumerate() {
            for (c, &count) in row.iter().enumerate() {
                let shade = 255 - (count * 200 / max) as u8;
                let (x, y) = (ox + c * cell, oy + r * cell);
                let _ = writeln!(
                    s,
                    r#"  <rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="black"/>"#
                );
                let text_fill = if shade < 130 { "white" } else { "black" };
                let _ = writeln!(
                    s,
                    r#"  <text x="{}" y="{}" font-size="20" text-anchor="middle" fill="{text_fill}">{count}</text>"#,
                    x + cell / 2,
                    y + cell / 2 + 7
                );
            }
        }
        for i in 0..2 {
            let _ = writeln!(s, r#"  <text x="{}" y="{}" font-size="14" text-anchor="middle">{i}</text>"#, ox + i * cell + cell / 2, oy - 8);
            let _ = writeln!(s, r#"  <text x="{}" y="{}" font-size="14" text-anchor="end">{i}</text>"#, ox - 10, oy + i * cell + cell / 2 + 5);
        }
        let _ = writeln!(s, r#"  <text x="{}" y="{}" font-size="13" text-anchor="middle">predicted</text>"#, ox + cell, oy + 2 * cell + 25);
        let _ = writeln!(s, r#"  <text x="20" y="{}" font-size="13" transform="rotate(-90 20 {})" text-anchor="middle">actual</text>"#, oy + cell, oy + cell);
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Validation("no samples to evaluate".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            (0, 0) => cm.tn += 1,
            _ => return Err(Error::Label(format!("labels must be 0 or 1, got ({t}, {p})"))),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Validation("confusion matrix is empty".into()));
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    Ok(MetricsReport {
        accuracy: ratio(cm.tp + cm.tn, total),
        precision,
        recall,
        f1: f1_score(precision, recall),
    })
}

/// A published result quoted for comparison; cells are kept as printed,
/// `-` where the source reports nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LiteratureRow {
    pub model: &'static str,
    pub accuracy: &'static str,
    pub recall: &'static str,
    pub precision: &'static str,
    pub f1: &'static str,
}

pub const LITERATURE_ROWS: [LiteratureRow; 3] = [
    LiteratureRow {
        model: "ExoMiner",
        accuracy: "73.6%",
        recall: "93.6%",
        precision: "99%",
        f1: "96.2%",
    },
    LiteratureRow {
        model: "YOLO",
        accuracy: "-",
        recall: "85%",
        precision: "81%",
        f1: "83.0%",
    },
    LiteratureRow {
        model: "CNN",
        accuracy: "99.0%",
        recall: "-",
        precision: "-",
        f1: "-",
    },
];

pub const LITERATURE_NOTE: &str = "not computed";

pub const TABLE_COLUMNS: [&str; 5] = ["Model", "Accuracy", "Recall", "Precision", "F1"];

/// One decimal place.
pub fn percent(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<[String; 5]>,
}

/// Builds the comparison table. Literature rows, when requested, follow the
/// computed rows and carry a "(not computed)" marker on the model name.
pub fn compare_table(reports: &[(String, MetricsReport)], literature: bool) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::Validation("comparison table needs at least one report".into()));
    }
    let mut rows = Vec::with_capacity(reports.len() + 3);
    for (name, r) in reports {
        if name.trim().is_empty() {
            return Err(Error::Validation("report name must not be empty".into()));
        }
        rows.push([
            name.clone(),
            percent(r.accuracy),
            percent(r.recall),
            percent(r.precision),
            percent(r.f1),
        ]);
    }
    if literature {
        for lit in &LITERATURE_ROWS {
            rows.push([
                format!("{} ({LITERATURE_NOTE})", lit.model),
                lit.accuracy.to_string(),
                lit.recall.to_string(),
                lit.precision.to_string(),
                lit.f1.to_string(),
            ]);
        }
    }
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n", TABLE_COLUMNS.join(" | "));
        s.push_str("|---|---:|---:|---:|---:|\n");
        for row in &self.rows {
            let _ = writeln!(s, "| {} |", row.join(" | "));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let quote = |c: &str| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.to_string()
            }
        };
        let mut s = TABLE_COLUMNS.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}
