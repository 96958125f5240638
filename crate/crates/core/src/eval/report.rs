use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::DomainMetrics;
use super::stats::{mean, median, paired_ttest, TTestResult};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainRow {
    pub domain: String,
    pub f1_intent: f64,
    pub f1_slot: f64,
    pub ser: f64,
    pub n_utterances: usize,
}

impl DomainRow {
    pub fn new(domain: impl Into<String>, m: DomainMetrics, n_utterances: usize) -> Self {
        DomainRow {
            domain: domain.into(),
            f1_intent: m.f1_intent,
            f1_slot: m.f1_slot,
            ser: m.ser,
            n_utterances,
        }
    }

    pub fn metrics(&self) -> DomainMetrics {
        DomainMetrics {
            f1_intent: self.f1_intent,
            f1_slot: self.f1_slot,
            ser: self.ser,
        }
    }
}

/// Percentages rounded to one decimal, laid out like the usual
/// `F1_Intent / F1_Slot / SER x Mean / Median` results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub approach: String,
    pub f1_intent_mean: f64,
    pub f1_intent_median: f64,
    pub f1_slot_mean: f64,
    pub f1_slot_median: f64,
    pub ser_mean: f64,
    pub ser_median: f64,
}

/// Per-domain metrics (fractions in `[0, 1]`) with unweighted mean and median
/// across domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub approach: String,
    pub rows: Vec<DomainRow>,
    pub mean: DomainMetrics,
    pub median: DomainMetrics,
    pub table: TableRow,
}

fn pct(x: f64) -> f64 {
    (x * 1000.0).round() / 10.0
}

pub fn aggregate(approach: impl Into<String>, rows: Vec<DomainRow>) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let col = |f: fn(&DomainRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (fi, fs, se) = (col(|r| r.f1_intent), col(|r| r.f1_slot), col(|r| r.ser));
    let mean = DomainMetrics {
        f1_intent: mean(&fi).unwrap(),
        f1_slot: mean(&fs).unwrap(),
        ser: mean(&se).unwrap(),
    };
    let median = DomainMetrics {
        f1_intent: median(&fi).unwrap(),
        f1_slot: median(&fs).unwrap(),
        ser: median(&se).unwrap(),
    };
    let approach = approach.into();
    let table = TableRow {
        approach: approach.clone(),
        f1_intent_mean: pct(mean.f1_intent),
        f1_intent_median: pct(median.f1_intent),
        f1_slot_mean: pct(mean.f1_slot),
        f1_slot_median: pct(median.f1_slot),
        ser_mean: pct(mean.ser),
        ser_median: pct(median.ser),
    };
    Ok(EvalReport {
        approach,
        rows,
        mean,
        median,
        table,
    })
}

pub const CSV_HEADER: &str = "approach,f1_intent_mean,f1_intent_median,f1_slot_mean,f1_slot_median,ser_mean,ser_median";

impl TableRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1}",
            self.approach,
            self.f1_intent_mean,
            self.f1_intent_median,
            self.f1_slot_mean,
            self.f1_slot_median,
            self.ser_mean,
            self.ser_median
        )
    }
}

/// CSV table with one line per report.
pub fn to_csv<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.table.csv_line());
        out.push('\n');
    }
    out
}

impl EvalReport {
    /// Writes the JSON report and a CSV table next to it (same stem, `.csv`).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        let csv = path.with_extension("csv");
        std::fs::write(&csv, to_csv([self])).map_err(|e| Error::io(&csv, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Paired t-tests of two reports over the domains they share, one per metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub domains: Vec<String>,
    pub f1_intent: TTestResult,
    pub f1_slot: TTestResult,
    pub ser: TTestResult,
}

pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<Comparison> {
    let rows_b: BTreeMap<&str, &DomainRow> = b.rows.iter().map(|r| (r.domain.as_str(), r)).collect();
    let pairs: Vec<(&DomainRow, &DomainRow)> = a
        .rows
        .iter()
        .filter_map(|ra| rows_b.get(ra.domain.as_str()).map(|rb| (ra, *rb)))
        .collect();
    let test = |f: fn(&DomainRow) -> f64| {
        let xs: Vec<f64> = pairs.iter().map(|(x, _)| f(x)).collect();
        let ys: Vec<f64> = pairs.iter().map(|(_, y)| f(y)).collect();
        paired_ttest(&xs, &ys)
    };
    Ok(Comparison {
        a: a.approach.clone(),
        b: b.approach.clone(),
        domains: pairs.iter().map(|(x, _)| x.domain.clone()).collect(),
        f1_intent: test(|r| r.f1_intent)?,
        f1_slot: test(|r| r.f1_slot)?,
        ser: test(|r| r.ser)?,
    })
}
