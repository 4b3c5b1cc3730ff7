//! Comparative reporting between two verification runs over the same
//! benchmarks, bucketed by result correctness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::backend::{OutcomeClass, RawVerdict};
use crate::campaign::DatasetRow;

/// One tool's result on one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolRun {
    pub bench: String,
    pub raw: RawVerdict,
    pub class: OutcomeClass,
    /// Witness validation status, when supplied. `Some(false)` marks a
    /// correct result whose witness failed external validation.
    pub witness_confirmed: Option<bool>,
}

impl ToolRun {
    pub fn from_dataset_row(row: &DatasetRow) -> Self {
        ToolRun {
            bench: row.bench.clone(),
            raw: row.raw,
            class: row.class,
            witness_confirmed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BucketCounts {
    pub correct: usize,
    /// Subset of `correct` whose witness was not confirmed; 0 unless witness
    /// statuses were supplied.
    pub correct_unconfirmed: usize,
    pub incorrect: usize,
    pub unknown: usize,
    pub timeout: usize,
}

impl BucketCounts {
    fn add(&mut self, run: &ToolRun) {
        match run.class.value() {
            0..=2 => {
                self.correct += 1;
                if run.witness_confirmed == Some(false) {
                    self.correct_unconfirmed += 1;
                }
            }
            3 => self.unknown += 1,
            4 => self.timeout += 1,
            _ => self.incorrect += 1,
        }
    }

    /// Total over the disjoint buckets (unconfirmed is a subset of correct).
    pub fn total(&self) -> usize {
        self.correct + self.incorrect + self.unknown + self.timeout
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchComparison {
    pub bench: String,
    pub baseline: (RawVerdict, OutcomeClass),
    pub predicted: (RawVerdict, OutcomeClass),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub baseline: BucketCounts,
    pub predicted: BucketCounts,
    pub pairs: Vec<BenchComparison>,
    /// Relative change in correct results, in percent.
    pub improvement_pct: f64,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("benchmark sets differ: {0}")]
    BenchmarkMismatch(String),
    #[error("benchmark '{0}' appears more than once")]
    DuplicateBenchmark(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn index_runs(runs: &[ToolRun]) -> Result<BTreeMap<&str, &ToolRun>, ReportError> {
    let mut map = BTreeMap::new();
    for run in runs {
        if map.insert(run.bench.as_str(), run).is_some() {
            return Err(ReportError::DuplicateBenchmark(run.bench.clone()));
        }
    }
    Ok(map)
}

/// Compare two runs covering the same benchmarks.
///
/// The improvement is `(predicted_correct - baseline_correct) /
/// baseline_correct`, reported in percent.
pub fn report_compare(
    baseline: &[ToolRun],
    predicted: &[ToolRun],
) -> Result<ComparisonReport, ReportError> {
    let baseline_map = index_runs(baseline)?;
    let predicted_map = index_runs(predicted)?;
    let baseline_ids: BTreeSet<&str> = baseline_map.keys().copied().collect();
    let predicted_ids: BTreeSet<&str> = predicted_map.keys().copied().collect();
    if baseline_ids != predicted_ids {
        let only_baseline: Vec<&str> = baseline_ids.difference(&predicted_ids).copied().collect();
        let only_predicted: Vec<&str> = predicted_ids.difference(&baseline_ids).copied().collect();
        return Err(ReportError::BenchmarkMismatch(format!(
            "{} only in baseline, {} only in predicted",
            only_baseline.len(),
            only_predicted.len()
        )));
    }

    let mut baseline_counts = BucketCounts::default();
    let mut predicted_counts = BucketCounts::default();
    let mut pairs = Vec::with_capacity(baseline_ids.len());
    for bench in &baseline_ids {
        let b = baseline_map[bench];
        let p = predicted_map[bench];
        baseline_counts.add(b);
        predicted_counts.add(p);
        pairs.push(BenchComparison {
            bench: bench.to_string(),
            baseline: (b.raw, b.class),
            predicted: (p.raw, p.class),
        });
    }

    let improvement_pct = if baseline_counts.correct == 0 {
        if predicted_counts.correct == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (predicted_counts.correct as f64 - baseline_counts.correct as f64)
            / baseline_counts.correct as f64
            * 100.0
    };

    Ok(ComparisonReport {
        baseline: baseline_counts,
        predicted: predicted_counts,
        pairs,
        improvement_pct,
    })
}

impl ComparisonReport {
    /// Plain-text comparison table plus the improvement line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let rows = [
            ("correct", self.baseline.correct, self.predicted.correct),
            (
                "  unconfirmed",
                self.baseline.correct_unconfirmed,
                self.predicted.correct_unconfirmed,
            ),
            (
                "incorrect",
                self.baseline.incorrect,
                self.predicted.incorrect,
            ),
            ("unknown", self.baseline.unknown, self.predicted.unknown),
            ("timeout", self.baseline.timeout, self.predicted.timeout),
        ];
        let _ = writeln!(
            out,
            "{:<16}{:>10}{:>12}",
            "category", "default", "predicted"
        );
        for (label, b, p) in rows {
            let _ = writeln!(out, "{label:<16}{b:>10}{p:>12}");
        }
        let _ = writeln!(
            out,
            "{:<16}{:>10}{:>12}",
            "benchmarks",
            self.baseline.total(),
            self.predicted.total()
        );
        let _ = writeln!(
            out,
            "improvement in correct results: {:+.1}%",
            self.improvement_pct
        );
        out
    }

    /// Machine-readable bucket counts.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("tool,correct,correct_unconfirmed,incorrect,unknown,timeout\n");
        for (tool, c) in [("default", &self.baseline), ("predicted", &self.predicted)] {
            let _ = writeln!(
                out,
                "{tool},{},{},{},{},{}",
                c.correct, c.correct_unconfirmed, c.incorrect, c.unknown, c.timeout
            );
        }
        out
    }
}

/// Read tool runs from a dataset CSV, tolerating an optional trailing
/// `witness` column with values `confirmed`/`unconfirmed`/empty.
pub fn read_tool_runs(path: &Path) -> Result<Vec<ToolRun>, ReportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::fs::File::open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| ReportError::Format {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let bench_col = col("bench").ok_or_else(|| ReportError::Format {
        line: 1,
        message: "missing 'bench' column".into(),
    })?;
    let verdict_col = col("verdict").ok_or_else(|| ReportError::Format {
        line: 1,
        message: "missing 'verdict' column".into(),
    })?;
    let class_col = col("class").ok_or_else(|| ReportError::Format {
        line: 1,
        message: "missing 'class' column".into(),
    })?;
    let witness_col = col("witness");

    let mut runs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let fail = |message: String| ReportError::Format { line, message };
        let record = record.map_err(|e| fail(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let raw = RawVerdict::from_str(field(verdict_col)).map_err(fail)?;
        let class_value: u8 = field(class_col)
            .parse()
            .map_err(|_| fail(format!("invalid class '{}'", field(class_col))))?;
        let class = OutcomeClass::new(class_value)
            .ok_or_else(|| fail(format!("class {class_value} out of range")))?;
        let witness_confirmed = match witness_col.map(field) {
            Some("confirmed") => Some(true),
            Some("unconfirmed") => Some(false),
            Some("") | None => None,
            Some(other) => return Err(fail(format!("invalid witness status '{other}'"))),
        };
        runs.push(ToolRun {
            bench: field(bench_col).to_string(),
            raw,
            class,
            witness_confirmed,
        });
    }
    Ok(runs)
}
