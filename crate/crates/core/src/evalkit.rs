//! Confusion matrices, accuracy and macro P/R/F on a percent scale, and cross-topic
//! mean / standard deviation summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};
use crate::labels::{Class, StanceLabel};

/// Rows are gold classes, columns predicted classes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
    pub unassigned: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, gold: Class, pred: StanceLabel) {
        match pred {
            StanceLabel::Class(p) => self.counts[gold.index()][p.index()] += 1,
            StanceLabel::Unassigned => self.unassigned += 1,
        }
    }

    pub fn assigned(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn total(&self) -> u64 {
        self.assigned() + self.unassigned
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// Same matrix with the two classes renamed.
    pub fn swapped(&self) -> ConfusionMatrix {
        let c = self.counts;
        ConfusionMatrix {
            counts: [[c[1][1], c[1][0]], [c[0][1], c[0][0]]],
            unassigned: self.unassigned,
        }
    }
}

pub fn confusion(
    pred: &BTreeMap<String, StanceLabel>,
    gold: &BTreeMap<String, Class>,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for (user, &label) in pred {
        let g = *gold
            .get(user)
            .ok_or_else(|| StanceError::MissingGold(user.clone()))?;
        cm.record(g, label);
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// All values in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "A")]
    pub accuracy: f64,
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F")]
    pub f_measure: f64,
    pub coverage: f64,
    pub per_class: [ClassScores; 2],
}

impl MetricsReport {
    pub fn measures(&self) -> [f64; 5] {
        [
            self.accuracy,
            self.precision,
            self.recall,
            self.f_measure,
            self.coverage,
        ]
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn per_class_scores(cm: &ConfusionMatrix, class: Class) -> ClassScores {
    let k = class.index();
    let tp = cm.counts[k][k];
    let predicted = cm.counts[0][k] + cm.counts[1][k];
    let actual = cm.counts[k][0] + cm.counts[k][1];
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, actual);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores {
        precision: 100.0 * precision,
        recall: 100.0 * recall,
        f1: 100.0 * f1,
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let assigned = cm.assigned();
    if assigned == 0 {
        return Err(StanceError::NoAssignedPredictions);
    }
    let per_class = [
        per_class_scores(cm, Class::ZERO),
        per_class_scores(cm, Class::ONE),
    ];
    let mean = |f: fn(&ClassScores) -> f64| (f(&per_class[0]) + f(&per_class[1])) / 2.0;
    Ok(MetricsReport {
        accuracy: 100.0 * ratio(cm.correct(), assigned),
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f_measure: mean(|s| s.f1),
        coverage: 100.0 * ratio(assigned, cm.total()),
        per_class,
    })
}

/// Accuracy with unassigned users counted as errors, in percent.
pub fn accuracy_over_all(cm: &ConfusionMatrix) -> f64 {
    100.0 * ratio(cm.correct(), cm.total())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(StanceError::EmptyInput("value list"));
    }
    let n = values.len() as f64;
    // Shifting by the first value keeps constant inputs exact.
    let shift = values[0];
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Summary {
        mean,
        std_dev: var.sqrt(),
    })
}

/// Per-measure summaries over topics, in the order A, P, R, F, coverage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    #[serde(rename = "A")]
    pub accuracy: Summary,
    #[serde(rename = "P")]
    pub precision: Summary,
    #[serde(rename = "R")]
    pub recall: Summary,
    #[serde(rename = "F")]
    pub f_measure: Summary,
    pub coverage: Summary,
}

pub fn summarize(rows: &[MetricsReport]) -> Result<MetricsSummary> {
    if rows.is_empty() {
        return Err(StanceError::EmptyInput("metrics rows"));
    }
    let column =
        |k: usize| -> Result<Summary> { mean_std(&rows.iter().map(|r| r.measures()[k]).collect::<Vec<_>>()) };
    Ok(MetricsSummary {
        accuracy: column(0)?,
        precision: column(1)?,
        recall: column(2)?,
        f_measure: column(3)?,
        coverage: column(4)?,
    })
}

/// One line of an experiment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub topic: String,
    pub method: String,
    pub condition: String,
    /// `None` when no test user was assigned a class.
    pub metrics: Option<MetricsReport>,
    pub coverage: f64,
    pub accuracy_over_all: f64,
    pub n_test: u64,
    pub n_unassigned: u64,
    pub confusion: ConfusionMatrix,
}

impl ReportRow {
    pub fn new(topic: &str, method: &str, condition: &str, cm: ConfusionMatrix) -> ReportRow {
        ReportRow {
            topic: topic.to_string(),
            method: method.to_string(),
            condition: condition.to_string(),
            metrics: metrics(&cm).ok(),
            coverage: 100.0 * ratio(cm.assigned(), cm.total()),
            accuracy_over_all: accuracy_over_all(&cm),
            n_test: cm.total(),
            n_unassigned: cm.unassigned,
            confusion: cm,
        }
    }
}

pub const CSV_HEADER: &str = "topic,method,condition,A,P,R,F,coverage,n_test,n_unassigned";

/// Note attached to JSON reports about how unassigned users enter accuracy.
pub const UNASSIGNED_NOTE: &str = "A, P, R and F are computed over assigned users only; \
accuracy_over_all counts unassigned users as errors; coverage is the assigned fraction";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Values rounded to one decimal; `NA` where metrics are undefined.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let m = match &r.metrics {
            Some(m) => [m.accuracy, m.precision, m.recall, m.f_measure]
                .map(|v| format!("{v:.1}"))
                .join(","),
            None => "NA,NA,NA,NA".to_string(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{m},{:.1},{},{}",
            csv_field(&r.topic),
            csv_field(&r.method),
            csv_field(&r.condition),
            r.coverage,
            r.n_test,
            r.n_unassigned
        );
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    note: &'static str,
    rows: &'a [ReportRow],
    summary: BTreeMap<String, MetricsSummary>,
}

/// Rows plus per method/condition summaries across topics.
pub fn report_json(rows: &[ReportRow]) -> String {
    let mut groups: BTreeMap<String, Vec<MetricsReport>> = BTreeMap::new();
    for r in rows {
        if let Some(m) = r.metrics {
            groups
                .entry(format!("{}/{}", r.method, r.condition))
                .or_default()
                .push(m);
        }
    }
    let summary = groups
        .into_iter()
        .filter_map(|(k, v)| summarize(&v).ok().map(|s| (k, s)))
        .collect();
    serde_json::to_string_pretty(&JsonReport {
        note: UNASSIGNED_NOTE,
        rows,
        summary,
    })
    .expect("reports serialize")
}

/// Parses a CSV written by [`report_csv`] back into display values.
pub fn parse_report_csv(raw: &str) -> Result<Vec<BTreeMap<String, String>>> {
    let mut lines = raw.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.split(',').collect(),
        None => return Ok(Vec::new()),
    };
    if header.join(",") != CSV_HEADER {
        return Err(StanceError::parse(1, "unexpected report header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(StanceError::parse(i + 1, "wrong number of report columns"));
        }
        rows.push(
            header
                .iter()
                .map(|h| h.to_string())
                .zip(fields.into_iter().map(String::from))
                .collect(),
        );
    }
    Ok(rows)
}
