use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::metrics::MetricSet;
use crate::annotate::{BarrierDataset, DropReason};
use crate::barrier::BarrierKind;
use crate::classifiers::ModelFamily;

pub const REPORT_COLUMNS: [&str; 6] = ["barrier", "model", "CA", "Mic-Pre", "Mic-Rec", "Mic-F1"];

/// One evaluated (barrier, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub barrier: BarrierKind,
    pub family: ModelFamily,
    pub metrics: MetricSet,
    pub n_predictions: usize,
    /// Grid point chosen in each fold, for families with a grid.
    pub selected: Vec<usize>,
}

/// Size and class balance of one barrier dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub barrier: BarrierKind,
    pub instances: usize,
    pub n_true: usize,
    pub n_false: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl DatasetSummary {
    pub fn of(dataset: &BarrierDataset) -> Self {
        let (n_true, n_false) = dataset.class_counts();
        Self {
            barrier: dataset.barrier,
            instances: dataset.len(),
            n_true,
            n_false,
            dropped: dataset.dropped.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<DatasetSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportParseError {
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report header must be {expected:?}")]
    BadHeader { expected: [&'static str; 6] },
    #[error("report row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
}

impl ReportTable {
    pub fn new(mut rows: Vec<ReportRow>, mut summaries: Vec<DatasetSummary>) -> Self {
        rows.sort_by_key(|r| (r.barrier, r.family));
        summaries.sort_by_key(|s| s.barrier);
        Self { rows, summaries }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Markdown => self.render_markdown(),
            ReportFormat::Csv => self.render_csv(),
        }
    }

    fn sorted_rows(&self) -> Vec<&ReportRow> {
        let mut rows: Vec<&ReportRow> = self.rows.iter().collect();
        rows.sort_by_key(|r| (r.barrier, r.family));
        rows
    }

    fn render_markdown(&self) -> String {
        let mut out = String::from("| Barrier | Model | CA | Mic-Pre | Mic-Rec | Mic-F1 |\n");
        out.push_str("|---|---|---:|---:|---:|---:|\n");
        let mut last = None;
        for r in self.sorted_rows() {
            let name = if last == Some(r.barrier) { "" } else { r.barrier.display_name() };
            last = Some(r.barrier);
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "| {name} | {} | {:.2} | {:.2} | {:.2} | {:.2} |",
                r.family.display_name(),
                m.classification_accuracy,
                m.micro_precision,
                m.micro_recall,
                m.micro_f1
            );
        }
        if !self.summaries.is_empty() {
            out.push_str("\n| Barrier | Instances | TRUE | FALSE | Dropped |\n");
            out.push_str("|---|---:|---:|---:|---|\n");
            let mut summaries: Vec<&DatasetSummary> = self.summaries.iter().collect();
            summaries.sort_by_key(|s| s.barrier);
            for s in summaries {
                let dropped = if s.dropped.is_empty() {
                    "0".to_string()
                } else {
                    s.dropped
                        .iter()
                        .map(|(reason, n)| format!("{reason} {n}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {dropped} |",
                    s.barrier.display_name(),
                    s.instances,
                    s.n_true,
                    s.n_false
                );
            }
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_COLUMNS).expect("in-memory write");
        for r in self.sorted_rows() {
            let m = &r.metrics;
            w.write_record([
                r.barrier.slug().to_string(),
                r.family.slug().to_string(),
                m.classification_accuracy.to_string(),
                m.micro_precision.to_string(),
                m.micro_recall.to_string(),
                m.micro_f1.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Renders rows alone, without dataset summaries.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> String {
    ReportTable::new(rows.to_vec(), Vec::new()).render(format)
}

/// Parses the csv form back into (barrier, model, metrics) rows.
pub fn parse_report_csv<R: Read>(rdr: R) -> Result<Vec<(BarrierKind, ModelFamily, MetricSet)>, ReportParseError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(rdr);
    let header = r.headers()?.clone();
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(ReportParseError::BadHeader {
            expected: REPORT_COLUMNS,
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |reason: String| ReportParseError::MalformedRow { row, reason };
        if rec.len() != REPORT_COLUMNS.len() {
            return Err(bad(format!("{} fields", rec.len())));
        }
        let barrier: BarrierKind = rec[0].parse().map_err(|e| bad(format!("{e}")))?;
        let family: ModelFamily = rec[1].parse().map_err(|e| bad(format!("{e}")))?;
        let mut v = [0.0; 4];
        for (j, slot) in v.iter_mut().enumerate() {
            let x: f64 = rec[j + 2]
                .parse()
                .map_err(|_| bad(format!("{} is not a number", REPORT_COLUMNS[j + 2])))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(bad(format!("{} = {x} outside [0, 1]", REPORT_COLUMNS[j + 2])));
            }
            *slot = x;
        }
        out.push((
            barrier,
            family,
            MetricSet {
                classification_accuracy: v[0],
                micro_precision: v[1],
                micro_recall: v[2],
                micro_f1: v[3],
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(barrier: BarrierKind, family: ModelFamily, x: f64) -> ReportRow {
        ReportRow {
            barrier,
            family,
            metrics: MetricSet {
                classification_accuracy: x,
                micro_precision: x,
                micro_recall: x,
                micro_f1: x,
            },
            n_predictions: 10,
            selected: Vec::new(),
        }
    }

    #[test]
    fn single_row_markdown() {
        let md = render_report(&[row(BarrierKind::Economic, ModelFamily::MostFrequent, 0.7)], ReportFormat::Markdown);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "| Economic | Most Frequent | 0.70 | 0.70 | 0.70 | 0.70 |");
    }

    #[test]
    fn full_grid_is_grouped_in_order() {
        let mut rows = Vec::new();
        for b in BarrierKind::ALL.iter().rev() {
            for f in ModelFamily::ALL.iter().rev() {
                rows.push(row(*b, *f, 0.5));
            }
        }
        let md = render_report(&rows, ReportFormat::Markdown);
        let body: Vec<&str> = md.lines().skip(2).collect();
        assert_eq!(body.len(), 40);
        let named: Vec<&str> = body
            .iter()
            .filter_map(|l| l.split('|').nth(1).map(str::trim).filter(|s| !s.is_empty()))
            .collect();
        assert_eq!(named, ["Economic", "Cultural", "Geographical", "Time Zone", "Political"]);
        assert!(body[0].contains("| Uniform |") && body[7].contains("| Naive Bayes |"));
    }

    #[test]
    fn csv_round_trips_full_precision() {
        let rows = vec![
            row(BarrierKind::TimeZone, ModelFamily::Svm, 0.1 + 0.2),
            row(BarrierKind::Economic, ModelFamily::Knn, 2.0 / 3.0),
        ];
        let csv = render_report(&rows, ReportFormat::Csv);
        let parsed = parse_report_csv(csv.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0, BarrierKind::Economic);
        assert_eq!(parsed[0].2.micro_f1, 2.0 / 3.0);
        assert_eq!(parsed[1].2.classification_accuracy, 0.1 + 0.2);
    }

    #[test]
    fn footer_lists_drops() {
        let table = ReportTable::new(
            vec![row(BarrierKind::Political, ModelFamily::Uniform, 0.5)],
            vec![DatasetSummary {
                barrier: BarrierKind::Political,
                instances: 8,
                n_true: 3,
                n_false: 5,
                dropped: BTreeMap::from([(DropReason::UnknownAlignment, 2)]),
            }],
        );
        let md = table.render(ReportFormat::Markdown);
        assert!(md.contains("| Political | 8 | 3 | 5 |"), "{md}");
        assert!(!table.render(ReportFormat::Csv).contains("Instances"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_report_csv("a,b\n".as_bytes()).is_err());
        let bad = "barrier,model,CA,Mic-Pre,Mic-Rec,Mic-F1\neconomic,svm,1.5,0,0,0\n";
        assert!(parse_report_csv(bad.as_bytes()).is_err());
    }
}
