//! Fixed-layout score tables.
//!
//! One row per recording plus a TOTAL row. The TOTAL is recomputed from
//! summed error durations, never from averaging per-recording rates, so
//! long recordings weigh more than short ones.

use std::fmt::Write as _;

use diapipe_core::score::ScoreReport;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub recording_id: String,
    pub report: ScoreReport,
}

fn table(rows: &[ReportRow], headers: &[&str], cells: impl Fn(&ScoreReport) -> Vec<f64>) -> String {
    let name_width = rows
        .iter()
        .map(|r| r.recording_id.len())
        .chain(["RECORDING".len(), "TOTAL".len()])
        .max()
        .unwrap();
    let mut out = String::new();
    write!(out, "{:<name_width$}", "RECORDING").unwrap();
    for h in headers {
        write!(out, " {h:>9}").unwrap();
    }
    out.push('\n');
    let mut total = ScoreReport::default();
    let emit = |name: &str, report: &ScoreReport, out: &mut String| {
        write!(out, "{name:<name_width$}").unwrap();
        for v in cells(report) {
            write!(out, " {v:>9.2}").unwrap();
        }
        out.push('\n');
    };
    for row in rows {
        emit(&row.recording_id, &row.report, &mut out);
        total = total + row.report;
    }
    emit("TOTAL", &total, &mut out);
    out
}

/// Columns FA, MS, CONF, DER, all in percent of scored reference speech.
pub fn der_table(rows: &[ReportRow]) -> String {
    table(rows, &["FA%", "MS%", "CONF%", "DER%"], |r| {
        vec![r.false_alarm_pct(), r.missed_pct(), r.confusion_pct(), r.der_pct()]
    })
}

/// Columns FA, MS, VAD, in percent of scored time.
pub fn vad_table(rows: &[ReportRow]) -> String {
    table(rows, &["FA%", "MS%", "VAD%"], |r| {
        vec![r.false_alarm_pct(), r.missed_pct(), r.vad_error_pct()]
    })
}
