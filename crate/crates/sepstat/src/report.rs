//! JSON and CSV renderings of test and study results.

use std::io::Write;

use serde::Serialize;

use sepstat_core::{Diagnostics, StudyConfig, StudySummary, TestResult};

pub const STUDY_SCHEMA: &str = "sepstat-study/1";

/// Pretty JSON with a trailing newline. Field order is fixed by the struct
/// definition, so equal results give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialize infallibly");
    s.push('\n');
    s
}

pub fn result_json(result: &TestResult) -> String {
    to_json(result)
}

#[derive(Serialize)]
struct DiagnosticsDump<'a> {
    schema: &'a str,
    #[serde(flatten)]
    diagnostics: &'a Diagnostics,
}

pub fn diagnostics_json(diagnostics: &Diagnostics) -> String {
    to_json(&DiagnosticsDump {
        schema: sepstat_core::SCHEMA,
        diagnostics,
    })
}

/// Per-replicate CSV: `replicate,p_value,statistic,J,K,cpv`.
pub fn write_study_csv<W: Write>(w: W, summary: &StudySummary) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in &summary.replicates {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StudyReport<'a> {
    schema: &'a str,
    rejection_rate: f64,
    mean_cpv: f64,
    replications: usize,
    alpha: f64,
    master_seed: u64,
    config: &'a StudyConfig,
}

pub fn study_summary_json(cfg: &StudyConfig, summary: &StudySummary) -> String {
    to_json(&StudyReport {
        schema: STUDY_SCHEMA,
        rejection_rate: summary.rejection_rate,
        mean_cpv: summary.mean_cpv,
        replications: summary.replicates.len(),
        alpha: cfg.alpha,
        master_seed: cfg.master_seed,
        config: cfg,
    })
}

/// A table cell in the style `6.4 (87.2)`: rejection rate and mean CPV, both
/// in percent.
pub fn table_cell(summary: &StudySummary) -> String {
    format!(
        "{:.1} ({:.1})",
        100.0 * summary.rejection_rate,
        100.0 * summary.mean_cpv
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use sepstat_core::sim::ReplicateOutcome;

    fn summary() -> StudySummary {
        StudySummary::from_outcomes(
            vec![
                ReplicateOutcome { replicate: 1, p_value: 0.5, statistic: 1.0, j: 3, k: 4, cpv: 0.9 },
                ReplicateOutcome { replicate: 0, p_value: 0.01, statistic: 9.0, j: 3, k: 4, cpv: 0.8 },
            ],
            0.05,
        )
    }

    #[test]
    fn study_csv_columns() {
        let mut buf = Vec::new();
        write_study_csv(&mut buf, &summary()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("replicate,p_value,statistic,J,K,cpv"));
        assert_eq!(lines.next(), Some("0,0.01,9.0,3,4,0.8"));
    }

    #[test]
    fn table_cell_format() {
        assert_eq!(table_cell(&summary()), "50.0 (85.0)");
    }
}
