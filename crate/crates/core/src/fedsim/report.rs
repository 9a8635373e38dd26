//! Serialized run artifacts: a per-round CSV and a JSON report document.
//!
//! Both writers are deterministic: JSON object keys are sorted and floats
//! use the shortest round-trip representation, so rerunning an experiment
//! with the same seed produces byte-identical files.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::{FedError, RoundLog, RunReport};

/// Writes one CSV row per round with the held-out metrics.
///
/// `selected_clients` is a `|`-joined id list (empty for centralized runs).
pub fn write_rounds_csv(path: &Path, rounds: &[RoundLog]) -> Result<(), FedError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "round",
        "selected_clients",
        "test_loss",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "auc",
        "tp",
        "fp",
        "tn",
        "fn",
    ])?;
    for r in rounds {
        let clients =
            r.selected_clients.iter().map(ToString::to_string).collect::<Vec<_>>().join("|");
        w.write_record([
            r.round.to_string(),
            clients,
            r.test_loss.to_string(),
            r.accuracy.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
            r.auc.to_string(),
            r.confusion.tp.to_string(),
            r.confusion.fp.to_string(),
            r.confusion.tn.to_string(),
            r.confusion.fn_.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Builds the report document: the caller's configuration echo, the run
/// outcome, the final round's metrics, and the full round history.
pub fn report_json<C: Serialize>(
    report: &RunReport,
    config: &C,
) -> Result<serde_json::Value, FedError> {
    let last = report.final_round();
    Ok(json!({
        "config": config,
        "mode": report.mode,
        "converged": report.converged,
        "rounds_run": report.rounds.len(),
        "rounds_to_convergence": report.rounds_to_convergence,
        "final_metrics": {
            "test_loss": last.test_loss,
            "accuracy": last.accuracy,
            "precision": last.precision,
            "recall": last.recall,
            "f1": last.f1,
            "auc": last.auc,
            "confusion": last.confusion,
        },
        "rounds": report.rounds,
    }))
}

/// Serializes the report document to pretty-printed JSON ending in a newline.
pub fn write_report_json<C: Serialize>(
    path: &Path,
    report: &RunReport,
    config: &C,
) -> Result<(), FedError> {
    let doc = report_json(report, config)?;
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &doc)?;
    file.write_all(b"\n")?;
    Ok(())
}
