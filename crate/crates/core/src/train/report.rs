//! Comma-separated report rows.
//!
//! Reals use the shortest representation that round-trips, so reports are
//! byte-stable and `1.0` prints as `1.0`. A metric that could not be computed
//! prints as `degenerate`.

use std::fmt::Write;

use super::{MetricsReport, TrainHistory};
use crate::metrics::MetricsError;

pub const METRIC_HEADER: &str = "run,spearman,pearson,mse";
pub const TABLE_HEADER: &str =
    "run,short_spearman,short_pearson,short_mse,long_spearman,long_pearson,long_mse";

pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

fn metric(v: &Result<f64, MetricsError>) -> String {
    match v {
        Ok(x) => format_real(*x),
        Err(_) => "degenerate".to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_real)
        .unwrap_or_else(|| "degenerate".to_string())
}

/// One `run,spearman,pearson,mse` row (no header, no newline).
pub fn format_metric_row(run: &str, report: &MetricsReport) -> String {
    format!(
        "{run},{},{},{}",
        metric(&report.spearman),
        metric(&report.pearson),
        format_real(report.mse)
    )
}

/// One short-term/long-term row matching [`TABLE_HEADER`].
pub fn format_table_row(run: &str, short: &MetricsReport, long: &MetricsReport) -> String {
    format!(
        "{run},{},{},{},{},{},{}",
        metric(&short.spearman),
        metric(&short.pearson),
        format_real(short.mse),
        metric(&long.spearman),
        metric(&long.pearson),
        format_real(long.mse)
    )
}

/// Per-epoch table with a trailing `best` column marking the selected epoch.
pub fn format_history(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,train_loss,val_spearman,val_pearson,val_mse,best\n");
    for (i, e) in history.epochs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            format_real(e.train_loss),
            opt(e.val_spearman),
            opt(e.val_pearson),
            format_real(e.val_mse),
            u8::from(i == history.best_epoch)
        );
    }
    out
}
