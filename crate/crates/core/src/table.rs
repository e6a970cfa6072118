//! Reproduction of the regime table: each canonical row is swept, classified
//! and compared with the class the theory claims for it.

use std::fmt::Write as _;

use crate::error::Result;
use crate::fem::assemble;
use crate::fixtures::{table_rows, TableRow};
use crate::par::Execution;
use crate::spectral::{classify_decay, resolvent_envelope, Classification};

/// Sweep samples per row; the band is [cap/100, cap].
pub const TABLE_SAMPLES: usize = 48;

#[derive(Debug, Clone)]
pub struct RowOutcome {
    pub row: TableRow,
    pub result: std::result::Result<Classification, String>,
    pub seconds: f64,
}

impl RowOutcome {
    pub fn slope(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|c| c.slope)
    }
}

/// Sweeps one row over [cap/100, cap] with the peak-resolved envelope.
pub fn classify_row(row: &TableRow, exec: Execution) -> Result<Classification> {
    let op = assemble(&row.config)?;
    let cap = row.config.resolved_frequency_cap();
    let sweep = resolvent_envelope(&op, cap / 100.0, cap, TABLE_SAMPLES, exec)?;
    classify_decay(&sweep)
}

pub fn run_table(n_elements: usize, exec: Execution) -> Vec<RowOutcome> {
    table_rows(n_elements)
        .into_iter()
        .map(|row| {
            let start = std::time::Instant::now();
            let result = classify_row(&row, exec).map_err(|e| e.to_string());
            RowOutcome {
                row,
                result,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Slope band each row must land in. Row 4 must also exceed row 3.
pub fn row_band(index: usize) -> (f64, f64) {
    match index {
        1 => (-1.3, -0.7),
        2 => (-0.3, 0.3),
        3 => (0.7, 2.3),
        _ => (0.7, 4.3),
    }
}

/// Per-row verdicts, in row order.
pub fn row_verdicts(outcomes: &[RowOutcome]) -> Vec<bool> {
    let row3 = outcomes.iter().find(|o| o.row.index == 3).and_then(|o| o.slope());
    outcomes
        .iter()
        .map(|o| {
            let Some(s) = o.slope() else { return false };
            let (lo, hi) = row_band(o.row.index);
            let in_band = match o.row.index {
                1 | 2 => s >= lo && s <= hi,
                _ => s > lo && s <= hi,
            };
            in_band && (o.row.index != 4 || row3.map_or(false, |r3| s > r3))
        })
        .collect()
}

pub fn render_table(outcomes: &[RowOutcome]) -> String {
    let verdicts = row_verdicts(outcomes);
    let mut out = String::from("row | damping | claimed | measured | slope | band | verdict\n");
    for (o, ok) in outcomes.iter().zip(verdicts) {
        let (lo, hi) = row_band(o.row.index);
        let (measured, slope) = match &o.result {
            Ok(c) => (c.class.label().to_string(), format!("{:.3}", c.slope)),
            Err(e) => (format!("error: {e}"), "n/a".into()),
        };
        let _ = writeln!(
            out,
            "{} | {} | {} | {} | {} | [{lo}, {hi}] | {}",
            o.row.index,
            o.row.damping,
            o.row.claimed.label(),
            measured,
            slope,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    out
}
