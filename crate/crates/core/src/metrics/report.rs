//! Human-readable interruption tables.

use crate::turn_taking::OutcomeReport;

/// One block per method, one row per truth class, percentages to one decimal.
pub fn interruption_table(reports: &[OutcomeReport]) -> String {
    let mut out = format!(
        "{:<16} {:<4} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "Method", "Lab.", "Corr.", "Ear.", "Conf.", "Mis.", "Binary"
    );
    for r in reports {
        for row in &r.rows {
            let x = &row.rates;
            out.push_str(&format!(
                "{:<16} {:<4} {:>6.1}% {:>6.1}% {:>6.1}% {:>6.1}% {:>6.1}%\n",
                r.method.name(),
                row.label,
                x.correct,
                x.early,
                x.confused,
                x.missed,
                row.binary_accuracy
            ));
        }
    }
    out
}
