//! Long-format summaries for external plotting.

use bayesgeo::audit::AuditReport;

use crate::output::{num, opt, Csv};

/// One row per report: `check, model, n, eps, estimate, bound, slack, pass`.
/// `eps` is empty outside tail sweeps. Returns `None` (with a warning) for an
/// empty report set.
pub fn emit_plot_data(reports: &[AuditReport]) -> Option<Vec<u8>> {
    if reports.is_empty() {
        log::warn!("no audit reports; plot data not written");
        return None;
    }
    let mut csv = Csv::new(&["check", "model", "n", "eps", "estimate", "bound", "slack", "pass"]);
    for r in reports {
        csv.row(&[
            r.check.clone(),
            r.model.clone(),
            r.n.to_string(),
            opt(r.extra_value("eps")),
            num(r.estimate),
            num(r.reference),
            num(r.slack),
            r.pass.to_string(),
        ]);
    }
    Some(csv.into_bytes())
}
