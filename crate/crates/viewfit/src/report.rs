//! Plain-text rendering of evaluation and benchmark results.

use std::fmt::Write as _;

use viewfit_core::metrics::EvalReport;

/// An aligned table followed by one `difficulty.metric=value` line per
/// entry, the latter being what scripts should read.
pub fn format_eval_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "difficulty", "n_gt", "ap_2d", "aos", "os", "ap_3d_50", "ap_3d_70");
    for (d, s) in report.iter() {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            d.name(),
            s.n_gt,
            s.ap_2d,
            s.aos,
            s.os,
            s.ap_3d_50,
            s.ap_3d_70
        );
    }
    out.push('\n');
    for (d, s) in report.iter() {
        let name = d.name();
        let _ = writeln!(out, "{name}.n_gt={}", s.n_gt);
        for (key, v) in [("ap_2d", s.ap_2d), ("aos", s.aos), ("os", s.os), ("ap_3d_50", s.ap_3d_50), ("ap_3d_70", s.ap_3d_70)] {
            let _ = writeln!(out, "{name}.{key}={v:.6}");
        }
    }
    out
}

/// Benchmark output as ordered `key=value` lines. Keys starting with
/// `timing.` depend on the machine; everything else is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub Vec<(String, String)>);

impl KeyValues {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}
