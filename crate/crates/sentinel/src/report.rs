//! Detection reports: JSON for machines and a plain-text table whose columns
//! follow the usual layout of range, hypervolume, volume ratio, and timing.

use std::fmt::Write;

use serde::Serialize;

use tree_sentinel_core::num::format_rational;
use tree_sentinel_core::{DetectionReport, Hyperrect, Interval};

use crate::format::RangeEntry;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalsEntry {
    pub wall_time_s: f64,
    pub solver_time_s: f64,
    pub solver_calls: u64,
    pub avg_solver_call_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionEntry {
    pub ce: Vec<String>,
    pub vio: RangeEntry,
    pub vio_volume: f64,
    /// Indices into `vranges`.
    pub ranges: Vec<usize>,
    pub divisions: usize,
    /// Output volume over `vio_volume`.
    pub volume_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub status: &'static str,
    pub property_text: String,
    pub vranges: Vec<RangeEntry>,
    pub per_range_volume: Vec<f64>,
    pub totals: TotalsEntry,
    /// Total output volume over total extracted volume.
    pub volume_ratio: Option<f64>,
    pub excluded_vios: Vec<RangeEntry>,
    pub extractions: Vec<ExtractionEntry>,
}

fn ratio(after: f64, before: f64) -> Option<f64> {
    (before > 0.0).then(|| after / before)
}

impl ReportFile {
    pub fn new(report: &DetectionReport, property_text: &str) -> Self {
        let t = &report.totals;
        let extractions: Vec<ExtractionEntry> = report
            .records
            .iter()
            .map(|r| {
                let ranges: Vec<usize> = (r.first_range..r.first_range + r.range_count).collect();
                let after: f64 = ranges.iter().map(|&i| report.per_range_volume[i]).sum();
                let before = r.vio.hypervolume();
                ExtractionEntry {
                    ce: r.ce.iter().map(format_rational).collect(),
                    vio: RangeEntry::from_box(&r.vio),
                    vio_volume: before,
                    ranges,
                    divisions: r.divisions,
                    volume_ratio: ratio(after, before),
                }
            })
            .collect();
        let before: f64 = extractions.iter().map(|e| e.vio_volume).sum();
        ReportFile {
            status: report.status.as_str(),
            property_text: property_text.to_owned(),
            vranges: report.vranges.iter().map(RangeEntry::from_box).collect(),
            per_range_volume: report.per_range_volume.clone(),
            totals: TotalsEntry {
                wall_time_s: t.wall_time.as_secs_f64(),
                solver_time_s: t.solver_time.as_secs_f64(),
                solver_calls: t.solver_calls,
                avg_solver_call_time_s: t.avg_solver_call_time.as_secs_f64(),
            },
            volume_ratio: ratio(report.per_range_volume.iter().sum(), before),
            excluded_vios: report.excluded_vios.iter().map(RangeEntry::from_box).collect(),
            extractions,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// `3.77E+20` style, three significant digits.
pub fn scientific(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let text = format!("{v:.2E}");
    match text.split_once('E') {
        Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}E+{exp:0>2}"),
        Some((mantissa, exp)) => format!("{mantissa}E-{:0>2}", &exp[1..]),
        None => text,
    }
}

fn dim_text(iv: &Interval, k: usize) -> String {
    format!(
        "{} {} x[{k}] {} {}",
        format_rational(&iv.lower.value),
        if iv.lower.closed { "<=" } else { "<" },
        if iv.upper.closed { "<=" } else { "<" },
        format_rational(&iv.upper.value),
    )
}

pub fn range_text(b: &Hyperrect) -> String {
    b.intervals().iter().enumerate().map(|(k, iv)| dim_text(iv, k)).collect::<Vec<_>>().join(", ")
}

/// Human-readable table. Extraction `e` is labeled `#e`; its output pieces
/// are `#e-1`, `#e-2`, and so on.
pub fn render_table(report: &DetectionReport, property_text: &str) -> String {
    let file = ReportFile::new(report, property_text);
    let mut out = String::new();
    let _ = writeln!(out, "property: {property_text}");
    let _ = writeln!(out, "status:   {}", file.status);
    if report.records.is_empty() {
        let _ = writeln!(out, "no violation range detected");
    }
    for (e, record) in report.records.iter().enumerate() {
        let entry = &file.extractions[e];
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "#{:<8} {:>10}  ratio {}  before division",
            e + 1,
            scientific(entry.vio_volume),
            entry.volume_ratio.map_or_else(|| String::from("-"), |r| format!("{r:.2}")),
        );
        let _ = writeln!(out, "          {}", range_text(&record.vio));
        for (piece, &i) in entry.ranges.iter().enumerate() {
            let _ = writeln!(out, "#{:<8} {:>10}", format!("{}-{}", e + 1, piece + 1), scientific(file.per_range_volume[i]));
            let _ = writeln!(out, "          {}", range_text(&report.vranges[i]));
        }
    }
    let t = &file.totals;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>16} {:>16} {:>12} {:>16}",
        "total time (s)", "solver time (s)", "calls", "avg call (s)"
    );
    let _ = writeln!(
        out,
        "{:>16.3} {:>16.3} {:>12} {:>16.4}",
        t.wall_time_s, t.solver_time_s, t.solver_calls, t.avg_solver_call_time_s
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_notation() {
        assert_eq!(scientific(3.7712e20), "3.77E+20");
        assert_eq!(scientific(0.000123), "1.23E-04");
        assert_eq!(scientific(5.0), "5.00E+00");
        assert_eq!(scientific(0.0), "0.00E+00");
    }
}
