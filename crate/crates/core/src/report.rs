//! Score report serialization (TSV and JSON) and reading reports back for
//! correlation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{parse_score_tsv, BoundaryStats, CorpusSummary};
use crate::error::{Error, Result};
use crate::evaluate::{EvalReport, Variant};

pub const REPORT_COLUMNS: [&str; 14] = [
    "system", "variant", "tp_w", "fp_w", "fn_w", "tn_w", "tp_n", "fp_n", "fn_n", "tn_n", "P", "R", "F_beta", "Acc",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

pub fn report_tsv(system: &str, report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# sentences={} ell={:.6} ell_source={} fn_on_mismatch={} dependent_selection=per-sentence-best-f",
        report.sentences,
        report.ell,
        serde_json::to_value(report.ell_source)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        report.fn_on_mismatch,
    );
    let _ = writeln!(out, "{}", REPORT_COLUMNS.join("\t"));
    for v in &report.variants {
        let c = &v.counts;
        let s = &v.scores;
        let _ = writeln!(
            out,
            "{system}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            v.variant,
            c.tp_w,
            c.fp_w,
            c.fn_w,
            c.tn_w,
            c.tp_n,
            c.fp_n,
            c.fn_n,
            c.tn_n,
            s.precision,
            s.recall,
            s.f_beta,
            s.accuracy
        );
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    system: &'a str,
    dependent_selection: &'static str,
    #[serde(flatten)]
    report: &'a EvalReport,
}

pub fn report_json(system: &str, report: &EvalReport) -> String {
    serde_json::to_string_pretty(&JsonReport {
        system,
        dependent_selection: "per-sentence-best-f",
        report,
    })
    .expect("report serializes")
}

/// Reads one score per system from a score report.
///
/// Report files (with a `variant` column) yield the `F_beta` column of
/// `variant`, or `Acc` for accuracy variants. A plain `system<TAB>score`
/// file is read as is.
pub fn read_metric_scores(text: &str, variant: Variant) -> Result<BTreeMap<String, f64>> {
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .unwrap_or_default();
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if !cols.contains(&"variant") {
        return parse_score_tsv(text, "score");
    }
    let variant_col = cols.iter().position(|c| *c == "variant").expect("checked above");
    let value_col = if variant.is_accuracy() { "Acc" } else { "F_beta" };
    let mut kept = String::new();
    let mut header_seen = false;
    for line in text.lines() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            kept.push_str(line);
            kept.push('\n');
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.get(variant_col).map(|v| v.trim()) == Some(variant.name()) {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    let scores = parse_score_tsv(&kept, value_col)?;
    if scores.is_empty() {
        return Err(Error::Config(format!("no rows for variant {variant} in score report")));
    }
    Ok(scores)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub summary: CorpusSummary,
    pub boundary: BoundaryStats,
}

pub fn stats_text(report: &StatsReport) -> String {
    let s = &report.summary;
    let b = &report.boundary;
    let total_chunks = s.unchanged_chunks + s.changed_chunks;
    let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    let mut out = String::new();
    let _ = writeln!(out, "item\tnumber\tpercent\tlength");
    let _ = writeln!(out, "sentences\t{}\t-\t{:.1}", s.sentences, s.sentence_len);
    let _ = writeln!(out, "references\t{}\t-\t{:.1}", s.references, s.reference_len);
    let _ = writeln!(out, "edits\t{}\t-\t{:.1}", s.edits, s.edit_len);
    let _ = writeln!(
        out,
        "unchanged_chunks\t{}\t{:.2}\t{:.1}",
        s.unchanged_chunks,
        pct(s.unchanged_chunks, total_chunks),
        s.unchanged_len
    );
    let _ = writeln!(
        out,
        "corrected_dummy_chunks\t{}\t{:.2}\t{:.1}",
        s.changed_chunks,
        pct(s.changed_chunks, total_chunks),
        s.changed_len
    );
    let _ = writeln!(out, "ICC\t{}\t{:.2}\t-", b.icc_n, 100.0 * b.icc);
    let _ = writeln!(out, "IUC\t{}\t{:.2}\t-", b.iuc_n, 100.0 * b.iuc);
    let _ = writeln!(out, "CC\t{}\t{:.2}\t-", b.cc_n, 100.0 * b.cc);
    out
}
