//! Boundary statistics of reference sets and correlation with human rankings.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chunker::{partition, Span};
use crate::corpus::{AnnotatedSample, Edit};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};

/// Where held-out edits land relative to the partition built from the other
/// references.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub icc: f64,
    pub iuc: f64,
    pub cc: f64,
    pub icc_n: u64,
    pub iuc_n: u64,
    pub cc_n: u64,
    pub edits_total: u64,
}

impl BoundaryStats {
    fn from_counts(icc_n: u64, iuc_n: u64, cc_n: u64) -> Self {
        let total = icc_n + iuc_n + cc_n;
        let frac = |n: u64| if total == 0 { 0.0 } else { n as f64 / total as f64 };
        let (icc, iuc) = (frac(icc_n), frac(iuc_n));
        BoundaryStats {
            icc,
            iuc,
            cc: if total == 0 { 0.0 } else { 1.0 - icc - iuc },
            icc_n,
            iuc_n,
            cc_n,
            edits_total: total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placement {
    InChanged,
    InUnchanged,
    Crossing,
}

/// Changed slots are closed intervals and take precedence, so a point edit on
/// a slot border counts as inside the slot.
fn place(edit: &Edit, boundaries: &[(Span, bool)]) -> Placement {
    let e = Span::new(edit.start, edit.end);
    if boundaries.iter().any(|(s, changed)| *changed && s.contains_closed(e)) {
        return Placement::InChanged;
    }
    let inside_unchanged = boundaries
        .iter()
        .any(|(s, changed)| !changed && s.start <= e.start && e.end <= s.end);
    if inside_unchanged {
        Placement::InUnchanged
    } else {
        Placement::Crossing
    }
}

/// Hold-one-out counts for one sample: `(icc, iuc, cc)`.
fn sample_counts(sample: &AnnotatedSample) -> Result<(u64, u64, u64)> {
    let sets = sample.reference_sets();
    let mut counts = (0, 0, 0);
    for held in 0..sets.len() {
        let others: Vec<(u32, Vec<Edit>)> = sets
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held)
            .map(|(_, s)| s.clone())
            .collect();
        let cs = partition(&sample.source, &[], &others)?;
        let boundaries: Vec<(Span, bool)> = cs.boundaries.iter().map(|b| (b.span, b.changed)).collect();
        for edit in &sets[held].1 {
            match place(edit, &boundaries) {
                Placement::InChanged => counts.0 += 1,
                Placement::InUnchanged => counts.1 += 1,
                Placement::Crossing => counts.2 += 1,
            }
        }
    }
    Ok(counts)
}

/// Holds out each annotator in turn and places its edits against the
/// partition of the remaining references. Counts are pooled over all passes.
pub fn boundary_stats(samples: &[AnnotatedSample], mode: Parallelism) -> Result<BoundaryStats> {
    for (i, s) in samples.iter().enumerate() {
        if s.annotator_count() < 2 {
            return Err(Error::TooFewAnnotators {
                sample: i,
                found: s.annotator_count(),
            });
        }
    }
    let per_sample = exec::try_map(samples, mode, sample_counts)?;
    let (icc, iuc, cc) = per_sample
        .iter()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(BoundaryStats::from_counts(icc, iuc, cc))
}

/// Corpus summary: counts and mean lengths of sentences, references, edits and
/// chunks, with chunks tallied per reference over the all-reference partition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub sentences: u64,
    pub sentence_len: f64,
    pub references: u64,
    pub reference_len: f64,
    pub edits: u64,
    pub edit_len: f64,
    pub unchanged_chunks: u64,
    pub unchanged_len: f64,
    pub changed_chunks: u64,
    pub changed_len: f64,
}

pub fn corpus_summary(samples: &[AnnotatedSample], mode: Parallelism) -> Result<CorpusSummary> {
    // (sentence tokens, refs, ref tokens, edits, edit tokens, unchanged, unchanged len, changed, changed len)
    type Tally = [u64; 9];
    let per_sample: Vec<Tally> = exec::try_map(samples, mode, |s| -> Result<Tally> {
        let sets = s.reference_sets();
        let cs = partition(&s.source, &[], &sets)?;
        let mut t: Tally = [0; 9];
        t[0] = s.source.len() as u64;
        for ((_, edits), (_, chunks)) in sets.iter().zip(&cs.refs) {
            t[1] += 1;
            t[2] += chunks.iter().map(|c| c.segment.len() as u64).sum::<u64>();
            t[3] += edits.len() as u64;
            t[4] += edits.iter().map(|e| e.span_len() as u64).sum::<u64>();
            for c in chunks {
                if c.changed {
                    t[7] += 1;
                    t[8] += c.length() as u64;
                } else if !c.span.is_empty() {
                    t[5] += 1;
                    t[6] += c.length() as u64;
                }
            }
        }
        Ok(t)
    })?;
    let mut sum: Tally = [0; 9];
    for t in &per_sample {
        for (a, b) in sum.iter_mut().zip(t) {
            *a += b;
        }
    }
    let mean = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let n = samples.len() as u64;
    Ok(CorpusSummary {
        sentences: n,
        sentence_len: mean(sum[0], n),
        references: sum[1],
        reference_len: mean(sum[2], sum[1]),
        edits: sum[3],
        edit_len: mean(sum[4], sum[3]),
        unchanged_chunks: sum[5],
        unchanged_len: mean(sum[6], sum[5]),
        changed_chunks: sum[7],
        changed_len: mean(sum[8], sum[7]),
    })
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "correlation inputs".into(),
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value".into()));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("constant input".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based fractional ranks; ties share the mean of their positions.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

/// Human judgment scores per system, e.g. Expected Wins or TrueSkill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanTable {
    pub method: String,
    pub scores: BTreeMap<String, f64>,
}

impl HumanTable {
    /// Reads `system<TAB>score` rows after a header line.
    pub fn parse_tsv(text: &str, method: impl Into<String>) -> Result<Self> {
        let scores = parse_score_tsv(text, "score")?;
        Ok(HumanTable {
            method: method.into(),
            scores,
        })
    }
}

/// Reads a TSV with a `system` column and a named value column.
pub fn parse_score_tsv(text: &str, column: &str) -> Result<BTreeMap<String, f64>> {
    let mut lines = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split('\t').collect();
    let find = |name: &str| cols.iter().position(|c| *c == name);
    let sys_col = find("system").ok_or_else(|| Error::Parse {
        line: 1,
        message: "header has no 'system' column".into(),
    })?;
    let val_col = find(column).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("header has no {column:?} column"),
    })?;
    let mut out = BTreeMap::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |i: usize| {
            fields.get(i).copied().ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected at least {} fields", i + 1),
            })
        };
        let system = get(sys_col)?.to_string();
        let raw = get(val_col)?;
        let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad number {raw:?}"),
        })?;
        if out.insert(system.clone(), value).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("duplicate system {system:?}"),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    /// `(system, metric, human)` in ascending system order.
    pub rows: Vec<(String, f64, f64)>,
}

/// Aligns metric and human scores by system id and correlates them.
pub fn correlate(metric: &BTreeMap<String, f64>, human: &HumanTable) -> Result<Correlation> {
    let m: BTreeSet<&String> = metric.keys().collect();
    let h: BTreeSet<&String> = human.scores.keys().collect();
    if m != h {
        return Err(Error::SystemMismatch {
            only_metric: m.difference(&h).map(|s| s.to_string()).collect(),
            only_human: h.difference(&m).map(|s| s.to_string()).collect(),
        });
    }
    let rows: Vec<(String, f64, f64)> = metric
        .iter()
        .map(|(sys, v)| (sys.clone(), *v, human.scores[sys]))
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(Correlation {
        pearson: pearson(&xs, &ys)?,
        spearman: spearman(&xs, &ys)?,
        rows,
    })
}
