//! Length-weighted chunk scoring.
//!
//! Every changed slot of a [`ChunkedSample`] is classified as TP/FP/FN/TN,
//! either against each reference separately with the best reference chosen
//! per sentence (dependent), or slot by slot against whichever reference
//! matches (independent). Each outcome is weighted by a clipped logistic curve
//! of the chunk length that crosses 1.0 at the average chunk length.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chunker::{changed_slots, ChangedSlot, ChunkedSample, SlotEntry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Tp,
    Fp,
    Fn,
    Tn,
}

/// Closed clipping range applied to a weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub min: f64,
    pub max: f64,
}

impl Clip {
    pub const fn new(min: f64, max: f64) -> Self {
        Clip { min, max }
    }

    pub const PINNED: Clip = Clip::new(1.0, 1.0);

    pub fn apply(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min > 0.0 && self.min <= self.max && self.max.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{name} clip ({}, {}) must satisfy 0 < min <= max",
                self.min, self.max
            )))
        }
    }
}

impl FromStr for Clip {
    type Err = Error;

    /// Parses `min,max`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("clip {s:?} is not of the form min,max")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("clip bound {v:?} is not a number")))
        };
        Ok(Clip::new(parse(a)?, parse(b)?))
    }
}

/// Weight curve parameters per outcome, plus the average chunk length and beta.
///
/// TN weights are always `clip_tn` applied to 1; there is no TN scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub alpha_tp: f64,
    pub alpha_fp: f64,
    pub alpha_fn: f64,
    pub clip_tp: Clip,
    pub clip_fp: Clip,
    pub clip_fn: Clip,
    pub clip_tn: Clip,
    pub ell: f64,
    pub beta: f64,
}

impl WeightConfig {
    /// Corpus-level defaults (dependent and independent alike).
    pub fn corpus(ell: f64) -> Self {
        WeightConfig {
            alpha_tp: 2.0,
            alpha_fp: 2.0,
            alpha_fn: 2.0,
            clip_tp: Clip::new(0.75, 1.25),
            clip_fp: Clip::new(0.75, 1.25),
            clip_fn: Clip::new(0.75, 1.25),
            clip_tn: Clip::PINNED,
            ell,
            beta: 0.5,
        }
    }

    /// Sentence-level dependent defaults. FN weights are pinned to 1, so
    /// `alpha_fn` only matters if `clip_fn` is overridden.
    pub fn sentence_dependent(ell: f64) -> Self {
        WeightConfig {
            alpha_tp: 10.0,
            alpha_fp: 10.0,
            alpha_fn: 10.0,
            clip_tp: Clip::new(1.0, 10.0),
            clip_fp: Clip::new(0.25, 10.0),
            clip_fn: Clip::PINNED,
            clip_tn: Clip::PINNED,
            ell,
            beta: 0.5,
        }
    }

    pub fn sentence_independent(ell: f64) -> Self {
        WeightConfig {
            clip_tp: Clip::new(2.5, 10.0),
            clip_fp: Clip::new(0.25, 1.0),
            ..Self::sentence_dependent(ell)
        }
    }

    /// Every weight pinned to 1: plain counting.
    pub fn unweighted(self) -> Self {
        WeightConfig {
            clip_tp: Clip::PINNED,
            clip_fp: Clip::PINNED,
            clip_fn: Clip::PINNED,
            clip_tn: Clip::PINNED,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [
            ("alpha_tp", self.alpha_tp),
            ("alpha_fp", self.alpha_fp),
            ("alpha_fn", self.alpha_fn),
        ] {
            if !(a > 1.0 && a.is_finite()) {
                return Err(Error::Config(format!("{name} = {a} must be a finite value > 1")));
            }
        }
        self.clip_tp.validate("TP")?;
        self.clip_fp.validate("FP")?;
        self.clip_fn.validate("FN")?;
        self.clip_tn.validate("TN")?;
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::Config(format!("ell = {} must be positive", self.ell)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta = {} must be positive", self.beta)));
        }
        Ok(())
    }
}

/// Unclipped weight curve. Rises with `x` for TP and FN, falls for FP, and
/// equals 1 at `x == ell` for any `alpha`.
pub fn raw_weight(x: f64, alpha: f64, ell: f64, outcome: Outcome) -> f64 {
    match outcome {
        Outcome::Tp | Outcome::Fn => alpha / (1.0 + (alpha - 1.0) * (ell - x).exp()),
        Outcome::Fp => alpha / (1.0 + (alpha - 1.0) * (x - ell).exp()),
        Outcome::Tn => 1.0,
    }
}

pub fn length_weight(x: usize, cfg: &WeightConfig, outcome: Outcome) -> f64 {
    let x = x as f64;
    match outcome {
        Outcome::Tp => cfg.clip_tp.apply(raw_weight(x, cfg.alpha_tp, cfg.ell, outcome)),
        Outcome::Fp => cfg.clip_fp.apply(raw_weight(x, cfg.alpha_fp, cfg.ell, outcome)),
        Outcome::Fn => cfg.clip_fn.apply(raw_weight(x, cfg.alpha_fn, cfg.ell, outcome)),
        Outcome::Tn => cfg.clip_tn.apply(1.0),
    }
}

/// What a hypothesis that changed a slot, but matched no reference there,
/// costs in addition to its FP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FnOnMismatch {
    /// Also an FN when the reference side changed the slot.
    Both,
    /// FP only.
    #[default]
    FpOnly,
}

impl FromStr for FnOnMismatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(FnOnMismatch::Both),
            "fp-only" => Ok(FnOnMismatch::FpOnly),
            other => Err(Error::Config(format!("unknown fn-on-mismatch mode {other:?}"))),
        }
    }
}

impl fmt::Display for FnOnMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FnOnMismatch::Both => "both",
            FnOnMismatch::FpOnly => "fp-only",
        })
    }
}

/// Outcomes assigned to one slot. A mismatch may be both FP and FN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotOutcome {
    pub tp: bool,
    pub fp: bool,
    pub fn_: bool,
    pub tn: bool,
}

/// Classifies one slot given the hypothesis status and the reference side.
///
/// `matched` means the hypothesis changed the slot and its segment equals a
/// changed reference segment. `all_refs_changed` is whether every reference
/// in play changed the slot; for a single reference it is that reference's
/// status.
pub fn classify_slot(hyp_changed: bool, matched: bool, all_refs_changed: bool, mode: FnOnMismatch) -> SlotOutcome {
    let mut out = SlotOutcome::default();
    match (hyp_changed, matched) {
        (true, true) => out.tp = true,
        (true, false) => {
            out.fp = true;
            out.fn_ = all_refs_changed && mode == FnOnMismatch::Both;
        }
        (false, _) => {
            if all_refs_changed {
                out.fn_ = true;
            } else {
                out.tn = true;
            }
        }
    }
    out
}

/// Weighted and raw outcome tallies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub tp_w: f64,
    pub fp_w: f64,
    pub fn_w: f64,
    pub tn_w: f64,
    pub tp_n: u64,
    pub fp_n: u64,
    pub fn_n: u64,
    pub tn_n: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: Outcome, weight: f64) {
        match outcome {
            Outcome::Tp => {
                self.tp_w += weight;
                self.tp_n += 1;
            }
            Outcome::Fp => {
                self.fp_w += weight;
                self.fp_n += 1;
            }
            Outcome::Fn => {
                self.fn_w += weight;
                self.fn_n += 1;
            }
            Outcome::Tn => {
                self.tn_w += weight;
                self.tn_n += 1;
            }
        }
    }
}

impl AddAssign for OutcomeCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp_w += o.tp_w;
        self.fp_w += o.fp_w;
        self.fn_w += o.fn_w;
        self.tn_w += o.tn_w;
        self.tp_n += o.tp_n;
        self.fp_n += o.fp_n;
        self.fn_n += o.fn_n;
        self.tn_n += o.tn_n;
    }
}

impl Add for OutcomeCounts {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub accuracy: f64,
}

/// `(1+β²)·P·R / (β²·P + R)`, or 0 when `P·R` is 0.
pub fn f_beta_formula(p: f64, r: f64, beta: f64) -> f64 {
    let num = (1.0 + beta * beta) * p * r;
    if num == 0.0 {
        return 0.0;
    }
    num / (beta * beta * p + r)
}

/// Weighted precision and recall. An empty denominator yields 1.
pub fn precision_recall(c: &OutcomeCounts) -> (f64, f64) {
    let p = if c.tp_w + c.fp_w == 0.0 {
        1.0
    } else {
        c.tp_w / (c.tp_w + c.fp_w)
    };
    let r = if c.tp_w + c.fn_w == 0.0 {
        1.0
    } else {
        c.tp_w / (c.tp_w + c.fn_w)
    };
    (p, r)
}

pub fn accuracy(c: &OutcomeCounts) -> f64 {
    let den = c.tp_w + c.fp_w + c.fn_w + c.tn_w;
    if den == 0.0 {
        1.0
    } else {
        (c.tp_w + c.tn_w) / den
    }
}

pub fn scores(c: &OutcomeCounts, beta: f64) -> Scores {
    let (precision, recall) = precision_recall(c);
    Scores {
        precision,
        recall,
        f_beta: f_beta_formula(precision, recall, beta),
        accuracy: accuracy(c),
    }
}

/// Mean length of every reference chunk that changed its slot.
pub fn compute_ell(samples: &[ChunkedSample]) -> Result<f64> {
    let (mut total, mut count) = (0usize, 0usize);
    for cs in samples {
        for (_, chunks) in &cs.refs {
            for c in chunks.iter().filter(|c| c.changed) {
                total += c.length();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoChunks);
    }
    Ok(total as f64 / count as f64)
}

fn unchanged_chunk_count(cs: &ChunkedSample) -> usize {
    cs.boundaries.iter().filter(|b| !b.changed).count()
}

fn record_slot(counts: &mut OutcomeCounts, out: SlotOutcome, hyp: &SlotEntry, fn_len: usize, cfg: &WeightConfig) {
    if out.tp {
        counts.record(Outcome::Tp, length_weight(hyp.length, cfg, Outcome::Tp));
    }
    if out.fp {
        counts.record(Outcome::Fp, length_weight(hyp.length, cfg, Outcome::Fp));
    }
    if out.fn_ {
        counts.record(Outcome::Fn, length_weight(fn_len, cfg, Outcome::Fn));
    }
    if out.tn {
        counts.record(Outcome::Tn, length_weight(hyp.length, cfg, Outcome::Tn));
    }
}

fn record_unchanged(counts: &mut OutcomeCounts, cs: &ChunkedSample, cfg: &WeightConfig) {
    let tn = length_weight(0, cfg, Outcome::Tn);
    for _ in 0..unchanged_chunk_count(cs) {
        counts.record(Outcome::Tn, tn);
    }
}

/// Counts for the hypothesis against the reference at position `ref_pos`.
pub fn score_against_reference(
    cs: &ChunkedSample,
    slots: &[ChangedSlot],
    ref_pos: usize,
    cfg: &WeightConfig,
    mode: FnOnMismatch,
) -> OutcomeCounts {
    let mut counts = OutcomeCounts::default();
    for slot in slots {
        let r = &slot.refs[ref_pos].1;
        let matched = slot.hyp.changed && r.changed && slot.hyp.segment == r.segment;
        let out = classify_slot(slot.hyp.changed, matched, r.changed, mode);
        record_slot(&mut counts, out, &slot.hyp, r.length, cfg);
    }
    record_unchanged(&mut counts, cs, cfg);
    counts
}

/// Best single reference for this sentence by F-beta; ties go to the larger
/// TP weight, then the lower annotator id.
pub fn score_sentence_dependent(cs: &ChunkedSample, cfg: &WeightConfig, mode: FnOnMismatch) -> (OutcomeCounts, u32) {
    let slots = changed_slots(cs);
    let mut order: Vec<usize> = (0..cs.refs.len()).collect();
    order.sort_by_key(|&i| cs.refs[i].0);
    let mut best: Option<(OutcomeCounts, f64, u32)> = None;
    for pos in order {
        let counts = score_against_reference(cs, &slots, pos, cfg, mode);
        let f = scores(&counts, cfg.beta).f_beta;
        let better = match &best {
            None => true,
            Some((bc, bf, _)) => f > *bf || (f == *bf && counts.tp_w > bc.tp_w),
        };
        if better {
            best = Some((counts, f, cs.refs[pos].0));
        }
    }
    match best {
        Some((counts, _, id)) => (counts, id),
        // No references: every slot is scored against the source itself.
        None => {
            let mut counts = OutcomeCounts::default();
            for slot in &slots {
                let out = classify_slot(slot.hyp.changed, false, false, mode);
                record_slot(&mut counts, out, &slot.hyp, 0, cfg);
            }
            record_unchanged(&mut counts, cs, cfg);
            (counts, 0)
        }
    }
}

/// Slot-by-slot any-reference matching.
///
/// A missed slot is an FN only when every reference changed it; the FN weight
/// uses the shortest changed reference chunk at the slot.
pub fn score_sentence_independent(cs: &ChunkedSample, cfg: &WeightConfig, mode: FnOnMismatch) -> OutcomeCounts {
    let mut counts = OutcomeCounts::default();
    for slot in changed_slots(cs) {
        let changed_refs: Vec<&SlotEntry> = slot.refs.iter().map(|(_, r)| r).filter(|r| r.changed).collect();
        let matched = slot.hyp.changed && changed_refs.iter().any(|r| r.segment == slot.hyp.segment);
        let all_changed = !slot.refs.is_empty() && changed_refs.len() == slot.refs.len();
        let fn_len = changed_refs.iter().map(|r| r.length).min().unwrap_or(0);
        let out = classify_slot(slot.hyp.changed, matched, all_changed, mode);
        record_slot(&mut counts, out, &slot.hyp, fn_len, cfg);
    }
    record_unchanged(&mut counts, cs, cfg);
    counts
}

/// Sums counts in index order, then derives scores from the totals.
pub fn aggregate_corpus(per_sentence: &[OutcomeCounts], beta: f64) -> (OutcomeCounts, Scores) {
    let total = per_sentence.iter().fold(OutcomeCounts::default(), |acc, c| acc + *c);
    (total, scores(&total, beta))
}

/// Arithmetic mean of per-sentence scores.
pub fn aggregate_sentence(per_sentence: &[Scores]) -> Scores {
    let n = per_sentence.len() as f64;
    if per_sentence.is_empty() {
        return Scores::default();
    }
    let sum = per_sentence.iter().fold(Scores::default(), |acc, s| Scores {
        precision: acc.precision + s.precision,
        recall: acc.recall + s.recall,
        f_beta: acc.f_beta + s.f_beta,
        accuracy: acc.accuracy + s.accuracy,
    });
    Scores {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f_beta: sum.f_beta / n,
        accuracy: sum.accuracy / n,
    }
}
