//! End-to-end evaluation. Every chunked sentence is scored under each
//! requested variant, then aggregated at corpus or sentence level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::extract_edits;
use crate::chunker::{partition, ChunkedSample};
use crate::corpus::{AnnotatedSample, Edit, TokenSeq};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::scorer::{
    aggregate_corpus, aggregate_sentence, compute_ell, score_sentence_dependent, score_sentence_independent, scores,
    Clip, FnOnMismatch, OutcomeCounts, Scores, WeightConfig,
};

/// The eight reported metric variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "dep")]
    Dep,
    #[serde(rename = "indep")]
    Indep,
    #[serde(rename = "sent-dep")]
    SentDep,
    #[serde(rename = "sent-indep")]
    SentIndep,
    #[serde(rename = "dep-acc")]
    DepAcc,
    #[serde(rename = "indep-acc")]
    IndepAcc,
    #[serde(rename = "sent-dep-acc")]
    SentDepAcc,
    #[serde(rename = "sent-indep-acc")]
    SentIndepAcc,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Dep,
        Variant::Indep,
        Variant::SentDep,
        Variant::SentIndep,
        Variant::DepAcc,
        Variant::IndepAcc,
        Variant::SentDepAcc,
        Variant::SentIndepAcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dep => "dep",
            Variant::Indep => "indep",
            Variant::SentDep => "sent-dep",
            Variant::SentIndep => "sent-indep",
            Variant::DepAcc => "dep-acc",
            Variant::IndepAcc => "indep-acc",
            Variant::SentDepAcc => "sent-dep-acc",
            Variant::SentIndepAcc => "sent-indep-acc",
        }
    }

    pub fn is_sentence_level(self) -> bool {
        matches!(
            self,
            Variant::SentDep | Variant::SentIndep | Variant::SentDepAcc | Variant::SentIndepAcc
        )
    }

    pub fn is_independent(self) -> bool {
        matches!(
            self,
            Variant::Indep | Variant::SentIndep | Variant::IndepAcc | Variant::SentIndepAcc
        )
    }

    pub fn is_accuracy(self) -> bool {
        matches!(
            self,
            Variant::DepAcc | Variant::IndepAcc | Variant::SentDepAcc | Variant::SentIndepAcc
        )
    }

    /// Default weights for this variant; accuracy variants share the weights
    /// of their F counterpart.
    pub fn default_config(self, ell: f64) -> WeightConfig {
        match (self.is_sentence_level(), self.is_independent()) {
            (false, _) => WeightConfig::corpus(ell),
            (true, false) => WeightConfig::sentence_dependent(ell),
            (true, true) => WeightConfig::sentence_independent(ell),
        }
    }

    /// The headline number of this variant.
    pub fn primary(self, s: &Scores) -> f64 {
        if self.is_accuracy() {
            s.accuracy
        } else {
            s.f_beta
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// User overrides applied on top of each variant's defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightOverrides {
    pub alpha_tp: Option<f64>,
    pub alpha_fp: Option<f64>,
    pub alpha_fn: Option<f64>,
    pub clip_tp: Option<Clip>,
    pub clip_fp: Option<Clip>,
    pub clip_fn: Option<Clip>,
    pub ell: Option<f64>,
    pub beta: Option<f64>,
}

impl WeightOverrides {
    pub fn apply(&self, mut cfg: WeightConfig) -> WeightConfig {
        cfg.alpha_tp = self.alpha_tp.unwrap_or(cfg.alpha_tp);
        cfg.alpha_fp = self.alpha_fp.unwrap_or(cfg.alpha_fp);
        cfg.alpha_fn = self.alpha_fn.unwrap_or(cfg.alpha_fn);
        cfg.clip_tp = self.clip_tp.unwrap_or(cfg.clip_tp);
        cfg.clip_fp = self.clip_fp.unwrap_or(cfg.clip_fp);
        cfg.clip_fn = self.clip_fn.unwrap_or(cfg.clip_fn);
        cfg.beta = self.beta.unwrap_or(cfg.beta);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub variants: Vec<Variant>,
    pub overrides: WeightOverrides,
    pub fn_on_mismatch: FnOnMismatch,
    pub parallelism: Parallelism,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            variants: vec![Variant::Dep, Variant::Indep, Variant::SentDep, Variant::SentIndep],
            overrides: WeightOverrides::default(),
            fn_on_mismatch: FnOnMismatch::default(),
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllSource {
    Computed,
    Override,
    /// No changed reference chunks; every weight was pinned to 1.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub config: WeightConfig,
    /// Summed over sentences in input order.
    pub counts: OutcomeCounts,
    /// Corpus-level scores from `counts`, or per-sentence means.
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sentences: usize,
    pub ell: f64,
    pub ell_source: EllSource,
    pub fn_on_mismatch: FnOnMismatch,
    pub variants: Vec<VariantReport>,
}

/// Edits of each plain-text hypothesis line against its source.
pub fn hypothesis_edits(sources: &[&TokenSeq], hyps: &[TokenSeq], mode: Parallelism) -> Result<Vec<Vec<Edit>>> {
    if sources.len() != hyps.len() {
        return Err(Error::LengthMismatch {
            what: "hypothesis lines and reference samples".into(),
            left: hyps.len(),
            right: sources.len(),
        });
    }
    let pairs: Vec<(&TokenSeq, &TokenSeq)> = sources.iter().copied().zip(hyps).collect();
    Ok(exec::map(&pairs, mode, |(s, h)| extract_edits(s, h)))
}

/// Partitions every sample with its hypothesis edits.
pub fn chunk_corpus(
    refs: &[AnnotatedSample],
    hyp_edits: &[Vec<Edit>],
    mode: Parallelism,
) -> Result<Vec<ChunkedSample>> {
    if refs.len() != hyp_edits.len() {
        return Err(Error::LengthMismatch {
            what: "hypothesis sentences and reference samples".into(),
            left: hyp_edits.len(),
            right: refs.len(),
        });
    }
    let items: Vec<(&AnnotatedSample, &Vec<Edit>)> = refs.iter().zip(hyp_edits).collect();
    exec::try_map(&items, mode, |(sample, hyp)| {
        partition(&sample.source, hyp, &sample.reference_sets())
    })
}

fn sentence_counts(cs: &ChunkedSample, variant: Variant, cfg: &WeightConfig, mode: FnOnMismatch) -> OutcomeCounts {
    if variant.is_independent() {
        score_sentence_independent(cs, cfg, mode)
    } else {
        score_sentence_dependent(cs, cfg, mode).0
    }
}

/// Scores a chunked corpus under every requested variant.
pub fn evaluate(samples: &[ChunkedSample], opts: &EvalOptions) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Degenerate("no sentences to evaluate".into()));
    }
    let (ell, ell_source) = match opts.overrides.ell {
        Some(ell) => (ell, EllSource::Override),
        None => match compute_ell(samples) {
            Ok(ell) => (ell, EllSource::Computed),
            Err(Error::NoChunks) => (1.0, EllSource::Undefined),
            Err(e) => return Err(e),
        },
    };

    let mut variants = Vec::with_capacity(opts.variants.len());
    for &variant in &opts.variants {
        let mut cfg = opts.overrides.apply(variant.default_config(ell));
        if ell_source == EllSource::Undefined {
            cfg = cfg.unweighted();
        }
        cfg.validate()?;
        let per_sentence = exec::map(samples, opts.parallelism, |cs| {
            sentence_counts(cs, variant, &cfg, opts.fn_on_mismatch)
        });
        let (counts, corpus_scores) = aggregate_corpus(&per_sentence, cfg.beta);
        let scores = if variant.is_sentence_level() {
            let each: Vec<Scores> = per_sentence.iter().map(|c| scores(c, cfg.beta)).collect();
            aggregate_sentence(&each)
        } else {
            corpus_scores
        };
        variants.push(VariantReport {
            variant,
            config: cfg,
            counts,
            scores,
        });
    }
    Ok(EvalReport {
        sentences: samples.len(),
        ell,
        ell_source,
        fn_on_mismatch: opts.fn_on_mismatch,
        variants,
    })
}
