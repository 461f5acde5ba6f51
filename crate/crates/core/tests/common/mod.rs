//! Fixtures and property checks shared by the property tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use cleme::align::{align, ops_to_edits};
use cleme::analysis::boundary_stats;
use cleme::chunker::{partition, ChunkedSample};
use cleme::corpus::{apply_edits, emit_m2, parse_m2, tokenize, AnnotatedSample, Edit, TokenSeq};
use cleme::evaluate::{evaluate, EvalOptions, Variant};
use cleme::exec::Parallelism;
use cleme::scorer::{score_sentence_dependent, score_sentence_independent, FnOnMismatch, WeightConfig};

pub const CASES: u32 = 1000;

const VOCAB: [&str; 7] = ["a", "b", "c", "d", "e", "x", "y"];

pub fn toks(s: &str) -> Vec<String> {
    tokenize(s).into_inner()
}

pub fn edit(start: usize, end: usize, repl: &str) -> Edit {
    Edit::new(start, end, toks(repl)).unwrap()
}

/// A 23-token sentence with three changed slots. The hypothesis fixes all of
/// them. Reference 1 skips the middle slot; reference 2 fixes every slot but
/// rewrites the first one differently.
pub fn three_slot_sample() -> ChunkedSample {
    let source =
        tokenize("On the other hand , if there are ways can help us to control or cure the disease , we can going .");
    let hyp = vec![edit(8, 10, "ways that can"), edit(14, 15, "and"), edit(21, 22, "go")];
    let refs = vec![
        (1, vec![edit(8, 10, "ways that can"), edit(21, 22, "go")]),
        (
            2,
            vec![edit(8, 10, "things that can"), edit(14, 15, "and"), edit(21, 22, "go")],
        ),
    ];
    partition(&source, &hyp, &refs).unwrap()
}

/// "the technologies were" with two references that overlap only after
/// merging touching intervals.
pub fn merged_slot_sample() -> ChunkedSample {
    let source = tokenize("the technologies were");
    let refs = vec![
        (1, vec![edit(0, 1, ""), edit(2, 3, "have")]),
        (2, vec![edit(0, 2, "technology"), edit(2, 3, "has")]),
    ];
    partition(&source, &[], &refs).unwrap()
}

pub fn unweighted() -> WeightConfig {
    WeightConfig::corpus(1.0).unweighted()
}

// ---- generators ----

fn token() -> impl Strategy<Value = String> {
    prop::sample::select(&VOCAB[..]).prop_map(str::to_string)
}

/// Sorted, valid edits built from a plan of (gap, span length, replacement).
pub fn build_edits(n: usize, plan: &[(usize, usize, Vec<String>)]) -> Vec<Edit> {
    let mut edits: Vec<Edit> = Vec::new();
    let mut pos = 0;
    for (gap, len, repl) in plan {
        let start = pos + gap;
        if start > n {
            break;
        }
        let end = (start + len).min(n);
        if start == end {
            let repeated_point = edits.last().is_some_and(|e| e.is_insertion() && e.start == start);
            if repl.is_empty() || repeated_point {
                continue;
            }
        }
        edits.push(Edit::new(start, end, repl.clone()).unwrap());
        pos = end;
    }
    edits
}

pub fn arb_edits(n: usize) -> impl Strategy<Value = Vec<Edit>> {
    prop::collection::vec((0..3usize, 0..3usize, prop::collection::vec(token(), 0..3)), 0..5)
        .prop_map(move |plan| build_edits(n, &plan))
}

#[derive(Debug, Clone)]
pub struct Case {
    pub source: TokenSeq,
    pub hyp: Vec<Edit>,
    pub refs: Vec<(u32, Vec<Edit>)>,
}

impl Case {
    pub fn chunked(&self) -> ChunkedSample {
        partition(&self.source, &self.hyp, &self.refs).unwrap()
    }

    pub fn annotated(&self) -> AnnotatedSample {
        let annotations: BTreeMap<u32, Vec<Edit>> = self
            .refs
            .iter()
            .map(|(id, edits)| (*id, edits.iter().cloned().map(|e| e.with_annotator(*id)).collect()))
            .collect();
        AnnotatedSample::new(self.source.clone(), annotations).unwrap()
    }
}

pub fn arb_case(refs: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Case> {
    (1..10usize, refs).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(token(), n),
            arb_edits(n),
            prop::collection::vec(arb_edits(n), k),
        )
            .prop_map(|(src, hyp, refs)| Case {
                source: TokenSeq::new(src).unwrap(),
                hyp,
                refs: refs.into_iter().enumerate().map(|(i, e)| (i as u32, e)).collect(),
            })
    })
}

pub fn arb_corpus() -> impl Strategy<Value = Vec<Case>> {
    prop::collection::vec(arb_case(1..=3), 1..8)
}

/// Every sample has at least two annotators, as hold-one-out needs.
pub fn arb_multi_ref_corpus() -> impl Strategy<Value = Vec<Case>> {
    prop::collection::vec(arb_case(2..=4), 1..6)
}

pub fn arb_pair() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    (
        prop::collection::vec(token(), 0..12),
        prop::collection::vec(token(), 0..12),
    )
}

pub fn arb_labelled_samples() -> impl Strategy<Value = Vec<AnnotatedSample>> {
    let sample = (1..10usize, 0..4usize).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(token(), n),
            prop::collection::vec(
                (
                    arb_edits(n),
                    prop::option::of(prop::sample::select(vec!["R:VERB", "M:DET", "U:PUNCT"])),
                ),
                k,
            ),
        )
            .prop_map(|(src, anns)| {
                let annotations = anns
                    .into_iter()
                    .enumerate()
                    .map(|(i, (edits, label))| {
                        let id = i as u32;
                        let edits = edits
                            .into_iter()
                            .map(|e| {
                                let e = e.with_annotator(id);
                                match label {
                                    Some(l) => e.with_label(l),
                                    None => e,
                                }
                            })
                            .collect();
                        (id, edits)
                    })
                    .collect();
                AnnotatedSample::new(TokenSeq::new(src).unwrap(), annotations).unwrap()
            })
    });
    prop::collection::vec(sample, 1..6)
}

// ---- property checks ----

pub fn check_align_round_trip((src, tgt): (Vec<String>, Vec<String>)) -> Result<(), TestCaseError> {
    let edits = ops_to_edits(&align(&src, &tgt), &tgt);
    prop_assert_eq!(apply_edits(&src, &edits).unwrap(), tgt);
    Ok(())
}

pub fn check_same_spans(case: Case) -> Result<(), TestCaseError> {
    let cs = case.chunked();
    let spans = cs.boundary_spans();
    let mut seqs = vec![&cs.hyp];
    seqs.extend(cs.refs.iter().map(|(_, c)| c));
    for chunks in seqs {
        prop_assert_eq!(chunks.len(), cs.chunk_count());
        for (c, span) in chunks.iter().zip(&spans) {
            prop_assert_eq!(c.span, *span);
        }
    }
    let mut cursor = 0;
    for span in &spans {
        prop_assert_eq!(span.start, cursor);
        cursor = span.end;
    }
    prop_assert_eq!(cursor, cs.source.len());
    Ok(())
}

pub fn check_reconstruction(case: Case) -> Result<(), TestCaseError> {
    let cs = case.chunked();
    let concat = |chunks: &[cleme::chunker::Chunk]| chunks.iter().flat_map(|c| c.segment.clone()).collect::<Vec<_>>();
    prop_assert_eq!(concat(&cs.source_chunks()), cs.source.tokens().to_vec());
    prop_assert_eq!(concat(&cs.hyp), apply_edits(&case.source, &case.hyp).unwrap());
    for ((_, chunks), (_, edits)) in cs.refs.iter().zip(&case.refs) {
        prop_assert_eq!(concat(chunks), apply_edits(&case.source, edits).unwrap());
    }
    Ok(())
}

fn configs() -> [WeightConfig; 4] {
    [
        WeightConfig::corpus(2.0),
        WeightConfig::sentence_dependent(1.5),
        WeightConfig::sentence_independent(3.0),
        unweighted(),
    ]
}

pub fn check_single_reference(case: Case) -> Result<(), TestCaseError> {
    let cs = case.chunked();
    for cfg in configs() {
        for mode in [FnOnMismatch::Both, FnOnMismatch::FpOnly] {
            let (dep, _) = score_sentence_dependent(&cs, &cfg, mode);
            let indep = score_sentence_independent(&cs, &cfg, mode);
            prop_assert_eq!(dep, indep);
        }
    }
    Ok(())
}

pub fn check_dominance(case: Case) -> Result<(), TestCaseError> {
    let cs = case.chunked();
    for cfg in configs() {
        for mode in [FnOnMismatch::Both, FnOnMismatch::FpOnly] {
            let (dep, _) = score_sentence_dependent(&cs, &cfg, mode);
            let indep = score_sentence_independent(&cs, &cfg, mode);
            prop_assert!(indep.tp_w >= dep.tp_w - 1e-12, "tp_w {} < {}", indep.tp_w, dep.tp_w);
            prop_assert!(indep.fn_w <= dep.fn_w + 1e-12, "fn_w {} > {}", indep.fn_w, dep.fn_w);
            prop_assert!(indep.tp_n >= dep.tp_n);
            prop_assert!(indep.fn_n <= dep.fn_n);
        }
    }
    Ok(())
}

pub fn check_boundary_partition(cases: Vec<Case>) -> Result<(), TestCaseError> {
    let samples: Vec<AnnotatedSample> = cases.iter().map(Case::annotated).collect();
    let held_out: u64 = samples
        .iter()
        .flat_map(|s| s.annotations.values())
        .map(|e| e.len() as u64)
        .sum();
    let stats = boundary_stats(&samples, Parallelism::Sequential).unwrap();
    prop_assert_eq!(stats.icc_n + stats.iuc_n + stats.cc_n, held_out);
    prop_assert_eq!(stats.edits_total, held_out);
    prop_assert_eq!(stats, boundary_stats(&samples, Parallelism::Parallel).unwrap());
    Ok(())
}

pub fn check_permutation((cases, perm): (Vec<Case>, Vec<usize>)) -> Result<(), TestCaseError> {
    let samples: Vec<ChunkedSample> = cases.iter().map(Case::chunked).collect();
    let shuffled: Vec<ChunkedSample> = perm.iter().map(|&i| samples[i].clone()).collect();
    let opts = EvalOptions {
        variants: Variant::ALL.to_vec(),
        ..EvalOptions::default()
    };
    let a = evaluate(&samples, &opts).unwrap();
    let b = evaluate(&shuffled, &opts).unwrap();
    prop_assert!((a.ell - b.ell).abs() < 1e-12);
    for (x, y) in a.variants.iter().zip(&b.variants) {
        let (cx, cy) = (&x.counts, &y.counts);
        prop_assert_eq!(
            (cx.tp_n, cx.fp_n, cx.fn_n, cx.tn_n),
            (cy.tp_n, cy.fp_n, cy.fn_n, cy.tn_n)
        );
        for (u, v) in [
            (cx.tp_w, cy.tp_w),
            (cx.fp_w, cy.fp_w),
            (cx.fn_w, cy.fn_w),
            (cx.tn_w, cy.tn_w),
        ] {
            prop_assert!((u - v).abs() < 1e-9);
        }
        if !x.variant.is_sentence_level() {
            prop_assert!((x.scores.f_beta - y.scores.f_beta).abs() < 1e-9);
        }
    }
    Ok(())
}

pub fn arb_permuted_corpus() -> impl Strategy<Value = (Vec<Case>, Vec<usize>)> {
    arb_corpus().prop_flat_map(|cases| {
        let n = cases.len();
        (Just(cases), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

pub fn check_m2_round_trip(samples: Vec<AnnotatedSample>) -> Result<(), TestCaseError> {
    let text = emit_m2(&samples);
    let parsed = parse_m2(&text).unwrap();
    prop_assert_eq!(&parsed, &samples);
    prop_assert_eq!(emit_m2(&parsed), text);
    Ok(())
}

pub fn check_thread_independence(cases: Vec<Case>) -> Result<(), TestCaseError> {
    let samples: Vec<ChunkedSample> = cases.iter().map(Case::chunked).collect();
    let run = |parallelism| {
        let opts = EvalOptions {
            variants: Variant::ALL.to_vec(),
            parallelism,
            ..EvalOptions::default()
        };
        evaluate(&samples, &opts).unwrap()
    };
    prop_assert_eq!(run(Parallelism::Sequential), run(Parallelism::Parallel));
    Ok(())
}

// ---- truth-table oracle ----

/// What one sequence does at the single changed slot of the oracle sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotStatus {
    Keep,
    Write(&'static str),
}

const REF_STATUSES: [SlotStatus; 3] = [SlotStatus::Keep, SlotStatus::Write("A"), SlotStatus::Write("B")];
const HYP_STATUSES: [SlotStatus; 4] = [
    SlotStatus::Keep,
    SlotStatus::Write("A"),
    SlotStatus::Write("B"),
    SlotStatus::Write("C"),
];

/// Expected raw (tp, fp, fn, tn) at the slot, by exhaustive case analysis.
fn expected(hyp: SlotStatus, refs: &[SlotStatus], mode: FnOnMismatch) -> (u64, u64, u64, u64) {
    let every_ref_writes = refs.iter().all(|r| *r != SlotStatus::Keep);
    match hyp {
        SlotStatus::Keep if every_ref_writes => (0, 0, 1, 0),
        SlotStatus::Keep => (0, 0, 0, 1),
        w if refs.contains(&w) => (1, 0, 0, 0),
        _ => match (mode, every_ref_writes) {
            (FnOnMismatch::Both, true) => (0, 1, 1, 0),
            _ => (0, 1, 0, 0),
        },
    }
}

fn status_edits(s: SlotStatus) -> Vec<Edit> {
    match s {
        SlotStatus::Keep => vec![],
        SlotStatus::Write(w) => vec![edit(1, 2, w)],
    }
}

/// Runs every hypothesis status against every assignment of 1 to 3
/// reference statuses, under both mismatch modes. Returns the number of
/// combinations checked, or the first disagreement.
pub fn truth_table_oracle() -> Result<usize, String> {
    let source = tokenize("p w q");
    let mut checked = 0;
    for k in 1..=3usize {
        let total = REF_STATUSES.len().pow(k as u32);
        for code in 0..total {
            let mut rest = code;
            let refs: Vec<SlotStatus> = (0..k)
                .map(|_| {
                    let s = REF_STATUSES[rest % REF_STATUSES.len()];
                    rest /= REF_STATUSES.len();
                    s
                })
                .collect();
            for hyp in HYP_STATUSES {
                for mode in [FnOnMismatch::Both, FnOnMismatch::FpOnly] {
                    let ref_sets: Vec<(u32, Vec<Edit>)> = refs
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (i as u32, status_edits(*s)))
                        .collect();
                    let cs = partition(&source, &status_edits(hyp), &ref_sets).map_err(|e| e.to_string())?;
                    let c = score_sentence_independent(&cs, &unweighted(), mode);
                    let slot_open = hyp != SlotStatus::Keep || refs.iter().any(|r| *r != SlotStatus::Keep);
                    let (tp, fp, fn_, tn) = if slot_open {
                        let (tp, fp, fn_, tn) = expected(hyp, &refs, mode);
                        // "p" and "q" are unchanged chunks.
                        (tp, fp, fn_, tn + 2)
                    } else {
                        (0, 0, 0, 1)
                    };
                    let got = (c.tp_n, c.fp_n, c.fn_n, c.tn_n);
                    if got != (tp, fp, fn_, tn) {
                        return Err(format!(
                            "hyp={hyp:?} refs={refs:?} mode={mode}: got {got:?}, oracle {:?}",
                            (tp, fp, fn_, tn)
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}
