//! Token-level Levenshtein alignment and edit extraction.
//!
//! Used when a system output (or a reference) arrives as plain text rather
//! than as pre-extracted M2 edits.

use std::ops::Range;

use crate::corpus::Edit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// One step of an alignment path. Source and target spans of consecutive ops
/// tile their sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlignOp {
    pub kind: OpKind,
    pub src: Range<usize>,
    pub tgt: Range<usize>,
}

/// Minimum-cost alignment with unit costs for substitution, deletion and
/// insertion.
///
/// The backtrace runs from the bottom-right cell and at every cell prefers
/// match, then substitute, then delete, then insert, so the path is unique.
pub fn align(source: &[String], target: &[String]) -> Vec<AlignOp> {
    let (n, m) = (source.len(), target.len());
    let width = m + 1;
    let mut dist = vec![0u32; (n + 1) * width];
    for (j, d) in dist.iter_mut().take(width).enumerate() {
        *d = j as u32;
    }
    for i in 1..=n {
        dist[i * width] = i as u32;
        for j in 1..=m {
            let diag = dist[(i - 1) * width + j - 1];
            let sub = if source[i - 1] == target[j - 1] { diag } else { diag + 1 };
            let del = dist[(i - 1) * width + j] + 1;
            let ins = dist[i * width + j - 1] + 1;
            dist[i * width + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        let kind = if i > 0 && j > 0 && source[i - 1] == target[j - 1] && dist[(i - 1) * width + j - 1] == here {
            OpKind::Match
        } else if i > 0 && j > 0 && dist[(i - 1) * width + j - 1] + 1 == here {
            OpKind::Substitute
        } else if i > 0 && dist[(i - 1) * width + j] + 1 == here {
            OpKind::Delete
        } else {
            OpKind::Insert
        };
        let (di, dj) = match kind {
            OpKind::Match | OpKind::Substitute => (1, 1),
            OpKind::Delete => (1, 0),
            OpKind::Insert => (0, 1),
        };
        ops.push(AlignOp {
            kind,
            src: i - di..i,
            tgt: j - dj..j,
        });
        i -= di;
        j -= dj;
    }
    ops.reverse();
    ops
}

/// Collapses maximal runs of non-match ops into single edits.
pub fn ops_to_edits(ops: &[AlignOp], target: &[String]) -> Vec<Edit> {
    let mut edits = Vec::new();
    let mut run: Option<(Range<usize>, Range<usize>)> = None;
    let flush = |run: &mut Option<(Range<usize>, Range<usize>)>, edits: &mut Vec<Edit>| {
        if let Some((src, tgt)) = run.take() {
            let edit =
                Edit::new(src.start, src.end, target[tgt].to_vec()).expect("a non-match run always changes something");
            edits.push(edit);
        }
    };
    for op in ops {
        if op.kind == OpKind::Match {
            flush(&mut run, &mut edits);
            continue;
        }
        run = Some(match run.take() {
            Some((src, tgt)) => (src.start..op.src.end, tgt.start..op.tgt.end),
            None => (op.src.clone(), op.tgt.clone()),
        });
    }
    flush(&mut run, &mut edits);
    edits
}

/// `ops_to_edits(align(source, target))`.
pub fn extract_edits(source: &[String], target: &[String]) -> Vec<Edit> {
    ops_to_edits(&align(source, target), target)
}
