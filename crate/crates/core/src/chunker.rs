//! Chunk partition shared by a source sentence and all of its corrections.
//!
//! The closed source intervals of every edit from every sequence are merged
//! (touching intervals merge too, insertions are point intervals). Each merged
//! component becomes a changed slot; the gaps between slots become unchanged
//! chunks. Every sequence is then cut at the same boundaries, so all of them
//! have the same number of chunks and chunk `i` covers the same source span in
//! each of them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{validate_edits, Edit, TokenSeq};
use crate::error::Result;

/// Half-open interval over source token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Closed-interval containment: `[other.start, other.end] ⊆ [start, end]`.
    pub fn contains_closed(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChunkKind {
    /// Same tokens as the source over a non-empty span.
    Unchanged,
    /// Non-empty and different from the source.
    Corrected,
    /// Empty segment: an insertion slot left empty, or a deletion.
    Dummy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub span: Span,
    pub segment: Vec<String>,
    pub kind: ChunkKind,
    /// Whether the segment differs from the source tokens under `span`.
    pub changed: bool,
}

impl Chunk {
    fn new(index: usize, span: Span, segment: Vec<String>, source: &[String]) -> Self {
        let changed = segment[..] != source[span.start..span.end];
        let kind = if segment.is_empty() {
            ChunkKind::Dummy
        } else if changed {
            ChunkKind::Corrected
        } else {
            ChunkKind::Unchanged
        };
        Chunk {
            index,
            span,
            segment,
            kind,
            changed,
        }
    }

    /// Length used by the weighting curves: the longer of the source span and
    /// the segment.
    pub fn length(&self) -> usize {
        chunk_length(self)
    }
}

pub fn chunk_length(chunk: &Chunk) -> usize {
    chunk.span.len().max(chunk.segment.len())
}

/// A shared chunk boundary. `changed` marks slots where at least one sequence
/// supplied an edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub span: Span,
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkedSample {
    pub source: TokenSeq,
    pub boundaries: Vec<Boundary>,
    pub hyp: Vec<Chunk>,
    pub refs: Vec<(u32, Vec<Chunk>)>,
}

impl ChunkedSample {
    pub fn chunk_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundary_spans(&self) -> Vec<Span> {
        self.boundaries.iter().map(|b| b.span).collect()
    }

    /// Source chunks, i.e. what every sequence would hold if it kept the source.
    pub fn source_chunks(&self) -> Vec<Chunk> {
        self.boundaries
            .iter()
            .enumerate()
            .map(|(i, b)| Chunk::new(i, b.span, self.source[b.span.start..b.span.end].to_vec(), &self.source))
            .collect()
    }
}

/// Merged changed-slot spans, sorted by start. Closed intervals that intersect
/// or touch end up in the same slot.
fn merge_intervals(mut intervals: Vec<Span>) -> Vec<Span> {
    intervals.sort();
    let mut merged: Vec<Span> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
            _ => merged.push(iv),
        }
    }
    merged
}

fn boundaries_for(source_len: usize, slots: &[Span]) -> Vec<Boundary> {
    let mut out = Vec::with_capacity(slots.len() * 2 + 1);
    let mut cursor = 0;
    for &slot in slots {
        if slot.start > cursor {
            out.push(Boundary {
                span: Span::new(cursor, slot.start),
                changed: false,
            });
        }
        out.push(Boundary {
            span: slot,
            changed: true,
        });
        cursor = slot.end;
    }
    if cursor < source_len {
        out.push(Boundary {
            span: Span::new(cursor, source_len),
            changed: false,
        });
    }
    out
}

/// Cuts one sequence at the shared boundaries. `edits` are sorted and valid,
/// and every edit lies inside exactly one changed boundary.
fn segment_sequence(source: &[String], boundaries: &[Boundary], edits: &[Edit]) -> Vec<Chunk> {
    let mut next = 0;
    boundaries
        .iter()
        .enumerate()
        .map(|(index, b)| {
            let mut segment = Vec::with_capacity(b.span.len());
            let mut cursor = b.span.start;
            while b.changed
                && next < edits.len()
                && b.span.contains_closed(Span::new(edits[next].start, edits[next].end))
            {
                let e = &edits[next];
                segment.extend_from_slice(&source[cursor..e.start]);
                segment.extend(e.replacement.iter().cloned());
                cursor = e.end;
                next += 1;
            }
            segment.extend_from_slice(&source[cursor..b.span.end]);
            Chunk::new(index, b.span, segment, source)
        })
        .collect()
}

fn sorted_valid(edits: &[Edit], source_len: usize) -> Result<Vec<Edit>> {
    let mut edits = edits.to_vec();
    edits.sort_by_key(|e| (e.start, e.end));
    validate_edits(&edits, source_len)?;
    Ok(edits)
}

/// Segments the source and every correction of it into the same
/// chunk sequence.
pub fn partition(source: &TokenSeq, hyp_edits: &[Edit], ref_sets: &[(u32, Vec<Edit>)]) -> Result<ChunkedSample> {
    let hyp_edits = sorted_valid(hyp_edits, source.len())?;
    let ref_sets = ref_sets
        .iter()
        .map(|(id, edits)| Ok((*id, sorted_valid(edits, source.len())?)))
        .collect::<Result<Vec<_>>>()?;

    let intervals = hyp_edits
        .iter()
        .chain(ref_sets.iter().flat_map(|(_, e)| e))
        .map(|e| Span::new(e.start, e.end))
        .collect();
    let slots = merge_intervals(intervals);
    let boundaries = boundaries_for(source.len(), &slots);

    let hyp = segment_sequence(source, &boundaries, &hyp_edits);
    let refs = ref_sets
        .iter()
        .map(|(id, edits)| (*id, segment_sequence(source, &boundaries, edits)))
        .collect();
    Ok(ChunkedSample {
        source: source.clone(),
        boundaries,
        hyp,
        refs,
    })
}

/// One sequence's view of a changed slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotEntry {
    pub changed: bool,
    pub segment: Vec<String>,
    pub length: usize,
}

impl From<&Chunk> for SlotEntry {
    fn from(c: &Chunk) -> Self {
        SlotEntry {
            changed: c.changed,
            segment: c.segment.clone(),
            length: c.length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedSlot {
    pub index: usize,
    pub span: Span,
    pub hyp: SlotEntry,
    pub refs: Vec<(u32, SlotEntry)>,
}

pub fn changed_slots(cs: &ChunkedSample) -> Vec<ChangedSlot> {
    cs.boundaries
        .iter()
        .enumerate()
        .filter(|(_, b)| b.changed)
        .map(|(i, b)| ChangedSlot {
            index: i,
            span: b.span,
            hyp: SlotEntry::from(&cs.hyp[i]),
            refs: cs
                .refs
                .iter()
                .map(|(id, chunks)| (*id, SlotEntry::from(&chunks[i])))
                .collect(),
        })
        .collect()
}

/// Rows of a chunk table: one per sequence, one cell per chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkTable {
    /// 1-based chunk number per column.
    pub numbers: Vec<usize>,
    /// Changed flag per column.
    pub changed: Vec<bool>,
    pub rows: Vec<(String, Vec<String>)>,
}

pub fn chunk_table(cs: &ChunkedSample) -> ChunkTable {
    let cells = |chunks: &[Chunk]| chunks.iter().map(|c| c.segment.join(" ")).collect::<Vec<_>>();
    let mut rows = vec![
        ("Source".to_string(), cells(&cs.source_chunks())),
        ("Hyp.".to_string(), cells(&cs.hyp)),
    ];
    rows.extend(cs.refs.iter().map(|(id, chunks)| (format!("Ref. {id}"), cells(chunks))));
    ChunkTable {
        numbers: (1..=cs.boundaries.len()).collect(),
        changed: cs.boundaries.iter().map(|b| b.changed).collect(),
        rows,
    }
}

impl ChunkTable {
    /// Keeps only the changed columns.
    pub fn only_changed(&self) -> ChunkTable {
        let keep: Vec<usize> = (0..self.changed.len()).filter(|&i| self.changed[i]).collect();
        ChunkTable {
            numbers: keep.iter().map(|&i| self.numbers[i]).collect(),
            changed: vec![true; keep.len()],
            rows: self
                .rows
                .iter()
                .map(|(label, cells)| (label.clone(), keep.iter().map(|&i| cells[i].clone()).collect()))
                .collect(),
        }
    }

    fn headers(&self) -> Vec<String> {
        self.changed
            .iter()
            .zip(&self.numbers)
            .map(|(&c, n)| format!("{}Chunk {n}", if c { "*" } else { "" }))
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\t{}", self.headers().join("\t"));
        for (label, cells) in &self.rows {
            let _ = writeln!(out, "{label}\t{}", cells.join("\t"));
        }
        out
    }

    /// Column-aligned plain text; changed columns carry a `*` in the header.
    pub fn to_text(&self) -> String {
        let headers = self.headers();
        let label_width = self.rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..headers.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|(_, cells)| cells[i].chars().count())
                    .chain(std::iter::once(headers[i].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |label: &str, cells: &[String]| {
            let mut s = format!("{label:<label_width$}");
            for (cell, w) in cells.iter().zip(&widths) {
                let _ = write!(s, " | {cell:<w$}");
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", line("", &headers));
        for (label, cells) in &self.rows {
            let _ = writeln!(out, "{}", line(label, cells));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{apply_edits, tokenize};

    fn seq(s: &str) -> TokenSeq {
        tokenize(s)
    }

    fn e(start: usize, end: usize, rep: &[&str]) -> Edit {
        Edit::from_strs(start, end, rep).unwrap()
    }

    fn running_example() -> ChunkedSample {
        let source = seq("the technologies were");
        let ref1 = vec![e(0, 1, &[]), e(2, 3, &["have"])];
        let ref2 = vec![e(0, 1, &[]), e(1, 2, &["technology"]), e(2, 3, &["has"])];
        partition(&source, &[], &[(0, ref1), (1, ref2)]).unwrap()
    }

    #[test]
    fn running_example_single_slot() {
        let cs = running_example();
        assert_eq!(
            cs.boundaries,
            vec![Boundary {
                span: Span::new(0, 3),
                changed: true
            }]
        );
        assert_eq!(cs.refs[0].1[0].segment, ["technologies", "have"]);
        assert_eq!(cs.refs[1].1[0].segment, ["technology", "has"]);
        assert!(!cs.hyp[0].changed);
        let slots = changed_slots(&cs);
        assert_eq!(slots.len(), 1);
        assert!(!slots[0].hyp.changed);
        assert!(slots[0].refs.iter().all(|(_, s)| s.changed));
    }

    #[test]
    fn running_example_single_multi_token_edit_gives_same_partition() {
        let source = seq("the technologies were");
        let ref1 = vec![e(0, 3, &["technologies", "have"])];
        let ref2 = vec![e(0, 3, &["technology", "has"])];
        let coarse = partition(&source, &[], &[(0, ref1), (1, ref2)]).unwrap();
        let fine = running_example();
        assert_eq!(coarse.boundaries, fine.boundaries);
        assert_eq!(coarse.refs, fine.refs);
    }

    #[test]
    fn no_edits_is_one_unchanged_chunk() {
        let cs = partition(&seq("a b c"), &[], &[(0, vec![])]).unwrap();
        assert_eq!(
            cs.boundaries,
            vec![Boundary {
                span: Span::new(0, 3),
                changed: false
            }]
        );
        assert!(changed_slots(&cs).is_empty());
        let table = chunk_table(&cs);
        assert_eq!(table.changed, vec![false]);
    }

    #[test]
    fn insertion_makes_point_slot() {
        let cs = partition(&seq("a b c d"), &[], &[(0, vec![e(1, 1, &["x"])]), (1, vec![])]).unwrap();
        let spans: Vec<_> = cs
            .boundaries
            .iter()
            .map(|b| (b.span.start, b.span.end, b.changed))
            .collect();
        assert_eq!(spans, [(0, 1, false), (1, 1, true), (1, 4, false)]);
        assert_eq!(cs.refs[0].1[1].kind, ChunkKind::Corrected);
        assert_eq!(cs.refs[1].1[1].kind, ChunkKind::Dummy);
        assert!(!cs.refs[1].1[1].changed);
        assert_eq!(cs.refs[0].1[1].length(), 1);
        assert_eq!(cs.refs[1].1[1].length(), 0);
    }

    // Brute force over every single edit on a 4-token source: the expected
    // boundaries are built from the definition, position by position.
    #[test]
    fn single_edit_placements_match_oracle() {
        let source = seq("w x y z");
        for start in 0..=4 {
            for end in start..=4 {
                let rep: &[&str] = if start == end { &["n"] } else { &["n", "m"] };
                let edit = e(start, end, rep);
                let cs = partition(&source, &[], &[(0, vec![edit.clone()])]).unwrap();
                let mut expected = Vec::new();
                if start > 0 {
                    expected.push((0, start, false));
                }
                expected.push((start, end, true));
                if end < 4 {
                    expected.push((end, 4, false));
                }
                let got: Vec<_> = cs
                    .boundaries
                    .iter()
                    .map(|b| (b.span.start, b.span.end, b.changed))
                    .collect();
                assert_eq!(got, expected, "edit {start}..{end}");
                let joined: Vec<String> = cs.refs[0].1.iter().flat_map(|c| c.segment.clone()).collect();
                assert_eq!(joined, apply_edits(&source, &[edit]).unwrap());
            }
        }
    }

    #[test]
    fn touching_edits_merge_across_sequences() {
        // [0,1) from the hypothesis touches [1,2) from the reference.
        let cs = partition(&seq("a b c d"), &[e(0, 1, &["A"])], &[(0, vec![e(1, 2, &["B"])])]).unwrap();
        assert_eq!(cs.boundaries[0].span, Span::new(0, 2));
        assert_eq!(cs.hyp[0].segment, ["A", "b"]);
        assert_eq!(cs.refs[0].1[0].segment, ["a", "B"]);
        // An insertion at a slot border joins the slot.
        let cs = partition(&seq("a b c d"), &[e(2, 2, &["q"])], &[(0, vec![e(1, 2, &["B"])])]).unwrap();
        assert_eq!(cs.boundaries[1].span, Span::new(1, 2));
        assert_eq!(cs.hyp[1].segment, ["b", "q"]);
    }

    #[test]
    fn deletion_is_dummy() {
        let cs = partition(&seq("a b c"), &[], &[(0, vec![e(1, 2, &[])])]).unwrap();
        let c = &cs.refs[0].1[1];
        assert_eq!(c.kind, ChunkKind::Dummy);
        assert!(c.changed);
        assert_eq!(c.length(), 1);
    }

    #[test]
    fn chunk_length_examples() {
        let source = seq("a b c");
        let unchanged = Chunk::new(0, Span::new(0, 3), source.to_vec(), &source);
        assert_eq!(chunk_length(&unchanged), 3);
        let corrected = Chunk::new(0, Span::new(0, 3), vec!["x".into(), "y".into()], &source);
        assert_eq!(chunk_length(&corrected), 3);
        let dummy = Chunk::new(0, Span::new(1, 1), vec!["x".into(), "y".into()], &source);
        assert_eq!(chunk_length(&dummy), 2);
    }

    #[test]
    fn running_example_table() {
        let table = chunk_table(&running_example());
        assert_eq!(table.changed, vec![true]);
        let cells: Vec<&str> = table.rows.iter().map(|(_, c)| c[0].as_str()).collect();
        assert_eq!(
            cells,
            [
                "the technologies were",
                "the technologies were",
                "technologies have",
                "technology has"
            ]
        );
        assert!(table.to_tsv().starts_with("\t*Chunk 1\n"));
        assert!(table.to_text().contains("*Chunk 1"));
    }

    #[test]
    fn only_changed_projects_columns() {
        let cs = partition(&seq("a b c d"), &[], &[(0, vec![e(1, 2, &["B"])])]).unwrap();
        let table = chunk_table(&cs);
        assert_eq!(table.changed, vec![false, true, false]);
        let proj = table.only_changed();
        assert_eq!(proj.changed, vec![true]);
        assert_eq!(proj.rows[2].1, vec!["B".to_string()]);
        assert!(proj.to_tsv().starts_with("\t*Chunk 2\n"));
    }

    #[test]
    fn invalid_edits_propagate() {
        let bad = vec![e(0, 2, &["x"]), e(1, 3, &["y"])];
        assert!(partition(&seq("a b c"), &bad, &[]).is_err());
    }
}
