//! Corpus artifacts: token sequences, edits, M2 annotation files and
//! line-aligned parallel text.
//!
//! Tokenization is whitespace-only. Corpora in this field ship pre-tokenized,
//! and M2 offsets index those tokens directly, so nothing here re-tokenizes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder used by M2 for an empty replacement or a missing type.
pub const M2_NONE: &str = "-NONE-";
const M2_NOOP: &str = "noop";

/// An ordered list of whitespace-free, non-empty tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence, rejecting empty tokens and tokens with whitespace.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidToken(bad.clone()));
        }
        Ok(TokenSeq(tokens))
    }

    pub fn from_strs(tokens: &[&str]) -> Result<Self> {
        Self::new(tokens.iter().map(|t| t.to_string()).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Single-space join; `tokenize(seq.text()) == seq`.
    pub fn text(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

/// Splits on runs of ASCII whitespace.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(text.split_ascii_whitespace().map(str::to_string).collect())
}

/// Replacement of the source span `[start, end)` by `replacement`.
///
/// `start == end` is an insertion and must carry tokens. An empty replacement
/// over a non-empty span is a deletion. A no-op is never an `Edit`; M2 noop
/// records become an annotator with an empty edit list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    pub type_label: Option<String>,
    pub annotator_id: u32,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: Vec<String>) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidEdit {
                start,
                end,
                reason: "end precedes start",
            });
        }
        if start == end && replacement.is_empty() {
            return Err(Error::InvalidEdit {
                start,
                end,
                reason: "empty insertion",
            });
        }
        if let Some(bad) = replacement
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidToken(bad.clone()));
        }
        Ok(Edit {
            start,
            end,
            replacement,
            type_label: None,
            annotator_id: 0,
        })
    }

    /// Convenience constructor used heavily in tests.
    pub fn from_strs(start: usize, end: usize, replacement: &[&str]) -> Result<Self> {
        Self::new(start, end, replacement.iter().map(|t| t.to_string()).collect())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.type_label = Some(label.into());
        self
    }

    pub fn with_annotator(mut self, id: u32) -> Self {
        self.annotator_id = id;
        self
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    /// Number of source tokens covered.
    pub fn span_len(&self) -> usize {
        self.end - self.start
    }
}

/// Checks that one sequence's edits stay in bounds and are pairwise disjoint.
///
/// Edits must already be sorted by `(start, end)`. Half-open overlap is an
/// error, and so are two insertions at the same point.
pub fn validate_edits(edits: &[Edit], source_len: usize) -> Result<()> {
    for e in edits {
        if e.end > source_len {
            return Err(Error::Bounds {
                start: e.start,
                end: e.end,
                len: source_len,
            });
        }
    }
    for pair in edits.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let ordered = (a.start, a.end) <= (b.start, b.end);
        let overlapping = a.start < b.end && b.start < a.end;
        let same_point_insertions = a.is_insertion() && b.is_insertion() && a.start == b.start;
        if !ordered || overlapping || same_point_insertions {
            return Err(Error::Overlap {
                first_start: a.start,
                first_end: a.end,
                second_start: b.start,
                second_end: b.end,
            });
        }
    }
    Ok(())
}

fn sort_edits(edits: &mut [Edit]) {
    edits.sort_by_key(|e| (e.start, e.end));
}

/// Applies sorted, disjoint edits left to right.
pub fn apply_edits(source: &[String], edits: &[Edit]) -> Result<Vec<String>> {
    validate_edits(edits, source.len())?;
    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&source[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&source[cursor..]);
    Ok(out)
}

/// One source sentence with each annotator's edits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub source: TokenSeq,
    pub annotations: BTreeMap<u32, Vec<Edit>>,
}

impl AnnotatedSample {
    /// Sorts each annotator's edits and validates them against the source.
    pub fn new(source: TokenSeq, annotations: BTreeMap<u32, Vec<Edit>>) -> Result<Self> {
        let mut annotations = annotations;
        for edits in annotations.values_mut() {
            sort_edits(edits);
            validate_edits(edits, source.len())?;
        }
        Ok(AnnotatedSample { source, annotations })
    }

    pub fn annotator_count(&self) -> usize {
        self.annotations.len()
    }

    /// Reference edit sets in ascending annotator order. A sample without any
    /// annotation records is treated as one reference that keeps the source.
    pub fn reference_sets(&self) -> Vec<(u32, Vec<Edit>)> {
        if self.annotations.is_empty() {
            return vec![(0, Vec::new())];
        }
        self.annotations
            .iter()
            .map(|(id, edits)| (*id, edits.clone()))
            .collect()
    }

    /// Target sentence for one annotator.
    pub fn target(&self, annotator: u32) -> Option<Vec<String>> {
        let edits = self.annotations.get(&annotator)?;
        Some(apply_edits(&self.source, edits).expect("validated at construction"))
    }

    /// Removes annotators whose edit list is empty, keeping at least one
    /// annotator so the sample still has a reference.
    pub fn drop_unchanged_refs(&mut self) {
        if self.annotations.values().any(|e| !e.is_empty()) {
            self.annotations.retain(|_, edits| !edits.is_empty());
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_a_line(body: &str, line_no: usize, source_len: usize) -> Result<(u32, Option<Edit>)> {
    let fields: Vec<&str> = body.split("|||").collect();
    if fields.len() != 6 {
        return Err(parse_err(
            line_no,
            format!("expected 6 '|||'-separated fields, found {}", fields.len()),
        ));
    }
    let annotator_id: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad annotator id {:?}", fields[5])))?;
    let mut offsets = fields[0].split_ascii_whitespace();
    let (start, end) = match (offsets.next(), offsets.next(), offsets.next()) {
        (Some(s), Some(e), None) => (s, e),
        _ => return Err(parse_err(line_no, format!("bad offsets {:?}", fields[0]))),
    };
    if start == "-1" && end == "-1" {
        if fields[1] != M2_NOOP {
            return Err(parse_err(line_no, "offsets -1 -1 are reserved for noop"));
        }
        return Ok((annotator_id, None));
    }
    let start: usize = start
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad start offset {start:?}")))?;
    let end: usize = end
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad end offset {end:?}")))?;
    let replacement: Vec<String> = match fields[2].trim() {
        "" | M2_NONE => Vec::new(),
        text => text.split_ascii_whitespace().map(str::to_string).collect(),
    };
    let mut edit = Edit::new(start, end, replacement).map_err(|e| parse_err(line_no, e.to_string()))?;
    if end > source_len {
        return Err(parse_err(
            line_no,
            Error::Bounds {
                start,
                end,
                len: source_len,
            }
            .to_string(),
        ));
    }
    if fields[1] != M2_NONE {
        edit.type_label = Some(fields[1].to_string());
    }
    edit.annotator_id = annotator_id;
    Ok((annotator_id, Some(edit)))
}

struct PendingBlock {
    line: usize,
    source: TokenSeq,
    annotations: BTreeMap<u32, Vec<Edit>>,
}

impl PendingBlock {
    fn finish(self) -> Result<AnnotatedSample> {
        let line = self.line;
        AnnotatedSample::new(self.source, self.annotations).map_err(|e| match e {
            Error::Overlap { .. } => e,
            other => parse_err(line, other.to_string()),
        })
    }
}

/// Parses an M2 annotation stream into one sample per `S` block.
pub fn parse_m2(text: &str) -> Result<Vec<AnnotatedSample>> {
    let mut samples = Vec::new();
    let mut pending: Option<PendingBlock> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(block) = pending.take() {
                samples.push(block.finish()?);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('S').filter(|r| r.is_empty() || r.starts_with(' ')) {
            if let Some(block) = pending.take() {
                samples.push(block.finish()?);
            }
            let source = tokenize(rest);
            if source.is_empty() {
                return Err(Error::EmptySource { line: line_no });
            }
            pending = Some(PendingBlock {
                line: line_no,
                source,
                annotations: BTreeMap::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let block = pending
                .as_mut()
                .ok_or_else(|| parse_err(line_no, "annotation line before any S line"))?;
            let (id, edit) = parse_a_line(rest, line_no, block.source.len())?;
            let edits = block.annotations.entry(id).or_default();
            if let Some(edit) = edit {
                edits.push(edit);
            }
        } else {
            return Err(parse_err(line_no, format!("unrecognized line {line:?}")));
        }
    }
    if let Some(block) = pending.take() {
        samples.push(block.finish()?);
    }
    Ok(samples)
}

/// Canonical M2 serialization: LF endings, annotators ascending, edits sorted,
/// every block followed by a blank line.
pub fn emit_m2(samples: &[AnnotatedSample]) -> String {
    let mut out = String::new();
    for sample in samples {
        let _ = writeln!(out, "S {}", sample.source.text());
        for (id, edits) in &sample.annotations {
            if edits.is_empty() {
                let _ = writeln!(out, "A -1 -1|||{M2_NOOP}|||{M2_NONE}|||REQUIRED|||{M2_NONE}|||{id}");
                continue;
            }
            let mut sorted = edits.clone();
            sort_edits(&mut sorted);
            for e in &sorted {
                let replacement = if e.replacement.is_empty() {
                    M2_NONE.to_string()
                } else {
                    e.replacement.join(" ")
                };
                let label = e.type_label.as_deref().unwrap_or(M2_NONE);
                let _ = writeln!(
                    out,
                    "A {} {}|||{}|||{}|||REQUIRED|||{}|||{}",
                    e.start, e.end, label, replacement, M2_NONE, id
                );
            }
        }
        out.push('\n');
    }
    out
}

/// Pairs line `i` of the source stream with line `i` of the target stream.
pub fn load_parallel(src: &str, tgt: &str) -> Result<Vec<(TokenSeq, TokenSeq)>> {
    let src_lines = split_lines(src);
    let tgt_lines = split_lines(tgt);
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::LengthMismatch {
            what: "source and target line counts".into(),
            left: src_lines.len(),
            right: tgt_lines.len(),
        });
    }
    src_lines
        .iter()
        .zip(&tgt_lines)
        .enumerate()
        .map(|(i, (s, t))| {
            let source = tokenize(s);
            if source.is_empty() {
                return Err(Error::EmptySource { line: i + 1 });
            }
            Ok((source, tokenize(t)))
        })
        .collect()
}

/// Lines of a text stream with CR stripped; a trailing newline does not
/// produce an extra empty line.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).collect()
}
