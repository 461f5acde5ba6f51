//! Chunk-level multi-reference evaluation for grammatical error correction.
//!
//! The pipeline:
//!
//! 1. load references from M2 ([`corpus::parse_m2`]) and extract hypothesis
//!    edits, either from M2 or by aligning plain text ([`align`]);
//! 2. partition the source and every correction of it into the same chunk
//!    sequence ([`chunker::partition`]);
//! 3. score the changed chunks with length weighting under the dependent or
//!    independent assumption, at corpus or sentence level ([`scorer`],
//!    [`evaluate`]).
//!
//! [`analysis`] adds hold-one-out boundary statistics of a reference set and
//! Pearson/Spearman correlation against human rankings.
//!
//! ```
//! use cleme::{chunker, corpus, scorer};
//!
//! let refs = corpus::parse_m2(
//!     "S the technologies were\n\
//!      A 0 1|||U:DET|||-NONE-|||REQUIRED|||-NONE-|||0\n\
//!      A 2 3|||R:VERB|||have|||REQUIRED|||-NONE-|||0\n",
//! )
//! .unwrap();
//! let hyp = cleme::align::extract_edits(&refs[0].source, &corpus::tokenize("technologies have"));
//! let cs = chunker::partition(&refs[0].source, &hyp, &refs[0].reference_sets()).unwrap();
//! let cfg = scorer::WeightConfig::corpus(3.0);
//! let (counts, _) = scorer::score_sentence_dependent(&cs, &cfg, scorer::FnOnMismatch::FpOnly);
//! assert_eq!((counts.tp_n, counts.fp_n), (2, 0));
//! ```

pub mod align;
pub mod analysis;
pub mod chunker;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod report;
pub mod scorer;

pub use error::{Error, Result};
