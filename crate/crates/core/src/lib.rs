//! Recover context-list words from ASR decoder output.
//!
//! A speech recognizer built on a fixed vocabulary cannot emit words it has
//! never seen — city names, dealer names, people. When the expected words
//! are known ahead of time, a second decode with a phone-level escape path
//! yields raw phone sequences for the unknown stretches, and those can be
//! matched back against the context list. This crate implements that
//! post-processing step:
//!
//! * [`phoneset`] — phone inventory, articulatory feature vectors, and the
//!   pronunciation lexicon.
//! * [`align`] — confusion-cost-aware edit distance with full traceback.
//! * [`confusion`] — substitution-cost matrices built from feature-vector
//!   similarity and from decoder error statistics, plus their ensembles.
//! * [`recovery`] — two-pass matching (exact, then windowed fuzzy) and
//!   time-based merging into the primary transcript.
//! * [`simulate`] — seeded synthetic corpora for end-to-end testing without
//!   a recognizer.
//! * [`evaluate`] — scoring against ground-truth labels at word and
//!   sentence level.
//!
//! All pipeline types are immutable once constructed and safe to share
//! across threads; utterances can be processed in parallel.

pub mod align;
pub mod confusion;
mod error;
pub mod evaluate;
pub mod phoneset;
pub mod recovery;
pub mod simulate;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
