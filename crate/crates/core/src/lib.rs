//! Unsupervised chord and key analysis of symbolic music.
//!
//! Two hidden Markov models with transposition-tied parameters are stacked:
//! the first explains the sounding pitch classes at every step of a work as
//! emissions of a hidden chord, the second explains the decoded chords as
//! emissions of a hidden key. Nothing about chord or key structure is given
//! to the models beyond the number of chord and key types; everything else
//! is learned with Baum-Welch from random starting points.
//!
//! The crate is organized as a pipeline:
//!
//! ```text
//! score_io ─▶ chord_layer ─▶ key_layer ─▶ translate ─▶ analytics
//!                  └──────── tied_hmm ────────┘
//! ```
//!
//! * [`score_io`] parses works, segments them into steps and reads/writes
//!   Roman-numeral annotations.
//! * [`tied_hmm`] is the generic engine: scaled forward-backward, tied
//!   Baum-Welch, Viterbi, multi-restart fitting and canonicalization.
//! * [`chord_layer`] and [`key_layer`] wire the engine to notes and chords.
//! * [`translate`] turns chord/key labels into Roman numerals.
//! * [`analytics`] compares against ground truth and computes corpus
//!   statistics.

pub mod analytics;
pub mod chord_layer;
pub mod counterpoint;
mod error;
pub mod key_layer;
pub mod pitch;
pub mod score_io;
pub mod theory;
pub mod tied_hmm;
mod tracks;
pub mod translate;

pub use error::{Error, Result};
pub use pitch::{PitchClass, PitchClassSet};
