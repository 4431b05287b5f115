//! Corpus and annotation I/O, and segmentation of works into steps.
//!
//! A work is stored as one JSON file:
//!
//! ```json
//! {
//!   "version": 1,
//!   "id": "chorale-001",
//!   "timesig": [4, 4],
//!   "keysig": -1,
//!   "pickup": "1",
//!   "voices": [
//!     [{"on": "0", "dur": "1", "pc": 5, "oct": 4}, {"on": "1", "dur": "1", "pc": null, "oct": null}]
//!   ]
//! }
//! ```
//!
//! Times are quarter notes written as `"p/q"` (or `"p"`); `pc: null` is a
//! rest. `pickup` is the length of an anacrusis and defaults to `"0"`.

mod annotation;
mod work;

pub use annotation::{
    format_annotation, parse_annotation, parse_ground_truth, read_annotation, validate_annotation, write_annotation,
    write_annotation_dir, RomanAnnotation, RomanSpan,
};
pub use work::{
    parse_corpus, parse_work, read_work, segment_steps, write_work, Event, NoteEvent, Step, StepSequence,
    TimeSignature, VoiceNote, Work,
};

pub use num_rational::Rational64;
