//! Rhythmogram classification for emotional disadaptation screening.
//!
//! The pipeline reads three-file RR-interval records ([`ingest`]), cuts them
//! into standardized tail-anchored segments or spectrogram fragments
//! ([`preprocess`]), trains logistic regression, gradient boosting or an
//! EasyEnsemble of AdaBoost members ([`learn`]), and scores held-out records
//! by segment voting ([`evaluate`]). [`synth`] generates labeled corpora with
//! a known spectral separation, and [`pipeline`] wires the stages together
//! for the command-line tool.

pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod learn;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod synth;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
