//! Building blocks for noise-suppression challenge tooling.
//!
//! The crate covers the whole lifecycle of a speech-enhancement benchmark:
//!
//! - [`audio`] and [`activity`]: 16 kHz mono PCM I/O, RMS levels and
//!   energy-gated frame activity.
//! - [`synthesis`]: reproducible noisy-speech mixing at a segmental SNR.
//! - [`curation`]: clean-speech and noise corpus preparation.
//! - [`testset`]: four-category evaluation set construction.
//! - [`eval`]: crowdsourced ACR rating analysis (spam filtering, MOS,
//!   significance testing and ranking).
//! - [`rtcheck`]: real-time track compliance measurement for frame-based
//!   enhancement backends.
//!
//! Every random choice is driven by explicit seeds (see [`seed`]), so the same
//! inputs always produce the same manifests and waveforms.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod audio;
pub mod curation;
pub mod eval;
pub mod jsonl;
pub mod rtcheck;
pub mod seed;
pub mod synthesis;
pub mod testset;

pub use audio::{AudioClip, AudioError, LevelDbfs, SAMPLE_RATE_HZ};
