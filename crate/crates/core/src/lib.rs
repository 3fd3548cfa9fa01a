//! Automatic corner-vowel articulation features from speech recordings.
//!
//! Corner-vowel frames (/a/, /i/, /u/) are picked out of a phone
//! posteriorgram, their first two formants are measured with Burg linear
//! prediction, and the per-vowel representatives feed the classic
//! articulation measures: vowel space area (VSA), vowel articulation index
//! (VAI), formant centralization ratio (FCR) and F2i/F2u.
//!
//! The crate is organised bottom-up:
//!
//! - [`audio`]: WAV decoding, resampling, silence trimming, frame grids
//! - [`formant`]: Burg LPC, root finding, per-frame F1/F2 tracking
//! - [`posterior`]: posteriorgram interchange files and frame selection
//! - [`features`]: representative formants and the four features
//! - [`stats`]: Pearson, t-tests, Williams' test, Bonferroni
//! - [`synth`]: synthetic vowels and centralization-controlled cohorts
//! - [`pipeline`]: per-recording and cohort orchestration, reports

pub mod audio;
pub mod error;
pub mod features;
pub mod formant;
pub mod par;
pub mod pipeline;
pub mod posterior;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
