//! Spoken-behavior augmentation and evaluation for task-oriented dialogue corpora.
//!
//! The crate turns text dialogues into annotated spoken-style dialogues
//! (cross-turn dictation, barge-in, disfluency, emotion), drives speech
//! synthesis through pluggable service clients, and provides the streaming
//! turn-taking decision engine and evaluation metrics used to study the result.

pub mod bargein;
pub mod clients;
pub mod corpus;
pub mod crossturn;
pub mod disfluency;
pub mod emotion;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod speakers;
pub mod synthesis;
pub mod text;
pub mod turn_taking;

pub use error::{Error, Result};
