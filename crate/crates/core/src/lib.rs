//! Non-parallel text style transfer.
//!
//! Two adversarially trained sequence-to-sequence models (one decoder per
//! style, or a single decoder conditioned on learned style embeddings), the
//! plain auto-encoder baseline, and two evaluation metrics: transfer strength
//! (a style classifier's verdict on transferred sentences) and content
//! preservation (cosine similarity of pooled pretrained word vectors).
//!
//! Everything numeric runs on the small reverse-mode tape in [`numerics`].

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod numerics;
pub mod textpipe;
pub mod training;

pub use error::{Error, Result};
