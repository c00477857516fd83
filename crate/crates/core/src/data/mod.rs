//! Labeled image sets and their on-disk forms.

mod dataset;
pub mod idx;
pub mod lads;
pub mod synth;

pub use dataset::{LabeledDataset, Provenance};
pub use synth::SynthConfig;
