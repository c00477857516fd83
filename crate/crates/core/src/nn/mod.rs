//! Minimal neural-network core: architectures, weights, forward and
//! reverse-mode passes, and SGD.

pub mod latl;
mod network;
mod params;
mod sgd;
mod spec;

pub use network::{argmax, backward, cross_entropy, forward, Gradients, Network};
pub(crate) use network::run_backward;
pub use params::{LayerKind, ParamLayer, ParamSet};
pub use sgd::{sgd_step, Sgd};
pub use spec::{parse_extent, Extent, LayerSpec, ModelSpec};
