//! CHEB-QKAN layers and networks, quantum and classical.

mod classical;
mod layer;
mod spec;

pub use classical::{chebyshev_all, chebyshev_t, classical_layer_eval, classical_network_eval};
pub use layer::{
    build_layer, build_network, layer_aux_count, network_aux_count, step_cheb, step_dilate,
    step_lcu, step_mul, step_sum, weight_encodings, LayerOptions, Network, Perturbation,
    WeightEncoder,
};
pub use spec::{LayerSpec, QkanSpec};
