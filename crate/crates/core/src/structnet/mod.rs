//! Masked feed-forward network: topology presets, Glorot initialization,
//! forward pass and hand-derived backpropagation.

pub mod network;
pub mod params;
pub mod regions;
pub mod topology;

pub use network::{argmax, backward, backward_named, forward, softmax, ForwardTrace};
pub use params::{densify, xavier_bounds, xavier_init, DenseLayer, LayerParams, Model, NetworkParams, XavierFans};
pub use regions::{build_region_map, parse_region, Region, MOUTH, REGIONS};
pub use topology::{
    build_fc_spec, build_spec, build_structured_spec, param_count, ConnectivitySpec, LayerTopology, Preset,
};
