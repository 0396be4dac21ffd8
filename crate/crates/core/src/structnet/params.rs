use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topology::{build_spec, param_count, ConnectivitySpec, Preset};
use crate::error::{Error, Result};

/// Weights (one per in-edge, in edge order) and biases of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Edge-compact parameters: masked edges have no storage at all. Gradients
/// and Adam moments share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
}

impl NetworkParams {
    pub fn zeros(spec: &ConnectivitySpec) -> Self {
        let layers = spec
            .layers()
            .iter()
            .map(|l| LayerParams { weights: vec![0.0; l.num_edges()], biases: vec![0.0; l.neurons()] })
            .collect();
        Self { layers }
    }

    pub fn matches(&self, spec: &ConnectivitySpec) -> bool {
        self.layers.len() == spec.layers().len()
            && self.layers.iter().zip(spec.layers()).all(|(p, l)| {
                p.weights.len() == l.num_edges() && p.biases.len() == l.neurons()
            })
    }

    pub fn same_shape(&self, other: &NetworkParams) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights.len() == b.weights.len() && a.biases.len() == b.biases.len()
            })
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every value, layer by layer, weights before biases.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    /// Mutable access to the `i`-th value in [`values`](Self::values) order.
    pub fn value_mut(&mut self, mut i: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if i < layer.weights.len() {
                return &mut layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return &mut layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index out of range")
    }

    pub fn weights(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter())
    }

    pub fn sum_squared_weights(&self) -> f64 {
        self.weights().map(|w| w * w).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn fill(&mut self, value: f64) {
        self.values_mut().for_each(|v| *v = value);
    }
}

/// Row-major `neurons x inputs` matrix with zeros at masked positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }
}

/// Expands edge-compact params into dense matrices.
pub fn densify(spec: &ConnectivitySpec, params: &NetworkParams) -> Vec<DenseLayer> {
    spec.layers()
        .iter()
        .zip(&params.layers)
        .map(|(topo, p)| {
            let (rows, cols) = (topo.neurons(), topo.inputs());
            let mut weights = vec![0.0; rows * cols];
            for n in 0..rows {
                for (e, &s) in topo.edge_range(n).zip(topo.in_edges(n)) {
                    weights[n * cols + s] = p.weights[e];
                }
            }
            DenseLayer { rows, cols, weights, biases: p.biases.clone() }
        })
        .collect()
}

/// Which fan counts feed the Glorot bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XavierFans {
    /// Per-neuron in-edge and out-edge counts under the mask.
    #[default]
    Masked,
    /// Previous and current layer widths, as for a dense matrix.
    Dense,
}

impl FromStr for XavierFans {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "masked" => Ok(XavierFans::Masked),
            "dense" => Ok(XavierFans::Dense),
            _ => Err(Error::Config(format!("unknown xavier fan mode {s:?}"))),
        }
    }
}

/// Uniform Glorot bound `sqrt(6 / (fan_in + fan_out))` for every neuron of
/// every layer.
pub fn xavier_bounds(spec: &ConnectivitySpec, fans: XavierFans) -> Vec<Vec<f64>> {
    spec.layers()
        .iter()
        .enumerate()
        .map(|(idx, topo)| {
            let fan_out = spec.fan_out(idx);
            (0..topo.neurons())
                .map(|n| {
                    let (fi, fo) = match fans {
                        XavierFans::Masked => (topo.in_edges(n).len(), fan_out[n]),
                        XavierFans::Dense => (topo.inputs(), topo.neurons()),
                    };
                    (6.0 / (fi + fo) as f64).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Weights uniform within the neuron's Glorot bound, biases zero.
pub fn xavier_init(spec: &ConnectivitySpec, seed: u64, fans: XavierFans) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = xavier_bounds(spec, fans);
    let mut params = NetworkParams::zeros(spec);
    for ((topo, layer), bounds) in spec.layers().iter().zip(&mut params.layers).zip(&bounds) {
        for (n, &bound) in bounds.iter().enumerate() {
            for e in topo.edge_range(n) {
                layer.weights[e] = rng.gen_range(-bound..=bound);
            }
        }
    }
    params
}

pub const MODEL_FORMAT: &str = "gfe-model";
pub const MODEL_VERSION: u32 = 1;

/// A trained network plus what is needed to reconstruct it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ConnectivitySpec,
    pub params: NetworkParams,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    preset: Preset,
    seed: u64,
    layer_sizes: Vec<usize>,
    param_count: usize,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    neurons: Vec<NeuronFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronFile {
    inputs: Vec<usize>,
    weights: Vec<f64>,
    bias: f64,
}

impl Model {
    pub fn to_json(&self) -> String {
        let layers = self
            .spec
            .layers()
            .iter()
            .zip(&self.params.layers)
            .map(|(topo, p)| LayerFile {
                neurons: (0..topo.neurons())
                    .map(|n| NeuronFile {
                        inputs: topo.in_edges(n).to_vec(),
                        weights: p.weights[topo.edge_range(n)].to_vec(),
                        bias: p.biases[n],
                    })
                    .collect(),
            })
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            preset: self.spec.preset(),
            seed: self.seed,
            layer_sizes: self.spec.layer_sizes(),
            param_count: param_count(&self.spec),
            layers,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parses and validates a model document: the edge lists must be exactly
    /// those of the named preset and every count must agree.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported format {} v{}", file.format, file.version)));
        }
        let outputs = *file.layer_sizes.last().ok_or_else(|| Error::Model("no layers".into()))?;
        let spec = build_spec(file.preset, outputs)?;
        if spec.layer_sizes() != file.layer_sizes || param_count(&spec) != file.param_count {
            return Err(Error::Model("layer sizes or parameter count disagree with preset".into()));
        }
        if file.layers.len() != spec.layers().len() {
            return Err(Error::Model("wrong number of layers".into()));
        }
        let mut params = NetworkParams::zeros(&spec);
        for ((topo, lf), p) in spec.layers().iter().zip(&file.layers).zip(&mut params.layers) {
            if lf.neurons.len() != topo.neurons() {
                return Err(Error::Model("wrong number of neurons".into()));
            }
            for (n, nf) in lf.neurons.iter().enumerate() {
                if nf.inputs != topo.in_edges(n) || nf.weights.len() != nf.inputs.len() {
                    return Err(Error::Model(format!("neuron {n} edges disagree with preset")));
                }
                if !nf.bias.is_finite() || nf.weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::Model("non-finite parameter".into()));
                }
                p.weights[topo.edge_range(n)].copy_from_slice(&nf.weights);
                p.biases[n] = nf.bias;
            }
        }
        Ok(Model { spec, params, seed: file.seed })
    }
}
