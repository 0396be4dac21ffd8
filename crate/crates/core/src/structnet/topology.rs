use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::regions::build_region_map;
use crate::dataset::{NUM_COORDS, NUM_POINTS};
use crate::error::{Error, Result};

pub const HIDDEN1: usize = NUM_POINTS;
pub const HIDDEN2: usize = super::regions::REGIONS.len();
pub const MIN_OUTPUTS: usize = 2;
pub const MAX_OUTPUTS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Per-landmark first layer, per-region second layer.
    Structured,
    /// Same layer widths, every edge present.
    #[serde(rename = "fc")]
    FullyConnected,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Structured => "structured",
            Preset::FullyConnected => "fc",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "structured" => Ok(Preset::Structured),
            "fc" | "fully_connected" | "fully-connected" => Ok(Preset::FullyConnected),
            _ => Err(Error::Config(format!("unknown preset {s:?}"))),
        }
    }
}

/// In-edges of one layer in compressed row form: neuron `i` reads
/// `sources[offsets[i]..offsets[i + 1]]` from the previous layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTopology {
    inputs: usize,
    offsets: Vec<usize>,
    sources: Vec<usize>,
}

impl LayerTopology {
    pub fn from_edges(inputs: usize, edges: &[Vec<usize>]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(edges.len() + 1);
        let mut sources = Vec::new();
        offsets.push(0);
        for neuron in edges {
            if neuron.is_empty() || neuron.iter().any(|&s| s >= inputs) {
                return Err(Error::Model("edge list references a missing source".into()));
            }
            if neuron.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Model("edge list must be strictly increasing".into()));
            }
            sources.extend_from_slice(neuron);
            offsets.push(sources.len());
        }
        Ok(Self { inputs, offsets, sources })
    }

    fn dense(inputs: usize, outputs: usize) -> Self {
        let edges: Vec<Vec<usize>> = (0..outputs).map(|_| (0..inputs).collect()).collect();
        Self::from_edges(inputs, &edges).unwrap()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn neurons(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.sources.len()
    }

    pub fn in_edges(&self, neuron: usize) -> &[usize] {
        &self.sources[self.offsets[neuron]..self.offsets[neuron + 1]]
    }

    /// Index range of `neuron`'s weights in the layer's flat weight vector.
    pub fn edge_range(&self, neuron: usize) -> std::ops::Range<usize> {
        self.offsets[neuron]..self.offsets[neuron + 1]
    }

    /// For each source, how many neurons of this layer read it.
    pub fn source_fan_out(&self) -> Vec<usize> {
        let mut counts = vec![0; self.inputs];
        for &s in &self.sources {
            counts[s] += 1;
        }
        counts
    }
}

/// Topology of a 300 -> 100 -> 10 -> K network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivitySpec {
    preset: Preset,
    layers: Vec<LayerTopology>,
}

fn check_outputs(num_outputs: usize) -> Result<()> {
    if (MIN_OUTPUTS..=MAX_OUTPUTS).contains(&num_outputs) {
        Ok(())
    } else {
        Err(Error::InvalidOutputCount(num_outputs))
    }
}

pub fn build_structured_spec(num_outputs: usize) -> Result<ConnectivitySpec> {
    check_outputs(num_outputs)?;
    let h1: Vec<Vec<usize>> = (0..HIDDEN1).map(|n| vec![3 * n, 3 * n + 1, 3 * n + 2]).collect();
    let region_map = build_region_map();
    let h2: Vec<Vec<usize>> = (0..HIDDEN2)
        .map(|r| (0..HIDDEN1).filter(|&p| region_map[p] == r).collect())
        .collect();
    Ok(ConnectivitySpec {
        preset: Preset::Structured,
        layers: vec![
            LayerTopology::from_edges(NUM_COORDS, &h1)?,
            LayerTopology::from_edges(HIDDEN1, &h2)?,
            LayerTopology::dense(HIDDEN2, num_outputs),
        ],
    })
}

pub fn build_fc_spec(num_outputs: usize) -> Result<ConnectivitySpec> {
    check_outputs(num_outputs)?;
    Ok(ConnectivitySpec {
        preset: Preset::FullyConnected,
        layers: vec![
            LayerTopology::dense(NUM_COORDS, HIDDEN1),
            LayerTopology::dense(HIDDEN1, HIDDEN2),
            LayerTopology::dense(HIDDEN2, num_outputs),
        ],
    })
}

pub fn build_spec(preset: Preset, num_outputs: usize) -> Result<ConnectivitySpec> {
    match preset {
        Preset::Structured => build_structured_spec(num_outputs),
        Preset::FullyConnected => build_fc_spec(num_outputs),
    }
}

impl ConnectivitySpec {
    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn layers(&self) -> &[LayerTopology] {
        &self.layers
    }

    pub fn layer(&self, idx: usize) -> &LayerTopology {
        &self.layers[idx]
    }

    pub fn num_outputs(&self) -> usize {
        self.layers.last().unwrap().neurons()
    }

    /// `[300, 100, 10, K]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs())
            .chain(self.layers.iter().map(LayerTopology::neurons))
            .collect()
    }

    /// Out-edge count of every neuron in non-input layer `idx`; zero for
    /// the output layer.
    pub fn fan_out(&self, idx: usize) -> Vec<usize> {
        match self.layers.get(idx + 1) {
            Some(next) => next.source_fan_out(),
            None => vec![0; self.layers[idx].neurons()],
        }
    }

    /// Per-neuron edge lists, layer by layer.
    pub fn edge_lists(&self) -> Vec<Vec<Vec<usize>>> {
        self.layers
            .iter()
            .map(|l| (0..l.neurons()).map(|n| l.in_edges(n).to_vec()).collect())
            .collect()
    }
}

/// Total weights plus biases.
pub fn param_count(spec: &ConnectivitySpec) -> usize {
    spec.layers.iter().map(|l| l.num_edges() + l.neurons()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_h1_reads_its_triple() {
        let spec = build_structured_spec(2).unwrap();
        assert_eq!(spec.layer(0).in_edges(7), &[21, 22, 23]);
        let consumed: Vec<usize> = (0..HIDDEN1).flat_map(|n| spec.layer(0).in_edges(n).to_vec()).collect();
        assert_eq!(consumed, (0..NUM_COORDS).collect::<Vec<_>>());
    }

    #[test]
    fn structured_h2_reads_regions() {
        let spec = build_structured_spec(2).unwrap();
        assert_eq!(spec.layer(1).in_edges(5), (48..=67).collect::<Vec<_>>().as_slice());
        assert_eq!(spec.layer(1).source_fan_out(), vec![1; HIDDEN1]);
    }

    #[test]
    fn output_fully_connected() {
        let spec = build_structured_spec(9).unwrap();
        assert_eq!(spec.layer(2).neurons(), 9);
        for n in 0..9 {
            assert_eq!(spec.layer(2).in_edges(n).len(), 10);
        }
    }

    #[test]
    fn output_count_bounds() {
        assert!(matches!(build_structured_spec(1), Err(Error::InvalidOutputCount(1))));
        assert!(matches!(build_fc_spec(10), Err(Error::InvalidOutputCount(10))));
    }

    #[test]
    fn fc_shape() {
        let fc = build_fc_spec(2).unwrap();
        assert_eq!(fc.layer(0).in_edges(0).len(), 300);
        assert_eq!(fc.layer_sizes(), build_structured_spec(2).unwrap().layer_sizes());
        assert_eq!(fc.layer_sizes(), vec![300, 100, 10, 2]);
    }

    #[test]
    fn param_counts() {
        assert_eq!(param_count(&build_structured_spec(2).unwrap()), 100 * 4 + 110 + 2 * 11);
        assert_eq!(param_count(&build_structured_spec(2).unwrap()), 532);
        assert_eq!(param_count(&build_structured_spec(9).unwrap()), 609);
        assert_eq!(param_count(&build_fc_spec(2).unwrap()), 31132);
    }

    #[test]
    fn fan_out_under_mask() {
        let spec = build_structured_spec(3).unwrap();
        assert_eq!(spec.fan_out(0), vec![1; 100]);
        assert_eq!(spec.fan_out(1), vec![3; 10]);
        assert_eq!(spec.fan_out(2), vec![0; 3]);
    }
}
