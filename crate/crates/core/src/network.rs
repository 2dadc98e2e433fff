//! The feed-forward network model, its JSON loader, and the exact forward
//! evaluator used for witness replay.
//!
//! A network is an input dimension plus an ordered list of layers, each a
//! weight matrix, bias vector, and activation. `weights[i][j]` multiplies
//! input `j` into neuron `i`. Evaluation applies `act(W x + b)` layer by
//! layer with a fixed ascending accumulation order so that replaying a
//! witness is deterministic.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numerics::{mat_vec, relu_vec, Matrix, Vector};

/// Per-layer activation. `Linear` is the identity, conventionally used for
/// the output layer of value networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

/// One dense layer: `act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Matrix,
    bias: Vector,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.dim() {
            return Err(Error::DimensionMismatch {
                context: "layer bias".into(),
                expected: weights.rows(),
                found: bias.dim(),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Number of neurons (outputs) in this layer.
    pub fn width(&self) -> usize {
        self.weights.rows()
    }

    /// Number of inputs this layer consumes.
    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }
}

/// A validated feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidParameter("input_dim must be >= 1".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidParameter(
                "network must have at least one layer".into(),
            ));
        }
        let mut fan_in = input_dim;
        for (idx, layer) in layers.iter().enumerate() {
            if layer.fan_in() != fan_in {
                // Layer numbering here follows the convention that the input
                // layer is layer 1, so stored layer idx maps to number idx+2.
                return Err(Error::LayerShapeMismatch {
                    earlier: idx + 1,
                    later: idx + 2,
                    produced: fan_in,
                    consumed: layer.fan_in(),
                });
            }
            fan_in = layer.width();
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("validated non-empty").width()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total layer count including the input layer.
    pub fn num_layers(&self) -> usize {
        self.layers.len() + 1
    }

    /// Evaluate the network at `x`: the fold of [`layer_forward`] over the
    /// layers, in order.
    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "network input".into(),
                expected: self.input_dim,
                found: x.dim(),
            });
        }
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer_forward(layer, &cur)?;
        }
        Ok(cur)
    }
}

/// Evaluate one layer: `act(W x + b)`.
pub fn layer_forward(layer: &Layer, x: &Vector) -> Result<Vector> {
    let wx = mat_vec(layer.weights(), x)?;
    let pre: Vec<f64> = wx
        .iter()
        .zip(layer.bias().iter())
        .map(|(a, b)| a + b)
        .collect();
    let pre = Vector::new(pre)?;
    Ok(match layer.activation() {
        Activation::Relu => relu_vec(&pre),
        Activation::Linear => pre,
    })
}

#[derive(Deserialize)]
struct RawLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: String,
}

#[derive(Deserialize)]
struct RawNetwork {
    input_dim: usize,
    layers: Vec<RawLayer>,
}

/// Parse a network from its JSON text form.
///
/// The document shape is
/// `{"input_dim": m, "layers": [{"weights": [[...]], "bias": [...],
/// "activation": "relu"|"linear"}]}` where `weights[i][j]` multiplies input
/// `j` into neuron `i`.
pub fn parse_network(text: &str) -> Result<Network> {
    let raw: RawNetwork = serde_json::from_str(text).map_err(|e| Error::NetworkLoad {
        path: "<inline>".into(),
        message: format!("line {}, column {}: {e}", e.line(), e.column()),
    })?;
    let mut layers = Vec::with_capacity(raw.layers.len());
    for (idx, rl) in raw.layers.into_iter().enumerate() {
        let activation = match rl.activation.as_str() {
            "relu" => Activation::Relu,
            "linear" => Activation::Linear,
            other => {
                return Err(Error::NetworkLoad {
                    path: "<inline>".into(),
                    message: format!(
                        "layer {}: unknown activation {other:?} (expected \"relu\" or \"linear\")",
                        idx + 2
                    ),
                })
            }
        };
        let weights = Matrix::from_rows(&rl.weights)?;
        let bias = Vector::new(rl.bias)?;
        layers.push(Layer::new(weights, bias, activation)?);
    }
    Network::new(raw.input_dim, layers)
}

/// Load and validate a network from a JSON file.
pub fn load_network<P: AsRef<Path>>(path: P) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_network(&text).map_err(|e| match e {
        Error::NetworkLoad { message, .. } => Error::NetworkLoad {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}
