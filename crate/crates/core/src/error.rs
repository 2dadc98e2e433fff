//! Shared error type for the verification pipeline.

use thiserror::Error;

/// Errors produced anywhere in the encode/solve pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix operation was applied to incompatible shapes.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    /// A numeric value was NaN or infinite where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A tolerance or option value violated its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two consecutive layers have incompatible shapes.
    #[error("layer shape mismatch: layer {earlier} produces {produced} values but layer {later} consumes {consumed}")]
    LayerShapeMismatch {
        earlier: usize,
        later: usize,
        produced: usize,
        consumed: usize,
    },

    /// The network file could not be read or parsed.
    #[error("failed to load network from {path}: {message}")]
    NetworkLoad { path: String, message: String },

    /// A property file failed to parse.
    #[error("property syntax error at line {line}, column {column}: {message}")]
    PropertySyntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// A property referenced a variable index outside the network's shape.
    #[error("property references {var}[{index}] but the network has {dim} {var} variables")]
    PropertyIndexOutOfRange {
        var: &'static str,
        index: usize,
        dim: usize,
    },

    /// Big-M derivation needs finite pre-activation bounds.
    #[error(
        "neuron {neuron} in layer {layer} has unbounded pre-activation bounds; \
         bound the input set (or pass an explicit big-M constant) to encode ReLU layers"
    )]
    UnboundedPreActivation { layer: usize, neuron: usize },

    /// The exhaustive oracle refuses instances above its pattern cap.
    #[error("phase enumeration cap exceeded: {unstable} unstable neurons > {cap}")]
    OracleCapExceeded { unstable: usize, cap: usize },

    /// An LP text file failed to parse.
    #[error("LP file parse error at line {line}: {message}")]
    LpFormat { line: usize, message: String },

    /// I/O failure wrapped with the path involved.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
