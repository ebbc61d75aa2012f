//! Metric graphs with self-adjoint vertex conditions: scattering matrices,
//! spectra, heat traces and the index of the induced factorisation.

pub mod cli;
pub mod conditions;
pub mod error;
pub mod format;
pub mod graph;
pub mod heat;
pub mod index;
pub mod linalg;
pub mod random;
pub mod scattering;
pub mod secular;
pub mod verify;

pub use conditions::{ConditionsAssignment, Preset, VertexConditions};
pub use error::{Error, Result};
pub use graph::{build_graph, Bond, GraphSpec, MetricGraph};
