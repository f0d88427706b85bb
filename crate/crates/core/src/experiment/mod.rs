//! Config-driven experiments: layouts, meshes, sweeps and their CSV/VTK/JSON outputs.

mod config;
mod layout;
mod manifest;
mod run;

use thiserror::Error;

use crate::expansion::ExpansionError;
use crate::fem::FemError;
use crate::geometry::GeometryError;
use crate::localization::LocalizationError;
use crate::mesh::MeshError;

pub use config::{ExperimentConfig, GeometrySource, LayoutParams, Mode, Problem, SCHEMA_VERSION};
pub use layout::{generate_layout, LayoutPattern, LayoutSpec};
pub use manifest::{MeshStats, Phase, RunManifest};
pub use run::{
    cmd_layout, cmd_mesh, compare_rows, eta_sweep_csv, remainder_csv, run_experiment, EtaOutcome, EtaRow, Prepared,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible layout: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
