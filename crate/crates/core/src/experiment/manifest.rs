use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::Result;
use crate::mesh::{mesh_quality, Mesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub h: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub inclusions: usize,
    pub min_angle_deg: f64,
    pub max_aspect: f64,
}

impl MeshStats {
    pub fn of(mesh: &Mesh) -> Self {
        let q = mesh_quality(mesh);
        MeshStats {
            h: mesh.h_target(),
            vertices: q.num_vertices,
            triangles: q.num_triangles,
            inclusions: mesh.num_regions(),
            min_angle_deg: q.min_angle_deg,
            max_aspect: q.max_aspect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Record of one run: inputs, timings and every file written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: Option<String>,
    pub code_version: String,
    pub mesh: Option<MeshStats>,
    pub phases: Vec<Phase>,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: Option<String>) -> Self {
        RunManifest {
            command: command.to_string(),
            config_hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            mesh: None,
            phases: Vec::new(),
            artifacts: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Runs `f` and records its wall-clock time under `name`.
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(Phase { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    /// Writes `contents` to `path` and lists it as an artifact.
    pub fn write(&mut self, path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, contents)?;
        self.artifacts.push(path.to_path_buf());
        Ok(())
    }

    pub fn record(&mut self, path: impl AsRef<Path>) {
        self.artifacts.push(path.as_ref().to_path_buf());
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Writes `manifest.json` into `dir`; the manifest lists itself.
    pub fn save(&mut self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let path = dir.as_ref().join("manifest.json");
        self.artifacts.push(path.clone());
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(&path, s)?;
        Ok(path)
    }
}
