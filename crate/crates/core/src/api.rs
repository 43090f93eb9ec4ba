//! Request and response bodies of the HTTP service, and model loading
//! shared by sessions and one-shot operations.

use serde::{Deserialize, Serialize};

use crate::bench::{BenchReport, DEFAULT_BUDGET_MICROS};
use crate::io::{load_obj, load_skin, ScalpelPathFile};
use crate::mesh::{BuildMode, Mesh, MeshInput};
use crate::protocol::{Envelope, ModelSource};
use crate::shapes::{bunny_surrogate, flat_grid, skinned_cylinder, subdivide};
use crate::skinning::Skeleton;
use crate::tear::{BladeExtent, SkippedSegment, TearDelta};

/// Upper bound on procedural model resolution accepted from clients.
pub const MAX_PROCEDURAL_RESOLUTION: usize = 1024;
pub const MAX_SUBDIVISION_LEVELS: usize = 3;

pub struct LoadedModel {
    pub mesh: Mesh,
    pub skeleton: Option<Skeleton>,
    pub warnings: Vec<String>,
}

fn check_resolution(n: usize, what: &str) -> Result<(), String> {
    if n == 0 || n > MAX_PROCEDURAL_RESOLUTION {
        Err(format!("{what} must be in 1..={MAX_PROCEDURAL_RESOLUTION}"))
    } else {
        Ok(())
    }
}

fn model_input(source: &ModelSource) -> Result<(MeshInput, Option<Skeleton>, Vec<String>, BuildMode), String> {
    Ok(match source {
        ModelSource::Bunny => (bunny_surrogate(), None, vec![], BuildMode::Strict),
        ModelSource::Grid { n } => {
            check_resolution(*n, "grid resolution")?;
            (flat_grid(*n, *n, 1.0), None, vec![], BuildMode::Strict)
        }
        ModelSource::Cylinder {
            radius,
            height,
            rings,
            segments,
        } => {
            check_resolution(*rings, "rings")?;
            check_resolution(*segments, "segments")?;
            if *segments < 3 || !(*radius > 0.0 && radius.is_finite()) || !(*height > 0.0 && height.is_finite()) {
                return Err("cylinder needs positive size and at least 3 segments".into());
            }
            let (input, sk) = skinned_cylinder(*radius, *height, *rings, *segments);
            (input, Some(sk), vec![], BuildMode::Strict)
        }
        ModelSource::Obj { obj, skin } => {
            let data = load_obj(obj.as_bytes()).map_err(|e| e.to_string())?;
            let mut input = data.mesh;
            let skeleton = match skin {
                Some(text) => {
                    let f = load_skin(text.as_bytes()).map_err(|e| e.to_string())?;
                    if f.skins.len() != input.positions.len() {
                        return Err(format!(
                            "skin lists {} vertices, mesh has {}",
                            f.skins.len(),
                            input.positions.len()
                        ));
                    }
                    input.skins = Some(f.skins);
                    Some(f.skeleton)
                }
                None => None,
            };
            (input, skeleton, data.warnings, BuildMode::Lenient)
        }
        ModelSource::Subdivided { model, levels } => {
            if *levels > MAX_SUBDIVISION_LEVELS {
                return Err(format!("at most {MAX_SUBDIVISION_LEVELS} subdivision levels"));
            }
            let (mut input, sk, warnings, mode) = model_input(model)?;
            for _ in 0..*levels {
                input = subdivide(&input);
            }
            (input, sk, warnings, mode)
        }
    })
}

/// Builds the mesh and skeleton described by `source`.
pub fn load_model_source(source: &ModelSource) -> Result<LoadedModel, String> {
    let (input, skeleton, mut warnings, mode) = model_input(source)?;
    let faces = input.faces.len();
    let mesh = Mesh::build(input, mode).map_err(|e| e.to_string())?;
    if mesh.live_face_count() < faces {
        warnings.push(format!("{} degenerate faces dropped", faces - mesh.live_face_count()));
    }
    if let Some(sk) = &skeleton {
        if let Some(v) = mesh
            .vertices()
            .iter()
            .position(|v| v.skin.iter().any(|i| i.bone as usize >= sk.len()))
        {
            return Err(format!("vertex {v} references an unknown bone"));
        }
    }
    Ok(LoadedModel {
        mesh,
        skeleton,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub protocol_version: u32,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDigest {
    pub session: String,
    pub revision: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRequest {
    pub transcript: Vec<Envelope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResponse {
    pub messages: usize,
    pub revision: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TearRequest {
    pub model: ModelSource,
    pub path: ScalpelPathFile,
    #[serde(default)]
    pub blade_extent: BladeExtent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TearResponse {
    pub deltas: Vec<TearDelta>,
    pub skipped: Vec<SkippedSegment>,
    pub delta_digest: String,
    pub vertices: usize,
    pub faces: usize,
    /// Torn mesh as OBJ text.
    pub obj: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeRequest {
    pub model: ModelSource,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeResponse {
    pub vertices: usize,
    pub particles: usize,
    pub micros: f64,
    /// Clustering document text.
    pub clustering: String,
}

fn default_repetitions() -> usize {
    20
}

fn default_range() -> Option<f64> {
    Some(0.1)
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET_MICROS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRequest {
    pub model: ModelSource,
    #[serde(default)]
    pub mesh_name: Option<String>,
    pub path: ScalpelPathFile,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Particle range for cluster repair; `null` skips that stage.
    #[serde(default = "default_range")]
    pub particle_range: Option<f64>,
    #[serde(default)]
    pub blade_extent: BladeExtent,
    #[serde(default = "default_budget")]
    pub budget_micros: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResponse {
    pub report: BenchReport,
    /// Per-stage CSV report.
    pub csv: String,
    pub budget_micros: f64,
    /// Segment p50 under budget and the run did real work.
    pub passed: bool,
}
