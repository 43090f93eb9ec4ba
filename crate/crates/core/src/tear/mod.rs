//! Scalpel-driven destructive tearing.
//!
//! A scalpel stroke is thinned by [`sample_path`], consecutive samples become
//! chained convex [`TearCell`]s, and every cell turns into a [`TearDelta`]
//! that removes the faces inside it and replaces the faces crossing it with
//! their clipped remainder.

mod cell;
mod clip;
mod path;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::mesh::{FaceId, Mesh, MeshError, Vertex, VertexId};

pub use cell::{build_cell, TearCell, BLADE_HI, BLADE_LO, GAP_NEG, GAP_POS, JOINT_END, JOINT_START};
pub use clip::{ClipOutcome, SLIVER_FRACTION};
pub use path::{clamp_blade_to_surface, sample_path, PathSampler, ScalpelSample};

use clip::{clip_face_with, clip_points, VertexPool};

#[derive(Debug, Error, PartialEq)]
pub enum TearError {
    #[error("scalpel blade is shorter than 1e-9")]
    DegenerateBlade,
    #[error("scalpel quad is degenerate (area {0:e})")]
    DegenerateQuad(f64),
    #[error("invalid tear width {0}")]
    InvalidWidth(f64),
    #[error("scalpel path is empty")]
    EmptyPath,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Side of a tear's mid plane. Distances within 1e-12 of the plane count as
/// positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SideLabel {
    #[serde(rename = "+")]
    Pos,
    #[serde(rename = "-")]
    Neg,
}

impl SideLabel {
    pub fn from_distance(d: f64) -> SideLabel {
        if d < -1e-12 {
            SideLabel::Neg
        } else {
            SideLabel::Pos
        }
    }

    pub fn opposite(self) -> SideLabel {
        match self {
            SideLabel::Pos => SideLabel::Neg,
            SideLabel::Neg => SideLabel::Pos,
        }
    }
}

/// A tear-generated vertex: attributes interpolated along `edge` at `t`
/// (`p = (1 - t) p_a + t p_b`), plus its side of the mid plane. Edge
/// endpoints may themselves be new vertices of the same delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewVertex {
    pub vertex: Vertex,
    pub side: SideLabel,
    pub edge: (VertexId, VertexId),
    pub t: f64,
}

/// Atomic topology edit produced by one tear segment. New vertex `k` gets id
/// `base_vertex + k`; new face `k` gets id `base_face + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TearDelta {
    pub base_vertex: VertexId,
    pub base_face: FaceId,
    pub removed_faces: Vec<FaceId>,
    pub new_vertices: Vec<NewVertex>,
    pub new_faces: Vec<[VertexId; 3]>,
    pub cell: TearCell,
}

impl TearDelta {
    pub fn empty(mesh: &Mesh, cell: TearCell) -> TearDelta {
        TearDelta {
            base_vertex: mesh.vertex_count() as VertexId,
            base_face: mesh.face_slots() as FaceId,
            removed_faces: Vec::new(),
            new_vertices: Vec::new(),
            new_faces: Vec::new(),
            cell,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.removed_faces.is_empty() && self.new_vertices.is_empty() && self.new_faces.is_empty()
    }

    pub fn new_vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.new_vertices.len() as VertexId).map(move |k| self.base_vertex + k)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub inside: Vec<FaceId>,
    pub crossing: Vec<FaceId>,
    /// Faces returned by the broad phase.
    pub candidates: usize,
}

fn plane_eps(mesh: &Mesh) -> f64 {
    1e-12 * mesh.diagonal()
}

/// Whether the closed triangle meets the closed cell.
pub fn triangle_meets_cell(tri: &[Point; 3], cell: &TearCell, eps: f64) -> bool {
    let mut pts = tri.to_vec();
    for plane in &cell.planes {
        pts = clip_points(&pts, plane, eps);
        if pts.is_empty() {
            return false;
        }
    }
    true
}

fn classify_candidates(mesh: &Mesh, cell: &TearCell, candidates: &[FaceId]) -> Classification {
    let eps = plane_eps(mesh);
    let mut out = Classification {
        candidates: candidates.len(),
        ..Default::default()
    };
    for &f in candidates {
        let tri = mesh.face_positions(f);
        if tri.iter().all(|p| cell.contains_strict(p)) {
            out.inside.push(f);
        } else if triangle_meets_cell(&tri, cell, eps) {
            out.crossing.push(f);
        }
    }
    out
}

/// Splits the broad-phase candidates into faces strictly inside the cell and
/// faces meeting its boundary. Both lists are ascending.
pub fn classify_faces(mesh: &Mesh, cell: &TearCell) -> Classification {
    let candidates = mesh.faces_near(&cell.aabb());
    classify_candidates(mesh, cell, &candidates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipResult {
    pub outcome: ClipOutcome,
    /// Vertices the kept triangles introduce, numbered from the mesh's
    /// current vertex count.
    pub new_vertices: Vec<NewVertex>,
}

/// Clips a single face against `cell`.
pub fn clip_face(mesh: &Mesh, face: FaceId, cell: &TearCell) -> ClipResult {
    let mut pool = VertexPool::new(mesh);
    let outcome = clip_face_with(mesh, face, cell, &mut pool);
    ClipResult {
        outcome,
        new_vertices: pool.vertices,
    }
}

/// Wall-clock split of one segment's tear work.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SegmentTiming {
    pub broad_phase: Duration,
    pub classify: Duration,
    pub clip: Duration,
    pub candidates: usize,
    pub inside: usize,
    pub crossing: usize,
}

/// Computes the edit for one tear cell without touching the mesh.
pub fn apply_tear_segment(mesh: &Mesh, cell: &TearCell) -> TearDelta {
    apply_tear_segment_timed(mesh, cell, &mut SegmentTiming::default())
}

pub fn apply_tear_segment_timed(mesh: &Mesh, cell: &TearCell, timing: &mut SegmentTiming) -> TearDelta {
    let t0 = Instant::now();
    let candidates = mesh.faces_near(&cell.aabb());
    let t1 = Instant::now();
    let class = classify_candidates(mesh, cell, &candidates);
    let t2 = Instant::now();

    let mut delta = TearDelta::empty(mesh, cell.clone());
    let mut pool = VertexPool::new(mesh);
    let mut removed = class.inside.clone();
    for &f in &class.crossing {
        match clip_face_with(mesh, f, cell, &mut pool) {
            ClipOutcome::Untouched => {}
            ClipOutcome::Removed => removed.push(f),
            ClipOutcome::Clipped { triangles } => {
                removed.push(f);
                delta.new_faces.extend(triangles);
            }
        }
    }
    removed.sort_unstable();
    delta.removed_faces = removed;
    delta.new_vertices = pool.vertices;
    let t3 = Instant::now();

    *timing = SegmentTiming {
        broad_phase: t1 - t0,
        classify: t2 - t1,
        clip: t3 - t2,
        candidates: class.candidates,
        inside: class.inside.len(),
        crossing: class.crossing.len(),
    };
    delta
}

/// How far along the blade a cell reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BladeExtent {
    /// The whole tip-to-tail segment.
    #[default]
    FullBlade,
    /// Only the span between the blade's first and last surface hits.
    ClampToSurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TearOptions {
    /// Gap width in model units.
    pub width: f64,
    /// Minimum tip travel between retained samples.
    pub spacing: f64,
    /// Minimum time between retained samples; 0 disables.
    #[serde(default)]
    pub min_dt: f64,
    #[serde(default)]
    pub blade_extent: BladeExtent,
}

impl Default for TearOptions {
    fn default() -> Self {
        TearOptions {
            width: 0.01,
            spacing: 0.02,
            min_dt: 0.0,
            blade_extent: BladeExtent::FullBlade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSegment {
    /// Index of the segment's first sample in the thinned path.
    pub segment: usize,
    pub reason: String,
}

/// Cells for consecutive sample pairs, chained through bisector joints. A
/// segment whose cell cannot be built is reported and the next one starts
/// with a perpendicular cap.
pub fn plan_cells(samples: &[ScalpelSample], width: f64) -> (Vec<TearCell>, Vec<SkippedSegment>) {
    let mut cells: Vec<TearCell> = Vec::new();
    let mut skipped = Vec::new();
    let mut chained = false;
    for (i, pair) in samples.windows(2).enumerate() {
        let prev = if chained { cells.last_mut() } else { None };
        match build_cell(&pair[0], &pair[1], width, prev) {
            Ok(c) => {
                cells.push(c);
                chained = true;
            }
            Err(e) => {
                skipped.push(SkippedSegment {
                    segment: i,
                    reason: e.to_string(),
                });
                chained = false;
            }
        }
    }
    (cells, skipped)
}

/// Thins `poses` per `opts`, optionally clamps blades to the surface.
pub fn prepare_samples(mesh: &Mesh, poses: &[ScalpelSample], opts: &TearOptions) -> Vec<ScalpelSample> {
    let samples = sample_path(poses, opts.spacing, opts.min_dt);
    match opts.blade_extent {
        BladeExtent::FullBlade => samples,
        BladeExtent::ClampToSurface => samples
            .iter()
            .map(|s| clamp_blade_to_surface(mesh, s))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TearRun {
    pub deltas: Vec<TearDelta>,
    pub skipped: Vec<SkippedSegment>,
}

/// Tears `mesh` along the scalpel path, applying each segment in order.
pub fn continuous_tear(mesh: &mut Mesh, poses: &[ScalpelSample], opts: &TearOptions) -> Result<TearRun, TearError> {
    if poses.is_empty() {
        return Err(TearError::EmptyPath);
    }
    if !(opts.width >= 0.0) {
        return Err(TearError::InvalidWidth(opts.width));
    }
    let samples = prepare_samples(mesh, poses, opts);
    let (cells, skipped) = plan_cells(&samples, opts.width);
    let mut deltas = Vec::with_capacity(cells.len());
    for cell in &cells {
        let delta = apply_tear_segment(mesh, cell);
        mesh.apply_delta(&delta)?;
        deltas.push(delta);
    }
    Ok(TearRun { deltas, skipped })
}
