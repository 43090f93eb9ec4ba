//! Indexed triangle mesh with per-vertex attributes, edge adjacency, a
//! broad-phase face index and ray casting.
//!
//! Face and vertex ids are stable: removed faces are tombstoned and new
//! geometry is appended, so ids recorded in a [`TearDelta`] stay meaningful.

mod broadphase;
mod raycast;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::geom::{triangle_area, Aabb, Point, Vec2, Vec3};
use crate::skinning::{blend_weights, Skin, MAX_INFLUENCES, WEIGHT_SUM_TOLERANCE};
use crate::tear::TearDelta;

use broadphase::FaceGrid;
pub use raycast::{Hit, Ray};

pub type VertexId = u32;
pub type FaceId = u32;

/// Faces with less area than this (model units²) are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: u32, count: usize },
    #[error("face {face} references vertex {index} more than once")]
    RepeatedIndex { face: usize, index: u32 },
    #[error("attribute `{name}` has {len} entries for {count} positions")]
    AttributeLength {
        name: &'static str,
        len: usize,
        count: usize,
    },
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("vertex {vertex}: {reason}")]
    InvalidVertex { vertex: usize, reason: String },
    #[error("stale delta: {0}")]
    StaleDelta(String),
}

impl MeshError {
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            MeshError::IndexOutOfRange { .. }
                | MeshError::RepeatedIndex { .. }
                | MeshError::AttributeLength { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: Point,
    pub normal: Option<Vec3>,
    pub uv: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Skin::is_empty")]
    pub skin: Skin,
}

impl Vertex {
    pub fn at(position: Point) -> Self {
        Vertex {
            position,
            normal: None,
            uv: None,
            skin: Skin::default(),
        }
    }

    /// Attributes at `(1 - t) * a + t * b`. Normals and skin weights are
    /// renormalized.
    pub fn lerp(a: &Vertex, b: &Vertex, t: f64) -> Vertex {
        let position = crate::geom::lerp_point(&a.position, &b.position, t);
        let normal = match (a.normal, b.normal) {
            (Some(na), Some(nb)) => {
                let n = na * (1.0 - t) + nb * t;
                let len = n.norm();
                Some(if len > 1e-12 {
                    n / len
                } else if t < 0.5 {
                    na
                } else {
                    nb
                })
            }
            _ => None,
        };
        let uv = match (a.uv, b.uv) {
            (Some(ua), Some(ub)) => Some(ua * (1.0 - t) + ub * t),
            _ => None,
        };
        Vertex {
            position,
            normal,
            uv,
            skin: blend_weights(&a.skin, &b.skin, t),
        }
    }
}

/// Raw arrays accepted by [`Mesh::build`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshInput {
    pub positions: Vec<Point>,
    pub faces: Vec<[u32; 3]>,
    pub normals: Option<Vec<Vec3>>,
    pub uvs: Option<Vec<Vec2>>,
    pub skins: Option<Vec<Skin>>,
}

impl MeshInput {
    pub fn new(positions: Vec<Point>, faces: Vec<[u32; 3]>) -> Self {
        MeshInput {
            positions,
            faces,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Degenerate faces are an error.
    #[default]
    Strict,
    /// Degenerate faces are dropped.
    Lenient,
}

/// Vertex ids that lost their last live face while a delta was applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AppliedDelta {
    pub first_new_vertex: VertexId,
    pub first_new_face: FaceId,
    pub dead_vertices: Vec<VertexId>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    vertex_alive: Vec<bool>,
    vertex_refs: Vec<u32>,
    faces: Vec<[VertexId; 3]>,
    face_alive: Vec<bool>,
    live_faces: usize,
    edges: HashMap<(VertexId, VertexId), SmallVec<[FaceId; 2]>>,
    aabb: Aabb,
    grid: FaceGrid,
}

#[inline]
fn edge_key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn validate_vertex(i: usize, v: &mut Vertex) -> Result<(), MeshError> {
    if !(v.position.coords.iter().all(|c| c.is_finite())) {
        return Err(MeshError::InvalidVertex {
            vertex: i,
            reason: "non-finite position".into(),
        });
    }
    if let Some(n) = v.normal {
        let len = n.norm();
        if !len.is_finite() || len < 1e-12 {
            return Err(MeshError::InvalidVertex {
                vertex: i,
                reason: "zero-length normal".into(),
            });
        }
        v.normal = Some(n / len);
    }
    if !v.skin.is_empty() {
        if v.skin.len() > MAX_INFLUENCES {
            return Err(MeshError::InvalidVertex {
                vertex: i,
                reason: format!("{} bone influences (max {MAX_INFLUENCES})", v.skin.len()),
            });
        }
        if v.skin.iter().any(|w| !(0.0..=1.0).contains(&w.weight))
            || (v.skin.weight_sum() - 1.0).abs() > WEIGHT_SUM_TOLERANCE
        {
            return Err(MeshError::InvalidVertex {
                vertex: i,
                reason: format!("skin weights sum to {}", v.skin.weight_sum()),
            });
        }
    }
    Ok(())
}

impl Mesh {
    pub fn build(input: MeshInput, mode: BuildMode) -> Result<Mesh, MeshError> {
        let count = input.positions.len();
        let check_len = |name: &'static str, len: Option<usize>| match len {
            Some(len) if len != count => Err(MeshError::AttributeLength { name, len, count }),
            _ => Ok(()),
        };
        check_len("normals", input.normals.as_ref().map(Vec::len))?;
        check_len("uvs", input.uvs.as_ref().map(Vec::len))?;
        check_len("skins", input.skins.as_ref().map(Vec::len))?;

        let mut vertices = Vec::with_capacity(count);
        for (i, p) in input.positions.iter().enumerate() {
            let mut v = Vertex {
                position: *p,
                normal: input.normals.as_ref().map(|n| n[i]),
                uv: input.uvs.as_ref().map(|u| u[i]),
                skin: input
                    .skins
                    .as_ref()
                    .map(|s| s[i].clone())
                    .unwrap_or_default(),
            };
            validate_vertex(i, &mut v)?;
            vertices.push(v);
        }

        let mut faces = Vec::with_capacity(input.faces.len());
        for (fi, f) in input.faces.iter().enumerate() {
            for &idx in f {
                if idx as usize >= count {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index: idx,
                        count,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                let index = if f[0] == f[1] || f[0] == f[2] { f[0] } else { f[1] };
                return Err(MeshError::RepeatedIndex { face: fi, index });
            }
            let area = triangle_area(
                &vertices[f[0] as usize].position,
                &vertices[f[1] as usize].position,
                &vertices[f[2] as usize].position,
            );
            if area < DEGENERATE_AREA {
                match mode {
                    BuildMode::Strict => return Err(MeshError::DegenerateFace { face: fi, area }),
                    BuildMode::Lenient => continue,
                }
            }
            faces.push(*f);
        }

        let aabb = Aabb::from_points(vertices.iter().map(|v| &v.position));
        let boxes: Vec<Aabb> = faces
            .iter()
            .map(|f| Aabb::from_points(f.iter().map(|&i| &vertices[i as usize].position)))
            .collect();
        let mut grid = FaceGrid::new(&aabb, &boxes);
        let mut edges: HashMap<(VertexId, VertexId), SmallVec<[FaceId; 2]>> =
            HashMap::with_capacity(faces.len() * 3 / 2);
        let mut vertex_refs = vec![0u32; count];
        for (fi, (f, b)) in faces.iter().zip(boxes).enumerate() {
            grid.insert(fi as FaceId, b);
            for k in 0..3 {
                vertex_refs[f[k] as usize] += 1;
                edges
                    .entry(edge_key(f[k], f[(k + 1) % 3]))
                    .or_default()
                    .push(fi as FaceId);
            }
        }
        Ok(Mesh {
            vertex_alive: vec![true; count],
            vertex_refs,
            live_faces: faces.len(),
            face_alive: vec![true; faces.len()],
            vertices,
            faces,
            edges,
            aabb,
            grid,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of face slots, including removed faces.
    pub fn face_slots(&self) -> usize {
        self.faces.len()
    }

    pub fn live_face_count(&self) -> usize {
        self.live_faces
    }

    pub fn live_vertex_count(&self) -> usize {
        self.vertex_alive.iter().filter(|&&a| a).count()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v as usize]
    }

    pub fn position(&self, v: VertexId) -> &Point {
        &self.vertices[v as usize].position
    }

    pub fn positions(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| v.position).collect()
    }

    pub fn skins(&self) -> Vec<Skin> {
        self.vertices.iter().map(|v| v.skin.clone()).collect()
    }

    pub fn is_vertex_alive(&self, v: VertexId) -> bool {
        self.vertex_alive.get(v as usize).copied().unwrap_or(false)
    }

    pub fn is_face_alive(&self, f: FaceId) -> bool {
        self.face_alive.get(f as usize).copied().unwrap_or(false)
    }

    pub fn face(&self, f: FaceId) -> [VertexId; 3] {
        self.faces[f as usize]
    }

    pub fn face_positions(&self, f: FaceId) -> [Point; 3] {
        self.faces[f as usize].map(|i| self.vertices[i as usize].position)
    }

    pub fn face_area(&self, f: FaceId) -> f64 {
        let [a, b, c] = self.face_positions(f);
        triangle_area(&a, &b, &c)
    }

    pub fn face_bounds(&self, f: FaceId) -> Aabb {
        Aabb::from_points(&self.face_positions(f))
    }

    pub fn live_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.face_alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i as FaceId)
    }

    pub fn live_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i as VertexId)
    }

    pub fn total_area(&self) -> f64 {
        self.live_faces().map(|f| self.face_area(f)).sum()
    }

    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    pub fn diagonal(&self) -> f64 {
        self.aabb.diagonal()
    }

    /// Faces sharing an edge with `f`, ascending.
    pub fn face_neighbors(&self, f: FaceId) -> Vec<FaceId> {
        let tri = self.faces[f as usize];
        let mut out: Vec<FaceId> = (0..3)
            .filter_map(|k| self.edges.get(&edge_key(tri[k], tri[(k + 1) % 3])))
            .flat_map(|fs| fs.iter().copied())
            .filter(|&g| g != f)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Live faces sharing the undirected edge `(a, b)`.
    pub fn edge_faces(&self, a: VertexId, b: VertexId) -> &[FaceId] {
        self.edges
            .get(&edge_key(a, b))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Conservative broad-phase query: every live face whose bounds meet
    /// `query`, and none outside `query` inflated by 1e-6 of the diagonal.
    pub fn faces_near(&self, query: &Aabb) -> Vec<FaceId> {
        if !query.is_valid() {
            return Vec::new();
        }
        let eps = 1e-6 * self.diagonal();
        self.grid.query(&query.inflated(eps))
    }

    /// Whether `f` is currently registered in the broad phase.
    pub fn indexed(&self, f: FaceId) -> bool {
        self.grid.contains(f)
    }

    /// Cross-checks adjacency, reference counts and the broad phase against
    /// the live face list.
    pub fn audit(&self) -> Result<(), String> {
        let mut refs = vec![0u32; self.vertices.len()];
        let mut edge_count = 0usize;
        for f in 0..self.faces.len() as FaceId {
            let alive = self.face_alive[f as usize];
            if alive != self.grid.contains(f) {
                return Err(format!("face {f}: alive={alive} but indexed={}", !alive));
            }
            if !alive {
                continue;
            }
            let tri = self.faces[f as usize];
            if !self.grid.face_box(f).contains_box(&self.face_bounds(f)) {
                return Err(format!("face {f}: stale broad-phase bounds"));
            }
            for k in 0..3 {
                refs[tri[k] as usize] += 1;
                if !self.vertex_alive[tri[k] as usize] {
                    return Err(format!("face {f} uses dead vertex {}", tri[k]));
                }
                if !self.edge_faces(tri[k], tri[(k + 1) % 3]).contains(&f) {
                    return Err(format!("face {f}: edge missing from adjacency"));
                }
            }
        }
        for list in self.edges.values() {
            edge_count += list.len();
        }
        if edge_count != 3 * self.live_faces {
            return Err(format!("adjacency holds {edge_count} entries for {} faces", self.live_faces));
        }
        if refs != self.vertex_refs {
            return Err("vertex reference counts out of sync".into());
        }
        if let Some(v) = self.vertices.iter().find(|v| !self.aabb.contains(&v.position)) {
            return Err(format!("aabb misses vertex at {:?}", v.position));
        }
        Ok(())
    }

    pub fn raycast(&self, ray: &Ray) -> Option<Hit> {
        raycast::cast(self, ray)
    }

    /// Applies a tear edit in place. Removal and insertion update adjacency
    /// and the broad phase incrementally.
    pub fn apply_delta(&mut self, delta: &TearDelta) -> Result<AppliedDelta, MeshError> {
        let base_v = self.vertices.len();
        let base_f = self.faces.len();
        if delta.base_vertex as usize != base_v || delta.base_face as usize != base_f {
            return Err(MeshError::StaleDelta(format!(
                "delta expects {} vertices / {} faces, mesh has {base_v} / {base_f}",
                delta.base_vertex, delta.base_face
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(delta.removed_faces.len());
        for &f in &delta.removed_faces {
            if !self.is_face_alive(f) {
                return Err(MeshError::StaleDelta(format!("face {f} is not live")));
            }
            if !seen.insert(f) {
                return Err(MeshError::StaleDelta(format!("face {f} removed twice")));
            }
        }
        let total_v = base_v + delta.new_vertices.len();
        for (k, f) in delta.new_faces.iter().enumerate() {
            for &i in f {
                let ok = (i as usize) < total_v
                    && ((i as usize) >= base_v || self.vertex_alive[i as usize]);
                if !ok {
                    return Err(MeshError::StaleDelta(format!(
                        "new face {k} references unavailable vertex {i}"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::StaleDelta(format!("new face {k} repeats a vertex")));
            }
        }

        let mut released: Vec<VertexId> = Vec::new();
        for &f in &delta.removed_faces {
            self.face_alive[f as usize] = false;
            self.live_faces -= 1;
            self.grid.remove(f);
            let tri = self.faces[f as usize];
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                if let Some(list) = self.edges.get_mut(&key) {
                    list.retain(|g| *g != f);
                    if list.is_empty() {
                        self.edges.remove(&key);
                    }
                }
                let v = tri[k] as usize;
                self.vertex_refs[v] -= 1;
                if self.vertex_refs[v] == 0 {
                    released.push(tri[k]);
                }
            }
        }

        for nv in &delta.new_vertices {
            self.aabb.grow(&nv.vertex.position);
            self.vertices.push(nv.vertex.clone());
            self.vertex_alive.push(true);
            self.vertex_refs.push(0);
        }
        for (k, f) in delta.new_faces.iter().enumerate() {
            let id = (base_f + k) as FaceId;
            self.faces.push(*f);
            self.face_alive.push(true);
            self.live_faces += 1;
            let b = Aabb::from_points(f.iter().map(|&i| &self.vertices[i as usize].position));
            self.grid.insert(id, b);
            for j in 0..3 {
                self.vertex_refs[f[j] as usize] += 1;
                self.edges
                    .entry(edge_key(f[j], f[(j + 1) % 3]))
                    .or_default()
                    .push(id);
            }
        }

        released.extend((base_v..total_v).map(|v| v as VertexId));
        let mut dead: Vec<VertexId> = released
            .into_iter()
            .filter(|&v| self.vertex_refs[v as usize] == 0)
            .collect();
        dead.sort_unstable();
        dead.dedup();
        for &v in &dead {
            self.vertex_alive[v as usize] = false;
        }
        Ok(AppliedDelta {
            first_new_vertex: base_v as VertexId,
            first_new_face: base_f as FaceId,
            dead_vertices: dead,
        })
    }

    /// Live topology and attributes, for transport and digests.
    pub fn snapshot(&self) -> MeshSnapshot {
        MeshSnapshot {
            vertices: self.vertices.clone(),
            vertex_alive: self.vertex_alive.clone(),
            faces: self.faces.clone(),
            face_alive: self.face_alive.clone(),
        }
    }

    /// Live faces over compacted live vertices. Attributes are kept only when
    /// every live vertex has them.
    pub fn export(&self) -> MeshInput {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        for v in self.live_vertices() {
            remap[v as usize] = verts.len() as u32;
            verts.push(&self.vertices[v as usize]);
        }
        let faces = self
            .live_faces()
            .map(|f| self.face(f).map(|v| remap[v as usize]))
            .collect();
        MeshInput {
            positions: verts.iter().map(|v| v.position).collect(),
            faces,
            normals: verts.iter().map(|v| v.normal).collect(),
            uvs: verts.iter().map(|v| v.uv).collect(),
            skins: (!verts.is_empty() && verts.iter().all(|v| !v.skin.is_empty()))
                .then(|| verts.iter().map(|v| v.skin.clone()).collect()),
        }
    }

    /// Byte-stable serialization of the full mesh state.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.snapshot()).expect("mesh snapshot serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSnapshot {
    pub vertices: Vec<Vertex>,
    pub vertex_alive: Vec<bool>,
    pub faces: Vec<[VertexId; 3]>,
    pub face_alive: Vec<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tear::{NewVertex, SideLabel, TearCell};

    fn unit_triangle() -> MeshInput {
        MeshInput::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
    }

    fn quad() -> Mesh {
        Mesh::build(
            MeshInput::new(
                vec![
                    Point::new(0.0, 0.0, 0.0),
                    Point::new(1.0, 0.0, 0.0),
                    Point::new(1.0, 1.0, 0.0),
                    Point::new(0.0, 1.0, 0.0),
                ],
                vec![[0, 1, 2], [0, 2, 3]],
            ),
            BuildMode::Strict,
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_bounds() {
        let m = Mesh::build(unit_triangle(), BuildMode::Strict).unwrap();
        assert_eq!(m.live_face_count(), 1);
        assert_eq!(m.aabb().min, Point::new(0.0, 0.0, 0.0));
        assert_eq!(m.aabb().max, Point::new(1.0, 1.0, 0.0));
    }

    #[test]
    fn repeated_index_is_structural() {
        let mut input = unit_triangle();
        input.faces = vec![[0, 0, 1]];
        let err = Mesh::build(input, BuildMode::Strict).unwrap_err();
        assert!(err.is_structural());
    }

    #[test]
    fn out_of_range_is_structural() {
        let mut input = unit_triangle();
        input.faces = vec![[0, 1, 7]];
        assert!(Mesh::build(input, BuildMode::Strict)
            .unwrap_err()
            .is_structural());
    }

    #[test]
    fn degenerate_face_strict_vs_lenient() {
        let mut input = unit_triangle();
        input.positions.push(Point::new(2.0, 0.0, 0.0));
        input.faces.push([0, 1, 3]);
        assert!(matches!(
            Mesh::build(input.clone(), BuildMode::Strict),
            Err(MeshError::DegenerateFace { face: 1, .. })
        ));
        let m = Mesh::build(input, BuildMode::Lenient).unwrap();
        assert_eq!(m.live_face_count(), 1);
    }

    #[test]
    fn attribute_length_mismatch() {
        let mut input = unit_triangle();
        input.uvs = Some(vec![Vec2::zeros(); 2]);
        assert!(matches!(
            Mesh::build(input, BuildMode::Strict),
            Err(MeshError::AttributeLength { name: "uvs", .. })
        ));
    }

    #[test]
    fn neighbors_through_shared_edge() {
        let m = quad();
        assert_eq!(m.face_neighbors(0), vec![1]);
        assert_eq!(m.edge_faces(2, 0), &[0, 1]);
    }

    #[test]
    fn faces_near_disjoint_and_full() {
        let m = quad();
        let far = Aabb::new(Point::new(5.0, 5.0, 5.0), Point::new(6.0, 6.0, 6.0));
        assert!(m.faces_near(&far).is_empty());
        assert_eq!(m.faces_near(m.aabb()), vec![0, 1]);
    }

    #[test]
    fn empty_delta_is_identity() {
        let mut m = quad();
        let before = m.canonical_bytes();
        let d = TearDelta::empty(&m, TearCell::slab_x(0.4, 0.6));
        m.apply_delta(&d).unwrap();
        assert_eq!(m.canonical_bytes(), before);
    }

    #[test]
    fn pure_removal_drops_face_and_releases_vertex() {
        let mut m = quad();
        let mut d = TearDelta::empty(&m, TearCell::slab_x(0.4, 0.6));
        d.removed_faces.push(1);
        let applied = m.apply_delta(&d).unwrap();
        assert_eq!(m.live_face_count(), 1);
        assert_eq!(applied.dead_vertices, vec![3]);
        assert!(!m.indexed(1));
        assert_eq!(m.faces_near(m.aabb()), vec![0]);
        // Stale: face 1 is already gone.
        let mut again = TearDelta::empty(&m, TearCell::slab_x(0.4, 0.6));
        again.removed_faces.push(1);
        assert!(matches!(m.apply_delta(&again), Err(MeshError::StaleDelta(_))));
    }

    #[test]
    fn appended_faces_are_indexed_and_adjacent() {
        let mut m = quad();
        let mut d = TearDelta::empty(&m, TearCell::slab_x(0.4, 0.6));
        d.new_vertices.push(NewVertex {
            vertex: Vertex::at(Point::new(0.5, 0.0, 0.0)),
            side: SideLabel::Pos,
            edge: (0, 1),
            t: 0.5,
        });
        d.removed_faces.push(0);
        d.new_faces.push([0, 4, 2]);
        d.new_faces.push([4, 1, 2]);
        let applied = m.apply_delta(&d).unwrap();
        assert_eq!(applied.first_new_face, 2);
        assert!(applied.dead_vertices.is_empty());
        assert_eq!(m.live_face_count(), 3);
        assert_eq!(m.faces_near(m.aabb()), vec![1, 2, 3]);
        assert_eq!(m.face_neighbors(2), vec![1, 3]);
    }
}
