//! Soft-body particle layer: vertices are clustered by euclidean range `d`
//! around seed vertices, each particle springs back to its rest centroid, and
//! the clustering is repaired after every tear so that vertices on opposite
//! sides of a cut never share a particle.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::geom::{Point, Vec3};
use crate::mesh::{Mesh, VertexId};
use crate::skinning::{pose_positions, SkinError, Skeleton};
use crate::tear::{SideLabel, TearDelta};

pub type ParticleId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum ParticleError {
    #[error("particle range must be positive, got {0}")]
    InvalidRange(f64),
    #[error("mesh has no live vertices")]
    EmptyMesh,
    #[error("invalid soft-body parameters: {0}")]
    InvalidParams(String),
    #[error("no particle with id {0}")]
    UnknownParticle(ParticleId),
    #[error("displacement is not finite")]
    NonFinite,
    #[error("live vertex {0} belongs to no particle")]
    Uncovered(VertexId),
    #[error("delta does not match the clustering: {0}")]
    StaleDelta(String),
    #[error(transparent)]
    Skin(#[from] SkinError),
}

/// Side of a specific tear. Labels from different tears are unrelated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SideTag {
    pub epoch: u32,
    pub sign: SideLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendWeighting {
    /// Every particle a vertex belongs to contributes equally.
    #[default]
    Uniform,
    /// Contributions fall off with the bind-space distance to the particle's
    /// rest position.
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftBodyParams {
    /// Stiffness k, 1/s².
    pub stiffness: f64,
    /// Damping c, 1/s.
    pub damping: f64,
    /// Timestep h, seconds.
    pub timestep: f64,
    #[serde(default)]
    pub weighting: BlendWeighting,
    /// Uniform acceleration applied to every particle (units/s²).
    #[serde(default)]
    pub external_acceleration: Vec3,
}

impl Default for SoftBodyParams {
    fn default() -> Self {
        SoftBodyParams {
            stiffness: 50.0,
            damping: 5.0,
            timestep: 1.0 / 90.0,
            weighting: BlendWeighting::Uniform,
            external_acceleration: Vec3::zeros(),
        }
    }
}

impl SoftBodyParams {
    pub fn validate(&self) -> Result<(), ParticleError> {
        let bad = |m: &str| Err(ParticleError::InvalidParams(m.into()));
        if !(self.stiffness > 0.0 && self.stiffness.is_finite()) {
            return bad("stiffness must be positive");
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return bad("damping must be non-negative");
        }
        if !(self.timestep > 0.0 && self.timestep.is_finite()) {
            return bad("timestep must be positive");
        }
        if !self.external_acceleration.iter().all(|c| c.is_finite()) {
            return bad("external acceleration must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: ParticleId,
    pub seed: VertexId,
    /// Ascending vertex ids.
    pub members: Vec<VertexId>,
    pub rest: Point,
    pub position: Point,
    pub velocity: Vec3,
    pub side: Option<SideTag>,
}

impl Particle {
    pub fn offset(&self) -> Vec3 {
        self.position - self.rest
    }
}

/// Hash grid over bind positions with cell size equal to the query radius.
#[derive(Debug, Clone, Default)]
struct PointGrid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl PointGrid {
    fn new(cell: f64) -> Self {
        PointGrid {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Point) -> [i64; 3] {
        [0, 1, 2].map(|i| (p[i] / self.cell).floor() as i64)
    }

    fn insert(&mut self, id: u32, p: &Point) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }

    fn remove(&mut self, id: u32, p: &Point) {
        let k = self.key(p);
        if let Some(list) = self.cells.get_mut(&k) {
            list.retain(|&x| x != id);
            if list.is_empty() {
                self.cells.remove(&k);
            }
        }
    }

    /// Ids within `r` (≤ cell size) of `p`, ascending.
    fn within(&self, p: &Point, r: f64, pos: impl Fn(u32) -> Point) -> Vec<u32> {
        let k = self.key(p);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        out.extend(list.iter().copied().filter(|&id| (pos(id) - p).norm() <= r));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// What a post-tear repair changed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub dropped: Vec<ParticleId>,
    pub split: Vec<ParticleId>,
    pub created: Vec<ParticleId>,
    pub joined: usize,
}

/// Clustering plus per-particle kinematic state.
#[derive(Debug, Clone)]
pub struct SoftBodyState {
    range: f64,
    params: SoftBodyParams,
    particles: Vec<Particle>,
    memberships: Vec<SmallVec<[ParticleId; 4]>>,
    tags: Vec<Option<SideTag>>,
    epoch: u32,
    next_id: ParticleId,
    vertex_slots: usize,
    vertex_grid: PointGrid,
    seed_grid: PointGrid,
}

fn centroid(mesh: &Mesh, members: &[VertexId]) -> Point {
    let sum: Vec3 = members.iter().map(|&v| mesh.position(v).coords).sum();
    Point::from(sum / members.len() as f64)
}

/// Greedy covering of `candidates` (ascending): the first uncovered vertex,
/// or `first_seed` when given, becomes a seed whose group is every candidate
/// within `d` of it.
fn greedy_cover(
    mesh: &Mesh,
    candidates: &[VertexId],
    d: f64,
    first_seed: Option<VertexId>,
) -> Vec<(VertexId, Vec<VertexId>)> {
    let mut covered = vec![false; candidates.len()];
    let mut groups = Vec::new();
    let order = first_seed
        .and_then(|s| candidates.binary_search(&s).ok())
        .into_iter()
        .chain(0..candidates.len());
    for i in order {
        if covered[i] {
            continue;
        }
        let seed = candidates[i];
        let sp = mesh.position(seed);
        let mut group = Vec::new();
        for (j, &v) in candidates.iter().enumerate() {
            if (mesh.position(v) - sp).norm() <= d {
                covered[j] = true;
                group.push(v);
            }
        }
        groups.push((seed, group));
    }
    groups
}

impl SoftBodyState {
    /// Greedy clustering of the live vertices of `mesh` by range `d`.
    pub fn decompose(mesh: &Mesh, d: f64, params: SoftBodyParams) -> Result<Self, ParticleError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(ParticleError::InvalidRange(d));
        }
        params.validate()?;
        let live: Vec<VertexId> = mesh.live_vertices().collect();
        if live.is_empty() {
            return Err(ParticleError::EmptyMesh);
        }
        let n = mesh.vertex_count();
        let mut vertex_grid = PointGrid::new(d);
        for &v in &live {
            vertex_grid.insert(v, mesh.position(v));
        }
        let mut state = SoftBodyState {
            range: d,
            params,
            particles: Vec::new(),
            memberships: vec![SmallVec::new(); n],
            tags: vec![None; n],
            epoch: 0,
            next_id: 0,
            vertex_slots: n,
            vertex_grid,
            seed_grid: PointGrid::new(d),
        };
        let mut covered = vec![false; n];
        for &v in &live {
            if covered[v as usize] {
                continue;
            }
            let members = state
                .vertex_grid
                .within(mesh.position(v), d, |u| *mesh.position(u));
            for &m in &members {
                covered[m as usize] = true;
            }
            state.push_particle(mesh, v, members, Vec3::zeros(), Vec3::zeros(), None);
        }
        state.rebuild_index(mesh);
        Ok(state)
    }

    fn push_particle(
        &mut self,
        mesh: &Mesh,
        seed: VertexId,
        members: Vec<VertexId>,
        offset: Vec3,
        velocity: Vec3,
        side: Option<SideTag>,
    ) -> ParticleId {
        let rest = centroid(mesh, &members);
        let id = self.next_id;
        self.next_id += 1;
        self.particles.push(Particle {
            id,
            seed,
            members,
            rest,
            position: rest + offset,
            velocity,
            side,
        });
        id
    }

    fn rebuild_index(&mut self, mesh: &Mesh) {
        for m in &mut self.memberships {
            m.clear();
        }
        self.seed_grid = PointGrid::new(self.range);
        for p in &self.particles {
            for &v in &p.members {
                self.memberships[v as usize].push(p.id);
            }
            self.seed_grid.insert(p.id, mesh.position(p.seed));
        }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn params(&self) -> &SoftBodyParams {
        &self.params
    }

    pub fn set_params(&mut self, params: SoftBodyParams) -> Result<(), ParticleError> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particle(&self, id: ParticleId) -> Option<&Particle> {
        self.index_of(id).map(|i| &self.particles[i])
    }

    fn index_of(&self, id: ParticleId) -> Option<usize> {
        self.particles.binary_search_by_key(&id, |p| p.id).ok()
    }

    /// Particles containing vertex `v`, ascending.
    pub fn memberships(&self, v: VertexId) -> &[ParticleId] {
        self.memberships
            .get(v as usize)
            .map(|m| m.as_slice())
            .unwrap_or(&[])
    }

    /// Side tag of vertex `v` from the most recent tear that labelled it.
    pub fn vertex_tag(&self, v: VertexId) -> Option<SideTag> {
        self.tags.get(v as usize).copied().flatten()
    }

    /// Number of tears the clustering has been repaired for.
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn vertex_slots(&self) -> usize {
        self.vertex_slots
    }

    pub fn displace_particle(&mut self, id: ParticleId, dx: Vec3) -> Result<(), ParticleError> {
        if !dx.iter().all(|c| c.is_finite()) {
            return Err(ParticleError::NonFinite);
        }
        let i = self.index_of(id).ok_or(ParticleError::UnknownParticle(id))?;
        self.particles[i].position += dx;
        Ok(())
    }

    /// One semi-implicit Euler step of length `h`.
    pub fn step(&mut self, h: f64) {
        let k = self.params.stiffness;
        let c = self.params.damping;
        let g = self.params.external_acceleration;
        for p in &mut self.particles {
            p.velocity += (p.rest - p.position) * (h * k) - p.velocity * (h * c) + g * h;
            p.position += p.velocity * h;
        }
    }

    /// Σ ½|v|² + ½k|x − rest|².
    pub fn energy(&self) -> f64 {
        let k = self.params.stiffness;
        self.particles
            .iter()
            .map(|p| 0.5 * p.velocity.norm_squared() + 0.5 * k * p.offset().norm_squared())
            .sum()
    }

    pub fn at_rest(&self) -> bool {
        self.particles
            .iter()
            .all(|p| p.position == p.rest && p.velocity == Vec3::zeros())
    }

    /// Puts every particle back at its rest position with zero velocity.
    pub fn settle(&mut self) {
        for p in &mut self.particles {
            p.position = p.rest;
            p.velocity = Vec3::zeros();
        }
    }

    /// Deformed vertex positions: base (bind, or posed when a skeleton is
    /// given) plus the weighted particle offsets. Dead vertices keep their
    /// base position.
    pub fn apply_vertex_positions(
        &self,
        mesh: &Mesh,
        skeleton: Option<&Skeleton>,
    ) -> Result<Vec<Point>, ParticleError> {
        let mut out = match skeleton {
            Some(s) => pose_positions(&mesh.positions(), &mesh.skins(), s)?,
            None => mesh.positions(),
        };
        for v in mesh.live_vertices() {
            let ids = self.memberships(v);
            if ids.is_empty() {
                return Err(ParticleError::Uncovered(v));
            }
            let particles = ids.iter().map(|&id| &self.particles[self.index_of(id).unwrap()]);
            let offset = match self.params.weighting {
                BlendWeighting::Uniform => {
                    particles.map(|p| p.offset()).sum::<Vec3>() / ids.len() as f64
                }
                BlendWeighting::InverseDistance => {
                    let bind = mesh.position(v);
                    let eps = 1e-9 * self.range;
                    let (sum, wsum) = particles.fold((Vec3::zeros(), 0.0), |(s, ws), p| {
                        let w = 1.0 / ((bind - p.rest).norm() + eps);
                        (s + p.offset() * w, ws + w)
                    });
                    sum / wsum
                }
            };
            out[v as usize] += offset;
        }
        Ok(out)
    }

    /// Repairs the clustering after `delta` has been applied to `mesh`.
    pub fn update_after_tear(&mut self, delta: &TearDelta, mesh: &Mesh) -> Result<RepairReport, ParticleError> {
        let base = delta.base_vertex as usize;
        if base != self.vertex_slots {
            return Err(ParticleError::StaleDelta(format!(
                "clustering knows {} vertices, delta starts at {base}",
                self.vertex_slots
            )));
        }
        if mesh.vertex_count() != base + delta.new_vertices.len() {
            return Err(ParticleError::StaleDelta(format!(
                "mesh has {} vertices, delta implies {}",
                mesh.vertex_count(),
                base + delta.new_vertices.len()
            )));
        }
        if let Some(f) = delta.removed_faces.iter().find(|&&f| mesh.is_face_alive(f)) {
            return Err(ParticleError::StaleDelta(format!("face {f} is still live; delta not applied")));
        }
        let mut report = RepairReport::default();
        if delta.is_empty() {
            return Ok(report);
        }
        let d = self.range;
        self.epoch += 1;
        let epoch = self.epoch;
        let total = mesh.vertex_count();
        self.memberships.resize(total, SmallVec::new());
        self.tags.resize(total, None);
        self.vertex_slots = total;

        let mut affected: BTreeSet<ParticleId> = BTreeSet::new();
        let mut lost: BTreeSet<ParticleId> = BTreeSet::new();

        // Vertices of removed faces: dead ones leave their particles, live
        // ones mark their particles as affected.
        let mut rim: Vec<VertexId> = delta
            .removed_faces
            .iter()
            .flat_map(|&f| mesh.face(f))
            .filter(|&v| (v as usize) < base)
            .collect();
        rim.sort_unstable();
        rim.dedup();
        for &v in &rim {
            let ids = self.memberships[v as usize].clone();
            if mesh.is_vertex_alive(v) {
                affected.extend(ids);
                continue;
            }
            for id in ids {
                let i = self.index_of(id).unwrap();
                let p = &mut self.particles[i];
                if let Ok(k) = p.members.binary_search(&v) {
                    p.members.remove(k);
                }
                lost.insert(id);
            }
            self.memberships[v as usize].clear();
            self.tags[v as usize] = None;
            self.vertex_grid.remove(v, mesh.position(v));
        }
        affected.extend(lost.iter().copied());

        let new_ids: Vec<VertexId> = delta.new_vertex_ids().collect();
        for (nv, &v) in delta.new_vertices.iter().zip(&new_ids) {
            self.vertex_grid.insert(v, mesh.position(v));
            self.tags[v as usize] = Some(SideTag { epoch, sign: nv.side });
            let p = *mesh.position(v);
            affected.extend(self.seed_grid.within(&p, d, |id| self.seed_position(mesh, id)));
        }

        let before = self.particles.len();
        self.particles.retain(|p| {
            if p.members.is_empty() {
                report.dropped.push(p.id);
                false
            } else {
                true
            }
        });
        if self.particles.len() != before {
            for id in &report.dropped {
                affected.remove(id);
            }
            self.seed_grid = PointGrid::new(d);
            for p in &self.particles {
                self.seed_grid.insert(p.id, mesh.position(p.seed));
            }
        }

        // Label members of affected particles by their side of this tear.
        for &id in &affected {
            let i = self.index_of(id).unwrap();
            for &v in &self.particles[i].members {
                let sign = delta.cell.side_of(mesh.position(v));
                self.tags[v as usize] = Some(SideTag { epoch, sign });
            }
        }

        // New vertices join nearby particles unless the particle lies wholly
        // on the other side.
        let signs_of = |p: &Particle, tags: &[Option<SideTag>]| -> (bool, bool) {
            let mut s = (false, false);
            for &v in &p.members {
                match tags[v as usize] {
                    Some(SideTag { epoch: e, sign: SideLabel::Pos }) if e == epoch => s.0 = true,
                    Some(SideTag { epoch: e, sign: SideLabel::Neg }) if e == epoch => s.1 = true,
                    _ => {}
                }
            }
            s
        };
        let mut joins: Vec<(usize, VertexId)> = Vec::new();
        for (nv, &v) in delta.new_vertices.iter().zip(&new_ids) {
            let p = *mesh.position(v);
            for id in self.seed_grid.within(&p, d, |id| self.seed_position(mesh, id)) {
                let i = self.index_of(id).unwrap();
                let (pos, neg) = signs_of(&self.particles[i], &self.tags);
                let blocked = match nv.side {
                    SideLabel::Pos => neg && !pos,
                    SideLabel::Neg => pos && !neg,
                };
                if !blocked {
                    joins.push((i, v));
                }
            }
        }
        report.joined = joins.len();
        for (i, v) in joins {
            let members = &mut self.particles[i].members;
            if let Err(k) = members.binary_search(&v) {
                members.insert(k, v);
            }
        }

        // Every particle holding a vertex labelled by this tear is checked for
        // mixed sides. Splitting adds no labels, so one pass suffices.
        let mut check: BTreeSet<ParticleId> = affected.clone();
        for &id in &affected {
            let i = self.index_of(id).unwrap();
            for &v in &self.particles[i].members {
                check.extend(self.memberships[v as usize].iter().copied());
            }
        }
        for &v in &new_ids {
            check.extend(self.memberships[v as usize].iter().copied());
        }
        check.retain(|id| self.index_of(*id).is_some());

        let mut replaced: Vec<(usize, Vec<Particle>)> = Vec::new();
        let mut next_id = self.next_id;
        for &id in &check {
            let i = self.index_of(id).unwrap();
            let p = &self.particles[i];
            let (pos, neg) = signs_of(p, &self.tags);
            let seed_alive = mesh.is_vertex_alive(p.seed) && p.members.binary_search(&p.seed).is_ok();
            if !(pos && neg) && seed_alive {
                continue;
            }
            let tag_of = |v: VertexId| self.tags[v as usize].filter(|t| t.epoch == epoch).map(|t| t.sign);
            let halves: Vec<(Option<SideLabel>, Vec<VertexId>)> = if pos && neg {
                let first = tag_of(p.seed).unwrap_or(SideLabel::Pos);
                [first, first.opposite()]
                    .into_iter()
                    .map(|s| {
                        let m: Vec<VertexId> = p
                            .members
                            .iter()
                            .copied()
                            .filter(|&v| tag_of(v).is_none_or(|t| t == s))
                            .collect();
                        (Some(s), m)
                    })
                    .collect()
            } else {
                let side = if pos {
                    Some(SideLabel::Pos)
                } else if neg {
                    Some(SideLabel::Neg)
                } else {
                    None
                };
                vec![(side, p.members.clone())]
            };
            let offset = p.offset();
            let mut out = Vec::new();
            for (side, members) in halves {
                let first_seed = if seed_alive { Some(p.seed) } else { None };
                for (seed, group) in greedy_cover(mesh, &members, d, first_seed) {
                    let pid = if out.is_empty() {
                        p.id
                    } else {
                        next_id += 1;
                        next_id - 1
                    };
                    let rest = centroid(mesh, &group);
                    out.push(Particle {
                        id: pid,
                        seed,
                        members: group,
                        rest,
                        position: rest + offset,
                        velocity: p.velocity,
                        side: side.map(|sign| SideTag { epoch, sign }).or(p.side),
                    });
                }
            }
            if pos && neg {
                report.split.push(p.id);
            }
            replaced.push((i, out));
        }
        let mut appended = Vec::new();
        for (i, mut parts) in replaced {
            let rest: Vec<Particle> = parts.drain(1..).collect();
            self.particles[i] = parts.pop().unwrap();
            appended.extend(rest);
        }
        appended.sort_by_key(|p| p.id);
        report.created.extend(appended.iter().map(|p| p.id));
        self.particles.extend(appended);
        self.next_id = next_id;

        // Remaining affected particles keep their offset around the new rest
        // centroid and take a side when their labelled members agree.
        for &id in &affected {
            if report.split.contains(&id) {
                continue;
            }
            if let Some(i) = self.index_of(id) {
                let (pos, neg) = signs_of(&self.particles[i], &self.tags);
                let p = &mut self.particles[i];
                let offset = p.offset();
                p.rest = centroid(mesh, &p.members);
                p.position = p.rest + offset;
                if pos != neg {
                    let sign = if pos { SideLabel::Pos } else { SideLabel::Neg };
                    p.side = Some(SideTag { epoch, sign });
                }
            }
        }

        // New vertices nobody took seed particles among same-side vertices.
        let mut covered: std::collections::HashSet<VertexId> = std::collections::HashSet::new();
        for p in &self.particles {
            for &v in p.members.iter().rev() {
                if (v as usize) < base {
                    break;
                }
                covered.insert(v);
            }
        }
        for (nv, &v) in delta.new_vertices.iter().zip(&new_ids) {
            if covered.contains(&v) {
                continue;
            }
            let tag = SideTag { epoch, sign: nv.side };
            let members: Vec<VertexId> = self
                .vertex_grid
                .within(mesh.position(v), d, |u| *mesh.position(u))
                .into_iter()
                .filter(|&u| self.tags[u as usize] == Some(tag))
                .collect();
            covered.extend(members.iter().copied().filter(|&u| u as usize >= base));
            let id = self.push_particle(mesh, v, members, Vec3::zeros(), Vec3::zeros(), Some(tag));
            report.created.push(id);
        }

        self.rebuild_index(mesh);
        Ok(report)
    }

    fn seed_position(&self, mesh: &Mesh, id: ParticleId) -> Point {
        *mesh.position(self.particles[self.index_of(id).unwrap()].seed)
    }

    /// Plain-data form of the clustering.
    pub fn to_dump(&self) -> ClusteringDump {
        ClusteringDump {
            range: self.range,
            params: self.params,
            epoch: self.epoch,
            next_id: self.next_id,
            vertex_slots: self.vertex_slots,
            particles: self.particles.clone(),
            tags: self
                .tags
                .iter()
                .enumerate()
                .filter_map(|(v, t)| t.map(|t| (v as VertexId, t)))
                .collect(),
        }
    }

    /// Restores a clustering saved with [`to_dump`](Self::to_dump) against the
    /// mesh it was computed for.
    pub fn from_dump(dump: ClusteringDump, mesh: &Mesh) -> Result<Self, ParticleError> {
        if !(dump.range > 0.0) {
            return Err(ParticleError::InvalidRange(dump.range));
        }
        dump.params.validate()?;
        if dump.vertex_slots != mesh.vertex_count() {
            return Err(ParticleError::StaleDelta(format!(
                "clustering covers {} vertices, mesh has {}",
                dump.vertex_slots,
                mesh.vertex_count()
            )));
        }
        let n = mesh.vertex_count();
        let mut tags = vec![None; n];
        for (v, t) in dump.tags {
            *tags.get_mut(v as usize).ok_or(ParticleError::Uncovered(v))? = Some(t);
        }
        for p in &dump.particles {
            if let Some(&v) = p.members.iter().chain([&p.seed]).find(|&&v| v as usize >= n) {
                return Err(ParticleError::StaleDelta(format!("particle {} references vertex {v}", p.id)));
            }
        }
        let mut vertex_grid = PointGrid::new(dump.range);
        for v in mesh.live_vertices() {
            vertex_grid.insert(v, mesh.position(v));
        }
        let mut state = SoftBodyState {
            range: dump.range,
            params: dump.params,
            particles: dump.particles,
            memberships: vec![SmallVec::new(); n],
            tags,
            epoch: dump.epoch,
            next_id: dump.next_id,
            vertex_slots: n,
            vertex_grid,
            seed_grid: PointGrid::new(dump.range),
        };
        state.particles.sort_by_key(|p| p.id);
        state.rebuild_index(mesh);
        Ok(state)
    }
}

/// Serializable clustering state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringDump {
    pub range: f64,
    pub params: SoftBodyParams,
    pub epoch: u32,
    pub next_id: ParticleId,
    pub vertex_slots: usize,
    pub particles: Vec<Particle>,
    pub tags: Vec<(VertexId, SideTag)>,
}
