//! Interactive tearing session: model, clustering, stroke buffer and
//! revision counter driven by protocol messages. Every accepted envelope is
//! recorded, so replaying the transcript on a fresh session reproduces the
//! final state exactly.

use std::time::Instant;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use sha2::{Digest, Sha256};

use crate::geom::{Point, Vec3};
use crate::api::{load_model_source, LoadedModel};
use crate::mesh::{Mesh, Ray};
use crate::particles::{SoftBodyParams, SoftBodyState};
use crate::protocol::{
    BonePose, ClientMessage, Envelope, ModelInfo, ModelSource, ParamUpdate, ParticleView, ServerMessage,
    SessionParams, PROTOCOL_VERSION,
};
use crate::skinning::Skeleton;
use crate::tear::{
    apply_tear_segment, clamp_blade_to_surface, plan_cells, BladeExtent, PathSampler, ScalpelSample, TearCell,
};

struct Model {
    base: Mesh,
    base_skeleton: Option<Skeleton>,
    mesh: Mesh,
    skeleton: Option<Skeleton>,
    soft: SoftBodyState,
    /// Vertex positions as last streamed to clients.
    shown: Vec<Point>,
    warnings: Vec<String>,
}

struct Stroke {
    sampler: PathSampler,
    /// Blade-clamped copies of the retained samples, filled lazily.
    prepared: Vec<ScalpelSample>,
    committed: usize,
    since_commit: usize,
}

pub struct Session {
    id: String,
    params: SessionParams,
    revision: u64,
    ticks: u64,
    model: Option<Model>,
    stroke: Option<Stroke>,
    transcript: Vec<Envelope>,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Session {
            id: id.into(),
            params: SessionParams::default(),
            revision: 0,
            ticks: 0,
            model: None,
            stroke: None,
            transcript: Vec::new(),
        }
    }

    /// Runs `transcript` through a fresh session.
    pub fn replay(id: impl Into<String>, transcript: &[Envelope]) -> Self {
        let mut s = Session::new(id);
        for env in transcript {
            s.handle(env.clone());
        }
        s
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn params(&self) -> &SessionParams {
        &self.params
    }

    pub fn transcript(&self) -> &[Envelope] {
        &self.transcript
    }

    pub fn is_loaded(&self) -> bool {
        self.model.is_some()
    }

    pub fn stroke_open(&self) -> bool {
        self.stroke.is_some()
    }

    pub fn mesh(&self) -> Option<&Mesh> {
        self.model.as_ref().map(|m| &m.mesh)
    }

    pub fn soft_body(&self) -> Option<&SoftBodyState> {
        self.model.as_ref().map(|m| &m.soft)
    }

    pub fn skeleton(&self) -> Option<&Skeleton> {
        self.model.as_ref().and_then(|m| m.skeleton.as_ref())
    }

    /// SHA-256 over the mesh and clustering state.
    pub fn state_digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.revision.to_le_bytes());
        if let Some(m) = &self.model {
            h.update(m.mesh.canonical_bytes());
            h.update(crate::io::write_clustering(&m.soft.to_dump()));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn soft_params(&self) -> SoftBodyParams {
        SoftBodyParams {
            stiffness: self.params.stiffness,
            damping: self.params.damping,
            timestep: self.params.timestep,
            ..Default::default()
        }
    }

    fn out(&self, msg: ServerMessage) -> Envelope {
        Envelope::server(&msg, self.revision)
    }

    fn error(&self, message: impl Into<String>) -> Vec<Envelope> {
        vec![self.out(ServerMessage::Error {
            message: message.into(),
        })]
    }

    /// Parses and handles one text frame. Unparseable frames are answered
    /// with an error and not recorded.
    pub fn handle_text(&mut self, text: &str) -> Vec<Envelope> {
        match Envelope::parse(text) {
            Ok(env) => self.handle(env),
            Err(e) => self.error(e.to_string()),
        }
    }

    pub fn handle(&mut self, env: Envelope) -> Vec<Envelope> {
        self.transcript.push(env.clone());
        let msg = match env.client_message() {
            Ok(m) => m,
            Err(e) => return self.error(e.to_string()),
        };
        if let Some(r) = env.revision {
            if r != self.revision && !matches!(msg, ClientMessage::Hello { .. }) {
                return vec![self.out(ServerMessage::Rejected {
                    current_revision: self.revision,
                    reason: format!("message targets revision {r}"),
                })];
            }
        }
        match msg {
            ClientMessage::Hello { protocol_version } => {
                if protocol_version != PROTOCOL_VERSION {
                    return self.error(format!(
                        "unsupported protocol version {protocol_version} (server speaks {PROTOCOL_VERSION})"
                    ));
                }
                vec![self.out(ServerMessage::Welcome {
                    protocol_version: PROTOCOL_VERSION,
                    session: self.id.clone(),
                })]
            }
            ClientMessage::LoadModel { model } => self.load(&model),
            ClientMessage::SetParams(update) => self.set_params(update),
            ClientMessage::StrokeBegin {} => {
                if self.model.is_none() {
                    return self.error("no model loaded");
                }
                if self.stroke.is_some() {
                    return self.error("a stroke is already open");
                }
                self.stroke = Some(Stroke {
                    sampler: PathSampler::new(self.params.spacing, self.params.min_dt),
                    prepared: Vec::new(),
                    committed: 0,
                    since_commit: 0,
                });
                vec![self.out(ServerMessage::StrokeAck {
                    buffered: 0,
                    retained: 0,
                })]
            }
            ClientMessage::StrokeSample { tip, tail, t } => self.stroke_sample(ScalpelSample::new(tip, tail, t)),
            ClientMessage::StrokeEnd {} => self.stroke_end(),
            ClientMessage::DragParticle { id, dx } => {
                let Some(m) = self.model.as_mut() else {
                    return self.error("no model loaded");
                };
                if let Err(e) = m.soft.displace_particle(id, dx) {
                    return self.error(e.to_string());
                }
                self.revision += 1;
                vec![self.out(ServerMessage::Dragged { id })]
            }
            ClientMessage::Pick {
                origin,
                direction,
                max_t,
            } => {
                let Some(m) = self.model.as_ref() else {
                    return self.error("no model loaded");
                };
                let Some(ray) = Ray::new(origin, direction, max_t.unwrap_or(f64::INFINITY)) else {
                    return self.error("pick ray needs a non-zero direction");
                };
                vec![self.out(ServerMessage::PickResult {
                    hit: m.mesh.raycast(&ray),
                })]
            }
            ClientMessage::Pose { bones } => self.pose(&bones),
            ClientMessage::Reset {} => {
                let Some(m) = self.model.as_mut() else {
                    return self.error("no model loaded");
                };
                m.mesh = m.base.clone();
                m.skeleton = m.base_skeleton.clone();
                m.shown = m.mesh.positions();
                let soft = SoftBodyState::decompose(&m.mesh, self.params.range, SoftBodyParams {
                    stiffness: self.params.stiffness,
                    damping: self.params.damping,
                    timestep: self.params.timestep,
                    ..Default::default()
                });
                match soft {
                    Ok(s) => m.soft = s,
                    Err(e) => return self.error(e.to_string()),
                }
                self.stroke = None;
                self.revision += 1;
                vec![self.loaded_message()]
            }
            ClientMessage::Tick {} => self.tick(),
            ClientMessage::Snapshot {} => match self.snapshot() {
                Some(s) => vec![self.out(s)],
                None => self.error("no model loaded"),
            },
        }
    }

    fn loaded_message(&self) -> Envelope {
        let m = self.model.as_ref().expect("model loaded");
        self.out(ServerMessage::Loaded {
            info: ModelInfo {
                vertices: m.mesh.live_vertex_count(),
                faces: m.mesh.live_face_count(),
                particles: m.soft.len(),
                diagonal: m.mesh.diagonal(),
                skinned: m.skeleton.is_some(),
            },
            warnings: m.warnings.clone(),
        })
    }

    fn load(&mut self, source: &ModelSource) -> Vec<Envelope> {
        let LoadedModel {
            mesh,
            skeleton,
            warnings,
        } = match load_model_source(source) {
            Ok(x) => x,
            Err(e) => return self.error(e),
        };
        let soft = match SoftBodyState::decompose(&mesh, self.params.range, self.soft_params()) {
            Ok(s) => s,
            Err(e) => return self.error(e.to_string()),
        };
        self.model = Some(Model {
            base: mesh.clone(),
            base_skeleton: skeleton.clone(),
            shown: mesh.positions(),
            mesh,
            skeleton,
            soft,
            warnings,
        });
        self.stroke = None;
        self.revision += 1;
        vec![self.loaded_message()]
    }

    fn set_params(&mut self, u: ParamUpdate) -> Vec<Envelope> {
        let mut p = self.params.clone();
        p.width = u.width.unwrap_or(p.width);
        p.range = u.range.unwrap_or(p.range);
        p.stiffness = u.stiffness.unwrap_or(p.stiffness);
        p.damping = u.damping.unwrap_or(p.damping);
        p.timestep = u.timestep.unwrap_or(p.timestep);
        p.spacing = u.spacing.unwrap_or(p.spacing);
        p.min_dt = u.min_dt.unwrap_or(p.min_dt);
        p.live_commit = u.live_commit.unwrap_or(p.live_commit);
        p.blade_extent = u.blade_extent.unwrap_or(p.blade_extent);
        if !(p.width >= 0.0 && p.width.is_finite()) {
            return self.error(format!("invalid width {}", p.width));
        }
        if !(p.range > 0.0 && p.range.is_finite()) {
            return self.error(format!("invalid particle range {}", p.range));
        }
        if !(p.spacing >= 0.0 && p.min_dt >= 0.0) || (p.spacing == 0.0 && p.min_dt == 0.0) {
            return self.error("spacing or min_dt must be positive");
        }
        let soft = SoftBodyParams {
            stiffness: p.stiffness,
            damping: p.damping,
            timestep: p.timestep,
            ..Default::default()
        };
        if let Err(e) = soft.validate() {
            return self.error(e.to_string());
        }
        let range_changed = p.range != self.params.range;
        if let Some(m) = self.model.as_mut() {
            if range_changed {
                match SoftBodyState::decompose(&m.mesh, p.range, soft) {
                    Ok(s) => m.soft = s,
                    Err(e) => return self.error(e.to_string()),
                }
            } else {
                m.soft.set_params(soft).expect("validated");
            }
        }
        self.params = p;
        self.revision += 1;
        vec![self.out(ServerMessage::Params(self.params.clone()))]
    }

    fn pose(&mut self, bones: &[BonePose]) -> Vec<Envelope> {
        let Some(sk) = self.model.as_mut().and_then(|m| m.skeleton.as_mut()) else {
            return self.error("model has no skeleton");
        };
        if let Some(b) = bones.iter().find(|b| b.bone >= sk.len()) {
            return self.error(format!("unknown bone {}", b.bone));
        }
        if bones
            .iter()
            .any(|b| !b.axis_angle.iter().chain(b.translation.iter().flatten()).all(|c| c.is_finite()))
        {
            return self.error("pose must be finite");
        }
        for b in bones {
            let local = Isometry3::from_parts(
                Translation3::from(b.translation.unwrap_or_else(Vec3::zeros)),
                UnitQuaternion::from_scaled_axis(b.axis_angle),
            );
            let bind = sk.bind_local(b.bone);
            sk.set_local(b.bone, bind * local);
        }
        self.revision += 1;
        vec![self.out(ServerMessage::Posed {})]
    }

    fn stroke_sample(&mut self, sample: ScalpelSample) -> Vec<Envelope> {
        if self.model.is_none() {
            return self.error("no model loaded");
        }
        if !(sample.tip.coords.iter().chain(sample.tail.coords.iter()).all(|c| c.is_finite())
            && sample.timestamp.is_finite())
        {
            return self.error("stroke sample must be finite");
        }
        let Some(stroke) = self.stroke.as_mut() else {
            return self.error("no stroke is open");
        };
        stroke.sampler.push(sample);
        stroke.since_commit += 1;
        let live = self.params.live_commit;
        let mut out = Vec::new();
        if live > 0 && stroke.since_commit >= live {
            stroke.since_commit = 0;
            out.extend(self.commit(false));
        }
        let stroke = self.stroke.as_ref().expect("stroke open");
        out.insert(
            0,
            self.out(ServerMessage::StrokeAck {
                buffered: stroke.since_commit,
                retained: stroke.sampler.kept().len(),
            }),
        );
        out
    }

    fn stroke_end(&mut self) -> Vec<Envelope> {
        if self.model.is_none() {
            return self.error("no model loaded");
        }
        if self.stroke.is_none() {
            return self.error("no stroke is open");
        }
        self.commit(true)
    }

    fn clamp(&self, s: &ScalpelSample) -> ScalpelSample {
        match self.params.blade_extent {
            BladeExtent::FullBlade => *s,
            BladeExtent::ClampToSurface => clamp_blade_to_surface(&self.model.as_ref().unwrap().mesh, s),
        }
    }

    /// Applies every cell that can no longer change. With `finish`, the
    /// stroke is closed and all remaining cells are applied; otherwise the
    /// last planned cell is held back because its end cap depends on the
    /// next segment.
    fn commit(&mut self, finish: bool) -> Vec<Envelope> {
        let mut stroke = self.stroke.take().expect("stroke open");
        let kept = stroke.sampler.kept().to_vec();
        let samples: Vec<ScalpelSample> = if finish {
            let fin = stroke.sampler.clone().finish();
            fin.iter()
                .enumerate()
                .map(|(i, s)| match (stroke.prepared.get(i), kept.get(i)) {
                    (Some(p), Some(k)) if k == s => *p,
                    _ => self.clamp(s),
                })
                .collect()
        } else {
            for s in &kept[stroke.prepared.len()..] {
                let c = self.clamp(s);
                stroke.prepared.push(c);
            }
            stroke.prepared.clone()
        };
        let (cells, skipped) = plan_cells(&samples, self.params.width);
        let segments: Vec<usize> = (0..samples.len().saturating_sub(1))
            .filter(|i| !skipped.iter().any(|s| s.segment == *i))
            .collect();
        let end = if finish { cells.len() } else { cells.len().saturating_sub(1) };
        let mut out = Vec::new();
        for (cell, &seg) in cells.iter().zip(&segments).take(end).skip(stroke.committed) {
            match self.apply_cell(cell) {
                Ok(env) => out.push(env),
                Err(e) => {
                    out.extend(self.error(e));
                    break;
                }
            }
            stroke.committed += 1;
            stroke.sampler.lock(seg + 3);
        }
        if finish {
            out.push(self.out(ServerMessage::StrokeDone {
                segments: stroke.committed,
                skipped,
            }));
        } else {
            self.stroke = Some(stroke);
        }
        out
    }

    fn apply_cell(&mut self, cell: &TearCell) -> Result<Envelope, String> {
        let m = self.model.as_mut().expect("model loaded");
        let t = Instant::now();
        let delta = apply_tear_segment(&m.mesh, cell);
        m.mesh.apply_delta(&delta).map_err(|e| e.to_string())?;
        let repair = m.soft.update_after_tear(&delta, &m.mesh).map_err(|e| e.to_string())?;
        let micros = t.elapsed().as_secs_f64() * 1e6;
        m.shown.extend(delta.new_vertices.iter().map(|v| v.vertex.position));
        self.revision += 1;
        Ok(self.out(ServerMessage::Tear { delta, repair, micros }))
    }

    fn tick(&mut self) -> Vec<Envelope> {
        let h = self.params.timestep;
        let Some(m) = self.model.as_mut() else {
            return self.error("no model loaded");
        };
        m.soft.step(h);
        let positions = match m.soft.apply_vertex_positions(&m.mesh, m.skeleton.as_ref()) {
            Ok(p) => p,
            Err(e) => return self.error(e.to_string()),
        };
        let mut dirty = Vec::new();
        for v in m.mesh.live_vertices() {
            let i = v as usize;
            if positions[i] != m.shown[i] {
                dirty.push((v, positions[i]));
                m.shown[i] = positions[i];
            }
        }
        let particles = m.soft.particles().iter().map(|p| (p.id, p.position)).collect();
        self.ticks += 1;
        vec![self.out(ServerMessage::Frame {
            tick: self.ticks,
            particles,
            dirty,
        })]
    }

    pub fn snapshot(&self) -> Option<ServerMessage> {
        let m = self.model.as_ref()?;
        Some(ServerMessage::Snapshot {
            mesh: m.mesh.snapshot(),
            particles: m
                .soft
                .particles()
                .iter()
                .map(|p| ParticleView {
                    id: p.id,
                    position: p.position,
                    rest: p.rest,
                    members: p.members.len(),
                })
                .collect(),
            params: self.params.clone(),
        })
    }
}
