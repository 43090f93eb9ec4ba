//! Session wire protocol.
//!
//! Every message is a JSON envelope `{"type", "revision"?, "payload"}`. On a
//! socket each envelope is one text frame. Clients open with `hello` and the
//! server answers `welcome`; a message carrying a revision other than the
//! session's current one is answered with `rejected`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geom::{Point, Vec3};
use crate::mesh::{Hit, MeshSnapshot, VertexId};
use crate::particles::{ParticleId, RepairReport};
use crate::tear::{BladeExtent, SkippedSegment, TearDelta};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed envelope: {0}")]
    Envelope(serde_json::Error),
    #[error("unknown or malformed `{kind}` message: {source}")]
    Message {
        kind: String,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Serialize, Deserialize)]
struct Tagged {
    #[serde(rename = "type")]
    kind: String,
    payload: Value,
}

fn to_envelope<T: Serialize>(msg: &T, revision: Option<u64>) -> Envelope {
    let t: Tagged = serde_json::from_value(serde_json::to_value(msg).expect("message serializes"))
        .expect("messages are adjacently tagged");
    Envelope {
        kind: t.kind,
        revision,
        payload: t.payload,
    }
}

fn from_envelope<T: for<'de> Deserialize<'de>>(env: &Envelope) -> Result<T, ProtocolError> {
    let payload = match &env.payload {
        Value::Null => Value::Object(Default::default()),
        p => p.clone(),
    };
    let v = serde_json::json!({ "type": env.kind, "payload": payload });
    serde_json::from_value(v).map_err(|source| ProtocolError::Message {
        kind: env.kind.clone(),
        source,
    })
}

impl Envelope {
    pub fn parse(text: &str) -> Result<Envelope, ProtocolError> {
        serde_json::from_str(text).map_err(ProtocolError::Envelope)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }

    pub fn client(msg: &ClientMessage, revision: Option<u64>) -> Envelope {
        to_envelope(msg, revision)
    }

    pub fn server(msg: &ServerMessage, revision: u64) -> Envelope {
        to_envelope(msg, Some(revision))
    }

    pub fn client_message(&self) -> Result<ClientMessage, ProtocolError> {
        from_envelope(self)
    }

    pub fn server_message(&self) -> Result<ServerMessage, ProtocolError> {
        from_envelope(self)
    }
}

/// Model to load into a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSource {
    /// The 3365-vertex bunny surrogate, unit diagonal.
    Bunny,
    /// `n × n` quads over the unit square in z = 0.
    Grid { n: usize },
    /// Open two-bone cylinder along +y.
    Cylinder {
        radius: f64,
        height: f64,
        rings: usize,
        segments: usize,
    },
    /// Inline OBJ text with an optional skin sidecar document.
    Obj {
        obj: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        skin: Option<String>,
    },
    /// Midpoint subdivision of another source, applied `levels` times.
    Subdivided { model: Box<ModelSource>, levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamUpdate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Particle range d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_dt: Option<f64>,
    /// Commit every N stroke samples; 0 commits on `stroke_end` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub live_commit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blade_extent: Option<BladeExtent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonePose {
    pub bone: usize,
    /// Rotation as axis × angle (radians).
    pub axis_angle: Vec3,
    #[serde(default)]
    pub translation: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello { protocol_version: u32 },
    LoadModel { model: ModelSource },
    SetParams(ParamUpdate),
    StrokeBegin {},
    StrokeSample { tip: Point, tail: Point, t: f64 },
    StrokeEnd {},
    DragParticle { id: ParticleId, dx: Vec3 },
    Pick {
        origin: Point,
        direction: Vec3,
        #[serde(default)]
        max_t: Option<f64>,
    },
    /// Local bone transforms relative to the bind pose.
    Pose { bones: Vec<BonePose> },
    Reset {},
    Tick {},
    Snapshot {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub width: f64,
    pub range: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub timestep: f64,
    pub spacing: f64,
    pub min_dt: f64,
    pub live_commit: usize,
    pub blade_extent: BladeExtent,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            width: 0.01,
            range: 0.1,
            stiffness: 50.0,
            damping: 5.0,
            timestep: 1.0 / 90.0,
            spacing: 0.01,
            min_dt: 0.0,
            live_commit: 0,
            blade_extent: BladeExtent::FullBlade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub vertices: usize,
    pub faces: usize,
    pub particles: usize,
    pub diagonal: f64,
    pub skinned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleView {
    pub id: ParticleId,
    pub position: Point,
    pub rest: Point,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        protocol_version: u32,
        session: String,
    },
    Loaded {
        info: ModelInfo,
        warnings: Vec<String>,
    },
    Params(SessionParams),
    StrokeAck {
        buffered: usize,
        retained: usize,
    },
    /// One applied tear segment; the envelope revision is the one it
    /// produced.
    Tear {
        delta: TearDelta,
        repair: RepairReport,
        micros: f64,
    },
    StrokeDone {
        segments: usize,
        skipped: Vec<SkippedSegment>,
    },
    Dragged {
        id: ParticleId,
    },
    Posed {},
    PickResult {
        hit: Option<Hit>,
    },
    Frame {
        tick: u64,
        particles: Vec<(ParticleId, Point)>,
        dirty: Vec<(VertexId, Point)>,
    },
    Snapshot {
        mesh: MeshSnapshot,
        particles: Vec<ParticleView>,
        params: SessionParams,
    },
    Rejected {
        current_revision: u64,
        reason: String,
    },
    Error {
        message: String,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_layout() {
        let env = Envelope::client(&ClientMessage::DragParticle { id: 3, dx: Vec3::x() }, Some(7));
        let text = env.to_json();
        assert_eq!(text, r#"{"type":"drag_particle","revision":7,"payload":{"dx":[1.0,0.0,0.0],"id":3}}"#);
        let back = Envelope::parse(&text).unwrap();
        assert_eq!(back.client_message().unwrap(), ClientMessage::DragParticle { id: 3, dx: Vec3::x() });
    }

    #[test]
    fn empty_payload_may_be_omitted() {
        let env = Envelope::parse(r#"{"type":"stroke_begin"}"#).unwrap();
        assert_eq!(env.client_message().unwrap(), ClientMessage::StrokeBegin {});
        let env = Envelope::parse(r#"{"type":"set_params","payload":{"width":0.05}}"#).unwrap();
        assert_eq!(
            env.client_message().unwrap(),
            ClientMessage::SetParams(ParamUpdate {
                width: Some(0.05),
                ..Default::default()
            })
        );
    }

    #[test]
    fn unknown_type_is_a_protocol_error() {
        let env = Envelope::parse(r#"{"type":"explode","payload":{}}"#).unwrap();
        assert!(matches!(env.client_message(), Err(ProtocolError::Message { .. })));
        assert!(matches!(Envelope::parse("not json"), Err(ProtocolError::Envelope(_))));
    }
}
