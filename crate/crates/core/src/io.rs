//! Loaders and writers: OBJ meshes, skin sidecars, scalpel paths, clustering
//! dumps and benchmark CSV. Structured files are JSON documents whose
//! `format` field carries a version tag.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{BenchReport, StageStats};
use crate::geom::{Point, Vec2, Vec3};
use crate::mesh::MeshInput;
use crate::particles::ClusteringDump;
use crate::skinning::{rigid_from_matrix, Bone, Influence, Skeleton, Skin, MAX_INFLUENCES};
use crate::tear::ScalpelSample;

pub const SKIN_FORMAT: &str = "tearsim-skin/1";
pub const PATH_FORMAT: &str = "tearsim-path/1";
pub const CLUSTERING_FORMAT: &str = "tearsim-clustering/1";
pub const BENCH_HEADER: [&str; 6] = ["stage", "mesh", "faces_touched", "micros_p50", "micros_p95", "micros_max"];

/// Weight sums further than this from 1 are rejected; closer ones are
/// renormalized.
pub const SKIN_SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Structural { line: usize, message: String },
    #[error("expected format `{expected}`, found `{found}`")]
    Format { expected: &'static str, found: String },
    #[error("{0}")]
    Validation(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("input is not valid UTF-8")]
    Utf8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjData {
    pub mesh: MeshInput,
    pub warnings: Vec<String>,
}

fn parse_floats<const N: usize>(fields: &[&str], line: usize, what: &str) -> Result<[f64; N], IoError> {
    if fields.len() < N {
        return Err(IoError::Parse {
            line,
            message: format!("`{what}` needs {N} components, found {}", fields.len()),
        });
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.parse::<f64>().map_err(|_| IoError::Parse {
            line,
            message: format!("invalid number `{f}` in `{what}`"),
        })?;
        if !o.is_finite() {
            return Err(IoError::Parse {
                line,
                message: format!("non-finite number `{f}` in `{what}`"),
            });
        }
    }
    Ok(out)
}

/// Resolves a 1-based or negative OBJ index against `count` elements.
fn resolve(token: &str, count: usize, line: usize, what: &str) -> Result<usize, IoError> {
    let i: i64 = token.parse().map_err(|_| IoError::Parse {
        line,
        message: format!("invalid {what} index `{token}`"),
    })?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        -1
    };
    if idx < 0 || idx >= count as i64 {
        return Err(IoError::Structural {
            line,
            message: format!("{what} index {i} out of range ({count} defined)"),
        });
    }
    Ok(idx as usize)
}

/// Assigns a per-corner attribute to a position; conflicting values are an
/// ambiguity and rejected.
fn assign<T: PartialEq + Copy>(slot: &mut Option<T>, value: T, line: usize, what: &str, v: usize) -> Result<(), IoError> {
    match slot {
        Some(old) if *old != value => Err(IoError::Structural {
            line,
            message: format!("vertex {} gets two different {what} values", v + 1),
        }),
        _ => {
            *slot = Some(value);
            Ok(())
        }
    }
}

/// Parses the `v`/`vn`/`vt`/`f` subset of OBJ. Polygons are fanned from
/// their first corner. Texture coordinates and normals are attached to the
/// position they are used with.
pub fn load_obj(bytes: &[u8]) -> Result<ObjData, IoError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IoError::Utf8)?;
    let mut positions = Vec::new();
    let mut normals_src: Vec<Vec3> = Vec::new();
    let mut uvs_src: Vec<Vec2> = Vec::new();
    let mut corners: Vec<(usize, Vec<(usize, Option<usize>, Option<usize>)>)> = Vec::new();
    let mut warnings = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        match tag {
            "v" => {
                let [x, y, z] = parse_floats::<3>(&rest, line, "v")?;
                positions.push(Point::new(x, y, z));
            }
            "vn" => {
                let [x, y, z] = parse_floats::<3>(&rest, line, "vn")?;
                normals_src.push(Vec3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(&rest, line, "vt")?;
                uvs_src.push(Vec2::new(u, v));
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(IoError::Parse {
                        line,
                        message: format!("face needs at least 3 corners, found {}", rest.len()),
                    });
                }
                let mut poly = Vec::with_capacity(rest.len());
                for c in rest {
                    let mut parts = c.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), line, "vertex")?;
                    let vt = match parts.next() {
                        Some(t) if !t.is_empty() => Some(resolve(t, uvs_src.len(), line, "texture")?),
                        _ => None,
                    };
                    let vn = match parts.next() {
                        Some(t) if !t.is_empty() => Some(resolve(t, normals_src.len(), line, "normal")?),
                        _ => None,
                    };
                    poly.push((v, vt, vn));
                }
                corners.push((line, poly));
            }
            other => warnings.push(format!("line {line}: ignored `{other}` statement")),
        }
    }

    let n = positions.len();
    let mut uvs: Vec<Option<Vec2>> = vec![None; n];
    let mut normals: Vec<Option<Vec3>> = vec![None; n];
    let mut faces = Vec::new();
    for (line, poly) in &corners {
        for &(v, vt, vn) in poly {
            if let Some(t) = vt {
                assign(&mut uvs[v], uvs_src[t], *line, "texture coordinate", v)?;
            }
            if let Some(t) = vn {
                assign(&mut normals[v], normals_src[t], *line, "normal", v)?;
            }
        }
        for i in 1..poly.len() - 1 {
            faces.push([poly[0].0 as u32, poly[i].0 as u32, poly[i + 1].0 as u32]);
        }
    }

    let uvs = complete(uvs, "texture coordinates", &mut warnings);
    let normals = complete(normals, "normals", &mut warnings);
    Ok(ObjData {
        mesh: MeshInput {
            positions,
            faces,
            normals,
            uvs,
            skins: None,
        },
        warnings,
    })
}

/// All-or-nothing per-vertex attribute.
fn complete<T>(vals: Vec<Option<T>>, what: &str, warnings: &mut Vec<String>) -> Option<Vec<T>> {
    let n = vals.len();
    let have = vals.iter().filter(|v| v.is_some()).count();
    if have == 0 {
        None
    } else if have < n {
        warnings.push(format!("{what} dropped: {} of {n} vertices have none", n - have));
        None
    } else {
        Some(vals.into_iter().map(Option::unwrap).collect())
    }
}

/// Writes positions, per-vertex uvs/normals and faces, sharing indices.
pub fn write_obj(mesh: &MeshInput) -> Vec<u8> {
    let mut s = String::new();
    for p in &mesh.positions {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    if let Some(uvs) = &mesh.uvs {
        for t in uvs {
            let _ = writeln!(s, "vt {} {}", t.x, t.y);
        }
    }
    if let Some(ns) = &mesh.normals {
        for n in ns {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
    }
    for f in &mesh.faces {
        let corner = |i: u32| {
            let i = i + 1;
            match (mesh.uvs.is_some(), mesh.normals.is_some()) {
                (true, true) => format!("{i}/{i}/{i}"),
                (true, false) => format!("{i}/{i}"),
                (false, true) => format!("{i}//{i}"),
                (false, false) => format!("{i}"),
            }
        };
        let _ = writeln!(s, "f {} {} {}", corner(f[0]), corner(f[1]), corner(f[2]));
    }
    s.into_bytes()
}

fn check_format(found: &str, expected: &'static str) -> Result<(), IoError> {
    if found == expected {
        Ok(())
    } else {
        Err(IoError::Format {
            expected,
            found: found.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindTransform {
    /// Row-major rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoneRecord {
    pub name: String,
    pub parent: Option<usize>,
    /// Bone-to-model transform in the bind pose.
    pub bind: BindTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SkinDocument {
    format: String,
    bones: Vec<BoneRecord>,
    /// Per vertex: `[bone, weight]` pairs.
    weights: Vec<Vec<(u16, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkinFile {
    pub skeleton: Skeleton,
    pub skins: Vec<Skin>,
}

/// Reads a skin sidecar. Parents must precede their children; cycles, unknown
/// bones, more than four influences and weight sums off by more than 1e-3
/// are rejected.
pub fn load_skin(bytes: &[u8]) -> Result<SkinFile, IoError> {
    let doc: SkinDocument = serde_json::from_slice(bytes)?;
    check_format(&doc.format, SKIN_FORMAT)?;
    let nb = doc.bones.len();
    for (i, b) in doc.bones.iter().enumerate() {
        let mut seen = vec![false; nb];
        let mut cur = Some(i);
        while let Some(c) = cur {
            if c >= nb {
                return Err(IoError::Validation(format!("bone `{}`: unknown parent {c}", b.name)));
            }
            if seen[c] {
                return Err(IoError::Validation(format!("bone `{}`: cyclic parent chain", b.name)));
            }
            seen[c] = true;
            cur = doc.bones[c].parent;
        }
    }
    let mut bones = Vec::with_capacity(nb);
    for b in &doc.bones {
        let bind = rigid_from_matrix(b.bind.rotation, b.bind.translation)
            .ok_or_else(|| IoError::Validation(format!("bone `{}`: bind transform is not rigid", b.name)))?;
        bones.push(Bone {
            name: b.name.clone(),
            parent: b.parent,
            inverse_bind: bind.inverse(),
        });
    }
    let skeleton = Skeleton::new(bones).map_err(|e| IoError::Validation(e.to_string()))?;

    let mut skins = Vec::with_capacity(doc.weights.len());
    for (v, list) in doc.weights.iter().enumerate() {
        if list.is_empty() {
            skins.push(Skin::default());
            continue;
        }
        if list.len() > MAX_INFLUENCES {
            return Err(IoError::Validation(format!(
                "vertex {v}: {} influences (max {MAX_INFLUENCES})",
                list.len()
            )));
        }
        let mut sum = 0.0;
        for &(bone, w) in list {
            if bone as usize >= nb {
                return Err(IoError::Validation(format!("vertex {v}: unknown bone {bone}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(IoError::Validation(format!("vertex {v}: invalid weight {w}")));
            }
            if list.iter().filter(|(b, _)| *b == bone).count() > 1 {
                return Err(IoError::Validation(format!("vertex {v}: bone {bone} listed twice")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SKIN_SUM_TOLERANCE {
            return Err(IoError::Validation(format!("vertex {v}: weights sum to {sum}")));
        }
        skins.push(Skin(
            list.iter()
                .map(|&(bone, w)| Influence { bone, weight: w / sum })
                .collect(),
        ));
    }
    Ok(SkinFile { skeleton, skins })
}

pub fn write_skin(skin: &SkinFile) -> Vec<u8> {
    let bones = skin
        .skeleton
        .bones()
        .iter()
        .map(|b| {
            let bind = b.inverse_bind.inverse();
            let m = bind.rotation.to_rotation_matrix();
            let rotation = [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)]));
            BoneRecord {
                name: b.name.clone(),
                parent: b.parent,
                bind: BindTransform {
                    rotation,
                    translation: bind.translation.vector.into(),
                },
            }
        })
        .collect();
    let doc = SkinDocument {
        format: SKIN_FORMAT.into(),
        bones,
        weights: skin
            .skins
            .iter()
            .map(|s| s.iter().map(|i| (i.bone, i.weight)).collect())
            .collect(),
    };
    serde_json::to_vec_pretty(&doc).expect("skin serializes")
}

/// A recorded scalpel stroke with its tear parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalpelPathFile {
    pub format: String,
    pub width: f64,
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub min_dt: f64,
    pub samples: Vec<ScalpelSample>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl ScalpelPathFile {
    pub fn new(width: f64, spacing: f64, samples: Vec<ScalpelSample>) -> Self {
        ScalpelPathFile {
            format: PATH_FORMAT.into(),
            width,
            spacing,
            min_dt: 0.0,
            samples,
        }
    }
}

pub fn load_scalpel_path(bytes: &[u8]) -> Result<ScalpelPathFile, IoError> {
    let f: ScalpelPathFile = serde_json::from_slice(bytes)?;
    check_format(&f.format, PATH_FORMAT)?;
    if !(f.width >= 0.0 && f.width.is_finite()) {
        return Err(IoError::Validation(format!("invalid width {}", f.width)));
    }
    if !(f.spacing >= 0.0) || !(f.min_dt >= 0.0) {
        return Err(IoError::Validation("spacing and min_dt must be non-negative".into()));
    }
    if let Some(i) = f.samples.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(IoError::Validation(format!("sample {} goes back in time", i + 1)));
    }
    Ok(f)
}

pub fn write_scalpel_path(path: &ScalpelPathFile) -> Vec<u8> {
    serde_json::to_vec_pretty(path).expect("path serializes")
}

#[derive(Serialize, Deserialize)]
struct ClusteringDocument {
    format: String,
    #[serde(flatten)]
    dump: ClusteringDump,
}

pub fn write_clustering(dump: &ClusteringDump) -> Vec<u8> {
    let doc = ClusteringDocument {
        format: CLUSTERING_FORMAT.into(),
        dump: dump.clone(),
    };
    serde_json::to_vec(&doc).expect("clustering serializes")
}

pub fn load_clustering(bytes: &[u8]) -> Result<ClusteringDump, IoError> {
    let doc: ClusteringDocument = serde_json::from_slice(bytes)?;
    check_format(&doc.format, CLUSTERING_FORMAT)?;
    Ok(doc.dump)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub stage: String,
    pub mesh: String,
    pub faces_touched: u64,
    pub micros_p50: f64,
    pub micros_p95: f64,
    pub micros_max: f64,
}

impl BenchRow {
    fn from_stage(mesh: &str, s: &StageStats) -> Self {
        BenchRow {
            stage: s.stage.clone(),
            mesh: mesh.into(),
            faces_touched: s.faces_touched,
            micros_p50: s.micros_p50,
            micros_p95: s.micros_p95,
            micros_max: s.micros_max,
        }
    }
}

/// One CSV row per stage under a fixed header.
pub fn write_bench(report: &BenchReport) -> Result<Vec<u8>, IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(BENCH_HEADER)?;
    for s in &report.stages {
        w.serialize(BenchRow::from_stage(&report.mesh, s))?;
    }
    w.into_inner().map_err(|e| IoError::Validation(e.to_string()))
}

pub fn load_bench(bytes: &[u8]) -> Result<Vec<BenchRow>, IoError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != BENCH_HEADER {
        return Err(IoError::Validation(format!("unexpected bench header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(IoError::from)).collect()
}
