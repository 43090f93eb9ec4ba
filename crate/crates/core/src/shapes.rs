//! Procedural reference meshes.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};

use crate::geom::{Aabb, Point, Vec2, Vec3};
use crate::mesh::{MeshInput, Vertex};
use crate::skinning::{Bone, Skeleton, Skin};

/// Area-weighted vertex normals. Vertices on no face get +z.
pub fn vertex_normals(positions: &[Point], faces: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); positions.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| positions[i as usize]);
        let n = (b - a).cross(&(c - a));
        for &i in f {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 1e-300 {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

/// Centers the bounding box at the origin and scales its diagonal to 1.
pub fn canonicalize(input: &mut MeshInput) {
    let b = Aabb::from_points(&input.positions);
    let (c, diag) = (b.center(), b.diagonal());
    if diag > 0.0 {
        for p in &mut input.positions {
            *p = Point::from((*p - c) / diag);
        }
    }
}

/// `nx × ny` quads over `[0, size]²` in the z = 0 plane, two triangles each.
pub fn flat_grid(nx: usize, ny: usize, size: f64) -> MeshInput {
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut uvs = Vec::with_capacity(positions.capacity());
    for j in 0..=ny {
        for i in 0..=nx {
            let (u, v) = (i as f64 / nx as f64, j as f64 / ny as f64);
            positions.push(Point::new(u * size, v * size, 0.0));
            uvs.push(Vec2::new(u, v));
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let n = positions.len();
    MeshInput {
        positions,
        faces,
        normals: Some(vec![Vec3::z(); n]),
        uvs: Some(uvs),
        skins: None,
    }
}

/// Open cylinder along +y with two bones: the root at the base and a child
/// at mid height. Weights blend linearly over the middle fifth.
pub fn skinned_cylinder(radius: f64, height: f64, rings: usize, segments: usize) -> (MeshInput, Skeleton) {
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut uvs = Vec::new();
    let mut skins = Vec::new();
    for r in 0..=rings {
        let v = r as f64 / rings as f64;
        let y = v * height;
        let w1 = ((v - 0.4) / 0.2).clamp(0.0, 1.0);
        let skin = if w1 <= 0.0 {
            Skin::rigid(0)
        } else if w1 >= 1.0 {
            Skin::rigid(1)
        } else {
            Skin::from_pairs(&[(0, 1.0 - w1), (1, w1)])
        };
        for s in 0..segments {
            let a = 2.0 * PI * s as f64 / segments as f64;
            let (sa, ca) = a.sin_cos();
            positions.push(Point::new(radius * ca, y, radius * sa));
            normals.push(Vec3::new(ca, 0.0, sa));
            uvs.push(Vec2::new(s as f64 / segments as f64, v));
            skins.push(skin.clone());
        }
    }
    let id = |r: usize, s: usize| (r * segments + s % segments) as u32;
    let mut faces = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            faces.push([id(r, s), id(r + 1, s), id(r + 1, s + 1)]);
            faces.push([id(r, s), id(r + 1, s + 1), id(r, s + 1)]);
        }
    }
    let bones = vec![
        Bone {
            name: "root".into(),
            parent: None,
            inverse_bind: Isometry3::identity(),
        },
        Bone {
            name: "upper".into(),
            parent: Some(0),
            inverse_bind: Isometry3::from_parts(
                Translation3::new(0.0, -0.5 * height, 0.0),
                UnitQuaternion::identity(),
            ),
        },
    ];
    let skeleton = Skeleton::new(bones).expect("two-bone chain is valid");
    (
        MeshInput {
            positions,
            faces,
            normals: Some(normals),
            uvs: Some(uvs),
            skins: Some(skins),
        },
        skeleton,
    )
}

fn bump(dir: &Vec3, center: &Vec3, amplitude: f64, width: f64) -> f64 {
    let c = dir.dot(center).clamp(-1.0, 1.0);
    let angle = c.acos();
    amplitude * (-(angle / width).powi(2)).exp()
}

/// Star-shaped stand-in for the Stanford bunny with the same vertex count
/// (3365): a latitude/longitude sphere with 58 bands and 59 meridians, pushed
/// out radially into a body, a head, two ears and a tail, then scaled to
/// unit bounding-box diagonal.
pub fn bunny_surrogate() -> MeshInput {
    const BANDS: usize = 58;
    const MERIDIANS: usize = 59;
    let head = Vec3::new(0.75, 0.45, 0.0).normalize();
    let ears = [
        Vec3::new(0.35, 1.0, 0.22).normalize(),
        Vec3::new(0.35, 1.0, -0.22).normalize(),
    ];
    let tail = Vec3::new(-1.0, 0.1, 0.0).normalize();
    let radius = |d: &Vec3| {
        let body = 1.0 / ((d.x / 1.1).powi(2) + (d.y / 0.85).powi(2) + (d.z / 0.8).powi(2)).sqrt();
        body + bump(d, &head, 0.35, 0.35)
            + ears.iter().map(|e| bump(d, e, 0.9, 0.12)).sum::<f64>()
            + bump(d, &tail, 0.15, 0.2)
    };

    let mut dirs = vec![Vec3::y()];
    let mut uvs = vec![Vec2::new(0.5, 0.0)];
    for b in 1..BANDS {
        let theta = PI * b as f64 / BANDS as f64;
        for m in 0..MERIDIANS {
            let phi = 2.0 * PI * m as f64 / MERIDIANS as f64;
            dirs.push(Vec3::new(theta.sin() * phi.cos(), theta.cos(), theta.sin() * phi.sin()));
            uvs.push(Vec2::new(m as f64 / MERIDIANS as f64, b as f64 / BANDS as f64));
        }
    }
    dirs.push(-Vec3::y());
    uvs.push(Vec2::new(0.5, 1.0));
    let south = (dirs.len() - 1) as u32;
    let ring = |b: usize, m: usize| (1 + (b - 1) * MERIDIANS + m % MERIDIANS) as u32;

    let mut faces = Vec::new();
    for m in 0..MERIDIANS {
        faces.push([0, ring(1, m + 1), ring(1, m)]);
    }
    for b in 1..BANDS - 1 {
        for m in 0..MERIDIANS {
            faces.push([ring(b, m), ring(b, m + 1), ring(b + 1, m + 1)]);
            faces.push([ring(b, m), ring(b + 1, m + 1), ring(b + 1, m)]);
        }
    }
    for m in 0..MERIDIANS {
        faces.push([south, ring(BANDS - 1, m), ring(BANDS - 1, m + 1)]);
    }

    let positions: Vec<Point> = dirs.iter().map(|d| Point::from(d * radius(d))).collect();
    let mut input = MeshInput {
        positions,
        faces,
        normals: None,
        uvs: Some(uvs),
        skins: None,
    };
    canonicalize(&mut input);
    input.normals = Some(vertex_normals(&input.positions, &input.faces));
    input
}

/// Splits every triangle into four at its edge midpoints. Midpoint
/// attributes are interpolated as for tear vertices.
pub fn subdivide(input: &MeshInput) -> MeshInput {
    let vertex = |i: usize| Vertex {
        position: input.positions[i],
        normal: input.normals.as_ref().map(|n| n[i]),
        uv: input.uvs.as_ref().map(|u| u[i]),
        skin: input.skins.as_ref().map(|s| s[i].clone()).unwrap_or_default(),
    };
    let mut verts: Vec<Vertex> = (0..input.positions.len()).map(vertex).collect();
    let mut mids: HashMap<(u32, u32), u32> = HashMap::new();
    let mut mid = |a: u32, b: u32, verts: &mut Vec<Vertex>| {
        let key = if a < b { (a, b) } else { (b, a) };
        *mids.entry(key).or_insert_with(|| {
            let v = Vertex::lerp(&verts[key.0 as usize], &verts[key.1 as usize], 0.5);
            verts.push(v);
            (verts.len() - 1) as u32
        })
    };
    let mut faces = Vec::with_capacity(input.faces.len() * 4);
    for &[a, b, c] in &input.faces {
        let ab = mid(a, b, &mut verts);
        let bc = mid(b, c, &mut verts);
        let ca = mid(c, a, &mut verts);
        faces.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    MeshInput {
        positions: verts.iter().map(|v| v.position).collect(),
        faces,
        normals: input
            .normals
            .as_ref()
            .map(|_| verts.iter().map(|v| v.normal.unwrap()).collect()),
        uvs: input.uvs.as_ref().map(|_| verts.iter().map(|v| v.uv.unwrap()).collect()),
        skins: input.skins.as_ref().map(|_| verts.iter().map(|v| v.skin.clone()).collect()),
    }
}
