//! Successive half-space clipping of one triangle against a tear cell.

use std::collections::HashMap;

use crate::geom::{polygon_area, triangle_area, Plane, Point};
use crate::mesh::{FaceId, Mesh, Vertex, VertexId, DEGENERATE_AREA};

use super::{NewVertex, TearCell};

/// Kept pieces smaller than this fraction of the squared mesh diagonal are
/// dropped.
pub const SLIVER_FRACTION: f64 = 1e-10;

/// Signed distances within this fraction of the diagonal count as on-plane.
const PLANE_EPS_FRACTION: f64 = 1e-12;

/// Polygon corner during clipping. `edges` is a bitmask of the source
/// triangle edges the point lies on (edge k joins corner k and k+1).
#[derive(Debug, Clone, Copy)]
struct Corner {
    id: VertexId,
    pos: Point,
    edges: u8,
}

/// Allocates tear-generated vertices for one segment, sharing a vertex
/// between every face that splits the same edge with the same plane.
pub(crate) struct VertexPool<'m> {
    mesh: &'m Mesh,
    base: VertexId,
    pub(crate) vertices: Vec<NewVertex>,
    index: HashMap<(VertexId, VertexId, u8), VertexId>,
    current: [VertexId; 3],
}

impl<'m> VertexPool<'m> {
    pub(crate) fn new(mesh: &'m Mesh) -> Self {
        VertexPool {
            mesh,
            base: mesh.vertex_count() as VertexId,
            vertices: Vec::new(),
            index: HashMap::new(),
            current: [0; 3],
        }
    }

    /// Drops vertices allocated since `mark` that no triangle uses (directly
    /// or as a source-edge endpoint of a used vertex) and renumbers the rest.
    fn retain_used(&mut self, mark: usize, triangles: &mut [[VertexId; 3]]) {
        let first = self.base + mark as VertexId;
        let n = self.vertices.len() - mark;
        if n == 0 {
            return;
        }
        let mut keep = vec![false; n];
        for v in triangles.iter().flatten() {
            if *v >= first {
                keep[(v - first) as usize] = true;
            }
        }
        // Source-edge endpoints are always older than the vertex itself.
        for k in (0..n).rev() {
            if keep[k] {
                let (a, b) = self.vertices[mark + k].edge;
                for e in [a, b] {
                    if e >= first {
                        keep[(e - first) as usize] = true;
                    }
                }
            }
        }
        if keep.iter().all(|&k| k) {
            return;
        }
        let mut remap = vec![VertexId::MAX; n];
        let mut next = first;
        for k in 0..n {
            if keep[k] {
                remap[k] = next;
                next += 1;
            }
        }
        let mut i = 0;
        self.vertices.retain(|_| {
            let r = i < mark || keep[i - mark];
            i += 1;
            r
        });
        let fix = |id: &mut VertexId| {
            if *id >= first {
                *id = remap[(*id - first) as usize];
            }
        };
        for v in &mut self.vertices[mark..] {
            fix(&mut v.edge.0);
            fix(&mut v.edge.1);
        }
        for v in triangles.iter_mut().flatten() {
            fix(v);
        }
        self.index.retain(|key, id| {
            if key.0 >= first || key.1 >= first {
                return false;
            }
            if *id >= first {
                *id = remap[(*id - first) as usize];
                *id != VertexId::MAX
            } else {
                true
            }
        });
    }

    fn edge_endpoints(&self, k: usize) -> (VertexId, VertexId) {
        (self.current[k], self.current[(k + 1) % 3])
    }

    fn vertex(&self, id: VertexId) -> &Vertex {
        if id >= self.base {
            &self.vertices[(id - self.base) as usize].vertex
        } else {
            self.mesh.vertex(id)
        }
    }

    /// Vertex where `plane` crosses the segment `a`–`b`. The clip parameter
    /// runs from the lower id to the higher so shared edges produce
    /// bit-identical vertices.
    fn split(&mut self, a: VertexId, b: VertexId, plane_idx: u8, plane: &Plane, cell: &TearCell) -> VertexId {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if let Some(&id) = self.index.get(&(lo, hi, plane_idx)) {
            return id;
        }
        let (va, vb) = (self.vertex(lo), self.vertex(hi));
        let da = plane.signed_distance(&va.position);
        let db = plane.signed_distance(&vb.position);
        let t = (da / (da - db)).clamp(0.0, 1.0);
        let vertex = Vertex::lerp(va, vb, t);
        let side = cell.side_of(&vertex.position);
        let id = self.base + self.vertices.len() as VertexId;
        self.vertices.push(NewVertex {
            vertex,
            side,
            edge: (lo, hi),
            t,
        });
        self.index.insert((lo, hi, plane_idx), id);
        id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClipOutcome {
    /// The triangle only touches the cell boundary.
    Untouched,
    /// Nothing of measurable area survives.
    Removed,
    /// Surviving convex pieces, fan-triangulated.
    Clipped { triangles: Vec<[VertexId; 3]> },
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Out,
    In,
    On,
}

/// Splits `poly` by `plane` into the closed outside and inside parts.
fn split_polygon(
    poly: &[Corner],
    plane_idx: u8,
    plane: &Plane,
    eps: f64,
    cell: &TearCell,
    pool: &mut VertexPool,
) -> (Vec<Corner>, Vec<Corner>) {
    let class: Vec<Class> = poly
        .iter()
        .map(|c| {
            let d = plane.signed_distance(&c.pos);
            if d > eps {
                Class::Out
            } else if d < -eps {
                Class::In
            } else {
                Class::On
            }
        })
        .collect();
    let on: Vec<Corner> = poly
        .iter()
        .zip(&class)
        .filter(|(_, &c)| c == Class::On)
        .map(|(p, _)| *p)
        .collect();
    let any_in = class.contains(&Class::In);
    let any_out = class.contains(&Class::Out);
    if !any_in && !any_out {
        // Lies in the plane, hence outside the open interior.
        return (poly.to_vec(), Vec::new());
    }
    if !any_in {
        return (poly.to_vec(), on);
    }
    if !any_out {
        return (on, poly.to_vec());
    }
    let mut out = Vec::with_capacity(poly.len() + 1);
    let mut inside = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let (a, b) = (&poly[i], &poly[j]);
        if class[i] != Class::In {
            out.push(*a);
        }
        if class[i] != Class::Out {
            inside.push(*a);
        }
        let crossing = matches!(
            (class[i], class[j]),
            (Class::Out, Class::In) | (Class::In, Class::Out)
        );
        if crossing {
            let shared = a.edges & b.edges;
            let corner = if shared != 0 {
                // Along a source edge: split the original edge so neighbours
                // sharing it produce the same vertex.
                let k = shared.trailing_zeros() as usize;
                let (ea, eb) = pool.edge_endpoints(k);
                let id = pool.split(ea, eb, plane_idx, plane, cell);
                Corner {
                    id,
                    pos: pool.vertex(id).position,
                    edges: 1 << k,
                }
            } else {
                let id = pool.split(a.id, b.id, plane_idx, plane, cell);
                Corner {
                    id,
                    pos: pool.vertex(id).position,
                    edges: 0,
                }
            };
            out.push(corner);
            inside.push(corner);
        }
    }
    (out, inside)
}

fn max_extent(points: &[Point]) -> f64 {
    let mut m = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            m = m.max((a - b).norm());
        }
    }
    m
}

/// Closed inside part of a degenerate (point or segment) polygon.
pub(crate) fn clip_points(points: &[Point], plane: &Plane, eps: f64) -> Vec<Point> {
    let n = points.len();
    let d: Vec<f64> = points.iter().map(|p| plane.signed_distance(p)).collect();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let j = (i + 1) % n;
        if d[i] <= eps {
            out.push(points[i]);
        }
        if n > 1 && ((d[i] > eps && d[j] < -eps) || (d[i] < -eps && d[j] > eps)) {
            let t = d[i] / (d[i] - d[j]);
            out.push(crate::geom::lerp_point(&points[i], &points[j], t));
        }
    }
    out
}

/// Clips face `face` against `cell`: the kept region is the triangle minus
/// the cell interior. Each plane in order splits the running polygon; the
/// outside part is kept and the inside part moves on to the next plane.
pub(crate) fn clip_face_with(mesh: &Mesh, face: FaceId, cell: &TearCell, pool: &mut VertexPool) -> ClipOutcome {
    let diag = mesh.diagonal();
    let eps = PLANE_EPS_FRACTION * diag;
    let sliver = SLIVER_FRACTION * diag * diag;
    let tri = mesh.face(face);
    pool.current = tri;
    let mark = pool.vertices.len();
    let mut poly: Vec<Corner> = (0..3)
        .map(|k| Corner {
            id: tri[k],
            pos: *mesh.position(tri[k]),
            edges: (1 << k) | (1 << ((k + 2) % 3)),
        })
        .collect();

    let mut kept: Vec<Vec<Corner>> = Vec::new();
    // Once the inside part collapses below a polygon it is tracked as bare
    // points so no vertices are allocated for it.
    let mut residue: Option<Vec<Point>> = None;
    for (i, plane) in cell.planes.iter().enumerate() {
        match residue.as_mut() {
            Some(points) => *points = clip_points(points, plane, eps),
            None => {
                let (out, inside) = split_polygon(&poly, i as u8, plane, eps, cell, pool);
                if out.len() >= 3 {
                    kept.push(out);
                }
                poly = inside;
                if poly.len() < 3 {
                    residue = Some(poly.iter().map(|c| c.pos).collect());
                }
            }
        }
    }
    let remaining: Vec<Point> = match residue {
        Some(points) => points,
        None => poly.iter().map(|c| c.pos).collect(),
    };
    let remainder = polygon_area(&remaining);
    let straddles = {
        let d: Vec<f64> = tri
            .iter()
            .map(|&v| cell.mid_plane.signed_distance(mesh.position(v)))
            .collect();
        d.iter().any(|&x| x > eps) && d.iter().any(|&x| x < -eps)
    };
    // A corner strictly inside must go even when the area inside is a sliver.
    let corner_inside = tri
        .iter()
        .any(|&v| cell.planes.iter().all(|pl| pl.signed_distance(mesh.position(v)) < -eps));
    let touched =
        corner_inside || remainder > sliver || (straddles && max_extent(&remaining) > 1e-9 * diag);
    if !touched {
        pool.retain_used(mark, &mut []);
        return ClipOutcome::Untouched;
    }

    let mut triangles = Vec::new();
    for piece in kept {
        let pts: Vec<Point> = piece.iter().map(|c| c.pos).collect();
        if polygon_area(&pts) < sliver {
            continue;
        }
        for k in 1..piece.len() - 1 {
            let (a, b, c) = (&piece[0], &piece[k], &piece[k + 1]);
            if a.id == b.id || b.id == c.id || a.id == c.id {
                continue;
            }
            if triangle_area(&a.pos, &b.pos, &c.pos) < DEGENERATE_AREA {
                continue;
            }
            triangles.push([a.id, b.id, c.id]);
        }
    }
    pool.retain_used(mark, &mut triangles);
    if triangles.is_empty() {
        ClipOutcome::Removed
    } else {
        ClipOutcome::Clipped { triangles }
    }
}
