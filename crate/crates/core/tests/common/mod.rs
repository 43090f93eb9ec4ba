//! Independent oracles and fixtures shared by the integration tests. Nothing
//! here calls the geometry routines under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tearsim_core::geom::{Aabb, Plane, Point, Vec3};
use tearsim_core::mesh::{BuildMode, FaceId, Mesh, Ray};
use tearsim_core::particles::SoftBodyState;
use tearsim_core::shapes::{bunny_surrogate, flat_grid, skinned_cylinder};
use tearsim_core::tear::{ScalpelSample, TearCell};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(n: usize) -> Mesh {
    Mesh::build(flat_grid(n, n, 1.0), BuildMode::Strict).unwrap()
}

pub fn bunny() -> Mesh {
    Mesh::build(bunny_surrogate(), BuildMode::Strict).unwrap()
}

pub fn cylinder() -> (Mesh, tearsim_core::skinning::Skeleton) {
    let (input, sk) = skinned_cylinder(0.1, 1.0, 40, 24);
    (Mesh::build(input, BuildMode::Strict).unwrap(), sk)
}

pub fn sample(tip: [f64; 3], tail: [f64; 3], t: f64) -> ScalpelSample {
    ScalpelSample::new(Point::from(tip), Point::from(tail), t)
}

/// Vertical blade (tip above, tail below the z = 0 plane) at each xy point.
pub fn grid_stroke(points: &[[f64; 2]]) -> Vec<ScalpelSample> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| sample([p[0], p[1], 0.2], [p[0], p[1], -0.2], i as f64 * 0.01))
        .collect()
}

/// Resamples a polyline at roughly `step` spacing.
pub fn densify(points: &[[f64; 2]], step: f64) -> Vec<[f64; 2]> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let n = (len / step).ceil().max(1.0) as usize;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

pub const L_PATH: [[f64; 2]; 3] = [[0.15, 0.3], [0.7, 0.3], [0.7, 0.85]];
pub const S_PATH: [[f64; 2]; 6] = [[0.1, 0.2], [0.8, 0.2], [0.85, 0.4], [0.2, 0.5], [0.15, 0.7], [0.85, 0.8]];

/// A blade sweeping along the bunny's back (the top at z = 0, where the
/// surface sits at y ≈ 0.08..0.12): it runs from above the surface to a few
/// hundredths below it, moving along +x.
pub fn bunny_back_stroke(n: usize) -> Vec<ScalpelSample> {
    (0..n)
        .map(|i| {
            let x = -0.15 + 0.2 * i as f64 / (n - 1) as f64;
            sample([x, 0.2, 0.0], [x, 0.06, 0.0], i as f64 / 90.0)
        })
        .collect()
}

// ---------------------------------------------------------------- raycast

/// Möller–Trumbore over every live face; nearest hit with t in (0, max_t].
pub fn brute_raycast(mesh: &Mesh, ray: &Ray) -> Option<(FaceId, f64)> {
    let mut best: Option<(FaceId, f64)> = None;
    for f in mesh.live_faces() {
        let [a, b, c] = mesh.face_positions(f);
        let e1 = b - a;
        let e2 = c - a;
        let p = ray.direction.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-15 {
            continue;
        }
        let inv = 1.0 / det;
        let s = ray.origin - a;
        let u = s.dot(&p) * inv;
        if !(-1e-12..=1.0 + 1e-12).contains(&u) {
            continue;
        }
        let q = s.cross(&e1);
        let v = ray.direction.dot(&q) * inv;
        if v < -1e-12 || u + v > 1.0 + 1e-12 {
            continue;
        }
        let t = e2.dot(&q) * inv;
        if t > 0.0 && t <= ray.max_t && best.is_none_or(|(_, bt)| t < bt) {
            best = Some((f, t));
        }
    }
    best
}

// ----------------------------------------------------------- broad phase

pub fn brute_faces_near(mesh: &Mesh, query: &Aabb) -> Vec<FaceId> {
    mesh.live_faces()
        .filter(|&f| {
            let pts = mesh.face_positions(f);
            (0..3).all(|k| {
                let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                lo <= query.max[k] && hi >= query.min[k]
            })
        })
        .collect()
}

// ------------------------------------------------------- cell polytope

fn solve3(n: [Vec3; 3], d: [f64; 3]) -> Option<Point> {
    // Cramer's rule.
    let det = n[0].dot(&n[1].cross(&n[2]));
    if det.abs() < 1e-12 {
        return None;
    }
    let x = (n[1].cross(&n[2]) * d[0] + n[2].cross(&n[0]) * d[1] + n[0].cross(&n[1]) * d[2]) / det;
    Some(Point::from(x))
}

/// Vertices of the polytope `{x : n·x ≤ offset}` for six planes.
pub fn polytope_vertices(planes: &[Plane; 6]) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            for k in j + 1..6 {
                let ps = [&planes[i], &planes[j], &planes[k]];
                if let Some(x) = solve3(ps.map(|p| p.normal), ps.map(|p| p.offset)) {
                    if planes.iter().all(|p| p.normal.dot(&x.coords) - p.offset <= 1e-9) {
                        out.push(x);
                    }
                }
            }
        }
    }
    out
}

pub fn polytope_aabb(planes: &[Plane; 6]) -> Aabb {
    Aabb::from_points(&polytope_vertices(planes))
}

pub fn strictly_inside(planes: &[Plane; 6], p: &Point, margin: f64) -> bool {
    planes.iter().all(|pl| pl.normal.dot(&p.coords) - pl.offset < -margin)
}

/// Separating-axis test between a triangle and a convex polytope. Returns
/// the largest normalized gap over all candidate axes: positive means the
/// two are separated by at least that distance, negative means they overlap.
pub fn sat_gap(tri: &[Point; 3], planes: &[Plane; 6]) -> f64 {
    let verts = polytope_vertices(planes);
    if verts.is_empty() {
        return f64::INFINITY;
    }
    let mut axes: Vec<Vec3> = planes.iter().map(|p| p.normal).collect();
    let edges = [tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]];
    axes.push(edges[0].cross(&edges[1]));
    for i in 0..6 {
        for j in i + 1..6 {
            let dir = planes[i].normal.cross(&planes[j].normal);
            if dir.norm() < 1e-12 {
                continue;
            }
            for e in &edges {
                axes.push(e.cross(&dir));
            }
        }
    }
    let mut gap = f64::NEG_INFINITY;
    for a in axes {
        let len = a.norm();
        if len < 1e-12 {
            continue;
        }
        let a = a / len;
        let proj = |pts: &mut dyn Iterator<Item = &Point>| {
            pts.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let x = a.dot(&p.coords);
                (lo.min(x), hi.max(x))
            })
        };
        let (t0, t1) = proj(&mut tri.iter());
        let (c0, c1) = proj(&mut verts.iter());
        gap = gap.max((c0 - t1).max(t0 - c1));
    }
    gap
}

// ----------------------------------------------------------- sampling

/// Uniform point on a triangle from unit-square coordinates. The warp is
/// continuous and area-preserving, so strata on the square stay strata.
pub fn triangle_point(t: &[Point; 3], u: f64, v: f64) -> Point {
    let su = u.sqrt();
    Point::from(t[0].coords * (1.0 - su) + t[1].coords * (su * (1.0 - v)) + t[2].coords * (su * v))
}

pub fn area(t: &[Point; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

/// Stratified Monte-Carlo estimate of the surface area of the given faces
/// that lies strictly inside the polytope, using about `total` samples
/// spread in proportion to face area.
pub fn mc_area_inside(tris: &[[Point; 3]], planes: &[Plane; 6], total: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let sum: f64 = tris.iter().map(area).sum();
    if sum == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for t in tris {
        let a = area(t);
        let n = ((total as f64 * a / sum).sqrt().ceil() as usize).max(4);
        let mut hits = 0usize;
        for i in 0..n {
            for j in 0..n {
                let u = (i as f64 + r.random::<f64>()) / n as f64;
                let v = (j as f64 + r.random::<f64>()) / n as f64;
                if strictly_inside(planes, &triangle_point(t, u, v), 0.0) {
                    hits += 1;
                }
            }
        }
        acc += a * hits as f64 / (n * n) as f64;
    }
    acc
}

/// `count` random points on live faces, area-weighted.
pub fn surface_points(mesh: &Mesh, count: usize, seed: u64) -> Vec<Point> {
    let faces: Vec<[Point; 3]> = mesh.live_faces().map(|f| mesh.face_positions(f)).collect();
    let mut cdf = Vec::with_capacity(faces.len());
    let mut s = 0.0;
    for t in &faces {
        s += area(t);
        cdf.push(s);
    }
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let x = r.random::<f64>() * s;
            let i = cdf.partition_point(|&c| c < x).min(faces.len() - 1);
            triangle_point(&faces[i], r.random(), r.random())
        })
        .collect()
}

/// Surface points near a cell: samples the faces overlapping its box.
pub fn points_near_cell(mesh: &Mesh, cell: &TearCell, count: usize, seed: u64) -> Vec<Point> {
    let b = polytope_aabb(&cell.planes).inflated(1e-6);
    let faces: Vec<[Point; 3]> = brute_faces_near(mesh, &b)
        .into_iter()
        .map(|f| mesh.face_positions(f))
        .collect();
    if faces.is_empty() {
        return Vec::new();
    }
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let t = &faces[i % faces.len()];
            triangle_point(t, r.random(), r.random())
        })
        .collect()
}

// ------------------------------------------------------------ dynamics

/// Scalar damped oscillator integrated with the same semi-implicit rule.
pub fn oscillator(k: f64, c: f64, h: f64, x0: f64, steps: usize) -> Vec<(f64, f64)> {
    let (mut x, mut v) = (x0, 0.0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        v += -h * k * x - h * c * v;
        x += h * v;
        out.push((x, v));
    }
    out
}

// --------------------------------------------------------- clustering

/// Full audit of the clustering invariants. `bind` are bind positions.
pub fn audit_clustering(soft: &SoftBodyState, mesh: &Mesh) -> Result<(), String> {
    let d = soft.range();
    for p in soft.particles() {
        if p.members.is_empty() {
            return Err(format!("particle {} is empty", p.id));
        }
        if !mesh.is_vertex_alive(p.seed) {
            return Err(format!("particle {} has dead seed", p.id));
        }
        let seed = mesh.position(p.seed);
        let mut sum = Vec3::zeros();
        for &v in &p.members {
            if !mesh.is_vertex_alive(v) {
                return Err(format!("particle {} holds dead vertex {v}", p.id));
            }
            let dist = (mesh.position(v) - seed).norm();
            if dist > d + 1e-9 {
                return Err(format!("particle {} member {v} at {dist} > d", p.id));
            }
            if !soft.memberships(v).contains(&p.id) {
                return Err(format!("vertex {v} missing back-reference to {}", p.id));
            }
            sum += mesh.position(v).coords;
        }
        let c = sum / p.members.len() as f64;
        if (c - p.rest.coords).norm() > 1e-9 {
            return Err(format!("particle {} rest off centroid", p.id));
        }
        let tags: Vec<_> = p.members.iter().filter_map(|&v| soft.vertex_tag(v)).collect();
        for a in &tags {
            if tags.iter().any(|b| b.epoch == a.epoch && b.sign != a.sign) {
                return Err(format!("particle {} straddles tear {}", p.id, a.epoch));
            }
        }
    }
    for v in mesh.live_vertices() {
        let ids = soft.memberships(v);
        if ids.is_empty() {
            return Err(format!("vertex {v} uncovered"));
        }
        for id in ids {
            match soft.particle(*id) {
                Some(p) if p.members.binary_search(&v).is_ok() => {}
                _ => return Err(format!("vertex {v} lists {id} which does not hold it")),
            }
        }
    }
    Ok(())
}
