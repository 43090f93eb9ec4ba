use serde::{Deserialize, Serialize};

use crate::geom::{Point, Vec3};

use super::{FaceId, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Point,
    pub direction: Vec3,
    /// Farthest accepted hit parameter; `f64::INFINITY` for an unbounded ray.
    pub max_t: f64,
}

impl Ray {
    /// Normalizes `direction`; returns `None` for a zero or non-finite vector.
    pub fn new(origin: Point, direction: Vec3, max_t: f64) -> Option<Ray> {
        let len = direction.norm();
        if !len.is_finite() || len < 1e-300 || max_t.is_nan() {
            return None;
        }
        Some(Ray {
            origin,
            direction: direction / len,
            max_t,
        })
    }

    pub fn unbounded(origin: Point, direction: Vec3) -> Option<Ray> {
        Self::new(origin, direction, f64::INFINITY)
    }

    pub fn at(&self, t: f64) -> Point {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub face: FaceId,
    pub t: f64,
    /// Weights of the face's three corners.
    pub barycentric: [f64; 3],
    pub point: Point,
}

/// Möller–Trumbore. Returns `(t, u, v)` with the hit at `a + u (b - a) + v (c - a)`.
#[inline]
pub(crate) fn intersect_triangle(ray: &Ray, a: &Point, b: &Point, c: &Point) -> Option<(f64, f64, f64)> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() <= 1e-14 * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    if t <= 0.0 || t > ray.max_t {
        return None;
    }
    Some((t, u, v))
}

fn better(candidate: (f64, FaceId), best: Option<(f64, FaceId)>) -> bool {
    match best {
        None => true,
        Some((t, f)) => candidate.0 < t || (candidate.0 == t && candidate.1 < f),
    }
}

pub(super) fn cast(mesh: &Mesh, ray: &Ray) -> Option<Hit> {
    let mut best: Option<(f64, FaceId, f64, f64)> = None;
    let test = |f: FaceId, best: &mut Option<(f64, FaceId, f64, f64)>| {
        if !mesh.is_face_alive(f) {
            return;
        }
        let [a, b, c] = mesh.face_positions(f);
        if let Some((t, u, v)) = intersect_triangle(ray, &a, &b, &c) {
            if better((t, f), best.map(|b| (b.0, b.1))) {
                *best = Some((t, f, u, v));
            }
        }
    };
    for &f in mesh.grid.overflow() {
        test(f, &mut best);
    }
    mesh.grid
        .walk_ray(&ray.origin, &ray.direction, ray.max_t, |faces, exit| {
            for &f in faces {
                test(f, &mut best);
            }
            !matches!(best, Some((t, ..)) if t <= exit)
        });
    best.map(|(t, face, u, v)| Hit {
        face,
        t,
        barycentric: [1.0 - u - v, u, v],
        point: ray.at(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BuildMode, MeshInput};

    fn tri_at(z: f64, base: u32) -> (Vec<Point>, [u32; 3]) {
        (
            vec![
                Point::new(0.0, 0.0, z),
                Point::new(1.0, 0.0, z),
                Point::new(0.0, 1.0, z),
            ],
            [base, base + 1, base + 2],
        )
    }

    #[test]
    fn axis_aligned_hit() {
        let (p, f) = tri_at(0.0, 0);
        let m = Mesh::build(MeshInput::new(p, vec![f]), BuildMode::Strict).unwrap();
        let ray = Ray::unbounded(Point::new(0.25, 0.25, -1.0), Vec3::z()).unwrap();
        let hit = m.raycast(&ray).unwrap();
        assert_eq!(hit.face, 0);
        assert!((hit.t - 1.0).abs() < 1e-12);
        assert!((hit.point - Point::new(0.25, 0.25, 0.0)).norm() < 1e-12);
        assert!((hit.barycentric.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_ray_misses() {
        let (p, f) = tri_at(0.0, 0);
        let m = Mesh::build(MeshInput::new(p, vec![f]), BuildMode::Strict).unwrap();
        let ray = Ray::unbounded(Point::new(-1.0, 0.25, 0.1), Vec3::x()).unwrap();
        assert!(m.raycast(&ray).is_none());
    }

    #[test]
    fn stacked_triangles_report_nearest() {
        let (mut p, f0) = tri_at(0.5, 0);
        let (p1, f1) = tri_at(0.0, 3);
        p.extend(p1);
        let m = Mesh::build(MeshInput::new(p, vec![f0, f1]), BuildMode::Strict).unwrap();
        let ray = Ray::unbounded(Point::new(0.2, 0.2, -1.0), Vec3::z()).unwrap();
        let hit = m.raycast(&ray).unwrap();
        assert_eq!(hit.face, 1);
        assert!((hit.point.z).abs() < 1e-12);
    }

    #[test]
    fn max_t_bounds_the_hit() {
        let (p, f) = tri_at(0.0, 0);
        let m = Mesh::build(MeshInput::new(p, vec![f]), BuildMode::Strict).unwrap();
        let ray = Ray::new(Point::new(0.25, 0.25, -1.0), Vec3::z(), 0.5).unwrap();
        assert!(m.raycast(&ray).is_none());
    }
}
