//! Convex tear cells: the volume removed by one scalpel segment.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Plane, Point, Vec3};

use super::{ScalpelSample, SideLabel, TearError};

pub const GAP_POS: usize = 0;
pub const GAP_NEG: usize = 1;
pub const BLADE_HI: usize = 2;
pub const BLADE_LO: usize = 3;
pub const JOINT_START: usize = 4;
pub const JOINT_END: usize = 5;

/// Consecutive motion directions closer to anti-parallel than this have no
/// usable bisector.
const MAX_JOINT_ANGLE_DEG: f64 = 179.0;

/// Intersection of six half-spaces, listed in clipping order: the two gap
/// walls at ±w/2 around the mid plane, the two blade-extent caps, then the
/// start and end joint caps. The interior is where every signed distance is
/// negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TearCell {
    pub planes: [Plane; 6],
    pub mid_plane: Plane,
    pub width: f64,
    /// Unit motion direction of the segment, in the mid plane.
    pub motion: Vec3,
    /// Set when the start cap fell back to a perpendicular plane because the
    /// path reversed.
    pub joint_flagged: bool,
}

impl TearCell {
    /// Assembles a cell from explicit planes.
    pub fn from_planes(planes: [Plane; 6], mid_plane: Plane, width: f64, motion: Vec3) -> Self {
        TearCell {
            planes,
            mid_plane,
            width,
            motion,
            joint_flagged: false,
        }
    }

    /// Largest signed distance over the six planes; negative strictly inside.
    #[inline]
    pub fn depth(&self, p: &Point) -> f64 {
        self.planes
            .iter()
            .map(|pl| pl.signed_distance(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[inline]
    pub fn contains_strict(&self, p: &Point) -> bool {
        self.planes.iter().all(|pl| pl.signed_distance(p) < 0.0)
    }

    pub fn side_of(&self, p: &Point) -> SideLabel {
        SideLabel::from_distance(self.mid_plane.signed_distance(p))
    }

    /// Corners of the closed polytope, found by intersecting every plane
    /// triple and keeping the points that satisfy all six half-spaces.
    pub fn corners(&self) -> Vec<Point> {
        let scale = self
            .planes
            .iter()
            .map(|p| p.offset.abs())
            .fold(1.0f64, f64::max);
        let tol = 1e-9 * scale;
        let mut out: Vec<Point> = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                for k in j + 1..6 {
                    let (a, b, c) = (&self.planes[i], &self.planes[j], &self.planes[k]);
                    let m = Matrix3::from_rows(&[
                        a.normal.transpose(),
                        b.normal.transpose(),
                        c.normal.transpose(),
                    ]);
                    if m.determinant().abs() < 1e-12 {
                        continue;
                    }
                    let Some(x) = m.lu().solve(&Vec3::new(a.offset, b.offset, c.offset)) else {
                        continue;
                    };
                    let p = Point::from(x);
                    if self.planes.iter().all(|pl| pl.signed_distance(&p) <= tol) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.corners())
    }
}

/// Least-squares plane through `points`: centroid and unit normal (smallest
/// eigenvector of the scatter matrix).
fn fit_plane(points: &[Point; 4]) -> (Point, Vec3) {
    let c = Point::from(points.iter().map(|p| p.coords).sum::<Vec3>() / 4.0);
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let i = eig.eigenvalues.imin();
    (c, eig.eigenvectors.column(i).into_owned().normalize())
}

/// Builds the cell swept by the blade from `s0` to `s1`.
///
/// With `prev`, the start cap is the bisector plane of the two motion
/// directions through the shared joint, and `prev`'s end cap is replaced by
/// the same plane (flipped), so the two interiors are disjoint and share the
/// boundary exactly. Without `prev`, or when the path reverses by more than
/// 179°, the start cap is perpendicular to the motion and the joint is
/// flagged in the reversed case.
pub fn build_cell(
    s0: &ScalpelSample,
    s1: &ScalpelSample,
    width: f64,
    prev: Option<&mut TearCell>,
) -> Result<TearCell, TearError> {
    if !(width >= 0.0) || !width.is_finite() {
        return Err(TearError::InvalidWidth(width));
    }
    for s in [s0, s1] {
        if s.blade_length() <= 1e-9 {
            return Err(TearError::DegenerateBlade);
        }
    }
    let quad = [s0.tip, s0.tail, s1.tail, s1.tip];
    let quad_area = 0.5 * (s1.tail - s0.tip).cross(&(s1.tip - s0.tail)).norm();
    if !(quad_area > 1e-12) {
        return Err(TearError::DegenerateQuad(quad_area));
    }
    let (centroid, mut n) = fit_plane(&quad);

    let (p0, p1) = (s0.midpoint(), s1.midpoint());
    let travel = p1 - p0;
    let in_plane = travel - n * n.dot(&travel);
    let len = in_plane.norm();
    if len <= 1e-12 {
        return Err(TearError::DegenerateQuad(quad_area));
    }
    let motion = in_plane / len;
    let blade = (s0.tip - s0.tail) + (s1.tip - s1.tail);
    if n.dot(&blade.cross(&motion)) < 0.0 {
        n = -n;
    }
    let across = n.cross(&motion);

    let mid_plane = Plane::through(n, &centroid);
    let half = 0.5 * width;
    let gap_pos = Plane::new(n, mid_plane.offset + half);
    let gap_neg = Plane::new(-n, -mid_plane.offset + half);

    let proj: Vec<f64> = quad.iter().map(|p| across.dot(&p.coords)).collect();
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let blade_hi = Plane::new(across, hi);
    let blade_lo = Plane::new(-across, -lo);

    let end = Plane::through(motion, &p1);
    let mut joint_flagged = false;
    let start = match prev {
        Some(prev) => {
            let cos = prev.motion.dot(&motion).clamp(-1.0, 1.0);
            if cos.acos().to_degrees() > MAX_JOINT_ANGLE_DEG {
                joint_flagged = true;
                Plane::through(-motion, &p0)
            } else {
                let bisector = (prev.motion + motion).normalize();
                let shared = Plane::through(bisector, &p0);
                prev.planes[JOINT_END] = shared;
                shared.flipped()
            }
        }
        None => Plane::through(-motion, &p0),
    };

    Ok(TearCell {
        planes: [gap_pos, gap_neg, blade_hi, blade_lo, start, end],
        mid_plane,
        width,
        motion,
        joint_flagged,
    })
}

#[cfg(test)]
impl TearCell {
    /// Slab `lo < x < hi` bounded far away in y and z.
    pub(crate) fn slab_x(lo: f64, hi: f64) -> TearCell {
        let c = 0.5 * (lo + hi);
        TearCell::from_planes(
            [
                Plane::new(Vec3::x(), hi),
                Plane::new(-Vec3::x(), -lo),
                Plane::new(Vec3::z(), 10.0),
                Plane::new(-Vec3::z(), 10.0),
                Plane::new(-Vec3::y(), 10.0),
                Plane::new(Vec3::y(), 10.0),
            ],
            Plane::new(Vec3::x(), c),
            hi - lo,
            Vec3::y(),
        )
    }
}
