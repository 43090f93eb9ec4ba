//! Linear blend skinning and skin-weight blending for tear-generated vertices.

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::geom::{Point, Vec3};

/// Maximum number of bone influences kept per vertex.
pub const MAX_INFLUENCES: usize = 4;

/// Tolerance on the sum of a vertex's skin weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SkinError {
    #[error("vertex {vertex} references unknown bone {bone}")]
    UnknownBone { vertex: usize, bone: u16 },
    #[error("bone {bone}: parent {parent} does not precede it")]
    UnsortedParent { bone: usize, parent: usize },
    #[error("bone {bone}: rotation is not orthonormal")]
    NonRigid { bone: usize },
    #[error("skeleton has {bones} bones but pose has {pose} transforms")]
    PoseLength { bones: usize, pose: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Influence {
    pub bone: u16,
    pub weight: f64,
}

/// Bone influences of one vertex. Empty means unskinned.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Skin(pub SmallVec<[Influence; MAX_INFLUENCES]>);

impl Skin {
    pub fn rigid(bone: u16) -> Self {
        Skin(SmallVec::from_slice(&[Influence { bone, weight: 1.0 }]))
    }

    pub fn from_pairs(pairs: &[(u16, f64)]) -> Self {
        Skin(
            pairs
                .iter()
                .map(|&(bone, weight)| Influence { bone, weight })
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Influence> {
        self.0.iter()
    }

    pub fn weight_sum(&self) -> f64 {
        self.0.iter().map(|i| i.weight).sum()
    }

    pub fn weight_of(&self, bone: u16) -> f64 {
        self.0
            .iter()
            .filter(|i| i.bone == bone)
            .map(|i| i.weight)
            .sum()
    }

    /// Keeps the `MAX_INFLUENCES` largest weights (ties broken by lower bone
    /// id), drops non-positive weights and rescales to unit sum.
    pub fn normalized(mut candidates: Vec<Influence>) -> Self {
        candidates.retain(|i| i.weight > 0.0);
        candidates.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.bone.cmp(&b.bone)));
        candidates.truncate(MAX_INFLUENCES);
        let sum: f64 = candidates.iter().map(|i| i.weight).sum();
        if sum <= 0.0 {
            return Skin::default();
        }
        for c in &mut candidates {
            c.weight /= sum;
        }
        Skin(candidates.into_iter().collect())
    }
}

/// `(1 - t) * a + t * b` over the union of bone influences, truncated to the
/// four largest weights and renormalized.
pub fn blend_weights(a: &Skin, b: &Skin, t: f64) -> Skin {
    let mut merged: Vec<Influence> = Vec::with_capacity(a.len() + b.len());
    let mut add = |bone: u16, w: f64| {
        if let Some(slot) = merged.iter_mut().find(|i| i.bone == bone) {
            slot.weight += w;
        } else {
            merged.push(Influence { bone, weight: w });
        }
    };
    for i in a.iter() {
        add(i.bone, (1.0 - t) * i.weight);
    }
    for i in b.iter() {
        add(i.bone, t * i.weight);
    }
    Skin::normalized(merged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bone {
    pub name: String,
    pub parent: Option<usize>,
    /// Maps bind-space positions into the bone's local frame.
    pub inverse_bind: Isometry3<f64>,
}

/// Bone hierarchy plus the current pose (one local transform per bone).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    bones: Vec<Bone>,
    pose: Vec<Isometry3<f64>>,
}

impl Skeleton {
    /// Validates topological order and sets the pose to the bind pose.
    pub fn new(bones: Vec<Bone>) -> Result<Self, SkinError> {
        for (i, b) in bones.iter().enumerate() {
            if let Some(p) = b.parent {
                if p >= i {
                    return Err(SkinError::UnsortedParent { bone: i, parent: p });
                }
            }
        }
        let mut s = Skeleton {
            pose: vec![Isometry3::identity(); bones.len()],
            bones,
        };
        s.reset_to_bind_pose();
        Ok(s)
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn pose(&self) -> &[Isometry3<f64>] {
        &self.pose
    }

    pub fn len(&self) -> usize {
        self.bones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bones.is_empty()
    }

    /// Local transforms that reproduce each bone's bind transform.
    pub fn reset_to_bind_pose(&mut self) {
        for i in 0..self.bones.len() {
            let global = self.bones[i].inverse_bind.inverse();
            self.pose[i] = match self.bones[i].parent {
                Some(p) => self.bones[p].inverse_bind * global,
                None => global,
            };
        }
    }

    pub fn set_pose(&mut self, pose: Vec<Isometry3<f64>>) -> Result<(), SkinError> {
        if pose.len() != self.bones.len() {
            return Err(SkinError::PoseLength {
                bones: self.bones.len(),
                pose: pose.len(),
            });
        }
        self.pose = pose;
        Ok(())
    }

    pub fn set_local(&mut self, bone: usize, local: Isometry3<f64>) {
        self.pose[bone] = local;
    }

    pub fn bind_local(&self, bone: usize) -> Isometry3<f64> {
        let global = self.bones[bone].inverse_bind.inverse();
        match self.bones[bone].parent {
            Some(p) => self.bones[p].inverse_bind * global,
            None => global,
        }
    }

    pub fn global_transforms(&self) -> Vec<Isometry3<f64>> {
        let mut out: Vec<Isometry3<f64>> = Vec::with_capacity(self.bones.len());
        for (i, b) in self.bones.iter().enumerate() {
            let g = match b.parent {
                Some(p) => out[p] * self.pose[i],
                None => self.pose[i],
            };
            out.push(g);
        }
        out
    }

    /// Global pose times inverse bind, per bone.
    pub fn skinning_transforms(&self) -> Vec<Isometry3<f64>> {
        self.global_transforms()
            .into_iter()
            .zip(&self.bones)
            .map(|(g, b)| g * b.inverse_bind)
            .collect()
    }
}

/// Builds a rigid transform from a row-major rotation matrix, rejecting
/// matrices that are not orthonormal with determinant +1 within 1e-6.
pub fn rigid_from_matrix(rows: [[f64; 3]; 3], translation: [f64; 3]) -> Option<Isometry3<f64>> {
    let m = Matrix3::from_row_slice(&[
        rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
        rows[2][1], rows[2][2],
    ]);
    let gram = m.transpose() * m - Matrix3::identity();
    if gram.abs().max() > 1e-6 || (m.determinant() - 1.0).abs() > 1e-6 {
        return None;
    }
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
    Some(Isometry3::from_parts(
        Translation3::new(translation[0], translation[1], translation[2]),
        rot,
    ))
}

/// Linear blend skinning: `v' = Σ w_b · (G_b · B_b⁻¹) · v`. Vertices with an
/// empty skin pass through unchanged.
pub fn pose_positions(
    positions: &[Point],
    skins: &[Skin],
    skeleton: &Skeleton,
) -> Result<Vec<Point>, SkinError> {
    let transforms = skeleton.skinning_transforms();
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let skin = match skins.get(i) {
                Some(s) if !s.is_empty() => s,
                _ => return Ok(*p),
            };
            let mut acc = Vec3::zeros();
            for inf in skin.iter() {
                let m = transforms
                    .get(inf.bone as usize)
                    .ok_or(SkinError::UnknownBone {
                        vertex: i,
                        bone: inf.bone,
                    })?;
                acc += (m * p).coords * inf.weight;
            }
            Ok(Point::from(acc))
        })
        .collect()
}
