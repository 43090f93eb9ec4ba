use serde::{Deserialize, Serialize};

use crate::geom::{Point, Vec3};
use crate::mesh::{Mesh, Ray};

/// One captured pose of the blade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalpelSample {
    pub tip: Point,
    pub tail: Point,
    /// Seconds.
    #[serde(rename = "t")]
    pub timestamp: f64,
}

impl ScalpelSample {
    pub fn new(tip: Point, tail: Point, timestamp: f64) -> Self {
        ScalpelSample {
            tip,
            tail,
            timestamp,
        }
    }

    pub fn blade_length(&self) -> f64 {
        (self.tip - self.tail).norm()
    }

    pub fn midpoint(&self) -> Point {
        nalgebra::center(&self.tip, &self.tail)
    }
}

/// Incremental form of [`sample_path`]. Retained samples before the lock
/// point are never dropped by [`finish`](Self::finish).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathSampler {
    min_spacing: f64,
    min_dt: f64,
    kept: Vec<ScalpelSample>,
    last: Option<ScalpelSample>,
    locked: usize,
}

impl PathSampler {
    pub fn new(min_spacing: f64, min_dt: f64) -> Self {
        PathSampler {
            min_spacing,
            min_dt,
            ..Default::default()
        }
    }

    fn far_enough(&self, a: &ScalpelSample, b: &ScalpelSample) -> bool {
        (self.min_spacing > 0.0 && (b.tip - a.tip).norm() >= self.min_spacing)
            || (self.min_dt > 0.0 && b.timestamp - a.timestamp >= self.min_dt)
    }

    /// Feeds one pose; returns whether it was retained.
    pub fn push(&mut self, pose: ScalpelSample) -> bool {
        self.last = Some(pose);
        let keep = match self.kept.last() {
            None => true,
            Some(prev) => self.far_enough(prev, &pose),
        };
        if keep {
            self.kept.push(pose);
        }
        keep
    }

    /// Samples retained so far, not counting the pending final pose.
    pub fn kept(&self) -> &[ScalpelSample] {
        &self.kept
    }

    pub fn seen_any(&self) -> bool {
        self.last.is_some()
    }

    /// Protects the first `n` retained samples from being dropped.
    pub fn lock(&mut self, n: usize) {
        self.locked = self.locked.max(n.min(self.kept.len()));
    }

    /// Appends the final pose, dropping unlocked retained samples that are
    /// too close to it.
    pub fn finish(mut self) -> Vec<ScalpelSample> {
        let Some(last) = self.last else {
            return Vec::new();
        };
        if self.kept.last() != Some(&last) {
            let floor = self.locked.max(1);
            while self.kept.len() > floor && !self.far_enough(self.kept.last().unwrap(), &last) {
                self.kept.pop();
            }
            self.kept.push(last);
        }
        self.kept
    }
}

/// Greedy retention of scalpel poses.
///
/// The first pose is always kept; a later pose is kept once its tip is at
/// least `min_spacing` from the last kept tip or `min_dt` seconds later. A
/// non-positive threshold is disabled. The final pose is always kept; kept
/// poses that end up too close to it are dropped so every consecutive pair
/// satisfies a threshold (only a two-pose output can violate this).
pub fn sample_path(poses: &[ScalpelSample], min_spacing: f64, min_dt: f64) -> Vec<ScalpelSample> {
    let mut sampler = PathSampler::new(min_spacing, min_dt);
    for p in poses {
        sampler.push(*p);
    }
    sampler.finish()
}

/// Shortens the blade to the span of its intersections with the surface.
/// Returns the sample unchanged when the blade does not meet the mesh.
pub fn clamp_blade_to_surface(mesh: &Mesh, sample: &ScalpelSample) -> ScalpelSample {
    let len = sample.blade_length();
    let dir: Vec3 = (sample.tail - sample.tip) / len;
    let mut hits: Vec<f64> = Vec::new();
    let mut start = 0.0;
    while start < len {
        let Some(ray) = Ray::new(sample.tip + dir * start, dir, len - start) else {
            break;
        };
        match mesh.raycast(&ray) {
            Some(h) => {
                hits.push(start + h.t);
                start += h.t + 1e-9 * len.max(1.0);
            }
            None => break,
        }
    }
    match (hits.first(), hits.last()) {
        (Some(&a), Some(&b)) if b - a > 1e-9 * len => ScalpelSample {
            tip: sample.tip + dir * a,
            tail: sample.tip + dir * b,
            timestamp: sample.timestamp,
        },
        _ => *sample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_x(x: f64, t: f64) -> ScalpelSample {
        ScalpelSample::new(Point::new(x, 0.0, 0.0), Point::new(x, 0.0, -1.0), t)
    }

    #[test]
    fn spacing_filter() {
        let poses: Vec<_> = [0.0, 0.01, 0.02, 0.12, 0.24]
            .iter()
            .enumerate()
            .map(|(i, &x)| at_x(x, i as f64))
            .collect();
        let out = sample_path(&poses, 0.1, 0.0);
        let xs: Vec<f64> = out.iter().map(|s| s.tip.x).collect();
        assert_eq!(xs, vec![0.0, 0.12, 0.24]);
    }

    #[test]
    fn singleton_and_empty() {
        assert!(sample_path(&[], 0.1, 0.0).is_empty());
        let one = [at_x(0.3, 0.0)];
        assert_eq!(sample_path(&one, 0.1, 0.0), one.to_vec());
    }

    #[test]
    fn time_threshold_retains_slow_moves() {
        let poses: Vec<_> = (0..5).map(|i| at_x(i as f64 * 1e-3, i as f64 * 0.5)).collect();
        let out = sample_path(&poses, 0.1, 1.0);
        let ts: Vec<f64> = out.iter().map(|s| s.timestamp).collect();
        assert_eq!(ts, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn final_pose_replaces_a_too_close_predecessor() {
        let poses: Vec<_> = [0.0, 0.1, 0.2, 0.23]
            .iter()
            .enumerate()
            .map(|(i, &x)| at_x(x, i as f64))
            .collect();
        let xs: Vec<f64> = sample_path(&poses, 0.1, 0.0)
            .iter()
            .map(|s| s.tip.x)
            .collect();
        assert_eq!(xs, vec![0.0, 0.1, 0.23]);
    }

    #[test]
    fn locked_samples_survive_the_final_pose() {
        let mut s = PathSampler::new(0.1, 0.0);
        for (i, x) in [0.0, 0.1, 0.2, 0.23].iter().enumerate() {
            s.push(at_x(*x, i as f64));
        }
        s.lock(3);
        let xs: Vec<f64> = s.finish().iter().map(|p| p.tip.x).collect();
        assert_eq!(xs, vec![0.0, 0.1, 0.2, 0.23]);
    }
}
