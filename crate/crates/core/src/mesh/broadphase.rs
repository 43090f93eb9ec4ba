//! Uniform grid over face bounds with incremental insert/remove.
//!
//! Faces whose bounds leave the grid box (only possible for geometry appended
//! far outside the original model) live in an overflow list that every query
//! scans.

use crate::geom::{Aabb, Point, Vec3};

use super::FaceId;

const MAX_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Absent,
    Grid,
    Overflow,
}

#[derive(Debug, Clone)]
pub(crate) struct FaceGrid {
    bounds: Aabb,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<FaceId>>,
    overflow: Vec<FaceId>,
    boxes: Vec<Aabb>,
    slots: Vec<Slot>,
}

pub(crate) type CellRange = [(usize, usize); 3];

impl FaceGrid {
    /// Sizes the grid for roughly one cell per face, but never finer than the
    /// mean face extent.
    pub(crate) fn new(model: &Aabb, face_boxes: &[Aabb]) -> Self {
        let diag = model.diagonal().max(1e-9);
        let bounds = model.inflated(1e-3 * diag);
        let ext = bounds.extent();
        let mean_face = if face_boxes.is_empty() {
            diag
        } else {
            face_boxes
                .iter()
                .map(|b| b.extent().max())
                .sum::<f64>()
                / face_boxes.len() as f64
        };
        let target = face_boxes.len().max(1) as f64;
        let by_count = (ext.x * ext.y * ext.z / target).cbrt();
        let mut cell = by_count.max(mean_face).max(1e-12 * diag);
        // Keep the grid within MAX_DIM per axis.
        cell = cell.max(ext.max() / MAX_DIM as f64);
        let dims = [0, 1, 2].map(|i| ((ext[i] / cell).ceil() as usize).clamp(1, MAX_DIM));
        FaceGrid {
            bounds,
            cell,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
            overflow: Vec::new(),
            boxes: Vec::new(),
            slots: Vec::new(),
        }
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    fn coord(&self, axis: usize, x: f64) -> usize {
        let c = ((x - self.bounds.min[axis]) / self.cell).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.dims[axis] - 1)
        }
    }

    pub(crate) fn range(&self, b: &Aabb) -> CellRange {
        [0, 1, 2].map(|a| (self.coord(a, b.min[a]), self.coord(a, b.max[a])))
    }

    pub(crate) fn insert(&mut self, face: FaceId, b: Aabb) {
        let f = face as usize;
        if self.boxes.len() <= f {
            self.boxes.resize(f + 1, Aabb::empty());
            self.slots.resize(f + 1, Slot::Absent);
        }
        debug_assert_eq!(self.slots[f], Slot::Absent);
        self.boxes[f] = b;
        if self.bounds.contains_box(&b) {
            let r = self.range(&b);
            for k in r[2].0..=r[2].1 {
                for j in r[1].0..=r[1].1 {
                    for i in r[0].0..=r[0].1 {
                        let idx = self.index(i, j, k);
                        self.cells[idx].push(face);
                    }
                }
            }
            self.slots[f] = Slot::Grid;
        } else {
            self.overflow.push(face);
            self.slots[f] = Slot::Overflow;
        }
    }

    pub(crate) fn remove(&mut self, face: FaceId) {
        let f = face as usize;
        match self.slots.get(f).copied().unwrap_or(Slot::Absent) {
            Slot::Absent => {}
            Slot::Overflow => {
                if let Some(pos) = self.overflow.iter().position(|&x| x == face) {
                    self.overflow.swap_remove(pos);
                }
            }
            Slot::Grid => {
                let r = self.range(&self.boxes[f]);
                for k in r[2].0..=r[2].1 {
                    for j in r[1].0..=r[1].1 {
                        for i in r[0].0..=r[0].1 {
                            let idx = self.index(i, j, k);
                            let cell = &mut self.cells[idx];
                            if let Some(pos) = cell.iter().position(|&x| x == face) {
                                cell.swap_remove(pos);
                            }
                        }
                    }
                }
            }
        }
        if f < self.slots.len() {
            self.slots[f] = Slot::Absent;
        }
    }

    pub(crate) fn contains(&self, face: FaceId) -> bool {
        matches!(
            self.slots.get(face as usize),
            Some(Slot::Grid) | Some(Slot::Overflow)
        )
    }

    pub(crate) fn face_box(&self, face: FaceId) -> &Aabb {
        &self.boxes[face as usize]
    }

    /// Faces whose stored bounds overlap `query`, ascending by id.
    pub(crate) fn query(&self, query: &Aabb) -> Vec<FaceId> {
        let mut out = Vec::new();
        if self.bounds.overlaps(query) {
            let r = self.range(query);
            for k in r[2].0..=r[2].1 {
                for j in r[1].0..=r[1].1 {
                    for i in r[0].0..=r[0].1 {
                        for &f in &self.cells[self.index(i, j, k)] {
                            if self.boxes[f as usize].overlaps(query) {
                                out.push(f);
                            }
                        }
                    }
                }
            }
        }
        for &f in &self.overflow {
            if self.boxes[f as usize].overlaps(query) {
                out.push(f);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn overflow(&self) -> &[FaceId] {
        &self.overflow
    }

    /// Visits grid cells pierced by the ray in front-to-back order. The
    /// visitor receives the faces of a cell and the ray parameter at which the
    /// ray leaves that cell; returning `false` stops the walk.
    pub(crate) fn walk_ray(
        &self,
        origin: &Point,
        dir: &Vec3,
        max_t: f64,
        mut visit: impl FnMut(&[FaceId], f64) -> bool,
    ) {
        let (mut t0, mut t1) = (0.0f64, max_t);
        for a in 0..3 {
            if dir[a] == 0.0 {
                if origin[a] < self.bounds.min[a] || origin[a] > self.bounds.max[a] {
                    return;
                }
            } else {
                let inv = 1.0 / dir[a];
                let mut ta = (self.bounds.min[a] - origin[a]) * inv;
                let mut tb = (self.bounds.max[a] - origin[a]) * inv;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
            }
        }
        if t0 > t1 {
            return;
        }
        let entry = origin + dir * t0;
        let mut cell = [0, 1, 2].map(|a| self.coord(a, entry[a]) as isize);
        let mut step = [0isize; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            if dir[a] > 0.0 {
                step[a] = 1;
                let boundary = self.bounds.min[a] + (cell[a] + 1) as f64 * self.cell;
                t_max[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = self.cell / dir[a];
            } else if dir[a] < 0.0 {
                step[a] = -1;
                let boundary = self.bounds.min[a] + cell[a] as f64 * self.cell;
                t_max[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = -self.cell / dir[a];
            }
        }
        loop {
            let idx = self.index(cell[0] as usize, cell[1] as usize, cell[2] as usize);
            let exit = t_max[0].min(t_max[1]).min(t_max[2]).min(t1);
            if !visit(&self.cells[idx], exit) {
                return;
            }
            if exit >= t1 {
                return;
            }
            let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            cell[a] += step[a];
            if cell[a] < 0 || cell[a] >= self.dims[a] as isize {
                return;
            }
            t_max[a] += t_delta[a];
        }
    }
}
