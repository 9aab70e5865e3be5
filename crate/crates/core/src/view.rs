//! Per-frame ordering: cameras, the approximate voxel-based paint order and
//! the exact per-segment depth sort it is measured against.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::Vec3;
use crate::grid::{VoxelCoord, VoxelScene};
use crate::order::{Candidate, OrderError, OrderMode, OrderSet, SortDirection};

/// Above this many segment pairs, [`pair_inversion_rate`] samples instead of
/// counting every pair.
pub const EXACT_PAIR_THRESHOLD: u64 = 2_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ViewError {
    #[error("camera eye and target coincide")]
    EyeAtTarget,
    #[error("camera up vector is zero or parallel to the view direction")]
    DegenerateUp,
    #[error("invalid projection: {0}")]
    BadProjection(String),
    #[error("voxel center coincides with the camera eye")]
    DegenerateView,
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("paint orders do not contain the same segments")]
    MismatchedSegmentSets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Vertical field of view in radians.
    Perspective { fov_y: f64, aspect: f64, near: f64 },
    Orthographic { half_height: f64, aspect: f64, near: f64 },
}

/// Orthonormal camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    eye: Vec3,
    target: Vec3,
    up: Vec3,
    projection: Projection,
    basis: Basis,
}

impl Camera {
    pub fn new(eye: Vec3, target: Vec3, up: Vec3, projection: Projection) -> Result<Self, ViewError> {
        let forward = (target - eye).normalized().ok_or(ViewError::EyeAtTarget)?;
        let up_dir = up.normalized().ok_or(ViewError::DegenerateUp)?;
        let right = forward.cross(up_dir);
        if right.norm() < 1e-9 {
            return Err(ViewError::DegenerateUp);
        }
        let right = right.normalized().ok_or(ViewError::DegenerateUp)?;
        let (aspect, near) = match projection {
            Projection::Perspective { fov_y, aspect, near } => {
                if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
                    return Err(ViewError::BadProjection(format!("fov_y {fov_y} outside (0, pi)")));
                }
                (aspect, near)
            }
            Projection::Orthographic { half_height, aspect, near } => {
                if !(half_height > 0.0 && half_height.is_finite()) {
                    return Err(ViewError::BadProjection(format!("half height {half_height} must be > 0")));
                }
                (aspect, near)
            }
        };
        if !(aspect > 0.0 && aspect.is_finite()) {
            return Err(ViewError::BadProjection(format!("aspect {aspect} must be > 0")));
        }
        if !(near > 0.0 && near.is_finite()) {
            return Err(ViewError::BadProjection(format!("near {near} must be > 0")));
        }
        Ok(Self {
            eye,
            target,
            up: up_dir,
            projection,
            basis: Basis {
                right,
                up: right.cross(forward),
                forward,
            },
        })
    }

    pub fn eye(&self) -> Vec3 {
        self.eye
    }

    pub fn target(&self) -> Vec3 {
        self.target
    }

    pub fn up(&self) -> Vec3 {
        self.up
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn is_orthographic(&self) -> bool {
        matches!(self.projection, Projection::Orthographic { .. })
    }

    /// Depth used by the exact sort: distance from the eye for perspective,
    /// signed distance along the view axis for orthographic. Larger is farther.
    pub fn depth(&self, p: Vec3) -> f64 {
        match self.projection {
            Projection::Perspective { .. } => (p - self.eye).norm(),
            Projection::Orthographic { .. } => (p - self.eye).dot(self.basis.forward),
        }
    }
}

/// One segment of a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentRef {
    pub voxel: VoxelCoord,
    pub seg: u32,
}

/// Compositing sequence; the first segment is painted first (farthest).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PaintOrder(pub Vec<SegmentRef>);

impl PaintOrder {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SegmentRef> {
        self.0.iter()
    }

    pub fn reversed(&self) -> PaintOrder {
        PaintOrder(self.0.iter().rev().copied().collect())
    }
}

/// Voxels by decreasing center distance from the eye; equal distances in
/// ascending coordinate order.
pub fn sort_voxels_back_to_front(scene: &VoxelScene, cam: &Camera) -> Vec<VoxelCoord> {
    let eye = cam.eye();
    let mut keyed: Vec<(f64, VoxelCoord)> = scene
        .voxels
        .keys()
        .map(|&c| ((scene.params.voxel_center(c) - eye).norm_squared(), c))
        .collect();
    keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, c)| c).collect()
}

/// The candidate direction that best matches the view ray to a voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub candidate: Candidate,
    pub direction: SortDirection,
}

/// Pick the stored (or, for axis sets, negated) direction `s` maximizing
/// `s · (v - c) / |v - c|`. Earlier candidates win ties.
pub fn select_direction(orders: &OrderSet, voxel_center: Vec3, cam: &Camera) -> Result<Selection, ViewError> {
    if orders.is_empty() {
        return Err(OrderError::EmptyOrderSet.into());
    }
    let u = (voxel_center - cam.eye()).normalized().ok_or(ViewError::DegenerateView)?;
    let mut best: Option<(f64, Selection)> = None;
    for (candidate, direction) in orders.candidates() {
        let score = direction.vec().dot(u);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, Selection { candidate, direction }));
        }
    }
    Ok(best.expect("non-empty order set").1)
}

/// Far-to-near segment indices of one voxel under the current view.
///
/// Stored permutations ascend along their direction; when `s` points from
/// the eye into the voxel, a larger key along `s` is farther away, so the
/// selected order is read in descending key order.
fn voxel_paint_sequence(orders: &OrderSet, segments: usize, center: Vec3, cam: &Camera) -> Vec<u32> {
    match select_direction(orders, center, cam) {
        Ok(sel) => {
            let far_to_near = Candidate {
                stored: sel.candidate.stored,
                reversed: !sel.candidate.reversed,
            };
            orders.permutation(far_to_near)
        }
        Err(_) => (0..segments as u32).collect(),
    }
}

/// Voxels back to front, each voxel's segments in its selected precomputed
/// order (dataset order when the scene has none).
pub fn approx_paint_order(scene: &VoxelScene, cam: &Camera) -> PaintOrder {
    let voxels = sort_voxels_back_to_front(scene, cam);
    let per_voxel: Vec<Vec<SegmentRef>> = voxels
        .par_iter()
        .map(|&coord| {
            let mesh = &scene.voxels[&coord];
            let seq = if scene.order_mode == OrderMode::Dataset || mesh.orders.is_empty() {
                (0..mesh.segment_count() as u32).collect()
            } else {
                voxel_paint_sequence(&mesh.orders, mesh.segment_count(), scene.params.voxel_center(coord), cam)
            };
            seq.into_iter().map(|seg| SegmentRef { voxel: coord, seg }).collect()
        })
        .collect();
    PaintOrder(per_voxel.concat())
}

/// Every segment sorted far-to-near by midpoint depth. Ties go to source
/// order `(streamline, segment)`; scenes loaded without source identity fall
/// back to `(voxel, base index)`.
pub fn exact_paint_order(scene: &VoxelScene, cam: &Camera) -> PaintOrder {
    let with_meta = scene.has_segment_meta();
    let mut keyed: Vec<(f64, (u64, u64), SegmentRef)> = scene
        .voxels
        .iter()
        .enumerate()
        .flat_map(|(ordinal, (&coord, mesh))| {
            (0..mesh.segment_count()).map(move |s| {
                let (a, b) = mesh.segment_points(s);
                let mid = (a.to_vec3() + b.to_vec3()) * 0.5;
                let tie = if with_meta {
                    let m = mesh.segment_meta[s];
                    (m.streamline_id as u64, m.segment_index as u64)
                } else {
                    (ordinal as u64, s as u64)
                };
                (cam.depth(mid), tie, SegmentRef { voxel: coord, seg: s as u32 })
            })
        })
        .collect();
    keyed.par_sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    PaintOrder(keyed.into_iter().map(|(_, _, r)| r).collect())
}

/// Number of index pairs `i < j` with `ranks[i] > ranks[j]`, by merge sort.
pub fn count_inversions(ranks: &[u32]) -> u64 {
    fn sort_count(v: &mut [u32], buf: &mut [u32]) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let mut count = sort_count(&mut v[..mid], &mut buf[..mid]) + sort_count(&mut v[mid..], &mut buf[mid..]);
        let (mut i, mut j, mut k) = (0, mid, 0);
        while i < mid && j < n {
            if v[i] <= v[j] {
                buf[k] = v[i];
                i += 1;
            } else {
                buf[k] = v[j];
                count += (mid - i) as u64;
                j += 1;
            }
            k += 1;
        }
        buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
        k += mid - i;
        buf[k..].copy_from_slice(&v[j..]);
        v.copy_from_slice(buf);
        count
    }
    let mut v = ranks.to_vec();
    let mut buf = vec![0; v.len()];
    sort_count(&mut v, &mut buf)
}

/// Position in `b` of every element of `a`.
fn relative_ranks(a: &PaintOrder, b: &PaintOrder) -> Result<Vec<u32>, ViewError> {
    if a.len() != b.len() {
        return Err(ViewError::MismatchedSegmentSets);
    }
    let pos: HashMap<SegmentRef, u32> = b.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
    if pos.len() != b.len() {
        return Err(ViewError::MismatchedSegmentSets);
    }
    let mut seen = vec![false; b.len()];
    a.iter()
        .map(|r| {
            let &p = pos.get(r).ok_or(ViewError::MismatchedSegmentSets)?;
            if std::mem::replace(&mut seen[p as usize], true) {
                return Err(ViewError::MismatchedSegmentSets);
            }
            Ok(p)
        })
        .collect()
}

/// Fraction of unordered segment pairs ordered differently in `a` and `b`.
///
/// Counted exactly when the number of pairs is at most
/// `max(sample_pairs, EXACT_PAIR_THRESHOLD)`; otherwise estimated from
/// `sample_pairs` seeded random pairs.
pub fn pair_inversion_rate(a: &PaintOrder, b: &PaintOrder, sample_pairs: u64, seed: u64) -> Result<f64, ViewError> {
    let ranks = relative_ranks(a, b)?;
    let n = ranks.len() as u64;
    let total = n * n.saturating_sub(1) / 2;
    if total == 0 {
        return Ok(0.0);
    }
    if total <= sample_pairs.max(EXACT_PAIR_THRESHOLD) {
        return Ok(count_inversions(&ranks) as f64 / total as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut discordant = 0u64;
    for _ in 0..sample_pairs {
        let i = rng.gen_range(0..ranks.len());
        let mut j = rng.gen_range(0..ranks.len() - 1);
        if j >= i {
            j += 1;
        }
        if (i < j) != (ranks[i] < ranks[j]) {
            discordant += 1;
        }
    }
    Ok(discordant as f64 / sample_pairs as f64)
}
