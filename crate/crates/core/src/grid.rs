//! Voxelization of streamline sets into per-voxel voxlines and segment meshes.
//!
//! Each streamline is cut into maximal runs of consecutive points that fall
//! in the same voxel. A run that is not the end of its streamline is extended
//! with the next streamline point so the segment crossing the voxel border is
//! kept; that connecting point is therefore stored in two meshes. The net
//! effect is that segment `(p_i, p_i+1)` belongs to the voxel of `p_i`, and
//! every input segment is owned by exactly one voxel.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{Point3, Vec3};
use crate::order::{OrderMode, OrderSet};
use crate::tck::StreamlineSet;

/// Default voxel edge length in millimeters.
pub const DEFAULT_VOXEL_SIZE: f32 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("streamline set contains no points")]
    EmptyDataset,
    #[error("voxel size must be a positive finite number, got {0}")]
    InvalidVoxelSize(f32),
}

/// Grid origin and cubic voxel edge length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub b_min: Point3,
    pub voxel_size: f32,
}

impl GridParams {
    pub fn new(b_min: Point3, voxel_size: f32) -> Result<Self, GridError> {
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(GridError::InvalidVoxelSize(voxel_size));
        }
        Ok(Self { b_min, voxel_size })
    }

    /// Lower corner of voxel `c`.
    pub fn voxel_min(&self, c: VoxelCoord) -> Vec3 {
        let s = self.voxel_size as f64;
        self.b_min.to_vec3() + Vec3::new(c.i as f64 * s, c.j as f64 * s, c.k as f64 * s)
    }

    pub fn voxel_center(&self, c: VoxelCoord) -> Vec3 {
        let h = self.voxel_size as f64 * 0.5;
        self.voxel_min(c) + Vec3::new(h, h, h)
    }
}

/// Integer voxel index. Ordered lexicographically by `(i, j, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VoxelCoord {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl VoxelCoord {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        Self { i, j, k }
    }

    /// Max of per-axis absolute index differences.
    pub fn chebyshev(self, o: VoxelCoord) -> u32 {
        (self.i - o.i)
            .unsigned_abs()
            .max((self.j - o.j).unsigned_abs())
            .max((self.k - o.k).unsigned_abs())
    }
}

/// A run of consecutive points of one streamline, owned by one voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct Voxline {
    pub streamline_id: u32,
    /// Index of `points[0]` within the source streamline.
    pub first_index: u32,
    pub points: Vec<Point3>,
}

/// Identifies a segment in the source data: segment `segment_index` joins
/// points `segment_index` and `segment_index + 1` of streamline `streamline_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentMeta {
    pub streamline_id: u32,
    pub segment_index: u32,
}

/// Renderable geometry of one voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMesh {
    pub coord: VoxelCoord,
    pub vertices: Vec<Point3>,
    /// Segment vertex index pairs in dataset order.
    pub segments: Vec<[u32; 2]>,
    /// Source identity per segment. Empty for meshes loaded from a scene
    /// file, which does not carry it.
    pub segment_meta: Vec<SegmentMeta>,
    pub orders: OrderSet,
}

impl VoxelMesh {
    pub fn empty(coord: VoxelCoord) -> Self {
        Self {
            coord,
            vertices: Vec::new(),
            segments: Vec::new(),
            segment_meta: Vec::new(),
            orders: OrderSet::dataset(),
        }
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_points(&self, seg: usize) -> (Point3, Point3) {
        let [a, b] = self.segments[seg];
        (self.vertices[a as usize], self.vertices[b as usize])
    }

    /// Tie-break key for ordering segments within this mesh: source identity
    /// when known, otherwise base position (which follows dataset order).
    pub(crate) fn tie_key(&self, seg: usize) -> (u32, u32) {
        match self.segment_meta.get(seg) {
            Some(m) => (m.streamline_id, m.segment_index),
            None => (0, seg as u32),
        }
    }
}

/// A voxelized streamline set.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelScene {
    pub params: GridParams,
    pub voxels: BTreeMap<VoxelCoord, VoxelMesh>,
    /// Mode shared by every voxel's [`OrderSet`].
    pub order_mode: OrderMode,
}

impl VoxelScene {
    pub fn segment_count(&self) -> usize {
        self.voxels.values().map(VoxelMesh::segment_count).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.voxels.values().map(|m| m.vertices.len()).sum()
    }

    pub fn has_segment_meta(&self) -> bool {
        self.voxels
            .values()
            .all(|m| m.segment_meta.len() == m.segments.len())
    }

    /// Bounding box of all vertices, or `None` for a scene with no vertices.
    pub fn vertex_bounds(&self) -> Option<(Vec3, Vec3)> {
        bounds_of(self.voxels.values().flat_map(|m| m.vertices.iter().copied()))
            .map(|(lo, hi)| (lo.to_vec3(), hi.to_vec3()))
    }
}

fn bounds_of(points: impl Iterator<Item = Point3>) -> Option<(Point3, Point3)> {
    points.fold(None, |acc, p| {
        Some(match acc {
            None => (p, p),
            Some((lo, hi)) => (
                Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
            ),
        })
    })
}

/// Component-wise minimum and maximum over every point of the set.
pub fn compute_bounds(set: &StreamlineSet) -> Result<(Point3, Point3), GridError> {
    bounds_of(set.streamlines.iter().flatten().copied()).ok_or(GridError::EmptyDataset)
}

/// `floor((p - b_min) / voxel_size)` per component.
pub fn voxel_coord(p: Point3, params: &GridParams) -> VoxelCoord {
    let s = params.voxel_size as f64;
    let b = params.b_min;
    let f = |v: f32, lo: f32| ((v as f64 - lo as f64) / s).floor() as i32;
    VoxelCoord::new(f(p.x, b.x), f(p.y, b.y), f(p.z, b.z))
}

fn streamline_voxlines(id: u32, points: &[Point3], params: &GridParams) -> Vec<(VoxelCoord, Voxline)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < points.len() {
        let coord = voxel_coord(points[start], params);
        let mut end = start + 1;
        while end < points.len() && voxel_coord(points[end], params) == coord {
            end += 1;
        }
        // Runs that stop short of the streamline's end pick up the next point.
        let last = if end < points.len() { end + 1 } else { end };
        out.push((
            coord,
            Voxline {
                streamline_id: id,
                first_index: start as u32,
                points: points[start..last].to_vec(),
            },
        ));
        start = end;
    }
    out
}

/// Split every streamline into voxlines grouped by owning voxel. Within a
/// voxel, voxlines appear in dataset order.
pub fn generate_voxlines(set: &StreamlineSet, params: &GridParams) -> BTreeMap<VoxelCoord, Vec<Voxline>> {
    let per_streamline: Vec<Vec<(VoxelCoord, Voxline)>> = set
        .streamlines
        .par_iter()
        .enumerate()
        .map(|(id, s)| streamline_voxlines(id as u32, s, params))
        .collect();

    let mut map: BTreeMap<VoxelCoord, Vec<Voxline>> = BTreeMap::new();
    for (coord, v) in per_streamline.into_iter().flatten() {
        map.entry(coord).or_default().push(v);
    }
    map
}

/// Flatten each voxel's voxlines into a vertex list and consecutive-pair
/// segment list. Single-point voxlines contribute nothing.
pub fn build_voxel_meshes(voxlines: BTreeMap<VoxelCoord, Vec<Voxline>>) -> BTreeMap<VoxelCoord, VoxelMesh> {
    voxlines
        .into_par_iter()
        .map(|(coord, lines)| {
            let mut mesh = VoxelMesh::empty(coord);
            for line in lines.iter().filter(|l| l.points.len() >= 2) {
                let base = mesh.vertices.len() as u32;
                mesh.vertices.extend_from_slice(&line.points);
                for s in 0..line.points.len() as u32 - 1 {
                    mesh.segments.push([base + s, base + s + 1]);
                    mesh.segment_meta.push(SegmentMeta {
                        streamline_id: line.streamline_id,
                        segment_index: line.first_index + s,
                    });
                }
            }
            (coord, mesh)
        })
        .collect()
}

/// Bounds, voxlines and meshes in one step. Orders are left in dataset mode.
pub fn build_scene(set: &StreamlineSet, voxel_size: f32) -> Result<VoxelScene, GridError> {
    let (b_min, _) = compute_bounds(set)?;
    let params = GridParams::new(b_min, voxel_size)?;
    let voxels = build_voxel_meshes(generate_voxlines(set, &params));
    Ok(VoxelScene {
        params,
        voxels,
        order_mode: OrderMode::Dataset,
    })
}
