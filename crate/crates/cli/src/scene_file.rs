//! The `VXLN` binary scene format.
//!
//! All fields are little-endian:
//!
//! ```text
//! header:    "VXLN" | version u32 (=1) | b_min 3xf32 | voxel_size f32
//!            | order_mode u32 (0 dataset, 1 axis, 2 random) | k_dirs u32 | voxel_count u32
//! per voxel: coord 3xi32 | vertex_count u32 | vertices 3xf32 each
//!            | segment_count u32 | index pairs 2xu32 each
//!            | k_dirs x (direction 3xf32 | permutation segment_count x u32)
//! ```
//!
//! Axis scenes store the `+X, +Y, +Z` permutations only. Voxels are written
//! in ascending coordinate order, so a scene always serializes to the same
//! bytes.

use std::collections::BTreeMap;

use thiserror::Error;
use voxlines::{GridParams, OrderMode, OrderSet, Point3, SortDirection, Vec3, VoxelCoord, VoxelMesh, VoxelScene};

pub const MAGIC: &[u8; 4] = b"VXLN";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SceneFileError {
    #[error("not a VXLN scene file")]
    BadMagic,
    #[error("unsupported scene file version {0}")]
    UnsupportedVersion(u32),
    #[error("unexpected end of scene file at byte {0}")]
    Truncated(usize),
    #[error("invalid scene file: {0}")]
    Invalid(String),
}

fn mode_code(mode: OrderMode) -> (u32, u32) {
    match mode {
        OrderMode::Dataset => (0, 0),
        OrderMode::Axis => (1, 3),
        OrderMode::Random(k) => (2, k),
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialize a scene. Per-segment source identity is not part of the format.
pub fn write_scene(scene: &VoxelScene) -> Vec<u8> {
    let (mode, k) = mode_code(scene.order_mode);
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    let b = scene.params.b_min;
    for v in [b.x, b.y, b.z, scene.params.voxel_size] {
        w.f32(v);
    }
    w.u32(mode);
    w.u32(k);
    w.u32(scene.voxels.len() as u32);

    for (coord, mesh) in &scene.voxels {
        for c in [coord.i, coord.j, coord.k] {
            w.i32(c);
        }
        w.u32(mesh.vertices.len() as u32);
        for p in &mesh.vertices {
            for v in [p.x, p.y, p.z] {
                w.f32(v);
            }
        }
        w.u32(mesh.segments.len() as u32);
        for [a, b] in &mesh.segments {
            w.u32(*a);
            w.u32(*b);
        }
        debug_assert_eq!(mesh.orders.directions.len() as u32, k);
        for (d, perm) in mesh.orders.directions.iter().zip(&mesh.orders.permutations) {
            for v in d.to_f32() {
                w.f32(v);
            }
            for &i in perm {
                w.u32(i);
            }
        }
    }
    w.0
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SceneFileError> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or(SceneFileError::Truncated(self.pos))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }
    fn u32(&mut self) -> Result<u32, SceneFileError> {
        self.take().map(u32::from_le_bytes)
    }
    fn i32(&mut self) -> Result<i32, SceneFileError> {
        self.take().map(i32::from_le_bytes)
    }
    fn f32(&mut self) -> Result<f32, SceneFileError> {
        self.take().map(f32::from_le_bytes)
    }
    fn point(&mut self) -> Result<Point3, SceneFileError> {
        Ok(Point3::new(self.f32()?, self.f32()?, self.f32()?))
    }
    /// Fail early instead of allocating for a count the remaining bytes cannot hold.
    fn check_room(&self, count: u32, item_bytes: usize) -> Result<(), SceneFileError> {
        if (count as usize).saturating_mul(item_bytes) > self.bytes.len() - self.pos {
            return Err(SceneFileError::Truncated(self.bytes.len()));
        }
        Ok(())
    }
}

fn invalid(msg: impl Into<String>) -> SceneFileError {
    SceneFileError::Invalid(msg.into())
}

/// Parse and validate a scene file.
pub fn read_scene(bytes: &[u8]) -> Result<VoxelScene, SceneFileError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 || &r.take::<4>()? != MAGIC {
        return Err(SceneFileError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(SceneFileError::UnsupportedVersion(version));
    }
    let b_min = r.point()?;
    let voxel_size = r.f32()?;
    let params = GridParams::new(b_min, voxel_size).map_err(|e| invalid(e.to_string()))?;
    let mode = match (r.u32()?, r.u32()?) {
        (0, 0) => OrderMode::Dataset,
        (1, 3) => OrderMode::Axis,
        (2, k) if k >= 1 => OrderMode::Random(k),
        (m, k) => return Err(invalid(format!("order mode {m} with {k} directions"))),
    };
    let k = mode.stored_directions();
    let voxel_count = r.u32()?;
    r.check_room(voxel_count, 20)?;

    let mut voxels = BTreeMap::new();
    for _ in 0..voxel_count {
        let coord = VoxelCoord::new(r.i32()?, r.i32()?, r.i32()?);
        let mut mesh = VoxelMesh::empty(coord);

        let nv = r.u32()?;
        r.check_room(nv, 12)?;
        mesh.vertices = (0..nv).map(|_| r.point()).collect::<Result<_, _>>()?;

        let ns = r.u32()?;
        r.check_room(ns, 8)?;
        for _ in 0..ns {
            let pair = [r.u32()?, r.u32()?];
            if pair.iter().any(|&i| i >= nv) {
                return Err(invalid(format!("voxel {coord:?}: segment index out of range")));
            }
            mesh.segments.push(pair);
        }

        let mut orders = OrderSet {
            mode,
            ..OrderSet::dataset()
        };
        for _ in 0..k {
            let d = Vec3::new(r.f32()? as f64, r.f32()? as f64, r.f32()? as f64);
            if !d.is_finite() || (d.norm() - 1.0).abs() > 1e-6 {
                return Err(invalid(format!("voxel {coord:?}: sort direction is not unit length")));
            }
            r.check_room(ns, 4)?;
            let perm: Vec<u32> = (0..ns).map(|_| r.u32()).collect::<Result<_, _>>()?;
            let mut seen = vec![false; ns as usize];
            for &i in &perm {
                if i >= ns || std::mem::replace(&mut seen[i as usize], true) {
                    return Err(invalid(format!("voxel {coord:?}: permutation is not a bijection")));
                }
            }
            orders.directions.push(SortDirection::from_unit(d));
            orders.permutations.push(perm);
        }
        mesh.orders = orders;

        if voxels.insert(coord, mesh).is_some() {
            return Err(invalid(format!("duplicate voxel {coord:?}")));
        }
    }
    if r.pos != bytes.len() {
        return Err(invalid(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(VoxelScene {
        params,
        voxels,
        order_mode: mode,
    })
}
