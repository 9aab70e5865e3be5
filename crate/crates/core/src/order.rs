//! Precomputed per-voxel segment orders for a fixed set of sorting directions.
//!
//! A stored permutation lists segment indices ascending by
//! `(p0 + p1) · d`. Axis mode stores the three positive axes; the orders for
//! the negative axes are the same permutations read back to front.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{Axis, Vec3};
use crate::grid::{VoxelCoord, VoxelMesh, VoxelScene};

/// Number of pseudo-random directions used when none is specified.
pub const DEFAULT_RANDOM_DIRECTIONS: u32 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum OrderError {
    #[error("order set has no stored directions")]
    EmptyOrderSet,
    #[error("direction ({0}, {1}, {2}) is not a candidate of this order set")]
    UnknownDirection(f64, f64, f64),
}

/// Unit sorting direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortDirection(Vec3);

impl SortDirection {
    pub const POS_X: SortDirection = SortDirection(Vec3::X);
    pub const POS_Y: SortDirection = SortDirection(Vec3::Y);
    pub const POS_Z: SortDirection = SortDirection(Vec3::Z);

    /// Normalizes `v`; `None` for a zero or non-finite vector.
    pub fn new(v: Vec3) -> Option<Self> {
        v.normalized().map(Self)
    }

    /// Wraps `v` as is. The caller guarantees `|v| = 1` within 1e-6.
    pub fn from_unit(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() <= 1e-6, "not unit length: {v:?}");
        Self(v)
    }

    pub fn axis(axis: Axis) -> Self {
        Self(axis.unit())
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn to_f32(self) -> [f32; 3] {
        [self.0.x as f32, self.0.y as f32, self.0.z as f32]
    }
}

impl std::ops::Neg for SortDirection {
    type Output = SortDirection;
    fn neg(self) -> SortDirection {
        SortDirection(-self.0)
    }
}

/// Which family of directions an order set was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderMode {
    /// No precomputed orders; segments are drawn in dataset order.
    #[default]
    Dataset,
    Axis,
    Random(u32),
}

impl OrderMode {
    /// Number of permutations stored per voxel.
    pub fn stored_directions(self) -> u32 {
        match self {
            OrderMode::Dataset => 0,
            OrderMode::Axis => 3,
            OrderMode::Random(k) => k,
        }
    }
}

impl std::fmt::Display for OrderMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderMode::Dataset => f.write_str("dataset"),
            OrderMode::Axis => f.write_str("axis"),
            OrderMode::Random(k) => write!(f, "random:{k}"),
        }
    }
}

impl std::str::FromStr for OrderMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dataset" => Ok(OrderMode::Dataset),
            "axis" => Ok(OrderMode::Axis),
            "random" => Ok(OrderMode::Random(DEFAULT_RANDOM_DIRECTIONS)),
            _ => match s.strip_prefix("random:").map(str::parse::<u32>) {
                Some(Ok(k)) if k >= 1 => Ok(OrderMode::Random(k)),
                _ => Err(format!("expected dataset, axis or random:<k>=1..; got `{s}`")),
            },
        }
    }
}

/// A selectable order: a stored permutation, optionally read in reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub stored: usize,
    pub reversed: bool,
}

/// Precomputed segment permutations of one voxel mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrderSet {
    pub mode: OrderMode,
    pub directions: Vec<SortDirection>,
    pub permutations: Vec<Vec<u32>>,
}

impl OrderSet {
    pub fn dataset() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Selectable directions in tie-break order: `+X, -X, +Y, -Y, +Z, -Z`
    /// for axis sets, storage order otherwise.
    pub fn candidates(&self) -> impl Iterator<Item = (Candidate, SortDirection)> + '_ {
        let with_negatives = self.mode == OrderMode::Axis;
        self.directions.iter().enumerate().flat_map(move |(i, &d)| {
            let pos = (Candidate { stored: i, reversed: false }, d);
            let neg = (Candidate { stored: i, reversed: true }, -d);
            std::iter::once(pos).chain(with_negatives.then_some(neg))
        })
    }

    pub fn direction(&self, c: Candidate) -> SortDirection {
        let d = self.directions[c.stored];
        if c.reversed {
            -d
        } else {
            d
        }
    }

    /// The permutation sorting ascending along candidate `c`.
    pub fn permutation(&self, c: Candidate) -> Vec<u32> {
        let p = &self.permutations[c.stored];
        if c.reversed {
            p.iter().rev().copied().collect()
        } else {
            p.clone()
        }
    }
}

/// `(p0 + p1) · d`, twice the midpoint projection.
pub fn segment_key(mesh: &VoxelMesh, seg: usize, d: SortDirection) -> f64 {
    let (a, b) = mesh.segment_points(seg);
    (a.to_vec3() + b.to_vec3()).dot(d.vec())
}

fn sort_by_key(mesh: &VoxelMesh, key: impl Fn(usize) -> f64) -> Vec<u32> {
    let keys: Vec<f64> = (0..mesh.segment_count()).map(key).collect();
    let mut perm: Vec<u32> = (0..mesh.segment_count() as u32).collect();
    perm.sort_unstable_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        keys[a]
            .total_cmp(&keys[b])
            .then_with(|| mesh.tie_key(a).cmp(&mesh.tie_key(b)))
    });
    perm
}

/// Ascending orders along `+X`, `+Y` and `+Z`, comparing a single component
/// of `p0 + p1`.
pub fn axis_orders(mesh: &VoxelMesh) -> OrderSet {
    let summed: Vec<Vec3> = (0..mesh.segment_count())
        .map(|s| {
            let (a, b) = mesh.segment_points(s);
            a.to_vec3() + b.to_vec3()
        })
        .collect();
    OrderSet {
        mode: OrderMode::Axis,
        directions: Axis::ALL.iter().map(|&a| SortDirection::axis(a)).collect(),
        permutations: Axis::ALL
            .iter()
            .map(|&axis| sort_by_key(mesh, |s| summed[s].get(axis)))
            .collect(),
    }
}

/// Deterministic uniform directions on the unit sphere for voxel `coord`.
/// Components are rounded to `f32` so they survive the scene file unchanged.
pub fn random_directions(coord: VoxelCoord, k: u32, seed: u64) -> Vec<SortDirection> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&coord.i.to_le_bytes());
    key[12..16].copy_from_slice(&coord.j.to_le_bytes());
    key[16..20].copy_from_slice(&coord.k.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    (0..k)
        .map(|_| {
            let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
            let phi: f64 = std::f64::consts::TAU * rng.gen::<f64>();
            let r = (1.0 - z * z).max(0.0).sqrt();
            let v = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            let rounded = Vec3::new(v.x as f32 as f64, v.y as f32 as f64, v.z as f32 as f64);
            SortDirection::from_unit(rounded)
        })
        .collect()
}

/// Orders for `k` pseudo-random directions keyed by `(seed, mesh.coord)`.
pub fn random_orders(mesh: &VoxelMesh, k: u32, seed: u64) -> OrderSet {
    assert!(k >= 1, "random orders need at least one direction");
    let directions = random_directions(mesh.coord, k, seed);
    let permutations = directions
        .iter()
        .map(|&d| sort_by_key(mesh, |s| segment_key(mesh, s, d)))
        .collect();
    OrderSet {
        mode: OrderMode::Random(k),
        directions,
        permutations,
    }
}

/// Ascending permutation for `query`, which must be one of the set's
/// candidate directions.
pub fn order_for_direction(orders: &OrderSet, query: SortDirection) -> Result<Vec<u32>, OrderError> {
    if orders.is_empty() {
        return Err(OrderError::EmptyOrderSet);
    }
    // Stored directions are f32-rounded, so match the closest candidate.
    orders
        .candidates()
        .map(|(c, d)| (c, d.vec().dot(query.vec())))
        .filter(|&(_, dot)| dot >= 1.0 - 1e-6)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| orders.permutation(c))
        .ok_or_else(|| {
            let q = query.vec();
            OrderError::UnknownDirection(q.x, q.y, q.z)
        })
}

/// Build orders of `mode` for every voxel of the scene.
pub fn precompute_orders(scene: &mut VoxelScene, mode: OrderMode, seed: u64) {
    scene.voxels.par_iter_mut().for_each(|(_, mesh)| {
        mesh.orders = match mode {
            OrderMode::Dataset => OrderSet::dataset(),
            OrderMode::Axis => axis_orders(mesh),
            OrderMode::Random(k) => random_orders(mesh, k, seed),
        };
    });
    scene.order_mode = mode;
}
