//! Approximate order-independent transparency for large streamline sets.
//!
//! The pipeline buckets streamline segments into coarse voxels
//! ([`grid`]), precomputes a handful of in-voxel segment orders per voxel
//! ([`order`]), and per frame draws voxels back to front using the stored
//! order closest to the view ([`view`]). [`render`] is a small CPU
//! compositor used to compare the approximate order against an exact
//! per-segment depth sort.

pub mod geom;
pub mod grid;
pub mod order;
pub mod render;
pub mod synth;
pub mod tck;
pub mod view;

pub use geom::{Axis, Point3, Vec3};
pub use grid::{
    build_scene, build_voxel_meshes, compute_bounds, generate_voxlines, voxel_coord, GridError, GridParams,
    SegmentMeta, VoxelCoord, VoxelMesh, VoxelScene, Voxline, DEFAULT_VOXEL_SIZE,
};
pub use order::{
    axis_orders, order_for_direction, precompute_orders, random_orders, segment_key, Candidate, OrderError,
    OrderMode, OrderSet, SortDirection,
};
pub use render::{image_mae, render, write_ppm, ColorMode, Image, RenderError, RenderSettings, Rgb};
pub use tck::{parse_tck, synth_grid_lines, write_tck, StreamlineSet, TckError, TckHeader};
pub use view::{
    approx_paint_order, exact_paint_order, pair_inversion_rate, select_direction, sort_voxels_back_to_front,
    Camera, PaintOrder, Projection, SegmentRef, Selection, ViewError,
};
