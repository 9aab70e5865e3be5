//! Command-line surface for voxelized streamline scenes: scene export in
//! the `VXLN` format, headless rendering and ordering metrics.

pub mod camera;
pub mod commands;
pub mod scene_file;

pub use camera::CameraArgs;
pub use commands::{
    cmd_bench, cmd_build, cmd_render, cmd_stats, render_frame, scene_from_streamlines, scene_stats, test_vectors,
    BenchArgs, BenchReport, BuildArgs, BuildReport, RenderArgs, RenderMode, StatsArgs, StatsReport, TestVector,
};
pub use scene_file::{read_scene, write_scene, SceneFileError};
