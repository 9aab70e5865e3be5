//! The `build`, `render`, `stats` and `bench` commands.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use voxlines::{
    approx_paint_order, build_scene, exact_paint_order, image_mae, pair_inversion_rate, parse_tck,
    precompute_orders, render, select_direction, sort_voxels_back_to_front, Camera, Image, OrderMode,
    PaintOrder, Projection, RenderSettings, StreamlineSet, Vec3, VoxelScene, DEFAULT_VOXEL_SIZE,
};

use crate::camera::{scene_sphere, CameraArgs};
use crate::scene_file::{read_scene, write_scene};

fn read_file(path: &PathBuf) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn load_tck(path: &PathBuf) -> Result<StreamlineSet> {
    parse_tck(&read_file(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_scene(path: &PathBuf) -> Result<VoxelScene> {
    read_scene(&read_file(path)?).with_context(|| format!("reading scene {}", path.display()))
}

/// Voxelize and precompute orders.
pub fn scene_from_streamlines(set: &StreamlineSet, voxel_size: f32, orders: OrderMode, seed: u64) -> Result<VoxelScene> {
    let mut scene = build_scene(set, voxel_size)?;
    precompute_orders(&mut scene, orders, seed);
    Ok(scene)
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Input `.tck` file.
    pub input: PathBuf,
    /// Output scene file.
    pub output: PathBuf,
    /// Voxel edge length in mm.
    #[arg(long, default_value_t = DEFAULT_VOXEL_SIZE)]
    pub voxel_size: f32,
    /// Precomputed in-voxel orders: `dataset`, `axis` or `random:<k>`.
    #[arg(long, default_value = "axis")]
    pub orders: OrderMode,
    /// Seed for `random:<k>` directions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub streamlines: usize,
    pub points: usize,
    pub dropped_streamlines: usize,
    pub voxels: usize,
    pub segments: usize,
    pub order_mode: String,
    pub build_seconds: f64,
}

impl std::fmt::Display for BuildReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "streamlines: {}", self.streamlines)?;
        writeln!(f, "points:      {}", self.points)?;
        if self.dropped_streamlines > 0 {
            writeln!(f, "dropped:     {} (fewer than 2 points)", self.dropped_streamlines)?;
        }
        writeln!(f, "voxels:      {}", self.voxels)?;
        writeln!(f, "segments:    {}", self.segments)?;
        writeln!(f, "orders:      {}", self.order_mode)?;
        write!(f, "build time:  {:.3} s", self.build_seconds)
    }
}

pub fn cmd_build(args: &BuildArgs) -> Result<BuildReport> {
    let start = Instant::now();
    let set = load_tck(&args.input)?;
    let scene = scene_from_streamlines(&set, args.voxel_size, args.orders, args.seed)?;
    write_file(&args.output, &write_scene(&scene))?;
    Ok(BuildReport {
        streamlines: set.len(),
        points: set.point_count(),
        dropped_streamlines: set.dropped,
        voxels: scene.voxels.len(),
        segments: scene.segment_count(),
        order_mode: scene.order_mode.to_string(),
        build_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderMode {
    /// Voxels back to front with precomputed in-voxel orders.
    Approx,
    /// Exact per-segment depth sort.
    Oracle,
    /// Exact order at opacity 1.
    Opaque,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    pub scene: PathBuf,
    /// Output `.ppm` image.
    pub output: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Per-segment opacity in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    pub opacity: f32,
    #[arg(long, value_enum, default_value_t = RenderMode::Approx)]
    pub mode: RenderMode,
}

/// Render one frame of `scene` in the given mode.
pub fn render_frame(scene: &VoxelScene, cam: &Camera, size: (u32, u32), opacity: f32, mode: RenderMode) -> Result<Image> {
    let (order, opacity) = match mode {
        RenderMode::Approx => (approx_paint_order(scene, cam), opacity),
        RenderMode::Oracle => (exact_paint_order(scene, cam), opacity),
        RenderMode::Opaque => (exact_paint_order(scene, cam), 1.0),
    };
    let settings = RenderSettings::new(size.0, size.1, opacity)?;
    Ok(render(scene, &order, cam, &settings)?)
}

pub fn cmd_render(args: &RenderArgs) -> Result<Image> {
    let scene = load_scene(&args.scene)?;
    let cam = args.camera.camera(&scene)?;
    let img = render_frame(&scene, &cam, args.camera.size, args.opacity, args.mode)?;
    write_file(&args.output, &voxlines::write_ppm(&img))?;
    Ok(img)
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    pub scene: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Segment pairs sampled for the inversion rate (exact below the threshold).
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Opacity used for the image comparison.
    #[arg(long, default_value_t = 0.05)]
    pub opacity: f32,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Also write direction-selection test vectors (JSON) to this path.
    #[arg(long)]
    pub test_vectors: Option<PathBuf>,
    /// Number of test vector entries.
    #[arg(long, default_value_t = 1000)]
    pub vector_count: usize,
}

/// Count of voxels whose segment count is at most `upto` (and above the previous bucket).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub upto: u64,
    pub voxels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentHistogram {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
    pub median: u64,
    /// Power-of-two buckets: 0, 1, 2..3, 4..7, ...
    pub buckets: Vec<Bucket>,
}

impl SegmentHistogram {
    pub fn of(scene: &VoxelScene) -> Self {
        let mut counts: Vec<u64> = scene.voxels.values().map(|m| m.segment_count() as u64).collect();
        counts.sort_unstable();
        if counts.is_empty() {
            return Self { min: 0, max: 0, mean: 0.0, median: 0, buckets: Vec::new() };
        }
        let max = *counts.last().unwrap();
        let mut buckets = vec![Bucket { upto: 0, voxels: 0 }];
        while buckets.last().unwrap().upto < max {
            let upto = buckets.last().unwrap().upto * 2 + 1;
            buckets.push(Bucket { upto, voxels: 0 });
        }
        for &c in &counts {
            buckets.iter_mut().find(|b| c <= b.upto).unwrap().voxels += 1;
        }
        Self {
            min: counts[0],
            max,
            mean: counts.iter().sum::<u64>() as f64 / counts.len() as f64,
            median: counts[counts.len() / 2],
            buckets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub voxels: usize,
    pub segments: usize,
    pub vertices: usize,
    pub order_mode: String,
    pub segments_per_voxel: SegmentHistogram,
    pub eye: [f64; 3],
    pub target: [f64; 3],
    pub sample_pairs: u64,
    pub seed: u64,
    /// Fraction of segment pairs the approximate order puts in a different
    /// relative order than the exact depth sort.
    pub inversion_rate: f64,
    pub opacity: f32,
    pub width: u32,
    pub height: u32,
    /// Mean absolute difference between the approximate and exact renders.
    pub image_mae: f64,
}

impl std::fmt::Display for StatsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let h = &self.segments_per_voxel;
        writeln!(f, "voxels:             {}", self.voxels)?;
        writeln!(f, "segments:           {}", self.segments)?;
        writeln!(f, "vertices:           {}", self.vertices)?;
        writeln!(f, "orders:             {}", self.order_mode)?;
        writeln!(
            f,
            "segments/voxel:     min {} / median {} / mean {:.1} / max {}",
            h.min, h.median, h.mean, h.max
        )?;
        for b in &h.buckets {
            writeln!(f, "  <= {:>8}: {}", b.upto, b.voxels)?;
        }
        writeln!(f, "inversion rate:     {:.6}", self.inversion_rate)?;
        write!(
            f,
            "image MAE:          {:.6} (opacity {}, {}x{})",
            self.image_mae, self.opacity, self.width, self.height
        )
    }
}

/// Ordering metrics of `scene` under `cam`.
pub fn scene_stats(scene: &VoxelScene, cam: &Camera, size: (u32, u32), opacity: f32, samples: u64, seed: u64) -> Result<StatsReport> {
    let approx = approx_paint_order(scene, cam);
    let exact = exact_paint_order(scene, cam);
    let inversion_rate = pair_inversion_rate(&approx, &exact, samples, seed)?;
    let mae = compare_renders(scene, &approx, &exact, cam, size, opacity)?;
    let v = |p: Vec3| [p.x, p.y, p.z];
    Ok(StatsReport {
        voxels: scene.voxels.len(),
        segments: scene.segment_count(),
        vertices: scene.vertex_count(),
        order_mode: scene.order_mode.to_string(),
        segments_per_voxel: SegmentHistogram::of(scene),
        eye: v(cam.eye()),
        target: v(cam.target()),
        sample_pairs: samples,
        seed,
        inversion_rate,
        opacity,
        width: size.0,
        height: size.1,
        image_mae: mae,
    })
}

fn compare_renders(
    scene: &VoxelScene,
    a: &PaintOrder,
    b: &PaintOrder,
    cam: &Camera,
    size: (u32, u32),
    opacity: f32,
) -> Result<f64> {
    let settings = RenderSettings::new(size.0, size.1, opacity)?;
    let ia = render(scene, a, cam, &settings)?;
    let ib = render(scene, b, cam, &settings)?;
    Ok(image_mae(&ia, &ib)?)
}

/// One direction-selection check for the browser viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVector {
    pub eye: [f64; 3],
    pub voxel: [i32; 3],
    pub voxel_center: [f64; 3],
    /// Selected sorting direction; `None` for dataset-order scenes.
    pub expected_direction: Option<[f32; 3]>,
    /// Position of the voxel in the back-to-front sort (0 = drawn first).
    pub expected_rank: usize,
}

/// `count` entries: seeded random eyes around the scene, every voxel per eye.
pub fn test_vectors(scene: &VoxelScene, count: usize, seed: u64) -> Result<Vec<TestVector>> {
    let mut out = Vec::with_capacity(count);
    if scene.voxels.is_empty() {
        return Ok(out);
    }
    let (center, radius) = scene_sphere(scene);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proj = Projection::Perspective { fov_y: 1.0, aspect: 1.0, near: 0.1 };
    while out.len() < count {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        let eye = center + Vec3::new(r * phi.cos(), r * phi.sin(), z) * (radius * 2.5);
        let up = if z.abs() > 0.9 { Vec3::X } else { Vec3::Z };
        let cam = Camera::new(eye, center, up, proj)?;
        for (rank, coord) in sort_voxels_back_to_front(scene, &cam).into_iter().enumerate() {
            if out.len() == count {
                break;
            }
            let c = scene.params.voxel_center(coord);
            let mesh = &scene.voxels[&coord];
            let expected_direction = if mesh.orders.is_empty() {
                None
            } else {
                Some(select_direction(&mesh.orders, c, &cam)?.direction.to_f32())
            };
            out.push(TestVector {
                eye: [eye.x, eye.y, eye.z],
                voxel: [coord.i, coord.j, coord.k],
                voxel_center: [c.x, c.y, c.z],
                expected_direction,
                expected_rank: rank,
            });
        }
    }
    Ok(out)
}

pub fn cmd_stats(args: &StatsArgs) -> Result<StatsReport> {
    let scene = load_scene(&args.scene)?;
    let cam = args.camera.camera(&scene)?;
    let report = scene_stats(&scene, &cam, args.camera.size, args.opacity, args.samples, args.seed)?;
    if let Some(path) = &args.test_vectors {
        let vectors = test_vectors(&scene, args.vector_count, args.seed)?;
        write_file(path, serde_json::to_string_pretty(&vectors)?.as_bytes())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VOXEL_SIZE)]
    pub voxel_size: f32,
    #[arg(long, default_value = "axis")]
    pub orders: OrderMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[arg(long, default_value_t = 0.05)]
    pub opacity: f32,
    #[arg(long)]
    pub json: bool,
}

/// Wall time per stage from reading the file to the first rendered frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub streamlines: usize,
    pub points: usize,
    pub voxels: usize,
    pub segments: usize,
    pub order_mode: String,
    pub parse_seconds: f64,
    pub voxelize_seconds: f64,
    pub orders_seconds: f64,
    pub frame_seconds: f64,
    pub render_seconds: f64,
    pub total_seconds: f64,
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} streamlines, {} points -> {} voxels, {} segments ({})",
            self.streamlines, self.points, self.voxels, self.segments, self.order_mode
        )?;
        writeln!(f, "parse        {:>10.4} s", self.parse_seconds)?;
        writeln!(f, "voxelize     {:>10.4} s", self.voxelize_seconds)?;
        writeln!(f, "orders       {:>10.4} s", self.orders_seconds)?;
        writeln!(f, "first frame  {:>10.4} s", self.frame_seconds)?;
        writeln!(f, "first render {:>10.4} s", self.render_seconds)?;
        write!(f, "total        {:>10.4} s", self.total_seconds)
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed()))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let start = Instant::now();
    let (set, parse) = timed(|| load_tck(&args.input))?;
    let (mut scene, voxelize) = timed(|| Ok(build_scene(&set, args.voxel_size)?))?;
    let (_, orders) = timed(|| {
        precompute_orders(&mut scene, args.orders, args.seed);
        Ok(())
    })?;
    let cam = args.camera.camera(&scene)?;
    let (order, frame) = timed(|| Ok(approx_paint_order(&scene, &cam)))?;
    let settings = RenderSettings::new(args.camera.size.0, args.camera.size.1, args.opacity)?;
    let (_, render_time) = timed(|| Ok(render(&scene, &order, &cam, &settings)?))?;
    let total = start.elapsed();
    Ok(BenchReport {
        streamlines: set.len(),
        points: set.point_count(),
        voxels: scene.voxels.len(),
        segments: scene.segment_count(),
        order_mode: scene.order_mode.to_string(),
        parse_seconds: parse.as_secs_f64(),
        voxelize_seconds: voxelize.as_secs_f64(),
        orders_seconds: orders.as_secs_f64(),
        frame_seconds: frame.as_secs_f64(),
        render_seconds: render_time.as_secs_f64(),
        total_seconds: total.as_secs_f64(),
    })
}
