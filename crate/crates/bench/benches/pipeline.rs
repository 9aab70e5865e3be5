use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use voxlines::synth::{random_walks, WalkParams};
use voxlines::{
    approx_paint_order, build_scene, exact_paint_order, parse_tck, precompute_orders, render, write_tck, Camera,
    OrderMode, Projection, RenderSettings, StreamlineSet, Vec3, VoxelScene,
};
use voxlines_cli::{read_scene, write_scene};

fn dataset() -> StreamlineSet {
    random_walks(
        &WalkParams {
            streamlines: 5_000,
            min_points: 20,
            max_points: 60,
            step: 1.0,
            extent: 120.0,
            wiggle: 0.2,
        },
        1,
    )
}

fn camera() -> Camera {
    Camera::new(
        Vec3::new(60.0, 60.0, 400.0),
        Vec3::new(60.0, 60.0, 60.0),
        Vec3::Y,
        Projection::Perspective { fov_y: 0.8, aspect: 1.0, near: 0.1 },
    )
    .unwrap()
}

fn scene(mode: OrderMode) -> VoxelScene {
    let mut s = build_scene(&dataset(), 10.0).unwrap();
    precompute_orders(&mut s, mode, 0);
    s
}

fn bench_io(c: &mut Criterion) {
    let set = dataset();
    let tck = write_tck(&set);
    let mut g = c.benchmark_group("io");
    g.throughput(Throughput::Bytes(tck.len() as u64));
    g.bench_function("parse_tck", |b| b.iter(|| parse_tck(black_box(&tck)).unwrap()));
    let vxln = write_scene(&scene(OrderMode::Axis));
    g.bench_function("read_scene_axis", |b| b.iter(|| read_scene(black_box(&vxln)).unwrap()));
    g.finish();
}

fn bench_build(c: &mut Criterion) {
    let set = dataset();
    let mut g = c.benchmark_group("build");
    g.throughput(Throughput::Elements(set.point_count() as u64));
    for voxel_size in [5.0f32, 10.0, 20.0] {
        g.bench_with_input(BenchmarkId::new("voxelize", voxel_size), &voxel_size, |b, &s| {
            b.iter(|| build_scene(black_box(&set), s).unwrap())
        });
    }
    let base = build_scene(&set, 10.0).unwrap();
    for mode in [OrderMode::Axis, OrderMode::Random(8), OrderMode::Random(64)] {
        g.bench_function(BenchmarkId::new("orders", mode.to_string()), |b| {
            b.iter_batched(
                || base.clone(),
                |mut s| precompute_orders(&mut s, mode, 0),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

fn bench_frame(c: &mut Criterion) {
    let cam = camera();
    let mut g = c.benchmark_group("frame");
    for mode in [OrderMode::Dataset, OrderMode::Axis, OrderMode::Random(64)] {
        let s = scene(mode);
        g.throughput(Throughput::Elements(s.segment_count() as u64));
        g.bench_function(BenchmarkId::new("approx_order", mode.to_string()), |b| {
            b.iter(|| approx_paint_order(black_box(&s), &cam))
        });
    }
    let s = scene(OrderMode::Dataset);
    g.bench_function("exact_order", |b| b.iter(|| exact_paint_order(black_box(&s), &cam)));
    let order = approx_paint_order(&s, &cam);
    let settings = RenderSettings::new(512, 512, 0.05).unwrap();
    g.bench_function("render_512", |b| b.iter(|| render(&s, black_box(&order), &cam, &settings).unwrap()));
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_io, bench_build, bench_frame
}
criterion_main!(benches);
