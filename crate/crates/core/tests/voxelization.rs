use proptest::prelude::*;
use voxlines::synth::{random_walks, WalkParams};
use voxlines::{
    build_scene, compute_bounds, generate_voxlines, voxel_coord, GridParams, Point3, StreamlineSet, VoxelCoord,
};

type SegBits = ([u32; 3], [u32; 3]);

/// Consecutive point pairs straight from the input.
fn input_segments(set: &StreamlineSet) -> Vec<SegBits> {
    let mut out = Vec::new();
    for s in &set.streamlines {
        for i in 0..s.len().saturating_sub(1) {
            out.push((s[i].to_bits(), s[i + 1].to_bits()));
        }
    }
    out.sort_unstable();
    out
}

/// Floor without `f64::floor`: truncate, then step down for negatives.
fn reference_floor(q: f64) -> i32 {
    let t = q as i64;
    (if (t as f64) > q { t - 1 } else { t }) as i32
}

fn reference_coord(p: Point3, b: Point3, s: f32) -> VoxelCoord {
    let c = |v: f32, lo: f32| reference_floor((v as f64 - lo as f64) / s as f64);
    VoxelCoord::new(c(p.x, b.x), c(p.y, b.y), c(p.z, b.z))
}

fn walk_set() -> impl Strategy<Value = (StreamlineSet, f32)> {
    (1usize..40, 2usize..60, 0.1f32..5.0, 1.0f32..80.0, 0.5f32..30.0, any::<u64>()).prop_map(
        |(n, max_points, step, extent, voxel, seed)| {
            let set = random_walks(
                &WalkParams { streamlines: n, min_points: 2, max_points, step, extent, wiggle: 0.5 },
                seed,
            );
            (set, voxel)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_are_conserved((set, voxel) in walk_set()) {
        let scene = build_scene(&set, voxel).unwrap();
        let mut got: Vec<SegBits> = scene.voxels.values().flat_map(|m| {
            (0..m.segment_count()).map(move |s| {
                let (a, b) = m.segment_points(s);
                (a.to_bits(), b.to_bits())
            })
        }).collect();
        got.sort_unstable();
        prop_assert_eq!(got, input_segments(&set));
        prop_assert_eq!(scene.segment_count(), set.streamlines.iter().map(|s| s.len() - 1).sum::<usize>());
    }

    #[test]
    fn segment_meta_points_at_source_geometry((set, voxel) in walk_set()) {
        let scene = build_scene(&set, voxel).unwrap();
        let mut seen = std::collections::HashSet::new();
        for mesh in scene.voxels.values() {
            for (s, meta) in mesh.segment_meta.iter().enumerate() {
                prop_assert!(seen.insert(*meta));
                let src = &set.streamlines[meta.streamline_id as usize];
                let (a, b) = mesh.segment_points(s);
                prop_assert!(a.bit_eq(&src[meta.segment_index as usize]));
                prop_assert!(b.bit_eq(&src[meta.segment_index as usize + 1]));
            }
            // Base order is dataset order.
            prop_assert!(mesh.segment_meta.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn segments_owned_by_first_endpoint_voxel((set, voxel) in walk_set()) {
        let scene = build_scene(&set, voxel).unwrap();
        for (coord, mesh) in &scene.voxels {
            for s in 0..mesh.segment_count() {
                prop_assert_eq!(voxel_coord(mesh.segment_points(s).0, &scene.params), *coord);
            }
        }
    }

    #[test]
    fn voxline_points_inside_owner_except_last((set, voxel) in walk_set()) {
        let (b_min, _) = compute_bounds(&set).unwrap();
        let params = GridParams::new(b_min, voxel).unwrap();
        for (coord, lines) in generate_voxlines(&set, &params) {
            let lo = params.voxel_min(coord);
            let s = voxel as f64;
            for line in lines {
                let src = &set.streamlines[line.streamline_id as usize];
                let start = line.first_index as usize;
                // Consecutive run of the source streamline.
                prop_assert!(src[start..start + line.points.len()].iter().zip(&line.points).all(|(a, b)| a.bit_eq(b)));
                let interior = &line.points[..line.points.len() - 1];
                for p in interior.iter().chain(line.points.len().eq(&1).then_some(&line.points[0])) {
                    prop_assert_eq!(voxel_coord(*p, &params), coord);
                    let v = p.to_vec3();
                    for (x, l) in [(v.x, lo.x), (v.y, lo.y), (v.z, lo.z)] {
                        prop_assert!(x >= l - 1e-4 && x < l + s + 1e-4);
                    }
                }
                // Runs that end before the streamline does carry the connecting point.
                if start + line.points.len() < src.len() {
                    prop_assert_ne!(voxel_coord(*line.points.last().unwrap(), &params), coord);
                }
            }
        }
    }

    #[test]
    fn voxel_coord_matches_scalar_reference(
        pts in prop::collection::vec((-500.0f32..500.0, -500.0f32..500.0, -500.0f32..500.0), 1..200),
        s in 0.01f32..50.0,
    ) {
        let set = StreamlineSet::new(vec![pts.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect()]);
        let (b_min, _) = compute_bounds(&set).unwrap();
        let params = GridParams::new(b_min, s).unwrap();
        for &p in &set.streamlines[0] {
            let c = voxel_coord(p, &params);
            prop_assert_eq!(c, reference_coord(p, b_min, s));
            prop_assert!(c.i >= 0 && c.j >= 0 && c.k >= 0);
        }
    }

    #[test]
    fn build_is_deterministic((set, voxel) in walk_set()) {
        prop_assert_eq!(build_scene(&set, voxel).unwrap(), build_scene(&set, voxel).unwrap());
    }
}

#[test]
fn bounds_match_fold_over_thousand_points() {
    let set = random_walks(&WalkParams { streamlines: 20, min_points: 50, max_points: 50, ..Default::default() }, 9);
    assert_eq!(set.point_count(), 1000);
    let mut lo = [f32::INFINITY; 3];
    let mut hi = [f32::NEG_INFINITY; 3];
    for s in &set.streamlines {
        for p in s {
            for (i, v) in [p.x, p.y, p.z].into_iter().enumerate() {
                if v < lo[i] {
                    lo[i] = v;
                }
                if v > hi[i] {
                    hi[i] = v;
                }
            }
        }
    }
    assert_eq!(compute_bounds(&set).unwrap(), (Point3::from(lo), Point3::from(hi)));
}

#[test]
fn thousand_random_points_match_reference_coords() {
    let set = random_walks(&WalkParams { streamlines: 10, min_points: 100, max_points: 100, step: 3.7, ..Default::default() }, 2);
    let (b_min, _) = compute_bounds(&set).unwrap();
    for s in [0.3f32, 1.0, 7.5, 10.0, 33.3] {
        let params = GridParams::new(b_min, s).unwrap();
        for &p in set.streamlines.iter().flatten() {
            assert_eq!(voxel_coord(p, &params), reference_coord(p, b_min, s));
        }
    }
}
