use proptest::prelude::*;
use voxlines::synth::{random_walks, WalkParams};
use voxlines::{parse_tck, synth_grid_lines, write_tck, Axis, Point3, StreamlineSet};

fn finite() -> impl Strategy<Value = f32> {
    prop::num::f32::NORMAL | prop::num::f32::ZERO | prop::num::f32::SUBNORMAL
}

fn streamline_set() -> impl Strategy<Value = StreamlineSet> {
    let point = (finite(), finite(), finite()).prop_map(|(x, y, z)| Point3::new(x, y, z));
    prop::collection::vec(prop::collection::vec(point, 2..20), 0..30).prop_map(StreamlineSet::new)
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(set in streamline_set()) {
        let back = parse_tck(&write_tck(&set)).unwrap();
        prop_assert!(back.same_geometry(&set));
        prop_assert_eq!(back.dropped, 0);
        // Re-writing the parsed set gives identical bytes.
        prop_assert_eq!(write_tck(&back), write_tck(&set));
    }

    #[test]
    fn arbitrary_bodies_parse_or_fail_cleanly(body in prop::collection::vec(any::<u8>(), 0..400)) {
        let head = b"mrtrix tracks\ndatatype: Float32LE\nfile: . 49\nEND\n";
        assert_eq!(head.len(), 49);
        let mut bytes = head.to_vec();
        bytes.extend(body);
        if let Ok(set) = parse_tck(&bytes) {
            prop_assert!(set.streamlines.iter().flatten().all(|p| p.is_finite()));
            prop_assert!(set.streamlines.iter().all(|s| s.len() >= 2));
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = parse_tck(&bytes);
    }

    #[test]
    fn corrupted_files_parse_or_fail_cleanly(seed in 0u64..1000, flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8)) {
        let set = random_walks(&WalkParams { streamlines: 5, min_points: 2, max_points: 10, ..Default::default() }, seed);
        let mut bytes = write_tck(&set);
        for (i, b) in flips {
            let i = i.index(bytes.len());
            bytes[i] = b;
        }
        if let Ok(set) = parse_tck(&bytes) {
            prop_assert!(set.streamlines.iter().flatten().all(|p| p.is_finite()));
        }
    }
}

#[test]
fn hundred_random_streamlines_round_trip() {
    let set = random_walks(&WalkParams { streamlines: 100, ..Default::default() }, 42);
    assert!(parse_tck(&write_tck(&set)).unwrap().same_geometry(&set));
}

#[test]
fn grid_lines_round_trip() {
    for axis in Axis::ALL {
        let set = synth_grid_lines(7, 2.5, 33.0, 0.7, axis);
        assert!(parse_tck(&write_tck(&set)).unwrap().same_geometry(&set));
    }
}

#[test]
fn parses_crlf_headers_with_extra_keys() {
    let set = synth_grid_lines(2, 1.0, 3.0, 1.0, Axis::Z);
    let canonical = write_tck(&set);
    let body_at = canonical.len() - (set.point_count() + set.len() + 1) * 12;
    let head = "mrtrix tracks\r\nstep_size: 1\r\ndatatype: Float32LE\r\nfile: . 00000\r\nEND\r\n";
    let head = head.replace("00000", &format!("{:05}", head.len() + 3));
    let mut bytes = head.into_bytes();
    bytes.extend([0u8; 3]);
    bytes.extend_from_slice(&canonical[body_at..]);
    let back = parse_tck(&bytes).unwrap();
    assert!(back.same_geometry(&set));
    assert_eq!(back.header.get("step_size"), Some("1"));
}
