//! Seeded synthetic streamline sets for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Point3, Vec3};
use crate::tck::StreamlineSet;

/// Shape of a random-walk streamline set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub streamlines: usize,
    pub min_points: usize,
    pub max_points: usize,
    /// Distance between consecutive points, mm.
    pub step: f32,
    /// Start points are uniform in `[0, extent]^3`, mm.
    pub extent: f32,
    /// Per-step heading perturbation; 0 gives straight lines.
    pub wiggle: f32,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            streamlines: 100,
            min_points: 2,
            max_points: 100,
            step: 1.0,
            extent: 100.0,
            wiggle: 0.3,
        }
    }
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Smooth random walks with fixed step length. Every point is exactly
/// `step` from its predecessor up to `f32` rounding.
pub fn random_walks(params: &WalkParams, seed: u64) -> StreamlineSet {
    assert!(params.min_points >= 2 && params.min_points <= params.max_points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let streamlines = (0..params.streamlines)
        .map(|_| {
            let n = rng.gen_range(params.min_points..=params.max_points);
            let e = params.extent as f64;
            let mut p = Vec3::new(rng.gen_range(0.0..=e), rng.gen_range(0.0..=e), rng.gen_range(0.0..=e));
            let mut heading = unit(&mut rng);
            let mut pts = Vec::with_capacity(n);
            for _ in 0..n {
                pts.push(Point3::new(p.x as f32, p.y as f32, p.z as f32));
                let jitter = unit(&mut rng) * params.wiggle as f64;
                heading = (heading + jitter).normalized().unwrap_or(heading);
                p = p + heading * params.step as f64;
            }
            pts
        })
        .collect();
    StreamlineSet::new(streamlines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_with_requested_shape() {
        let params = WalkParams {
            streamlines: 20,
            min_points: 5,
            max_points: 9,
            step: 2.0,
            ..Default::default()
        };
        let a = random_walks(&params, 4);
        assert!(a.same_geometry(&random_walks(&params, 4)));
        assert!(!a.same_geometry(&random_walks(&params, 5)));
        assert_eq!(a.len(), 20);
        for s in &a.streamlines {
            assert!((5..=9).contains(&s.len()));
            for w in s.windows(2) {
                let d = (w[1].to_vec3() - w[0].to_vec3()).norm();
                assert!((d - 2.0).abs() < 1e-3);
            }
        }
    }
}
