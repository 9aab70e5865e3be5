use clap::{Args, ValueEnum};
use thiserror::Error;
use voxlines::{Camera, Projection, Vec3, ViewError, VoxelScene};

#[derive(Debug, Error)]
pub enum CameraFlagError {
    #[error("bad camera flags: {0}")]
    Invalid(String),
    #[error("bad camera flags: {0}")]
    View(#[from] ViewError),
}

/// Parse `x,y,z`.
pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers `x,y,z`, got `{s}`")),
    }
}

/// Parse `WIDTHxHEIGHT`.
pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w.trim().parse().map_err(|e| format!("width `{w}`: {e}"))?;
    let h: u32 = h.trim().parse().map_err(|e| format!("height `{h}`: {e}"))?;
    if w == 0 || h == 0 {
        return Err("image dimensions must be >= 1".into());
    }
    Ok((w, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectionKind {
    Perspective,
    Orthographic,
}

/// Camera and viewport flags. Unset eye/target/half-height default to a
/// view of the whole scene from +Z.
#[derive(Debug, Clone, Args)]
pub struct CameraArgs {
    /// Camera position `x,y,z` in mm.
    #[arg(long, value_parser = parse_vec3)]
    pub eye: Option<Vec3>,
    /// Look-at point `x,y,z` in mm (default: scene center).
    #[arg(long, value_parser = parse_vec3)]
    pub target: Option<Vec3>,
    #[arg(long, value_parser = parse_vec3, default_value = "0,1,0")]
    pub up: Vec3,
    #[arg(long, value_enum, default_value_t = ProjectionKind::Perspective)]
    pub projection: ProjectionKind,
    /// Vertical field of view in degrees (perspective).
    #[arg(long, default_value_t = 45.0)]
    pub fov: f64,
    /// Half of the visible height in mm (orthographic).
    #[arg(long)]
    pub half_height: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub near: f64,
    /// Output size as WxH pixels.
    #[arg(long, value_parser = parse_size, default_value = "512x512")]
    pub size: (u32, u32),
}

impl Default for CameraArgs {
    fn default() -> Self {
        Self {
            eye: None,
            target: None,
            up: Vec3::Y,
            projection: ProjectionKind::Perspective,
            fov: 45.0,
            half_height: None,
            near: 0.1,
            size: (512, 512),
        }
    }
}

/// Center and bounding radius of the scene geometry.
pub fn scene_sphere(scene: &VoxelScene) -> (Vec3, f64) {
    match scene.vertex_bounds() {
        Some((lo, hi)) => ((lo + hi) * 0.5, ((hi - lo) * 0.5).norm().max(1.0)),
        None => (scene.params.b_min.to_vec3(), 1.0),
    }
}

impl CameraArgs {
    pub fn camera(&self, scene: &VoxelScene) -> Result<Camera, CameraFlagError> {
        let (center, radius) = scene_sphere(scene);
        let target = self.target.unwrap_or(center);
        let fov = self.fov.to_radians();
        let eye = self.eye.unwrap_or_else(|| {
            let dist = match self.projection {
                ProjectionKind::Perspective => radius / (fov * 0.5).sin().max(1e-3) * 1.05,
                ProjectionKind::Orthographic => radius * 3.0,
            };
            target + Vec3::Z * dist
        });
        let (w, h) = self.size;
        let aspect = w as f64 / h as f64;
        let projection = match self.projection {
            ProjectionKind::Perspective => Projection::Perspective {
                fov_y: fov,
                aspect,
                near: self.near,
            },
            ProjectionKind::Orthographic => Projection::Orthographic {
                half_height: self.half_height.unwrap_or(radius * 1.05),
                aspect,
                near: self.near,
            },
        };
        if self.projection == ProjectionKind::Perspective && self.half_height.is_some() {
            return Err(CameraFlagError::Invalid("--half-height only applies to orthographic projection".into()));
        }
        Ok(Camera::new(eye, target, self.up, projection)?)
    }
}
