//! Headless line compositor.
//!
//! Segments are drawn as 1-pixel lines with no depth buffer and no
//! anti-aliasing, blended `src·α + dst·(1−α)` in paint order. The final
//! image therefore depends only on the order segments are supplied in.

use thiserror::Error;

use crate::geom::Vec3;
use crate::grid::{VoxelMesh, VoxelScene};
use crate::view::{Camera, PaintOrder, Projection};

pub type Rgb = [f32; 3];

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("invalid render settings: {0}")]
    InvalidSettings(String),
}

/// Row-major RGB image with components in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl Image {
    /// Panics on a zero dimension.
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        let fill = fill.map(|c| c.clamp(0.0, 1.0));
        Self {
            width,
            height,
            pixels: vec![fill; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        self.pixels[(y * self.width + x) as usize] = c.map(|v| v.clamp(0.0, 1.0));
    }

    fn blend(&mut self, x: i64, y: i64, src: Rgb, alpha: f32) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let px = &mut self.pixels[(y as u32 * self.width + x as u32) as usize];
        for c in 0..3 {
            px[c] = (src[c] * alpha + px[c] * (1.0 - alpha)).clamp(0.0, 1.0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColorMode {
    /// Absolute normalized segment tangent as RGB.
    DirectionRgb,
    Uniform(Rgb),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    pub opacity: f32,
    pub background: Rgb,
    pub color_mode: ColorMode,
    pub width: u32,
    pub height: u32,
}

impl RenderSettings {
    pub fn new(width: u32, height: u32, opacity: f32) -> Result<Self, RenderError> {
        let s = Self {
            opacity,
            background: [0.0; 3],
            color_mode: ColorMode::DirectionRgb,
            width,
            height,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.opacity > 0.0 && self.opacity <= 1.0) {
            return Err(RenderError::InvalidSettings(format!("opacity {} outside (0, 1]", self.opacity)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidSettings("image dimensions must be >= 1".into()));
        }
        Ok(())
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }
}

/// Pixel-space position of a point. `x` grows right, `y` grows down; pixel
/// `(i, j)` covers `[i, i+1) x [j, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

fn near_plane(cam: &Camera) -> f64 {
    match cam.projection() {
        Projection::Perspective { near, .. } | Projection::Orthographic { near, .. } => near,
    }
}

/// Camera-space coordinates `(right, up, forward)`.
fn to_view(p: Vec3, cam: &Camera) -> Vec3 {
    let b = cam.basis();
    let d = p - cam.eye();
    Vec3::new(d.dot(b.right), d.dot(b.up), d.dot(b.forward))
}

fn view_to_pixel(v: Vec3, cam: &Camera, width: u32, height: u32) -> (f64, f64) {
    let (nx, ny) = match cam.projection() {
        Projection::Perspective { fov_y, aspect, .. } => {
            let t = (fov_y * 0.5).tan();
            (v.x / (v.z * t * aspect), v.y / (v.z * t))
        }
        Projection::Orthographic { half_height, aspect, .. } => (v.x / (half_height * aspect), v.y / half_height),
    };
    ((nx + 1.0) * 0.5 * width as f64, (1.0 - ny) * 0.5 * height as f64)
}

/// Project `p` to pixel coordinates; `visible` is false in front of the near plane.
pub fn project(p: Vec3, cam: &Camera, width: u32, height: u32) -> Projected {
    let v = to_view(p, cam);
    let visible = v.z >= near_plane(cam);
    let (x, y) = if visible {
        view_to_pixel(v, cam, width, height)
    } else {
        (f64::NAN, f64::NAN)
    };
    Projected { x, y, visible }
}

/// Clip a pixel-space segment to `[lo, hi]` on both axes (Liang-Barsky).
fn clip_to_rect(a: (f64, f64), b: (f64, f64), lo: f64, hi_x: f64, hi_y: f64) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-dx, a.0 - lo), (dx, hi_x - a.0), (-dy, a.1 - lo), (dy, hi_y - a.1)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some(((a.0 + t0 * dx, a.1 + t0 * dy), (a.0 + t1 * dx, a.1 + t1 * dy)))
}

/// Blend a 1-pixel line from `a` to `b` (pixel coordinates) into `img`.
/// Every covered pixel is blended exactly once.
pub fn composite_segment(img: &mut Image, a: (f64, f64), b: (f64, f64), color: Rgb, alpha: f32) {
    if !(a.0.is_finite() && a.1.is_finite() && b.0.is_finite() && b.1.is_finite()) {
        return;
    }
    let Some((a, b)) = clip_to_rect(a, b, -1.0, img.width as f64 + 1.0, img.height as f64 + 1.0) else {
        return;
    };
    let (mut x, mut y) = (a.0.floor() as i64, a.1.floor() as i64);
    let (x1, y1) = (b.0.floor() as i64, b.1.floor() as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.blend(x, y, color, alpha);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn segment_color(mode: ColorMode, a: Vec3, b: Vec3) -> Rgb {
    match mode {
        ColorMode::Uniform(c) => c,
        ColorMode::DirectionRgb => match (b - a).normalized() {
            Some(t) => {
                let t = t.abs();
                [t.x as f32, t.y as f32, t.z as f32]
            }
            None => [1.0; 3],
        },
    }
}

/// Clip a view-space segment against the near plane.
fn clip_near(mut a: Vec3, mut b: Vec3, near: f64) -> Option<(Vec3, Vec3)> {
    if a.z < near && b.z < near {
        return None;
    }
    if a.z < near {
        a = a + (b - a) * ((near - a.z) / (b.z - a.z));
        a.z = near;
    } else if b.z < near {
        b = b + (a - b) * ((near - b.z) / (a.z - b.z));
        b.z = near;
    }
    Some((a, b))
}

/// Composite every segment of `order`, first element first.
pub fn render(scene: &VoxelScene, order: &PaintOrder, cam: &Camera, settings: &RenderSettings) -> Result<Image, RenderError> {
    settings.validate()?;
    let mut img = Image::new(settings.width, settings.height, settings.background);
    let near = near_plane(cam);
    let mut current: Option<&VoxelMesh> = None;
    for r in order.iter() {
        let mesh = match current {
            Some(m) if m.coord == r.voxel => m,
            _ => {
                let m = &scene.voxels[&r.voxel];
                current = Some(m);
                m
            }
        };
        let (a, b) = mesh.segment_points(r.seg as usize);
        let (a, b) = (a.to_vec3(), b.to_vec3());
        let color = segment_color(settings.color_mode, a, b);
        if let Some((va, vb)) = clip_near(to_view(a, cam), to_view(b, cam), near) {
            let pa = view_to_pixel(va, cam, settings.width, settings.height);
            let pb = view_to_pixel(vb, cam, settings.width, settings.height);
            composite_segment(&mut img, pa, pb, color, settings.opacity);
        }
    }
    Ok(img)
}

/// Mean absolute difference over all pixel components.
pub fn image_mae(a: &Image, b: &Image) -> Result<f64, RenderError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(RenderError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (0..3).map(|c| (p[c] as f64 - q[c] as f64).abs()).sum::<f64>())
        .sum();
    Ok(sum / (a.pixels.len() * 3) as f64)
}

/// Quantize a component to 8 bits, rounding half up.
pub fn to_u8(c: f32) -> u8 {
    (c.clamp(0.0, 1.0) as f64 * 255.0 + 0.5).floor() as u8
}

/// Binary PPM (P6), maxval 255.
pub fn write_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for p in &img.pixels {
        out.extend(p.iter().map(|&c| to_u8(c)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const WHITE: Rgb = [1.0; 3];
    const BLACK: Rgb = [0.0; 3];

    fn ortho_down_z(half_height: f64) -> Camera {
        Camera::new(
            Vec3::new(0.0, 0.0, 10.0),
            Vec3::default(),
            Vec3::Y,
            Projection::Orthographic { half_height, aspect: 1.0, near: 0.1 },
        )
        .unwrap()
    }

    #[test]
    fn view_center_projects_to_image_center() {
        let p = project(Vec3::default(), &ortho_down_z(5.0), 64, 64);
        assert!(p.visible);
        assert_eq!((p.x, p.y), (32.0, 32.0));
    }

    #[test]
    fn behind_eye_is_invisible() {
        let cam = Camera::new(
            Vec3::default(),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::Y,
            Projection::Perspective { fov_y: 1.0, aspect: 1.0, near: 0.1 },
        )
        .unwrap();
        assert!(!project(Vec3::new(0.0, 0.0, 5.0), &cam, 10, 10).visible);
        assert!(project(Vec3::new(0.0, 0.0, -5.0), &cam, 10, 10).visible);
    }

    #[test]
    fn perspective_similar_triangles() {
        // fov 90 deg: tan(45) = 1, so at depth z the view spans [-z, z].
        let cam = Camera::new(
            Vec3::default(),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::Y,
            Projection::Perspective { fov_y: std::f64::consts::FRAC_PI_2, aspect: 1.0, near: 0.1 },
        )
        .unwrap();
        // Looking down -Z with up +Y: right is +X.
        let cases = [
            (Vec3::new(10.0, 10.0, -10.0), (100.0, 0.0)),
            (Vec3::new(-5.0, 0.0, -10.0), (25.0, 50.0)),
            (Vec3::new(10.0, -10.0, -20.0), (75.0, 75.0)),
        ];
        for (p, (x, y)) in cases {
            let q = project(p, &cam, 100, 100);
            assert!((q.x - x).abs() < 1e-9 && (q.y - y).abs() < 1e-9, "{p:?} -> {q:?}");
        }
    }

    #[test]
    fn opaque_segment_sets_exact_color() {
        let mut img = Image::new(8, 8, BLACK);
        composite_segment(&mut img, (0.5, 2.5), (6.5, 2.5), [0.2, 0.4, 0.6], 1.0);
        for x in 0..=6 {
            assert_eq!(img.get(x, 2), [0.2, 0.4, 0.6]);
        }
        assert_eq!(img.get(7, 2), BLACK);
        assert_eq!(img.get(3, 3), BLACK);
    }

    #[test]
    fn half_alpha_white_over_black() {
        let mut img = Image::new(4, 4, BLACK);
        composite_segment(&mut img, (0.5, 0.5), (3.5, 3.5), WHITE, 0.5);
        for i in 0..4 {
            assert_eq!(img.get(i, i), [0.5; 3]);
        }
    }

    #[test]
    fn two_layer_blend_closed_form() {
        let (a, b, bg, alpha) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.1, 0.1, 0.3], 0.3f32);
        let mut img = Image::new(5, 5, bg);
        composite_segment(&mut img, (2.5, 0.5), (2.5, 4.5), a, alpha);
        composite_segment(&mut img, (0.5, 2.5), (4.5, 2.5), b, alpha);
        let got = img.get(2, 2);
        for c in 0..3 {
            let expect = b[c] * alpha + (a[c] * alpha + bg[c] * (1.0 - alpha)) * (1.0 - alpha);
            assert!((got[c] - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn each_pixel_touched_once_along_steep_and_shallow_lines() {
        for (a, b) in [((0.2, 0.7), (9.9, 3.1)), ((1.5, 9.5), (2.5, 0.5)), ((9.5, 9.5), (0.5, 0.5))] {
            let mut img = Image::new(10, 10, BLACK);
            composite_segment(&mut img, a, b, WHITE, 0.5);
            assert!(img.pixels().iter().all(|p| p[0] == 0.0 || p[0] == 0.5));
        }
    }

    #[test]
    fn offscreen_and_huge_segments_are_clipped() {
        let mut img = Image::new(10, 10, BLACK);
        composite_segment(&mut img, (-1e12, 5.5), (1e12, 5.5), WHITE, 1.0);
        for x in 0..10 {
            assert_eq!(img.get(x, 5), WHITE);
        }
        let mut img = Image::new(10, 10, BLACK);
        composite_segment(&mut img, (20.0, 20.0), (30.0, 40.0), WHITE, 1.0);
        assert!(img.pixels().iter().all(|p| *p == BLACK));
        composite_segment(&mut img, (f64::NAN, 0.0), (1.0, 1.0), WHITE, 1.0);
        assert!(img.pixels().iter().all(|p| *p == BLACK));
    }

    #[test]
    fn near_plane_clip() {
        let (a, b) = clip_near(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 2.0, 1.0), 0.5).unwrap();
        assert_eq!(a.z, 0.5);
        assert!((a.y - 1.5).abs() < 1e-12);
        assert_eq!(b, Vec3::new(0.0, 2.0, 1.0));
        assert!(clip_near(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 0.2), 0.5).is_none());
    }

    #[test]
    fn mae_examples() {
        let a = Image::new(3, 2, BLACK);
        assert_eq!(image_mae(&a, &a).unwrap(), 0.0);
        assert_eq!(image_mae(&a, &Image::new(3, 2, WHITE)).unwrap(), 1.0);
        assert_eq!(
            image_mae(&a, &Image::new(2, 3, WHITE)),
            Err(RenderError::DimensionMismatch(3, 2, 2, 3))
        );
    }

    #[test]
    fn ppm_golden_bytes() {
        let mut expect = b"P6\n1 1\n255\n".to_vec();
        expect.extend([0xFF; 3]);
        assert_eq!(write_ppm(&Image::new(1, 1, WHITE)), expect);

        let mut expect = b"P6\n2 1\n255\n".to_vec();
        expect.extend([0u8; 6]);
        assert_eq!(write_ppm(&Image::new(2, 1, BLACK)), expect);
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(to_u8(0.5), 128);
        assert_eq!(to_u8(0.25), 64);
        assert_eq!(to_u8(-1.0), 0);
        assert_eq!(to_u8(2.0), 255);
    }

    #[test]
    fn settings_validation() {
        assert!(RenderSettings::new(4, 4, 0.0).is_err());
        assert!(RenderSettings::new(4, 4, 1.5).is_err());
        assert!(RenderSettings::new(0, 4, 0.5).is_err());
        assert!(RenderSettings::new(4, 4, 1.0).is_ok());
    }
}
