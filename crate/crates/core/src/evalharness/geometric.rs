use crate::error::{Error, Result};
use crate::imgproc::{to_u8, Image};
use crate::rng::Rng;

/// Symmetric sampling ranges for the random affine augmentation; each value
/// is drawn uniformly from `[-max, +max]` per image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricRanges {
    pub rotation_deg: f64,
    pub shear: f64,
    pub zoom: f64,
}

impl GeometricRanges {
    pub const MAX_ROTATION_DEG: f64 = 15.0;
    pub const MAX_SHEAR: f64 = 0.2;
    pub const MAX_ZOOM: f64 = 0.2;

    pub const STANDARD: GeometricRanges = GeometricRanges {
        rotation_deg: Self::MAX_ROTATION_DEG,
        shear: Self::MAX_SHEAR,
        zoom: Self::MAX_ZOOM,
    };

    pub const NONE: GeometricRanges = GeometricRanges { rotation_deg: 0.0, shear: 0.0, zoom: 0.0 };

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("rotation", self.rotation_deg, Self::MAX_ROTATION_DEG),
            ("shear", self.shear, Self::MAX_SHEAR),
            ("zoom", self.zoom, Self::MAX_ZOOM),
        ];
        for (name, v, max) in checks {
            if !(0.0..=max).contains(&v) {
                return Err(Error::invalid(format!("{name} range {v} outside [0, {max}]")));
            }
        }
        Ok(())
    }
}

/// Applies `rotation ∘ shear ∘ scale(1 + zoom)` about the image center with
/// bilinear sampling; source points outside the image read as 0.
pub fn affine_transform(img: &Image, rotation_deg: f64, shear: f64, zoom: f64) -> Result<Image> {
    let s = 1.0 + zoom;
    if !(s > 0.0) {
        return Err(Error::invalid(format!("zoom {zoom} collapses the image")));
    }
    let (sin, cos) = rotation_deg.to_radians().sin_cos();
    // forward A = R * [[1, shear], [0, 1]] * s; A^-1 = (1/s) * [[1, -shear], [0, 1]] * R^T
    let inv = [
        (cos + shear * sin) / s,
        (sin - shear * cos) / s,
        -sin / s,
        cos / s,
    ];
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            img.get(x as usize, y as usize) as f64
        }
    };
    Image::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let sx = inv[0] * u + inv[1] * v + cx - 0.5;
        let sy = inv[2] * u + inv[3] * v + cy - 0.5;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
        let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
        to_u8(top * (1.0 - fy) + bottom * fy)
    })
}

/// Random affine augmentation with parameters drawn from `ranges` using `seed`.
pub fn geometric_augment(img: &Image, ranges: GeometricRanges, seed: u64) -> Result<Image> {
    ranges.validate()?;
    let mut rng = Rng::new(seed);
    let rot = rng.uniform_in(-ranges.rotation_deg, ranges.rotation_deg);
    let shear = rng.uniform_in(-ranges.shear, ranges.shear);
    let zoom = rng.uniform_in(-ranges.zoom, ranges.zoom);
    affine_transform(img, rot, shear, zoom)
}
