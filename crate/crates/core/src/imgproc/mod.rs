//! Grayscale rasters and the preprocessing techniques applied before GAN
//! training: contrast-limited adaptive equalization, Gaussian and median
//! filtering, and bilinear resizing.

mod clahe;
mod filter;
mod pgm;
mod preprocess;
mod resize;

use std::fmt;
use std::str::FromStr;

pub use clahe::{aiin_normalize, clip_and_redistribute, clip_and_redistribute_bins, tile_luts};
pub use filter::{gaussian_filter, gaussian_kernel, gaussian_sigma, median_filter};
pub use pgm::{decode_pgm, encode_pgm};
pub use preprocess::Preprocess;
pub use resize::resize_bilinear;

use crate::error::{Error, Result};

/// An 8-bit grayscale raster stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image dimensions must be non-zero, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::dims(format!(
                "image {width}x{height} needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Image::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn histogram(&self) -> Histogram {
        let mut h = Histogram::default();
        for &p in &self.data {
            h.bins[p as usize] += 1;
        }
        h
    }
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// 256-bin intensity histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub bins: [u32; 256],
}

impl Default for Histogram {
    fn default() -> Self {
        Histogram { bins: [0; 256] }
    }
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|&b| b as u64).sum()
    }
}

/// Intensity lookup table produced by equalizing one tile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lut {
    pub map: [u8; 256],
}

impl Lut {
    pub fn is_monotone(&self) -> bool {
        self.map.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Number of tiles per axis for adaptive equalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowGrid {
    pub tiles_x: usize,
    pub tiles_y: usize,
}

impl WindowGrid {
    pub fn new(tiles_x: usize, tiles_y: usize) -> Result<Self> {
        if tiles_x == 0 || tiles_y == 0 {
            return Err(Error::invalid(format!("window grid must be at least 1x1, got {tiles_x}x{tiles_y}")));
        }
        Ok(WindowGrid { tiles_x, tiles_y })
    }

    pub fn square(n: usize) -> Result<Self> {
        WindowGrid::new(n, n)
    }
}

impl fmt::Display for WindowGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.tiles_x, self.tiles_y)
    }
}

impl FromStr for WindowGrid {
    type Err = Error;

    /// Parses `WxH`, e.g. `8x8`.
    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("grid '{s}' is not of the form WxH")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("grid '{s}' has a non-integer side")))
        };
        WindowGrid::new(parse(w)?, parse(h)?)
    }
}

/// Contrast threshold controlling the per-tile clip limit.
///
/// The exploration grid is {0, 5, 10, 20, 50}; any non-negative value is accepted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContrastThreshold(pub u32);

impl ContrastThreshold {
    pub const GRID: [u32; 5] = [0, 5, 10, 20, 50];

    /// Clip limit for a tile of `tile_area` pixels: `max(1, floor(t * area / 256))`.
    pub fn clip_limit(self, tile_area: usize) -> u32 {
        let limit = (self.0 as u64 * tile_area as u64) / 256;
        limit.clamp(1, u32::MAX as u64) as u32
    }
}

/// Rounds half-up and clamps into the 8-bit range.
#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Symmetric reflection of an index into `0..n` (edge sample repeated).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}
