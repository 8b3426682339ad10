use std::fmt;
use std::str::FromStr;

use super::{aiin_normalize, gaussian_filter, median_filter, ContrastThreshold, Image, WindowGrid};
use crate::error::{Error, Result};

/// Preprocessing applied to real images before GAN training.
///
/// Textual form: `none`, `aiin:8x8:50`, `gaussian:3`, `median:3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preprocess {
    None,
    Aiin { grid: WindowGrid, threshold: ContrastThreshold },
    Gaussian { ksize: usize },
    Median { ksize: usize },
}

impl Preprocess {
    pub fn apply(&self, img: &Image) -> Result<Image> {
        match *self {
            Preprocess::None => Ok(img.clone()),
            Preprocess::Aiin { grid, threshold } => aiin_normalize(img, grid, threshold),
            Preprocess::Gaussian { ksize } => gaussian_filter(img, ksize),
            Preprocess::Median { ksize } => median_filter(img, ksize),
        }
    }

    pub fn apply_all(&self, images: &[Image]) -> Result<Vec<Image>> {
        images.iter().map(|img| self.apply(img)).collect()
    }

    /// Short name used in report rows.
    pub fn tag(&self) -> &'static str {
        match self {
            Preprocess::None => "none",
            Preprocess::Aiin { .. } => "aiin",
            Preprocess::Gaussian { .. } => "gaussian",
            Preprocess::Median { .. } => "median",
        }
    }

    /// Tile grid for AIIN, kernel extent for the filters.
    pub fn window(&self) -> Option<String> {
        match self {
            Preprocess::None => None,
            Preprocess::Aiin { grid, .. } => Some(grid.to_string()),
            Preprocess::Gaussian { ksize } | Preprocess::Median { ksize } => Some(format!("{ksize}x{ksize}")),
        }
    }

    pub fn threshold(&self) -> Option<u32> {
        match self {
            Preprocess::Aiin { threshold, .. } => Some(threshold.0),
            _ => None,
        }
    }
}

impl fmt::Display for Preprocess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preprocess::None => f.write_str("none"),
            Preprocess::Aiin { grid, threshold } => write!(f, "aiin:{grid}:{}", threshold.0),
            Preprocess::Gaussian { ksize } => write!(f, "gaussian:{ksize}"),
            Preprocess::Median { ksize } => write!(f, "median:{ksize}"),
        }
    }
}

impl FromStr for Preprocess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let ksize = |v: &str| {
            v.parse::<usize>()
                .ok()
                .filter(|k| k % 2 == 1)
                .ok_or_else(|| Error::invalid(format!("kernel size '{v}' must be a positive odd integer")))
        };
        match parts.as_slice() {
            ["none"] => Ok(Preprocess::None),
            ["aiin", grid, t] => Ok(Preprocess::Aiin {
                grid: grid.parse()?,
                threshold: ContrastThreshold(
                    t.parse().map_err(|_| Error::invalid(format!("threshold '{t}' is not a non-negative integer")))?,
                ),
            }),
            ["gaussian", k] => Ok(Preprocess::Gaussian { ksize: ksize(k)? }),
            ["median", k] => Ok(Preprocess::Median { ksize: ksize(k)? }),
            _ => Err(Error::invalid(format!(
                "unknown preprocessing '{s}' (expected none, aiin:WxH:T, gaussian:K or median:K)"
            ))),
        }
    }
}
