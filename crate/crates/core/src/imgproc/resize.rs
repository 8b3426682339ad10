use super::{to_u8, Image};
use crate::error::{Error, Result};

/// Source sampling position and neighbour pair for each output coordinate,
/// with half-pixel center alignment.
fn sample_axis(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(in_len - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

pub fn resize_bilinear(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid(format!("target size must be non-zero, got {out_w}x{out_h}")));
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let xs = sample_axis(out_w, img.width());
    let ys = sample_axis(out_h, img.height());
    let mut out = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p = |x, y| img.get(x, y) as f64;
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            out.push(to_u8(top * (1.0 - fy) + bottom * fy));
        }
    }
    Image::new(out_w, out_h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_size_is_identity() {
        let img = Image::from_fn(128, 128, |x, y| (x ^ y) as u8).unwrap();
        assert_eq!(resize_bilinear(&img, 128, 128).unwrap(), img);
    }

    #[test]
    fn two_by_two_to_one() {
        let img = Image::new(2, 2, vec![0, 0, 100, 100]).unwrap();
        assert_eq!(resize_bilinear(&img, 1, 1).unwrap().data(), &[50]);
    }

    #[test]
    fn constant_stays_constant() {
        let img = Image::filled(7, 5, 33).unwrap();
        for (w, h) in [(1, 1), (150, 150), (3, 11)] {
            let out = resize_bilinear(&img, w, h).unwrap();
            assert!(out.data().iter().all(|&p| p == 33));
        }
    }

    #[test]
    fn zero_target_rejected() {
        let img = Image::filled(2, 2, 0).unwrap();
        assert!(resize_bilinear(&img, 0, 4).is_err());
    }

    #[test]
    fn upsampling_interpolates_linearly() {
        let img = Image::new(2, 1, vec![0, 200]).unwrap();
        // centers at 0.25, 0.75 → source -0.25 (clamped 0), 0.25, 0.75, 1.25 (clamped 1)
        assert_eq!(resize_bilinear(&img, 4, 1).unwrap().data(), &[0, 50, 150, 200]);
    }
}
