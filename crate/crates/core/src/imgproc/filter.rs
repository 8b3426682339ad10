use super::{reflect, to_u8, Image};
use crate::error::{Error, Result};

fn check_ksize(ksize: usize) -> Result<()> {
    if ksize < 3 || ksize.is_multiple_of(2) {
        return Err(Error::invalid(format!("window side must be odd and >= 3, got {ksize}")));
    }
    Ok(())
}

/// Standard deviation implied by a window side: `0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn gaussian_sigma(ksize: usize) -> f64 {
    0.3 * ((ksize as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian taps for an odd window side.
pub fn gaussian_kernel(ksize: usize) -> Result<Vec<f64>> {
    check_ksize(ksize)?;
    let sigma = gaussian_sigma(ksize);
    let r = (ksize / 2) as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

/// Separable convolution with reflected borders; unrounded output.
pub(crate) fn convolve_separable(
    src: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[reflect(x as isize + k as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect(y as isize + k as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Gaussian smoothing with a `ksize x ksize` window.
pub fn gaussian_filter(img: &Image, ksize: usize) -> Result<Image> {
    let kernel = gaussian_kernel(ksize)?;
    let src: Vec<f64> = img.data().iter().map(|&p| p as f64).collect();
    let out = convolve_separable(&src, img.width(), img.height(), &kernel);
    Image::new(img.width(), img.height(), out.into_iter().map(to_u8).collect())
}

/// Median of each `ksize x ksize` neighbourhood, borders reflected.
pub fn median_filter(img: &Image, ksize: usize) -> Result<Image> {
    check_ksize(ksize)?;
    let (w, h) = (img.width(), img.height());
    let r = (ksize / 2) as isize;
    let mut window = Vec::with_capacity(ksize * ksize);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            window.clear();
            for dy in -r..=r {
                let sy = reflect(y + dy, h);
                for dx in -r..=r {
                    window.push(img.get(reflect(x + dx, w), sy));
                }
            }
            let mid = window.len() / 2;
            out.push(*window.select_nth_unstable(mid).1);
        }
    }
    Image::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_for_three() {
        assert!((gaussian_sigma(3) - 0.8).abs() < 1e-12);
        let k = gaussian_kernel(3).unwrap();
        // unnormalized side tap exp(-1 / (2 * 0.64)) = 0.4578
        assert!((k[0] / k[1] - 0.4578).abs() < 1e-4);
        assert!((k[1] - 0.5221).abs() < 1e-3);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((gaussian_sigma(9) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn even_or_small_windows_rejected() {
        let img = Image::filled(4, 4, 1).unwrap();
        for k in [0, 1, 2, 4] {
            assert!(gaussian_filter(&img, k).is_err());
            assert!(median_filter(&img, k).is_err());
        }
    }

    #[test]
    fn impulse_response_preserves_mass() {
        let mut src = vec![0.0; 15 * 15];
        src[7 * 15 + 7] = 255.0;
        let k = gaussian_kernel(9).unwrap();
        let out = convolve_separable(&src, 15, 15, &k);
        assert!((out.iter().sum::<f64>() - 255.0).abs() < 1e-9);
    }

    #[test]
    fn median_of_hand_patch() {
        let img = Image::new(3, 3, vec![1, 2, 3, 4, 100, 6, 7, 8, 9]).unwrap();
        assert_eq!(median_filter(&img, 3).unwrap().get(1, 1), 6);
    }

    #[test]
    fn median_removes_salt() {
        let mut data = vec![40u8; 9 * 9];
        data[4 * 9 + 4] = 255;
        let out = median_filter(&Image::new(9, 9, data).unwrap(), 3).unwrap();
        assert!(out.data().iter().all(|&p| p == 40));
    }

    #[test]
    fn filters_work_on_tiny_images() {
        let img = Image::new(2, 1, vec![10, 20]).unwrap();
        assert_eq!(gaussian_filter(&img, 9).unwrap().width(), 2);
        assert_eq!(median_filter(&img, 9).unwrap().height(), 1);
    }

    proptest! {
        #[test]
        fn constant_images_are_fixed_points(
            v in any::<u8>(), w in 1usize..12, h in 1usize..12,
            k in prop::sample::select(vec![3usize, 5, 9]),
        ) {
            let img = Image::filled(w, h, v).unwrap();
            prop_assert_eq!(&gaussian_filter(&img, k).unwrap(), &img);
            prop_assert_eq!(&median_filter(&img, k).unwrap(), &img);
        }
    }
}
