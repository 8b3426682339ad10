use super::{to_u8, ContrastThreshold, Histogram, Image, Lut, WindowGrid};
use crate::error::{Error, Result};

/// Clips every bin at `clip_limit` and spreads the excess in one pass: each bin
/// receives `excess / n`, and the first `excess % n` bins one extra count.
///
/// Works on any bin count; [`clip_and_redistribute`] is the 256-bin form.
pub fn clip_and_redistribute_bins(bins: &mut [u32], clip_limit: u32) -> Result<()> {
    if clip_limit == 0 {
        return Err(Error::invalid("clip limit must be at least 1"));
    }
    if bins.is_empty() {
        return Ok(());
    }
    let mut excess: u64 = 0;
    for b in bins.iter_mut() {
        if *b > clip_limit {
            excess += (*b - clip_limit) as u64;
            *b = clip_limit;
        }
    }
    let n = bins.len() as u64;
    let base = (excess / n) as u32;
    let residual = (excess % n) as usize;
    for (i, b) in bins.iter_mut().enumerate() {
        *b += base + u32::from(i < residual);
    }
    Ok(())
}

pub fn clip_and_redistribute(hist: &Histogram, clip_limit: u32) -> Result<Histogram> {
    let mut out = hist.clone();
    clip_and_redistribute_bins(&mut out.bins, clip_limit)?;
    Ok(out)
}

/// Pixel extent `[start, end)` of tile `k` out of `n` along an axis of length
/// `len`; the last tile absorbs the remainder.
fn tile_span(k: usize, n: usize, len: usize) -> (usize, usize) {
    let step = len / n;
    let start = k * step;
    let end = if k + 1 == n { len } else { start + step };
    (start, end)
}

fn check_grid(img: &Image, grid: WindowGrid) -> Result<()> {
    if grid.tiles_x == 0 || grid.tiles_y == 0 {
        return Err(Error::invalid("window grid must be at least 1x1"));
    }
    if grid.tiles_x > img.width() || grid.tiles_y > img.height() {
        return Err(Error::invalid(format!(
            "window grid {grid} exceeds image size {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

fn equalize_tile(hist: &Histogram, area: usize) -> Lut {
    let mut map = [0u8; 256];
    let mut cdf: u64 = 0;
    let area = area as u64;
    for (i, &count) in hist.bins.iter().enumerate() {
        cdf += count as u64;
        // round(255 * cdf / area), half-up, in integers
        map[i] = ((255 * cdf * 2 + area) / (2 * area)).min(255) as u8;
    }
    Lut { map }
}

/// Per-tile equalization tables in row-major tile order.
pub fn tile_luts(img: &Image, grid: WindowGrid, threshold: ContrastThreshold) -> Result<Vec<Lut>> {
    check_grid(img, grid)?;
    let mut luts = Vec::with_capacity(grid.tiles_x * grid.tiles_y);
    for ty in 0..grid.tiles_y {
        let (y0, y1) = tile_span(ty, grid.tiles_y, img.height());
        for tx in 0..grid.tiles_x {
            let (x0, x1) = tile_span(tx, grid.tiles_x, img.width());
            let mut hist = Histogram::default();
            for y in y0..y1 {
                for &p in &img.data()[y * img.width() + x0..y * img.width() + x1] {
                    hist.bins[p as usize] += 1;
                }
            }
            let area = (x1 - x0) * (y1 - y0);
            clip_and_redistribute_bins(&mut hist.bins, threshold.clip_limit(area))?;
            luts.push(equalize_tile(&hist, area));
        }
    }
    Ok(luts)
}

/// For each pixel along an axis: the two neighbouring tile indices and the
/// weight of the second, from distances to tile centers (clamped at borders).
fn axis_weights(len: usize, tiles: usize) -> Vec<(usize, usize, f64)> {
    let centers: Vec<f64> = (0..tiles)
        .map(|k| {
            let (a, b) = tile_span(k, tiles, len);
            (a + b) as f64 / 2.0
        })
        .collect();
    (0..len)
        .map(|i| {
            let p = i as f64 + 0.5;
            if p <= centers[0] {
                return (0, 0, 0.0);
            }
            if p >= centers[tiles - 1] {
                return (tiles - 1, tiles - 1, 0.0);
            }
            let k = centers.partition_point(|&c| c <= p) - 1;
            let w = (p - centers[k]) / (centers[k + 1] - centers[k]);
            (k, k + 1, w)
        })
        .collect()
}

/// Contrast-limited adaptive histogram equalization over a grid of tiles.
///
/// Each tile's histogram is clipped at `max(1, floor(threshold * area / 256))`,
/// equalized into a lookup table, and pixels are mapped by bilinear blending of
/// the tables of the four nearest tile centers.
pub fn aiin_normalize(img: &Image, grid: WindowGrid, threshold: ContrastThreshold) -> Result<Image> {
    let luts = tile_luts(img, grid, threshold)?;
    let xs = axis_weights(img.width(), grid.tiles_x);
    let ys = axis_weights(img.height(), grid.tiles_y);
    let mut out = Vec::with_capacity(img.data().len());
    for (y, &(ty0, ty1, wy)) in ys.iter().enumerate() {
        for (x, &(tx0, tx1, wx)) in xs.iter().enumerate() {
            let v = img.get(x, y) as usize;
            let at = |tx: usize, ty: usize| luts[ty * grid.tiles_x + tx].map[v] as f64;
            let top = at(tx0, ty0) * (1.0 - wx) + at(tx1, ty0) * wx;
            let bottom = at(tx0, ty1) * (1.0 - wx) + at(tx1, ty1) * wx;
            out.push(to_u8(top * (1.0 - wy) + bottom * wy));
        }
    }
    Image::new(img.width(), img.height(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn miniature_clip_traces() {
        let mut a = [10, 0, 0, 0];
        clip_and_redistribute_bins(&mut a, 4).unwrap();
        assert_eq!(a, [6, 2, 1, 1]);

        let mut b = [3, 3, 3, 3];
        clip_and_redistribute_bins(&mut b, 4).unwrap();
        assert_eq!(b, [3, 3, 3, 3]);

        let mut c = [8, 0, 0, 0];
        clip_and_redistribute_bins(&mut c, 4).unwrap();
        assert_eq!(c, [5, 1, 1, 1]);
    }

    #[test]
    fn zero_clip_limit_is_rejected() {
        assert!(clip_and_redistribute(&Histogram::default(), 0).is_err());
    }

    #[test]
    fn tile_spans_absorb_remainder() {
        assert_eq!(tile_span(0, 3, 10), (0, 3));
        assert_eq!(tile_span(1, 3, 10), (3, 6));
        assert_eq!(tile_span(2, 3, 10), (6, 10));
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = Image::filled(37, 23, 91).unwrap();
        for (g, t) in [(1, 0), (4, 5), (8, 50), (16, 10)] {
            let out = aiin_normalize(&img, WindowGrid::square(g).unwrap(), ContrastThreshold(t)).unwrap();
            assert_eq!((out.width(), out.height()), (37, 23));
            let first = out.data()[0];
            assert!(out.data().iter().all(|&p| p == first));
        }
    }

    #[test]
    fn global_equalization_of_two_level_image() {
        let img = Image::from_fn(8, 8, |x, _| if x < 4 { 0 } else { 255 }).unwrap();
        // clip limit 1000 * 64 / 256 = 250 >= area, so nothing is clipped
        let out = aiin_normalize(&img, WindowGrid::square(1).unwrap(), ContrastThreshold(1000)).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(out.get(x, y), if x < 4 { 128 } else { 255 });
            }
        }
    }

    #[test]
    fn threshold_zero_flattens_tiles() {
        // clip limit floors to 1: at most one count per bin survives clipping
        let img = Image::from_fn(16, 16, |x, y| ((x * 7 + y * 3) % 200) as u8).unwrap();
        let luts = tile_luts(&img, WindowGrid::square(2).unwrap(), ContrastThreshold(0)).unwrap();
        for lut in &luts {
            assert!(lut.is_monotone());
            assert_eq!(lut.map[255], 255);
        }
        let mut h = Histogram::default();
        for v in 0..64 {
            h.bins[v * 2] = 1;
        }
        h.bins[0] = 40;
        let clipped = clip_and_redistribute(&h, ContrastThreshold(0).clip_limit(103)).unwrap();
        assert_eq!(clipped.total(), 103);
        assert!(clipped.bins.iter().all(|&b| b <= 2));
    }

    #[test]
    fn grid_larger_than_image_is_rejected() {
        let img = Image::filled(4, 4, 0).unwrap();
        assert!(aiin_normalize(&img, WindowGrid::square(8).unwrap(), ContrastThreshold(10)).is_err());
    }

    #[test]
    fn single_tile_axis_weights_are_trivial() {
        assert!(axis_weights(5, 1).iter().all(|&(a, b, _)| a == 0 && b == 0));
        let w = axis_weights(8, 2);
        // centers at 2 and 6; pixel 3 sits at 3.5 → weight 0.375 toward tile 1
        assert_eq!(w[3], (0, 1, 0.375));
        assert_eq!(w[0], (0, 0, 0.0));
        assert_eq!(w[7], (1, 1, 0.0));
    }

    proptest! {
        #[test]
        fn redistribution_preserves_mass(
            bins in prop::collection::vec(0u32..5000, 256),
            clip in 1u32..3000,
        ) {
            let mut h = Histogram::default();
            h.bins.copy_from_slice(&bins);
            let out = clip_and_redistribute(&h, clip).unwrap();
            prop_assert_eq!(out.total(), h.total());
            let excess: u64 = bins.iter().map(|&b| b.saturating_sub(clip) as u64).sum();
            let bound = clip as u64 + excess / 256 + 1;
            prop_assert!(out.bins.iter().all(|&b| (b as u64) <= bound));
        }

        #[test]
        fn luts_are_monotone(
            data in prop::collection::vec(any::<u8>(), 24 * 20),
            g in 1usize..8,
            t in prop::sample::select(vec![0u32, 5, 10, 20, 50]),
        ) {
            let img = Image::new(24, 20, data).unwrap();
            let luts = tile_luts(&img, WindowGrid::square(g).unwrap(), ContrastThreshold(t)).unwrap();
            prop_assert!(luts.iter().all(Lut::is_monotone));
            let out = aiin_normalize(&img, WindowGrid::square(g).unwrap(), ContrastThreshold(t)).unwrap();
            prop_assert!(out.same_dims(&img));
        }
    }
}
