//! Colour rendering of masks and their runs.

use image::{Rgb, RgbImage};
use rlemask_core::mask::flatten_2d;
use rlemask_core::rle::extract_runs;
use rlemask_core::{FlattenOrder, LabelMask};

const PALETTE: [[u8; 3]; 10] = [
    [0, 0, 0],
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];

pub fn colour(label: u32) -> [u8; 3] {
    if label == 0 {
        return PALETTE[0];
    }
    PALETTE[1 + (label as usize - 1) % (PALETTE.len() - 1)]
}

fn shade([r, g, b]: [u8; 3]) -> [u8; 3] {
    [r / 2 + 20, g / 2 + 20, b / 2 + 20]
}

/// Renders `mask` at `scale` pixels per label. With `overlay`, runs along
/// `order` alternate between full and dimmed colour and each run's first
/// pixel is drawn white.
pub fn render(mask: &LabelMask, order: FlattenOrder, scale: u32, overlay: bool) -> RgbImage {
    let (h, w) = (mask.height(), mask.width());
    let mut px: Vec<[u8; 3]> = mask.labels().iter().map(|&l| colour(l)).collect();
    if overlay {
        let vector = flatten_2d(mask, order).expect("2D order");
        for (i, run) in extract_runs(&vector).runs.iter().enumerate() {
            for p in run.start..run.end() {
                let (y, x) = order.coords_2d(p, h, w);
                let c = colour(run.class);
                px[y * w + x] = if p == run.start {
                    [255, 255, 255]
                } else if i % 2 == 1 {
                    shade(c)
                } else {
                    c
                };
            }
        }
    }
    let scale = scale.max(1);
    RgbImage::from_fn(w as u32 * scale, h as u32 * scale, |x, y| {
        let (sy, sx) = ((y / scale) as usize, (x / scale) as usize);
        Rgb(px[sy * w + sx])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_marks_run_starts() {
        let m = LabelMask::from_rows(&[vec![0, 1, 1, 2]], 2).unwrap();
        let img = render(&m, FlattenOrder::RowMajor, 2, true);
        assert_eq!(img.dimensions(), (8, 2));
        assert_eq!(img.get_pixel(0, 0).0, colour(0));
        assert_eq!(img.get_pixel(2, 1).0, [255, 255, 255]);
        assert_eq!(img.get_pixel(4, 0).0, colour(1));
        assert_eq!(img.get_pixel(6, 0).0, [255, 255, 255]);
    }
}
