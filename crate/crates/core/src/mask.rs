//! Label grids and the orders used to flatten them into vectors.
//!
//! All indexing is 0-based. Label 0 is background; foreground classes are
//! `1..=classes`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 2D grid of per-pixel class labels, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMask {
    height: usize,
    width: usize,
    classes: u32,
    labels: Vec<u32>,
}

impl LabelMask {
    pub fn new(height: usize, width: usize, classes: u32, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("mask dimensions must be at least 1x1"));
        }
        if classes == 0 {
            return Err(Error::invalid("class count must be at least 1"));
        }
        if labels.len() != height * width {
            return Err(Error::invalid(format!(
                "expected {} labels for a {height}x{width} mask, got {}",
                height * width,
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l > classes) {
            return Err(Error::LabelRange { label, classes });
        }
        Ok(LabelMask {
            height,
            width,
            classes,
            labels,
        })
    }

    pub fn zeros(height: usize, width: usize, classes: u32) -> Result<Self> {
        Self::new(height, width, classes, vec![0; height * width])
    }

    /// Builds a mask from nested rows.
    pub fn from_rows(rows: &[Vec<u32>], classes: u32) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(height, width, classes, rows.concat())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    /// Row-major label storage.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, label: u32) -> Result<()> {
        if label > self.classes {
            return Err(Error::LabelRange {
                label,
                classes: self.classes,
            });
        }
        self.labels[y * self.width + x] = label;
        Ok(())
    }

    pub fn with_classes(&self, classes: u32) -> Result<Self> {
        Self::new(self.height, self.width, classes, self.labels.clone())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.labels.chunks(self.width)
    }
}

/// Per-pixel instance ids plus the class of every instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMask {
    height: usize,
    width: usize,
    classes: u32,
    ids: Vec<u32>,
    class_of: BTreeMap<u32, u32>,
}

impl InstanceMask {
    pub fn new(
        height: usize,
        width: usize,
        classes: u32,
        ids: Vec<u32>,
        class_of: BTreeMap<u32, u32>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || ids.len() != height * width {
            return Err(Error::invalid("instance mask dimensions do not match id count"));
        }
        if classes == 0 {
            return Err(Error::invalid("class count must be at least 1"));
        }
        if class_of.contains_key(&0) {
            return Err(Error::invalid("instance id 0 is reserved for background"));
        }
        for (&inst, &class) in &class_of {
            if class == 0 || class > classes {
                return Err(Error::invalid(format!(
                    "instance {inst} has class {class}, outside 1..={classes}"
                )));
            }
        }
        if let Some(&id) = ids.iter().find(|&&id| id != 0 && !class_of.contains_key(&id)) {
            return Err(Error::invalid(format!("instance {id} has no class mapping")));
        }
        Ok(InstanceMask {
            height,
            width,
            classes,
            ids,
            class_of,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn class_of(&self) -> &BTreeMap<u32, u32> {
        &self.class_of
    }

    /// Instance ids that actually occur in the grid, ascending.
    pub fn present_instances(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = self.ids.iter().copied().filter(|&i| i != 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    pub fn to_label_mask(&self) -> LabelMask {
        let labels = self
            .ids
            .iter()
            .map(|id| if *id == 0 { 0 } else { self.class_of[id] })
            .collect();
        LabelMask::new(self.height, self.width, self.classes, labels).expect("validated at construction")
    }
}

/// Ordered frames sharing dimensions and class count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoMask {
    frames: Vec<LabelMask>,
}

impl VideoMask {
    pub fn new(frames: Vec<LabelMask>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("video needs at least one frame"))?;
        let (h, w, c) = (first.height, first.width, first.classes);
        if frames
            .iter()
            .any(|f| f.height != h || f.width != w || f.classes != c)
        {
            return Err(Error::invalid("video frames differ in size or class count"));
        }
        Ok(VideoMask { frames })
    }

    pub fn frames(&self) -> &[LabelMask] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<LabelMask> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.iter().all(LabelMask::is_empty)
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn classes(&self) -> u32 {
        self.frames[0].classes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlattenOrder {
    RowMajor,
    ColumnMajor,
    /// Frames concatenated, each frame row-major.
    Video3dC,
    /// Time varies fastest, then y, then x.
    Video3dF,
}

impl FlattenOrder {
    pub fn is_video(self) -> bool {
        matches!(self, FlattenOrder::Video3dC | FlattenOrder::Video3dF)
    }

    /// Extent of the fastest-varying spatial axis for a `height x width` grid.
    pub fn fastest_extent(self, height: usize, width: usize) -> usize {
        match self {
            FlattenOrder::ColumnMajor => height,
            _ => width,
        }
    }

    /// Flattened index of pixel `(y, x)` in a 2D order.
    pub fn index_2d(self, y: usize, x: usize, height: usize, width: usize) -> usize {
        match self {
            FlattenOrder::ColumnMajor => x * height + y,
            _ => y * width + x,
        }
    }

    /// Inverse of [`index_2d`](Self::index_2d): `(y, x)` for a flat index.
    pub fn coords_2d(self, index: usize, height: usize, width: usize) -> (usize, usize) {
        match self {
            FlattenOrder::ColumnMajor => (index % height, index / height),
            _ => (index / width, index % width),
        }
    }
}

pub fn flatten_2d(mask: &LabelMask, order: FlattenOrder) -> Result<Vec<u32>> {
    match order {
        FlattenOrder::RowMajor => Ok(mask.labels.clone()),
        FlattenOrder::ColumnMajor => {
            let (h, w) = (mask.height, mask.width);
            let mut out = Vec::with_capacity(h * w);
            for x in 0..w {
                for y in 0..h {
                    out.push(mask.labels[y * w + x]);
                }
            }
            Ok(out)
        }
        _ => Err(Error::invalid(format!("{order:?} is a video order"))),
    }
}

pub fn unflatten_2d(
    vector: &[u32],
    height: usize,
    width: usize,
    classes: u32,
    order: FlattenOrder,
) -> Result<LabelMask> {
    if order.is_video() {
        return Err(Error::invalid(format!("{order:?} is a video order")));
    }
    if vector.len() != height * width {
        return Err(Error::invalid("vector length does not match mask size"));
    }
    let labels = match order {
        FlattenOrder::ColumnMajor => {
            let mut labels = vec![0; height * width];
            for (i, &v) in vector.iter().enumerate() {
                let (y, x) = (i % height, i / height);
                labels[y * width + x] = v;
            }
            labels
        }
        _ => vector.to_vec(),
    };
    LabelMask::new(height, width, classes, labels)
}

pub fn flatten_3d(video: &VideoMask, order: FlattenOrder) -> Result<Vec<u32>> {
    let (n, h, w) = (video.len(), video.height(), video.width());
    match order {
        FlattenOrder::Video3dC => Ok(video
            .frames
            .iter()
            .flat_map(|f| f.labels.iter().copied())
            .collect()),
        FlattenOrder::Video3dF => {
            let mut out = vec![0; n * h * w];
            for (t, frame) in video.frames.iter().enumerate() {
                for y in 0..h {
                    for x in 0..w {
                        out[t + n * y + n * h * x] = frame.labels[y * w + x];
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::invalid(format!("{order:?} is not a video order"))),
    }
}

pub fn unflatten_3d(
    vector: &[u32],
    frames: usize,
    height: usize,
    width: usize,
    classes: u32,
    order: FlattenOrder,
) -> Result<VideoMask> {
    let area = height * width;
    if frames == 0 || vector.len() != frames * area {
        return Err(Error::invalid("vector length does not match video size"));
    }
    let mut out = vec![vec![0u32; area]; frames];
    match order {
        FlattenOrder::Video3dC => {
            for (t, chunk) in vector.chunks(area).enumerate() {
                out[t].copy_from_slice(chunk);
            }
        }
        FlattenOrder::Video3dF => {
            for (i, &v) in vector.iter().enumerate() {
                let t = i % frames;
                let y = (i / frames) % height;
                let x = i / (frames * height);
                out[t][y * width + x] = v;
            }
        }
        _ => return Err(Error::invalid(format!("{order:?} is not a video order"))),
    }
    let frames = out
        .into_iter()
        .map(|labels| LabelMask::new(height, width, classes, labels))
        .collect::<Result<Vec<_>>>()?;
    VideoMask::new(frames)
}

/// Block-majority pooling to `out_height x out_width`.
///
/// A block is foreground unless background pixels strictly outnumber the
/// foreground ones; a foreground block takes its most frequent class, ties
/// going to the smallest id.
pub fn subsample_to(mask: &LabelMask, out_height: usize, out_width: usize) -> Result<LabelMask> {
    if out_height == 0
        || out_width == 0
        || !mask.height.is_multiple_of(out_height)
        || !mask.width.is_multiple_of(out_width)
    {
        return Err(Error::invalid(format!(
            "{}x{} cannot be pooled to {out_height}x{out_width} by an integer factor",
            mask.height, mask.width
        )));
    }
    let fy = mask.height / out_height;
    let fx = mask.width / out_width;
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut labels = Vec::with_capacity(out_height * out_width);
    for oy in 0..out_height {
        for ox in 0..out_width {
            counts.clear();
            for y in oy * fy..(oy + 1) * fy {
                for x in ox * fx..(ox + 1) * fx {
                    *counts.entry(mask.get(y, x)).or_default() += 1;
                }
            }
            labels.push(block_majority(&counts));
        }
    }
    LabelMask::new(out_height, out_width, mask.classes, labels)
}

/// Pools to a square `side x side` mask.
pub fn subsample(mask: &LabelMask, side: usize) -> Result<LabelMask> {
    subsample_to(mask, side, side)
}

fn block_majority(counts: &BTreeMap<u32, usize>) -> u32 {
    let background = counts.get(&0).copied().unwrap_or(0);
    let foreground: usize = counts.iter().filter(|(&l, _)| l != 0).map(|(_, &c)| c).sum();
    if foreground == 0 || background > foreground {
        return 0;
    }
    // BTreeMap iterates ascending; max_by_key keeps the last maximum, so reverse.
    counts
        .iter()
        .rev()
        .filter(|(&l, _)| l != 0)
        .max_by_key(|(_, &c)| c)
        .map(|(&l, _)| l)
        .unwrap_or(0)
}

/// Nearest-neighbour replication by integer factors.
pub fn upsample(mask: &LabelMask, factor_y: usize, factor_x: usize) -> Result<LabelMask> {
    if factor_y == 0 || factor_x == 0 {
        return Err(Error::invalid("upsampling factor must be at least 1"));
    }
    let (h, w) = (mask.height * factor_y, mask.width * factor_x);
    let mut labels = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            labels.push(mask.get(y / factor_y, x / factor_x));
        }
    }
    LabelMask::new(h, w, mask.classes, labels)
}

/// Number of composite classes for `frames` frames of `classes` classes,
/// i.e. `(classes + 1)^frames - 1`, or `None` on overflow.
pub fn tac_class_count(classes: u32, frames: usize) -> Option<u64> {
    let base = u64::from(classes) + 1;
    let frames = u32::try_from(frames).ok()?;
    base.checked_pow(frames).map(|v| v - 1)
}

/// Collapses a video into a single mask of composite labels.
///
/// The composite label is `sum_t c_t * (C+1)^t` with frame 0 as the least
/// significant digit, so composite 0 means background in every frame.
pub fn collapse_tac(video: &VideoMask) -> Result<LabelMask> {
    let count = tac_class_count(video.classes(), video.len())
        .filter(|&c| c <= u64::from(u32::MAX))
        .ok_or_else(|| {
            Error::capacity(format!(
                "{} frames of {} classes overflow composite labels",
                video.len(),
                video.classes()
            ))
        })?;
    let base = video.classes() + 1;
    let area = video.height() * video.width();
    let mut labels = vec![0u32; area];
    for frame in video.frames.iter().rev() {
        for (acc, &l) in labels.iter_mut().zip(&frame.labels) {
            *acc = *acc * base + l;
        }
    }
    LabelMask::new(video.height(), video.width(), count as u32, labels)
}

/// Splits composite labels back into `frames` per-frame masks.
pub fn expand_tac(composite: &LabelMask, classes: u32, frames: usize) -> Result<VideoMask> {
    let count =
        tac_class_count(classes, frames).ok_or_else(|| Error::capacity("composite label space overflows"))?;
    if u64::from(composite.classes) > count {
        return Err(Error::invalid("composite class count exceeds the label space"));
    }
    let base = classes + 1;
    let mut out = vec![Vec::with_capacity(composite.len()); frames];
    for &label in &composite.labels {
        let mut rest = label;
        for frame in out.iter_mut() {
            frame.push(rest % base);
            rest /= base;
        }
    }
    let frames = out
        .into_iter()
        .map(|labels| LabelMask::new(composite.height, composite.width, classes, labels))
        .collect::<Result<Vec<_>>>()?;
    VideoMask::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&[u32]], classes: u32) -> LabelMask {
        LabelMask::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), classes).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions_and_labels() {
        assert!(LabelMask::new(0, 3, 1, vec![]).is_err());
        assert!(LabelMask::new(1, 1, 0, vec![0]).is_err());
        assert!(matches!(
            LabelMask::new(1, 2, 2, vec![0, 3]),
            Err(Error::LabelRange { label: 3, classes: 2 })
        ));
    }

    #[test]
    fn row_major_flatten() {
        let m = mask(&[&[0, 1, 1, 0, 1], &[1, 0, 0, 1, 1]], 1);
        assert_eq!(
            flatten_2d(&m, FlattenOrder::RowMajor).unwrap(),
            vec![0, 1, 1, 0, 1, 1, 0, 0, 1, 1]
        );
        // index formula oracle for column-major
        let col = flatten_2d(&m, FlattenOrder::ColumnMajor).unwrap();
        for y in 0..2 {
            for x in 0..5 {
                assert_eq!(col[x * 2 + y], m.get(y, x));
            }
        }
    }

    #[test]
    fn trivial_flattens() {
        let z = LabelMask::zeros(3, 3, 1).unwrap();
        assert_eq!(flatten_2d(&z, FlattenOrder::ColumnMajor).unwrap(), vec![0; 9]);
        let one = mask(&[&[7]], 7);
        assert_eq!(flatten_2d(&one, FlattenOrder::RowMajor).unwrap(), vec![7]);
        assert!(flatten_2d(&one, FlattenOrder::Video3dC).is_err());
    }

    #[test]
    fn video_flatten_orders() {
        let v = VideoMask::new(vec![mask(&[&[1, 0]], 1), mask(&[&[1, 1]], 1)]).unwrap();
        assert_eq!(flatten_3d(&v, FlattenOrder::Video3dC).unwrap(), vec![1, 0, 1, 1]);
        assert_eq!(flatten_3d(&v, FlattenOrder::Video3dF).unwrap(), vec![1, 1, 0, 1]);
        assert!(flatten_3d(&v, FlattenOrder::RowMajor).is_err());
        let zeros = VideoMask::new(vec![LabelMask::zeros(2, 2, 1).unwrap(); 2]).unwrap();
        assert_eq!(flatten_3d(&zeros, FlattenOrder::Video3dF).unwrap(), vec![0; 8]);
    }

    #[test]
    fn subsample_majority_and_ties() {
        let ones = LabelMask::new(4, 4, 1, vec![1; 16]).unwrap();
        assert_eq!(
            subsample(&ones, 2).unwrap(),
            LabelMask::new(2, 2, 1, vec![1; 4]).unwrap()
        );
        let m = mask(&[&[1, 1], &[0, 2]], 2);
        assert_eq!(subsample(&m, 1).unwrap().labels(), &[1]);
        let tie = mask(&[&[0, 0], &[1, 2]], 2);
        assert_eq!(subsample(&tie, 1).unwrap().labels(), &[1]);
        assert!(subsample(&m, 3).is_err());
        assert_eq!(subsample(&m, 2).unwrap(), m);
    }

    #[test]
    fn tac_digits() {
        let v = VideoMask::new(vec![mask(&[&[1, 1, 0]], 1), mask(&[&[0, 1, 0]], 1)]).unwrap();
        let c = collapse_tac(&v).unwrap();
        assert_eq!(c.labels(), &[1, 3, 0]);
        assert_eq!(c.classes(), 3);
        assert_eq!(expand_tac(&c, 1, 2).unwrap(), v);
    }

    #[test]
    fn tac_overflow_is_capacity_error() {
        let frames = vec![LabelMask::zeros(1, 1, 5).unwrap(); 20];
        let v = VideoMask::new(frames).unwrap();
        assert!(matches!(collapse_tac(&v), Err(Error::Capacity(_))));
    }

    #[test]
    fn instance_mask_validation() {
        let map = BTreeMap::from([(1, 2)]);
        assert!(InstanceMask::new(1, 2, 2, vec![1, 2], map.clone()).is_err());
        let im = InstanceMask::new(1, 2, 2, vec![1, 0], map).unwrap();
        assert_eq!(im.to_label_mask().labels(), &[2, 0]);
    }
}
