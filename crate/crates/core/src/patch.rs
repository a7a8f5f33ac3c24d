//! Sliding-window patch extraction, geometric augmentation and recomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::LabelMask;

/// Window origins covering a `height x width` source with `patch`-sized squares.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub height: usize,
    pub width: usize,
    pub patch: usize,
    pub stride: usize,
    /// `(top, left)` origins, row by row.
    pub origins: Vec<(usize, usize)>,
}

fn axis_origins(extent: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..)
        .map(|i| i * stride)
        .take_while(|&o| o + patch <= extent)
        .collect();
    // clamp a final window to the edge when the stride does not land on it
    if out.last().is_some_and(|&o| o + patch < extent) {
        out.push(extent - patch);
    }
    out
}

pub fn patchify(height: usize, width: usize, patch: usize, stride: usize) -> Result<PatchGrid> {
    if patch == 0 || stride == 0 || stride > patch {
        return Err(Error::invalid(format!(
            "need 1 <= stride <= patch, got stride {stride}, patch {patch}"
        )));
    }
    if patch > height.min(width) {
        return Err(Error::invalid(format!(
            "patch {patch} does not fit a {height}x{width} source"
        )));
    }
    let rows = axis_origins(height, patch, stride);
    let cols = axis_origins(width, patch, stride);
    let origins = rows
        .iter()
        .flat_map(|&t| cols.iter().map(move |&l| (t, l)))
        .collect();
    Ok(PatchGrid {
        height,
        width,
        patch,
        stride,
        origins,
    })
}

pub fn extract_patch(mask: &LabelMask, top: usize, left: usize, size: usize) -> Result<LabelMask> {
    if top + size > mask.height() || left + size > mask.width() {
        return Err(Error::invalid(format!(
            "window at ({top}, {left}) leaves the mask"
        )));
    }
    let labels = (top..top + size)
        .flat_map(|y| (left..left + size).map(move |x| (y, x)))
        .map(|(y, x)| mask.get(y, x))
        .collect();
    LabelMask::new(size, size, mask.classes(), labels)
}

pub fn extract_patches(mask: &LabelMask, grid: &PatchGrid) -> Result<Vec<(LabelMask, (usize, usize))>> {
    grid.origins
        .iter()
        .map(|&(t, l)| extract_patch(mask, t, l, grid.patch).map(|p| (p, (t, l))))
        .collect()
}

/// A label-preserving pixel permutation.
///
/// `Rot90(k)` turns the grid `k` quarter turns counter-clockwise in a y-up
/// frame; with row 0 drawn at the top this is clockwise, so
/// `[[1,0],[0,2]]` becomes `[[0,1],[2,0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Rot90(u8),
    FlipH,
    FlipV,
}

impl Transform {
    pub fn inverse(self) -> Transform {
        match self {
            Transform::Rot90(k) => Transform::Rot90((4 - k % 4) % 4),
            t => t,
        }
    }
}

/// Maps an output pixel to the source pixel it copies.
type SourceOf = Box<dyn Fn(usize, usize) -> (usize, usize)>;

fn apply_one(mask: &LabelMask, t: Transform) -> Result<LabelMask> {
    let (h, w) = (mask.height(), mask.width());
    let (oh, ow, src): (usize, usize, SourceOf) = match t {
        Transform::FlipH => (h, w, Box::new(move |y, x| (y, w - 1 - x))),
        Transform::FlipV => (h, w, Box::new(move |y, x| (h - 1 - y, x))),
        Transform::Rot90(k) => {
            if h != w && k % 4 != 0 {
                return Err(Error::invalid("rot90 needs a square patch"));
            }
            let n = h;
            match k % 4 {
                0 => (h, w, Box::new(|y, x| (y, x))),
                1 => (n, n, Box::new(move |y, x| (n - 1 - x, y))),
                2 => (n, n, Box::new(move |y, x| (n - 1 - y, n - 1 - x))),
                _ => (n, n, Box::new(move |y, x| (x, n - 1 - y))),
            }
        }
    };
    let mut labels = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        for x in 0..ow {
            let (sy, sx) = src(y, x);
            labels.push(mask.get(sy, sx));
        }
    }
    LabelMask::new(oh, ow, mask.classes(), labels)
}

/// Applies `transforms` left to right.
pub fn augment_patch(mask: &LabelMask, transforms: &[Transform]) -> Result<LabelMask> {
    transforms.iter().try_fold(mask.clone(), |m, &t| apply_one(&m, t))
}

/// Undoes [`augment_patch`] with the same transform list.
pub fn unaugment_patch(mask: &LabelMask, transforms: &[Transform]) -> Result<LabelMask> {
    transforms
        .iter()
        .rev()
        .try_fold(mask.clone(), |m, &t| apply_one(&m, t.inverse()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combiner {
    /// Modal label; ties go to the latest patch holding a tied label.
    Vote,
    /// Latest patch wins.
    Last,
    /// Foreground if any patch says so, class from the latest foreground patch.
    Or,
    /// Foreground only if every patch says so, class from the latest one.
    And,
    Min,
    Max,
}

impl Combiner {
    pub const ALL: [Combiner; 6] = [
        Combiner::Vote,
        Combiner::Last,
        Combiner::Or,
        Combiner::And,
        Combiner::Min,
        Combiner::Max,
    ];

    /// Combines the labels a pixel received, in patch order.
    pub fn combine(self, seen: &[u32]) -> u32 {
        let Some(&last) = seen.last() else { return 0 };
        match self {
            Combiner::Last => last,
            Combiner::Min => *seen.iter().min().expect("non-empty"),
            Combiner::Max => *seen.iter().max().expect("non-empty"),
            Combiner::Or => seen.iter().rev().copied().find(|&l| l != 0).unwrap_or(0),
            Combiner::And => {
                if seen.iter().all(|&l| l != 0) {
                    last
                } else {
                    0
                }
            }
            Combiner::Vote => {
                let count = |l: u32| seen.iter().filter(|&&s| s == l).count();
                let best = seen.iter().map(|&l| count(l)).max().expect("non-empty");
                seen.iter()
                    .rev()
                    .copied()
                    .find(|&l| count(l) == best)
                    .expect("some label reaches the maximum")
            }
        }
    }
}

impl std::str::FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vote" => Ok(Combiner::Vote),
            "last" => Ok(Combiner::Last),
            "or" => Ok(Combiner::Or),
            "and" => Ok(Combiner::And),
            "min" => Ok(Combiner::Min),
            "max" => Ok(Combiner::Max),
            _ => Err(Error::invalid(format!("unknown combiner {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recomposed {
    pub mask: LabelMask,
    /// Pixels no patch covered; they are left as background.
    pub uncovered: usize,
}

/// Stitches patches back into a `height x width` mask. Patch order defines "latest".
pub fn recompose(
    patches: &[(LabelMask, (usize, usize))],
    height: usize,
    width: usize,
    combiner: Combiner,
) -> Result<Recomposed> {
    let classes = patches.iter().map(|(p, _)| p.classes()).max().unwrap_or(1);
    let mut seen: Vec<Vec<u32>> = vec![Vec::new(); height * width];
    for (patch, (top, left)) in patches {
        if top + patch.height() > height || left + patch.width() > width {
            return Err(Error::invalid(format!(
                "patch at ({top}, {left}) extends past {height}x{width}"
            )));
        }
        for y in 0..patch.height() {
            for x in 0..patch.width() {
                seen[(top + y) * width + left + x].push(patch.get(y, x));
            }
        }
    }
    let uncovered = seen.iter().filter(|s| s.is_empty()).count();
    let labels = seen.iter().map(|s| combiner.combine(s)).collect();
    Ok(Recomposed {
        mask: LabelMask::new(height, width, classes, labels)?,
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tiling() {
        let g = patchify(8, 8, 4, 4).unwrap();
        assert_eq!(g.origins, vec![(0, 0), (0, 4), (4, 0), (4, 4)]);
    }

    #[test]
    fn clamped_last_window() {
        let g = patchify(10, 10, 4, 4).unwrap();
        assert_eq!(g.origins.len(), 9);
        let rows: Vec<usize> = g.origins.iter().map(|o| o.0).collect();
        assert_eq!(&rows[..], &[0, 0, 0, 4, 4, 4, 6, 6, 6]);
    }

    #[test]
    fn overlapping_grid_covers_everything() {
        for (h, w, p, s) in [(8, 8, 4, 2), (13, 9, 5, 3), (7, 7, 7, 1), (20, 11, 6, 5)] {
            let g = patchify(h, w, p, s).unwrap();
            let mut covered = vec![false; h * w];
            for &(t, l) in &g.origins {
                assert!(t + p <= h && l + p <= w);
                for y in t..t + p {
                    for x in l..l + p {
                        covered[y * w + x] = true;
                    }
                }
            }
            assert!(covered.iter().all(|&c| c), "{h}x{w} p={p} s={s}");
        }
    }

    #[test]
    fn patchify_rejects_bad_sizes() {
        assert!(patchify(4, 8, 5, 1).is_err());
        assert!(patchify(8, 8, 4, 5).is_err());
        assert!(patchify(8, 8, 4, 0).is_err());
    }

    #[test]
    fn rotation_convention() {
        let m = LabelMask::from_rows(&[vec![1, 0], vec![0, 2]], 2).unwrap();
        let r = augment_patch(&m, &[Transform::Rot90(1)]).unwrap();
        assert_eq!(r, LabelMask::from_rows(&[vec![0, 1], vec![2, 0]], 2).unwrap());
        assert_eq!(augment_patch(&m, &[Transform::Rot90(1); 4]).unwrap(), m);
        assert_eq!(
            augment_patch(&m, &[Transform::FlipH, Transform::FlipH]).unwrap(),
            m
        );
        let wide = LabelMask::zeros(2, 3, 1).unwrap();
        assert!(augment_patch(&wide, &[Transform::Rot90(1)]).is_err());
        assert!(augment_patch(&wide, &[Transform::FlipV]).is_ok());
    }

    #[test]
    fn vote_and_ties() {
        assert_eq!(Combiner::Vote.combine(&[1, 1, 2]), 1);
        assert_eq!(Combiner::Vote.combine(&[1, 2]), 2);
        assert_eq!(Combiner::Vote.combine(&[2, 1]), 1);
        assert_eq!(Combiner::Or.combine(&[2, 0]), 2);
        assert_eq!(Combiner::And.combine(&[2, 0]), 0);
        assert_eq!(Combiner::And.combine(&[2, 1]), 1);
        assert_eq!(Combiner::Min.combine(&[2, 1, 3]), 1);
        assert_eq!(Combiner::Max.combine(&[2, 1, 3]), 3);
        assert_eq!(Combiner::Vote.combine(&[]), 0);
    }

    #[test]
    fn recompose_reports_uncovered_and_bounds() {
        let p = LabelMask::new(2, 2, 1, vec![1; 4]).unwrap();
        let r = recompose(&[(p.clone(), (0, 0))], 3, 3, Combiner::Last).unwrap();
        assert_eq!(r.uncovered, 5);
        assert!(recompose(&[(p, (2, 2))], 3, 3, Combiner::Last).is_err());
    }
}
