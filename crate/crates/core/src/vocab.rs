//! Token-id address space.
//!
//! A layout is a list of contiguous segments, one per token kind. Ids are
//! assigned in the order `[SPECIAL][START..][LENGTH/LAC..][CLASS/SEPARATOR..]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::{Scheme, SchemeConfig, StartMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Special,
    Start,
    StartRow,
    StartCol,
    Length,
    Class,
    Lac,
    Tac,
    Ltac,
    Separator,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SegmentKind::Special => "special",
            SegmentKind::Start => "start",
            SegmentKind::StartRow => "start-row",
            SegmentKind::StartCol => "start-col",
            SegmentKind::Length => "length",
            SegmentKind::Class => "class",
            SegmentKind::Lac => "lac",
            SegmentKind::Tac => "tac",
            SegmentKind::Ltac => "ltac",
            SegmentKind::Separator => "separator",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub offset: u32,
    pub size: u32,
}

impl Segment {
    pub fn contains(&self, id: u32) -> bool {
        id >= self.offset && id - self.offset < self.size
    }

    pub fn last(&self) -> u32 {
        self.offset + self.size - 1
    }

    /// Distance from `id` to the nearest id inside the segment.
    pub fn distance(&self, id: u32) -> u32 {
        if id < self.offset {
            self.offset - id
        } else {
            id.saturating_sub(self.last())
        }
    }

    /// Segment-relative value of the id nearest to `id`.
    pub fn nearest_value(&self, id: u32) -> u32 {
        id.clamp(self.offset, self.last()) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabLayout {
    segments: Vec<Segment>,
    total: u32,
}

impl VocabLayout {
    /// Lays segments out contiguously in the given order; empty segments are dropped.
    pub fn from_sizes(sizes: &[(SegmentKind, u64)]) -> Result<Self> {
        let mut segments = Vec::with_capacity(sizes.len());
        let mut offset: u64 = 0;
        for &(kind, size) in sizes {
            if size == 0 {
                continue;
            }
            if segments.iter().any(|s: &Segment| s.kind == kind) {
                return Err(Error::invalid(format!("duplicate {kind} segment")));
            }
            let end = offset
                .checked_add(size)
                .filter(|&e| e <= u64::from(u32::MAX))
                .ok_or_else(|| Error::capacity("vocabulary exceeds the 32-bit id space"))?;
            segments.push(Segment {
                kind,
                offset: offset as u32,
                size: size as u32,
            });
            offset = end;
        }
        Ok(VocabLayout {
            segments,
            total: offset as u32,
        })
    }

    /// Vocabulary size `V`.
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, kind: SegmentKind) -> Option<&Segment> {
        self.segments.iter().find(|s| s.kind == kind)
    }

    pub fn size_of(&self, kind: SegmentKind) -> u32 {
        self.segment(kind).map_or(0, |s| s.size)
    }

    pub fn id_of(&self, kind: SegmentKind, value: u32) -> Result<u32> {
        let seg = self
            .segment(kind)
            .ok_or_else(|| Error::invalid(format!("layout has no {kind} segment")))?;
        if value >= seg.size {
            return Err(Error::invalid(format!(
                "{kind} value {value} outside segment of size {}",
                seg.size
            )));
        }
        Ok(seg.offset + value)
    }

    pub fn kind_of(&self, id: u32) -> Option<(SegmentKind, u32)> {
        let idx = self.segments.partition_point(|s| s.offset + s.size <= id);
        self.segments
            .get(idx)
            .filter(|s| s.contains(id))
            .map(|s| (s.kind, id - s.offset))
    }

    /// Errors when `V` is not strictly below `limit`.
    pub fn check_limit(&self, limit: u64) -> Result<()> {
        if u64::from(self.total) >= limit {
            return Err(Error::capacity(format!(
                "vocabulary size {} is not below the limit {limit}",
                self.total
            )));
        }
        Ok(())
    }
}

/// Start segments for a start mode, in layout order.
pub(crate) fn start_sizes(mode: StartMode, height: usize, width: usize) -> Vec<(SegmentKind, u64)> {
    match mode {
        StartMode::Flat => vec![(SegmentKind::Start, (height * width) as u64)],
        StartMode::Coords => vec![
            (SegmentKind::StartRow, height as u64),
            (SegmentKind::StartCol, width as u64),
        ],
    }
}

pub(crate) fn start_kinds(mode: StartMode) -> Vec<SegmentKind> {
    match mode {
        StartMode::Flat => vec![SegmentKind::Start],
        StartMode::Coords => vec![SegmentKind::StartRow, SegmentKind::StartCol],
    }
}

/// Layout of a static scheme.
pub fn build_layout(cfg: &SchemeConfig) -> Result<VocabLayout> {
    cfg.validate()?;
    let max_len = cfg.max_len() as u64;
    let classes = u64::from(cfg.classes);
    let area = cfg.area() as u64;
    let mut sizes = vec![(SegmentKind::Special, u64::from(cfg.specials))];
    match cfg.scheme {
        Scheme::NaiveBin => {
            sizes.extend(start_sizes(cfg.start_mode, cfg.height, cfg.width));
            sizes.push((SegmentKind::Length, max_len));
        }
        Scheme::NaiveMc | Scheme::SplitStream => {
            sizes.extend(start_sizes(cfg.start_mode, cfg.height, cfg.width));
            sizes.push((SegmentKind::Length, max_len));
            sizes.push((SegmentKind::Class, classes));
        }
        Scheme::Lac => {
            sizes.extend(start_sizes(cfg.start_mode, cfg.height, cfg.width));
            sizes.push((SegmentKind::Lac, checked_mul(max_len, classes)?));
        }
        Scheme::Bac => {
            sizes.push((SegmentKind::Length, max_len));
            sizes.push((SegmentKind::Class, classes + 1));
        }
        Scheme::BacLac => sizes.push((SegmentKind::Lac, checked_mul(max_len, classes + 1)?)),
        Scheme::DiffBin => sizes.push((SegmentKind::Start, area)),
        Scheme::DiffMc => {
            sizes.push((SegmentKind::Start, area));
            sizes.push((SegmentKind::Class, classes + 1));
        }
    }
    VocabLayout::from_sizes(&sizes)
}

pub(crate) fn checked_mul(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b)
        .ok_or_else(|| Error::capacity(format!("{a} x {b} overflows")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vocab_sizes() {
        let lac = SchemeConfig::square(Scheme::Lac, 80, 2);
        assert_eq!(build_layout(&lac).unwrap().total(), 6560);
        let naive = SchemeConfig::square(Scheme::NaiveMc, 80, 2);
        assert_eq!(build_layout(&naive).unwrap().total(), 6482);
    }

    #[test]
    fn two_d_binary_segment_sum() {
        let cfg = SchemeConfig::square(Scheme::NaiveBin, 2, 1).with_start_mode(StartMode::Coords);
        let layout = build_layout(&cfg).unwrap();
        assert_eq!(layout.total(), 6);
        let kinds: Vec<_> = layout.segments().iter().map(|s| (s.kind, s.size)).collect();
        assert_eq!(
            kinds,
            vec![
                (SegmentKind::StartRow, 2),
                (SegmentKind::StartCol, 2),
                (SegmentKind::Length, 2)
            ]
        );
    }

    #[test]
    fn id_and_kind_are_inverse() {
        for scheme in Scheme::ALL {
            let classes = if scheme.is_binary() { 1 } else { 3 };
            let cfg = SchemeConfig::square(scheme, 5, classes).with_specials(2);
            let layout = build_layout(&cfg).unwrap();
            let sum: u32 = layout.segments().iter().map(|s| s.size).sum();
            assert_eq!(sum, layout.total());
            for id in 0..layout.total() {
                let (kind, value) = layout.kind_of(id).unwrap();
                assert_eq!(layout.id_of(kind, value).unwrap(), id);
            }
            assert!(layout.kind_of(layout.total()).is_none());
        }
    }

    #[test]
    fn nearest_value_clamps() {
        let seg = Segment {
            kind: SegmentKind::Length,
            offset: 10,
            size: 5,
        };
        assert_eq!(seg.nearest_value(3), 0);
        assert_eq!(seg.nearest_value(12), 2);
        assert_eq!(seg.nearest_value(99), 4);
        assert_eq!(seg.distance(3), 7);
        assert_eq!(seg.distance(16), 2);
        assert_eq!(seg.distance(14), 0);
    }

    #[test]
    fn limit_is_strict() {
        let layout = VocabLayout::from_sizes(&[(SegmentKind::Start, 32000)]).unwrap();
        assert!(layout.check_limit(32000).is_err());
        assert!(layout.check_limit(32001).is_ok());
    }
}
