//! Vocabulary-size accounting and the largest frame count a budget allows.
//!
//! This is plain arithmetic over the segment rules, kept separate from the
//! layout builders so the two can be checked against each other. Mask side
//! `S` doubles as the maximum run length.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::{Scheme, StartMode, VideoScheme};
use crate::vocab::SegmentKind;

/// Vocabulary limit used throughout the feasibility tables.
pub const DEFAULT_VOCAB_LIMIT: u64 = 32_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanScheme {
    Static(Scheme),
    Video(VideoScheme),
}

impl fmt::Display for PlanScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanScheme::Static(s) => s.fmt(f),
            PlanScheme::Video(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlanParams {
    pub side: u64,
    pub classes: u64,
    pub frames: u64,
    pub start_mode: StartMode,
    pub specials: u64,
}

impl PlanParams {
    pub fn new(side: u64, classes: u64) -> Self {
        PlanParams {
            side,
            classes,
            frames: 1,
            start_mode: StartMode::Flat,
            specials: 0,
        }
    }

    pub fn frames(mut self, frames: u64) -> Self {
        self.frames = frames;
        self
    }

    pub fn start_mode(mut self, mode: StartMode) -> Self {
        self.start_mode = mode;
        self
    }

    pub fn specials(mut self, specials: u64) -> Self {
        self.specials = specials;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    pub segments: Vec<(SegmentKind, u64)>,
    pub total: u64,
}

impl Breakdown {
    pub fn size_of(&self, kind: SegmentKind) -> u64 {
        self.segments
            .iter()
            .filter(|(k, _)| *k == kind)
            .map(|(_, s)| s)
            .sum()
    }
}

fn overflow() -> Error {
    Error::capacity("vocabulary size overflows 64 bits")
}

fn mul(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b).ok_or_else(overflow)
}

fn composite(classes: u64, frames: u64) -> Result<u64> {
    let exp = u32::try_from(frames).map_err(|_| overflow())?;
    (classes + 1).checked_pow(exp).map(|v| v - 1).ok_or_else(overflow)
}

pub fn vocab_breakdown(scheme: PlanScheme, p: &PlanParams) -> Result<Breakdown> {
    use SegmentKind::*;
    if p.side == 0 || p.classes == 0 || p.frames == 0 {
        return Err(Error::invalid("side, classes and frames must be positive"));
    }
    let s = p.side;
    let c = p.classes;
    let starts = || -> Result<Vec<(SegmentKind, u64)>> {
        Ok(match p.start_mode {
            StartMode::Flat => vec![(Start, mul(s, s)?)],
            StartMode::Coords => vec![(StartRow, s), (StartCol, s)],
        })
    };
    let mut segs = vec![(Special, p.specials)];
    match scheme {
        PlanScheme::Static(scheme) => match scheme {
            Scheme::NaiveBin | Scheme::DiffBin if c != 1 => {
                return Err(Error::invalid(format!("{scheme} is binary")))
            }
            Scheme::NaiveBin => {
                segs.extend(starts()?);
                segs.push((Length, s));
            }
            Scheme::NaiveMc | Scheme::SplitStream => {
                segs.extend(starts()?);
                segs.extend([(Length, s), (Class, c)]);
            }
            Scheme::Lac => {
                segs.extend(starts()?);
                segs.push((Lac, mul(s, c)?));
            }
            Scheme::Bac => segs.extend([(Length, s), (Class, c + 1)]),
            Scheme::BacLac => segs.push((Lac, mul(s, c + 1)?)),
            Scheme::DiffBin => segs.push((Start, mul(s, s)?)),
            Scheme::DiffMc => segs.extend([(Start, mul(s, s)?), (Class, c + 1)]),
        },
        PlanScheme::Video(video) => match video {
            VideoScheme::Flat3dC | VideoScheme::Flat3dF => {
                if p.start_mode == StartMode::Coords {
                    return Err(Error::invalid("flattened video uses 1D starts"));
                }
                segs.push((Start, mul(p.frames, mul(s, s)?)?));
                segs.push((Length, s));
                if c > 1 {
                    segs.push((Class, c));
                }
            }
            VideoScheme::Tac => {
                segs.extend(starts()?);
                segs.extend([(Length, s), (Tac, composite(c, p.frames)?)]);
            }
            VideoScheme::Ltac => {
                segs.extend(starts()?);
                segs.push((Ltac, mul(s, composite(c, p.frames)?)?));
            }
        },
    }
    segs.retain(|(_, size)| *size > 0);
    let total = segs
        .iter()
        .try_fold(0u64, |acc, (_, size)| acc.checked_add(*size))
        .ok_or_else(overflow)?;
    Ok(Breakdown {
        segments: segs,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibleFrames {
    /// Largest `N` with `V < limit`, or 0 when even one frame does not fit.
    pub frames: u64,
    pub diagnostic: Option<String>,
}

/// Frame counts beyond this are never searched.
pub const MAX_SEARCHED_FRAMES: u64 = 64;

pub fn max_feasible_frames(scheme: VideoScheme, p: &PlanParams, limit: u64) -> FeasibleFrames {
    let mut best = 0;
    for n in 1..=MAX_SEARCHED_FRAMES {
        match vocab_breakdown(PlanScheme::Video(scheme), &p.frames(n)) {
            Ok(b) if b.total < limit => best = n,
            _ => break,
        }
    }
    let diagnostic = match best {
        0 => Some(format!("V >= {limit} already at N = 1")),
        MAX_SEARCHED_FRAMES => Some(format!("search stopped at N = {MAX_SEARCHED_FRAMES}")),
        _ => None,
    };
    FeasibleFrames {
        frames: best,
        diagnostic,
    }
}

/// Frame limits stated alongside the original tables for `V < 32K`.
pub fn stated_frame_limit(scheme: VideoScheme, side: u64, classes: u64) -> Option<u64> {
    let multi = classes > 1;
    match (scheme, side, multi) {
        (VideoScheme::Tac, 80, false) => Some(14),
        (VideoScheme::Tac, 80, true) => Some(9),
        (VideoScheme::Tac, 160, false) => Some(12),
        (VideoScheme::Tac, 160, true) => Some(6),
        (VideoScheme::Ltac, 80, false) => Some(8),
        (VideoScheme::Ltac, 80, true) => Some(5),
        (VideoScheme::Flat3dC | VideoScheme::Flat3dF, 80, _) => Some(5),
        (VideoScheme::Flat3dC | VideoScheme::Flat3dF, 160, _) => Some(1),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub scheme: VideoScheme,
    pub side: u64,
    pub classes: u64,
    pub limit: u64,
    pub specials: u64,
    pub formula_frames: u64,
    pub stated_frames: Option<u64>,
    /// Formula and stated limits disagree.
    pub discrepancy: bool,
    pub diagnostic: Option<String>,
}

pub fn feasibility_report(scheme: VideoScheme, p: &PlanParams, limit: u64) -> FeasibilityReport {
    let found = max_feasible_frames(scheme, p, limit);
    let stated = if limit == DEFAULT_VOCAB_LIMIT && p.start_mode == StartMode::Flat {
        stated_frame_limit(scheme, p.side, p.classes)
    } else {
        None
    };
    FeasibilityReport {
        scheme,
        side: p.side,
        classes: p.classes,
        limit,
        specials: p.specials,
        formula_frames: found.frames,
        stated_frames: stated,
        discrepancy: stated.is_some_and(|n| n != found.frames),
        diagnostic: found.diagnostic,
    }
}

/// A frame count with `V` per video scheme (`None` on overflow).
pub type VocabRow = (u64, Vec<(VideoScheme, Option<u64>)>);

/// `V` for every scheme and `N` in `frames`, one row per `N`.
pub fn vocab_table(p: &PlanParams, frames: std::ops::RangeInclusive<u64>) -> Vec<VocabRow> {
    frames
        .map(|n| {
            let row = VideoScheme::ALL
                .into_iter()
                .map(|v| {
                    let total = vocab_breakdown(PlanScheme::Video(v), &p.frames(n))
                        .ok()
                        .map(|b| b.total);
                    (v, total)
                })
                .collect();
            (n, row)
        })
        .collect()
}
