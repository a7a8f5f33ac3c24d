//! Static-mask codecs.
//!
//! Absolute-start schemes emit one token group per foreground run. The
//! background-as-class schemes cover the whole vector with contiguous runs
//! and leave starts implicit. The differential schemes emit the positions
//! where the flattened mask changes value.

use crate::error::{Error, Result};
use crate::mask::{flatten_2d, unflatten_2d, FlattenOrder, LabelMask};
use crate::rle::{
    all_runs, extract_runs, runs_to_vector, shuffle_in_place, split_runs, Reconstruct, Run, RunList,
};
use crate::scheme::{RunOrder, Scheme, SchemeConfig, StartMode};
use crate::token::{parse, DecodeMode, Grammar, Group, SequenceSpec, TokenSequence};
use crate::vocab::{build_layout, start_kinds, SegmentKind, VocabLayout};

/// How the non-start part of an absolute-start run group is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Payload {
    /// Length only; the class is implied.
    Length,
    /// Length token followed by a class token from the given segment.
    LengthClass(SegmentKind),
    /// A single token from the given segment combining length and class.
    Combined(SegmentKind),
}

/// Geometry and token shape of an absolute-start run group.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RunShape {
    pub start: StartMode,
    pub payload: Payload,
    pub max_len: usize,
    pub order: FlattenOrder,
    pub height: usize,
    pub width: usize,
    /// Class implied by [`Payload::Length`] groups.
    pub implied_class: u32,
}

impl RunShape {
    pub fn kinds(&self) -> Vec<SegmentKind> {
        let mut kinds = start_kinds(self.start);
        match self.payload {
            Payload::Length => kinds.push(SegmentKind::Length),
            Payload::LengthClass(k) => kinds.extend([SegmentKind::Length, k]),
            Payload::Combined(k) => kinds.push(k),
        }
        kinds
    }

    /// Appends the token ids of `run`. Foreground classes start at 1.
    pub fn push_run(&self, run: &Run, layout: &VocabLayout, out: &mut Vec<u32>) -> Result<()> {
        debug_assert!(run.length >= 1 && run.length <= self.max_len && run.class >= 1);
        match self.start {
            StartMode::Flat => out.push(layout.id_of(SegmentKind::Start, run.start as u32)?),
            StartMode::Coords => {
                let (y, x) = self.order.coords_2d(run.start, self.height, self.width);
                out.push(layout.id_of(SegmentKind::StartRow, y as u32)?);
                out.push(layout.id_of(SegmentKind::StartCol, x as u32)?);
            }
        }
        let len_value = (run.length - 1) as u32;
        match self.payload {
            Payload::Length => out.push(layout.id_of(SegmentKind::Length, len_value)?),
            Payload::LengthClass(kind) => {
                out.push(layout.id_of(SegmentKind::Length, len_value)?);
                out.push(layout.id_of(kind, run.class - 1)?);
            }
            Payload::Combined(kind) => {
                let value = u64::from(run.class - 1) * self.max_len as u64 + u64::from(len_value);
                let value = u32::try_from(value).map_err(|_| Error::capacity("combined token overflows"))?;
                out.push(layout.id_of(kind, value)?);
            }
        }
        Ok(())
    }

    /// Inverse of [`push_run`](Self::push_run) on segment-relative values.
    pub fn group_run(&self, values: &[u32]) -> Run {
        let (start, rest) = match self.start {
            StartMode::Flat => (values[0] as usize, &values[1..]),
            StartMode::Coords => (
                self.order
                    .index_2d(values[0] as usize, values[1] as usize, self.height, self.width),
                &values[2..],
            ),
        };
        let (length, class) = match self.payload {
            Payload::Length => (rest[0] as usize + 1, self.implied_class),
            Payload::LengthClass(_) => (rest[0] as usize + 1, rest[1] + 1),
            Payload::Combined(_) => {
                let m = self.max_len as u32;
                ((rest[0] % m) as usize + 1, rest[0] / m + 1)
            }
        };
        Run::new(start, length, class)
    }
}

fn run_shape(cfg: &SchemeConfig) -> Option<RunShape> {
    let payload = match cfg.scheme {
        Scheme::NaiveBin => Payload::Length,
        Scheme::NaiveMc | Scheme::SplitStream => Payload::LengthClass(SegmentKind::Class),
        Scheme::Lac => Payload::Combined(SegmentKind::Lac),
        _ => return None,
    };
    Some(RunShape {
        start: cfg.start_mode,
        payload,
        max_len: cfg.max_len(),
        order: cfg.order,
        height: cfg.height,
        width: cfg.width,
        implied_class: 1,
    })
}

pub fn grammar(cfg: &SchemeConfig) -> Result<Grammar> {
    cfg.validate()?;
    let group = match cfg.scheme {
        Scheme::Bac => vec![SegmentKind::Length, SegmentKind::Class],
        Scheme::BacLac => vec![SegmentKind::Lac],
        Scheme::DiffBin => vec![SegmentKind::Start],
        Scheme::DiffMc => vec![SegmentKind::Start, SegmentKind::Class],
        _ => run_shape(cfg).expect("absolute-start scheme").kinds(),
    };
    Ok(Grammar::single(group, cfg.end_id()))
}

/// Payload tokens per run (or per transition for the differential schemes).
pub fn tokens_per_run(cfg: &SchemeConfig) -> Result<usize> {
    Ok(grammar(cfg)?.alternatives[0].len())
}

pub(crate) fn check_mask(mask: &LabelMask, height: usize, width: usize, classes: u32) -> Result<()> {
    if mask.height() != height || mask.width() != width {
        return Err(Error::invalid(format!(
            "mask is {}x{} but the scheme expects {height}x{width}",
            mask.height(),
            mask.width()
        )));
    }
    if let Some(&label) = mask.labels().iter().find(|&&l| l > classes) {
        return Err(Error::LabelRange { label, classes });
    }
    Ok(())
}

pub(crate) fn apply_order<T>(items: &mut [T], order: RunOrder) {
    if let RunOrder::Shuffled(seed) = order {
        shuffle_in_place(items, seed);
    }
}

/// Runs that an absolute-start scheme would serialize, in emission order.
pub fn scheme_runs(mask: &LabelMask, cfg: &SchemeConfig) -> Result<RunList> {
    cfg.validate()?;
    check_mask(mask, cfg.height, cfg.width, cfg.classes)?;
    let vector = flatten_2d(mask, cfg.order)?;
    let runs = match cfg.scheme {
        Scheme::Bac | Scheme::BacLac => all_runs(&vector),
        Scheme::DiffBin | Scheme::DiffMc => {
            return Err(Error::invalid("differential schemes do not serialize runs"))
        }
        _ => extract_runs(&vector),
    };
    let mut runs = split_runs(&runs, cfg.max_len())?;
    apply_order(&mut runs.runs, cfg.run_order);
    Ok(runs)
}

/// `(position, new label)` for every value change, with an implicit leading background.
pub fn transitions(vector: &[u32]) -> Vec<(usize, u32)> {
    let mut prev = 0;
    let mut out = Vec::new();
    for (i, &v) in vector.iter().enumerate() {
        if v != prev {
            out.push((i, v));
            prev = v;
        }
    }
    out
}

pub fn encode_static(mask: &LabelMask, cfg: &SchemeConfig) -> Result<TokenSequence> {
    let layout = build_layout(cfg)?;
    check_mask(mask, cfg.height, cfg.width, cfg.classes)?;
    let mut ids = Vec::new();
    match cfg.scheme {
        Scheme::DiffBin | Scheme::DiffMc => {
            let vector = flatten_2d(mask, cfg.order)?;
            let mut trans = transitions(&vector);
            apply_order(&mut trans, cfg.run_order);
            for (pos, class) in trans {
                ids.push(layout.id_of(SegmentKind::Start, pos as u32)?);
                if cfg.scheme == Scheme::DiffMc {
                    ids.push(layout.id_of(SegmentKind::Class, class)?);
                }
            }
        }
        Scheme::Bac | Scheme::BacLac => {
            let max_len = cfg.max_len() as u32;
            for run in scheme_runs(mask, cfg)?.runs {
                let len_value = run.length as u32 - 1;
                if cfg.scheme == Scheme::Bac {
                    ids.push(layout.id_of(SegmentKind::Length, len_value)?);
                    ids.push(layout.id_of(SegmentKind::Class, run.class)?);
                } else {
                    ids.push(layout.id_of(SegmentKind::Lac, run.class * max_len + len_value)?);
                }
            }
        }
        _ => {
            let shape = run_shape(cfg).expect("absolute-start scheme");
            for run in scheme_runs(mask, cfg)?.runs {
                shape.push_run(&run, &layout, &mut ids)?;
            }
        }
    }
    Ok(TokenSequence::new(SequenceSpec::Static(*cfg), ids))
}

pub fn decode_static(tokens: &TokenSequence, mode: DecodeMode) -> Result<LabelMask> {
    match &tokens.spec {
        SequenceSpec::Static(cfg) => decode_static_ids(&tokens.ids, cfg, mode),
        other => Err(Error::invalid(format!("not a static sequence: {other:?}"))),
    }
}

pub fn decode_static_ids(ids: &[u32], cfg: &SchemeConfig, mode: DecodeMode) -> Result<LabelMask> {
    let layout = build_layout(cfg)?;
    let groups = parse(ids, &layout, &grammar(cfg)?, mode)?;
    let vector = groups_to_vector(&groups, cfg, mode)?;
    unflatten_2d(&vector, cfg.height, cfg.width, cfg.classes, cfg.order)
}

fn reconstruct(mode: DecodeMode) -> Reconstruct {
    match mode {
        DecodeMode::Strict => Reconstruct::Strict,
        DecodeMode::Lenient => Reconstruct::Lenient,
    }
}

fn groups_to_vector(groups: &[Group], cfg: &SchemeConfig, mode: DecodeMode) -> Result<Vec<u32>> {
    let area = cfg.area();
    match cfg.scheme {
        Scheme::Bac | Scheme::BacLac => {
            let max_len = cfg.max_len() as u32;
            let mut out = vec![0u32; area];
            let mut cursor = 0usize;
            for g in groups {
                let (length, class) = if cfg.scheme == Scheme::Bac {
                    (g.values[0] as usize + 1, g.values[1])
                } else {
                    ((g.values[0] % max_len) as usize + 1, g.values[0] / max_len)
                };
                let end = cursor + length;
                if end > area {
                    if mode == DecodeMode::Strict {
                        return Err(Error::Range {
                            start: cursor,
                            end,
                            len: area,
                        });
                    }
                    out[cursor.min(area)..].fill(class);
                    break;
                }
                out[cursor..end].fill(class);
                cursor = end;
            }
            Ok(out)
        }
        Scheme::DiffBin | Scheme::DiffMc => {
            let mut trans: Vec<(usize, u32)> = groups
                .iter()
                .map(|g| (g.values[0] as usize, g.values.get(1).copied().unwrap_or(0)))
                .collect();
            if let Some(bad) = trans.windows(2).position(|w| w[0].0 >= w[1].0) {
                if mode == DecodeMode::Strict {
                    return Err(Error::parse(
                        groups[bad + 1].position,
                        "transition positions must increase",
                    ));
                }
                trans.sort_by_key(|t| t.0);
            }
            let mut out = vec![0u32; area];
            let mut current = 0;
            let mut next = 0;
            for (i, px) in out.iter_mut().enumerate() {
                while next < trans.len() && trans[next].0 == i {
                    current = if cfg.scheme == Scheme::DiffBin {
                        1 - current
                    } else {
                        trans[next].1
                    };
                    next += 1;
                }
                *px = current;
            }
            Ok(out)
        }
        _ => {
            let shape = run_shape(cfg).expect("absolute-start scheme");
            let runs = groups.iter().map(|g| shape.group_run(&g.values)).collect();
            runs_to_vector(&RunList::new(runs, area), reconstruct(mode))
        }
    }
}

/// Four aligned per-run streams with independent vocabularies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitStreams {
    /// Start column, `0..width`.
    pub sx: Vec<u32>,
    /// Start row, `0..height`.
    pub sy: Vec<u32>,
    /// Length minus one, `0..max_len`.
    pub len: Vec<u32>,
    /// Class minus one, `0..classes`.
    pub cls: Vec<u32>,
}

impl SplitStreams {
    pub fn runs(&self) -> usize {
        self.sx.len()
    }
}

/// Per-stream vocabulary sizes in `[SX, SY, LEN, CLS]` order.
pub fn stream_vocab_sizes(cfg: &SchemeConfig) -> [usize; 4] {
    [cfg.width, cfg.height, cfg.max_len(), cfg.classes as usize]
}

pub fn encode_split_stream(mask: &LabelMask, cfg: &SchemeConfig) -> Result<SplitStreams> {
    if cfg.scheme != Scheme::SplitStream {
        return Err(Error::invalid("split streams need the split-stream scheme"));
    }
    let mut streams = SplitStreams::default();
    for run in scheme_runs(mask, cfg)?.runs {
        let (y, x) = cfg.order.coords_2d(run.start, cfg.height, cfg.width);
        streams.sx.push(x as u32);
        streams.sy.push(y as u32);
        streams.len.push(run.length as u32 - 1);
        streams.cls.push(run.class - 1);
    }
    Ok(streams)
}

pub fn decode_split_stream(
    streams: &SplitStreams,
    cfg: &SchemeConfig,
    mode: DecodeMode,
) -> Result<LabelMask> {
    if cfg.scheme != Scheme::SplitStream {
        return Err(Error::invalid("split streams need the split-stream scheme"));
    }
    let n = streams.sx.len();
    let ragged = [streams.sy.len(), streams.len.len(), streams.cls.len()]
        .iter()
        .any(|&l| l != n);
    if ragged && mode == DecodeMode::Strict {
        return Err(Error::invalid("split streams differ in length"));
    }
    let n = n
        .min(streams.sy.len())
        .min(streams.len.len())
        .min(streams.cls.len());
    let layout = build_layout(cfg)?;
    let mut ids = Vec::with_capacity(4 * n);
    for i in 0..n {
        for (kind, value) in [
            (SegmentKind::StartRow, streams.sy[i]),
            (SegmentKind::StartCol, streams.sx[i]),
            (SegmentKind::Length, streams.len[i]),
            (SegmentKind::Class, streams.cls[i]),
        ] {
            let seg = layout.segment(kind).expect("split-stream layout");
            match mode {
                DecodeMode::Strict => ids.push(layout.id_of(kind, value)?),
                DecodeMode::Lenient => ids.push(seg.offset + value.min(seg.size - 1)),
            }
        }
    }
    decode_static_ids(&ids, cfg, mode)
}
