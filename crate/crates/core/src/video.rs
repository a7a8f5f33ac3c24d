//! Video codecs: flattened 3D-C / 3D-F and the composite-class TAC / LTAC.

use crate::codec::{apply_order, check_mask, Payload, RunShape};
use crate::error::{Error, Result};
use crate::mask::{
    collapse_tac, expand_tac, flatten_3d, tac_class_count, unflatten_3d, FlattenOrder, VideoMask,
};
use crate::rle::{extract_runs, runs_to_vector, split_runs, Reconstruct, Run, RunList};
use crate::scheme::{Scheme, StartMode, VideoScheme, VideoSchemeConfig};
use crate::token::{parse, DecodeMode, Grammar, SequenceSpec, TokenSequence};
use crate::vocab::{checked_mul, start_sizes, SegmentKind, VocabLayout};

fn composite_classes(cfg: &VideoSchemeConfig) -> Result<u64> {
    tac_class_count(cfg.base.classes, cfg.frames).ok_or_else(|| {
        Error::capacity(format!(
            "(C+1)^N overflows for C = {}, N = {}",
            cfg.base.classes, cfg.frames
        ))
    })
}

fn flat_order(video: VideoScheme) -> Option<FlattenOrder> {
    match video {
        VideoScheme::Flat3dC => Some(FlattenOrder::Video3dC),
        VideoScheme::Flat3dF => Some(FlattenOrder::Video3dF),
        _ => None,
    }
}

pub fn build_video_layout(cfg: &VideoSchemeConfig) -> Result<VocabLayout> {
    cfg.validate()?;
    let base = &cfg.base;
    let max_len = cfg.max_len() as u64;
    let mut sizes = vec![(SegmentKind::Special, u64::from(base.specials))];
    match cfg.video {
        VideoScheme::Flat3dC | VideoScheme::Flat3dF => {
            let starts = checked_mul(cfg.frames as u64, base.area() as u64)?;
            sizes.push((SegmentKind::Start, starts));
            let classes = u64::from(base.classes);
            match base.scheme {
                Scheme::NaiveBin => sizes.push((SegmentKind::Length, max_len)),
                Scheme::NaiveMc => {
                    sizes.push((SegmentKind::Length, max_len));
                    sizes.push((SegmentKind::Class, classes));
                }
                _ => sizes.push((SegmentKind::Lac, checked_mul(max_len, classes)?)),
            }
        }
        VideoScheme::Tac => {
            sizes.extend(start_sizes(base.start_mode, base.height, base.width));
            sizes.push((SegmentKind::Length, max_len));
            sizes.push((SegmentKind::Tac, composite_classes(cfg)?));
        }
        VideoScheme::Ltac => {
            sizes.extend(start_sizes(base.start_mode, base.height, base.width));
            sizes.push((SegmentKind::Ltac, checked_mul(max_len, composite_classes(cfg)?)?));
        }
    }
    VocabLayout::from_sizes(&sizes)
}

fn shape(cfg: &VideoSchemeConfig) -> RunShape {
    let base = &cfg.base;
    let (start, payload, order, height, width) = match cfg.video {
        VideoScheme::Flat3dC | VideoScheme::Flat3dF => {
            let payload = match base.scheme {
                Scheme::NaiveBin => Payload::Length,
                Scheme::NaiveMc => Payload::LengthClass(SegmentKind::Class),
                _ => Payload::Combined(SegmentKind::Lac),
            };
            // flat indices into the N*H*W vector; the 2D fields are unused
            (
                StartMode::Flat,
                payload,
                FlattenOrder::RowMajor,
                cfg.frames * base.height,
                base.width,
            )
        }
        VideoScheme::Tac => (
            base.start_mode,
            Payload::LengthClass(SegmentKind::Tac),
            base.order,
            base.height,
            base.width,
        ),
        VideoScheme::Ltac => (
            base.start_mode,
            Payload::Combined(SegmentKind::Ltac),
            base.order,
            base.height,
            base.width,
        ),
    };
    RunShape {
        start,
        payload,
        max_len: cfg.max_len(),
        order,
        height,
        width,
        implied_class: 1,
    }
}

pub fn video_grammar(cfg: &VideoSchemeConfig) -> Result<Grammar> {
    cfg.validate()?;
    Ok(Grammar::single(shape(cfg).kinds(), cfg.base.end_id()))
}

/// Runs serialized by a video scheme, in emission order.
///
/// For the composite schemes, run classes are composite labels. 3D-C runs
/// never cross a frame boundary, so its sequence is the per-frame sequences
/// concatenated.
pub fn video_runs(video: &VideoMask, cfg: &VideoSchemeConfig) -> Result<RunList> {
    cfg.validate()?;
    if video.len() != cfg.frames {
        return Err(Error::invalid(format!(
            "video has {} frames, scheme expects {}",
            video.len(),
            cfg.frames
        )));
    }
    for frame in video.frames() {
        check_mask(frame, cfg.base.height, cfg.base.width, cfg.base.classes)?;
    }
    let runs = match cfg.video {
        VideoScheme::Flat3dC => {
            let vector = flatten_3d(video, FlattenOrder::Video3dC)?;
            let area = cfg.base.area();
            let mut runs = Vec::new();
            for (t, frame) in vector.chunks(area).enumerate() {
                runs.extend(extract_runs(frame).runs.into_iter().map(|r| Run {
                    start: r.start + t * area,
                    ..r
                }));
            }
            RunList::new(runs, vector.len())
        }
        VideoScheme::Flat3dF => extract_runs(&flatten_3d(video, FlattenOrder::Video3dF)?),
        VideoScheme::Tac | VideoScheme::Ltac => {
            let composite = collapse_tac(video)?;
            let vector = crate::mask::flatten_2d(&composite, cfg.base.order)?;
            extract_runs(&vector)
        }
    };
    let mut runs = split_runs(&runs, cfg.max_len())?;
    apply_order(&mut runs.runs, cfg.base.run_order);
    Ok(runs)
}

pub fn encode_video(video: &VideoMask, cfg: &VideoSchemeConfig) -> Result<TokenSequence> {
    let layout = build_video_layout(cfg)?;
    let shape = shape(cfg);
    let mut ids = Vec::new();
    for run in video_runs(video, cfg)?.runs {
        shape.push_run(&run, &layout, &mut ids)?;
    }
    Ok(TokenSequence::new(SequenceSpec::Video(*cfg), ids))
}

pub fn decode_video(tokens: &TokenSequence, mode: DecodeMode) -> Result<VideoMask> {
    match &tokens.spec {
        SequenceSpec::Video(cfg) => decode_video_ids(&tokens.ids, cfg, mode),
        other => Err(Error::invalid(format!("not a video sequence: {other:?}"))),
    }
}

pub fn decode_video_ids(ids: &[u32], cfg: &VideoSchemeConfig, mode: DecodeMode) -> Result<VideoMask> {
    let layout = build_video_layout(cfg)?;
    let groups = parse(ids, &layout, &video_grammar(cfg)?, mode)?;
    let shape = shape(cfg);
    let base = &cfg.base;
    let recon = match mode {
        DecodeMode::Strict => Reconstruct::Strict,
        DecodeMode::Lenient => Reconstruct::Lenient,
    };
    let runs = groups.iter().map(|g| shape.group_run(&g.values)).collect();
    match cfg.video {
        VideoScheme::Flat3dC | VideoScheme::Flat3dF => {
            let len = cfg.frames * base.area();
            let vector = runs_to_vector(&RunList::new(runs, len), recon)?;
            let order = flat_order(cfg.video).expect("flat scheme");
            unflatten_3d(&vector, cfg.frames, base.height, base.width, base.classes, order)
        }
        VideoScheme::Tac | VideoScheme::Ltac => {
            let vector = runs_to_vector(&RunList::new(runs, base.area()), recon)?;
            let count = composite_classes(cfg)? as u32;
            let composite = crate::mask::unflatten_2d(&vector, base.height, base.width, count, base.order)?;
            expand_tac(&composite, base.classes, cfg.frames)
        }
    }
}
