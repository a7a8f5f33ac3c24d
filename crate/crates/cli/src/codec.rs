//! Turning command-line flags into codec configurations.

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Result};
use rlemask_core::io;
use rlemask_core::mask::subsample;
use rlemask_core::structured::{decode_cw, decode_iw, encode_cw, encode_iw, InstanceOrder};
use rlemask_core::{
    decode_static, decode_video, encode_static, encode_video, DecodeMode, Error, FlattenOrder, InstanceMask,
    LabelMask, RunOrder, Scheme, SchemeConfig, SequenceSpec, StartMode, TokenSequence, VideoMask,
    VideoScheme, VideoSchemeConfig,
};

use crate::{Flatten, Global};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    Static(Scheme),
    Video(VideoScheme),
    ClassWise,
    InstanceWise,
}

impl FromStr for Codec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "cw" => Ok(Codec::ClassWise),
            "iw" => Ok(Codec::InstanceWise),
            _ => s
                .parse::<Scheme>()
                .map(Codec::Static)
                .or_else(|_| s.parse::<VideoScheme>().map(Codec::Video))
                .map_err(|_| Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

/// A decoded artifact of whichever codec was used.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Mask(LabelMask),
    Video(VideoMask),
    Instances(InstanceMask),
}

impl Decoded {
    pub fn pixels(&self) -> usize {
        match self {
            Decoded::Mask(m) => m.len(),
            Decoded::Video(v) => v.len() * v.height() * v.width(),
            Decoded::Instances(i) => i.height() * i.width(),
        }
    }

    /// Pixels whose label differs; instance maps compare up to a renumbering of ids.
    pub fn mismatches(&self, other: &Decoded) -> usize {
        let diff = |a: &[u32], b: &[u32]| {
            if a.len() != b.len() {
                return a.len().max(b.len());
            }
            a.iter().zip(b).filter(|(x, y)| x != y).count()
        };
        match (self, other) {
            (Decoded::Mask(a), Decoded::Mask(b)) => diff(a.labels(), b.labels()),
            (Decoded::Video(a), Decoded::Video(b)) if a.len() == b.len() => a
                .frames()
                .iter()
                .zip(b.frames())
                .map(|(x, y)| diff(x.labels(), y.labels()))
                .sum(),
            (Decoded::Instances(a), Decoded::Instances(b)) => {
                let semantic = diff(a.to_label_mask().labels(), b.to_label_mask().labels());
                semantic + partition_mismatches(a.ids(), b.ids())
            }
            _ => self.pixels().max(other.pixels()),
        }
    }
}

/// Pixels breaking a one-to-one correspondence between the two id maps.
fn partition_mismatches(a: &[u32], b: &[u32]) -> usize {
    use std::collections::BTreeMap;
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter()
        .zip(b)
        .filter(|&(&x, &y)| *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x)
        .count()
}

pub fn codec(g: &Global) -> Result<Codec> {
    Ok(g.scheme.parse::<Codec>()?)
}

fn order(g: &Global) -> FlattenOrder {
    match g.flatten {
        Flatten::Row => FlattenOrder::RowMajor,
        Flatten::Col => FlattenOrder::ColumnMajor,
    }
}

pub fn start_mode(g: &Global) -> Result<Option<StartMode>> {
    Ok(g.start_mode.as_deref().map(StartMode::from_str).transpose()?)
}

/// Configuration for one static scheme at the given mask size.
pub fn static_config(g: &Global, scheme: Scheme, height: usize, width: usize) -> Result<SchemeConfig> {
    let mut cfg = SchemeConfig::new(scheme, height, width, g.classes)
        .with_order(order(g))
        .with_specials(g.specials);
    if let Some(mode) = start_mode(g)? {
        cfg = cfg.with_start_mode(mode);
    }
    if let Some(m) = g.max_len {
        cfg = cfg.with_max_len(m);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn base_scheme(g: &Global, codec: Codec) -> Result<Scheme> {
    if let Some(b) = &g.base {
        return Ok(b.parse()?);
    }
    Ok(match codec {
        Codec::ClassWise | Codec::InstanceWise => Scheme::NaiveBin,
        _ if g.classes == 1 => Scheme::NaiveBin,
        _ => Scheme::NaiveMc,
    })
}

fn base_config(g: &Global, codec: Codec, height: usize, width: usize) -> Result<SchemeConfig> {
    let mut cfg = SchemeConfig::new(base_scheme(g, codec)?, height, width, g.classes)
        .with_order(order(g))
        .with_specials(g.specials);
    if let Some(mode) = start_mode(g)? {
        cfg = cfg.with_start_mode(mode);
    }
    if let Some(m) = g.max_len {
        cfg = cfg.with_max_len(m);
    }
    Ok(cfg)
}

fn fit(g: &Global, mask: LabelMask) -> Result<LabelMask> {
    match g.mask_size {
        Some(s) if mask.height() != s || mask.width() != s => Ok(subsample(&mask, s)?),
        _ => Ok(mask),
    }
}

/// Reads a class mask, pooled to `--mask-size` when that is set.
pub fn load_mask(g: &Global, path: &Path) -> Result<LabelMask> {
    fit(g, io::read_mask(path, g.classes)?)
}

pub fn load_video(g: &Global, dir: &Path) -> Result<VideoMask> {
    let frames = io::read_video(dir, g.classes)?
        .into_frames()
        .into_iter()
        .map(|f| fit(g, f))
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = g.frames {
        if n != frames.len() {
            bail!(Error::InvalidArgument(format!(
                "--frames {n} but {} holds {} frames",
                dir.display(),
                frames.len()
            )));
        }
    }
    Ok(VideoMask::new(frames)?)
}

/// Reads the input a codec expects and tokenizes it.
pub fn encode_path(g: &Global, path: &Path, shuffle: bool) -> Result<(Decoded, TokenSequence)> {
    let codec = codec(g)?;
    let run_order = if shuffle {
        RunOrder::Shuffled(g.seed)
    } else {
        RunOrder::Canonical
    };
    Ok(match codec {
        Codec::Static(s) => {
            let mask = load_mask(g, path)?;
            let cfg = static_config(g, s, mask.height(), mask.width())?.with_run_order(run_order);
            let seq = encode_static(&mask, &cfg)?;
            (Decoded::Mask(mask), seq)
        }
        Codec::Video(v) => {
            let video = load_video(g, path)?;
            let base = base_config(g, codec, video.height(), video.width())?.with_run_order(run_order);
            let seq = encode_video(&video, &VideoSchemeConfig::new(v, video.len(), base))?;
            (Decoded::Video(video), seq)
        }
        Codec::ClassWise => {
            let mask = load_mask(g, path)?;
            let cfg = base_config(g, codec, mask.height(), mask.width())?.with_run_order(run_order);
            let seq = encode_cw(&mask, &cfg)?;
            (Decoded::Mask(mask), seq)
        }
        Codec::InstanceWise => {
            let inst = io::read_instance_mask(path, g.classes)?;
            let cfg = base_config(g, codec, inst.height(), inst.width())?;
            let order = if shuffle {
                InstanceOrder::Shuffled(g.seed)
            } else {
                InstanceOrder::FirstPixel
            };
            let seq = encode_iw(&inst, &cfg, order)?;
            (Decoded::Instances(inst), seq)
        }
    })
}

pub fn decode(seq: &TokenSequence, mode: DecodeMode) -> Result<Decoded> {
    Ok(match seq.spec {
        SequenceSpec::Static(_) => Decoded::Mask(decode_static(seq, mode)?),
        SequenceSpec::Video(_) => Decoded::Video(decode_video(seq, mode)?),
        SequenceSpec::ClassWise(_) => Decoded::Mask(decode_cw(seq, mode)?),
        SequenceSpec::InstanceWise(_) => Decoded::Instances(decode_iw(seq, mode)?.1),
    })
}

pub fn write_decoded(path: &Path, decoded: &Decoded) -> Result<()> {
    match decoded {
        Decoded::Mask(m) => io::write_mask(path, m)?,
        Decoded::Video(v) => {
            io::write_video(path, v)?;
        }
        Decoded::Instances(i) => io::write_instance_mask(path, i)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_names() {
        assert_eq!("lac".parse::<Codec>().unwrap(), Codec::Static(Scheme::Lac));
        assert_eq!("ltac".parse::<Codec>().unwrap(), Codec::Video(VideoScheme::Ltac));
        assert_eq!("iw".parse::<Codec>().unwrap(), Codec::InstanceWise);
        assert!("rle".parse::<Codec>().is_err());
    }

    #[test]
    fn partitions_compare_up_to_renumbering() {
        assert_eq!(partition_mismatches(&[0, 5, 5, 7], &[0, 1, 1, 2]), 0);
        assert_eq!(partition_mismatches(&[0, 5, 7], &[0, 1, 1]), 1);
    }
}
