//! On-disk formats.
//!
//! * Class masks: single-channel 8-bit PNG, pixel value = class id.
//! * Instance masks: single-channel 16-bit PNG plus a `<stem>.classes.json`
//!   sidecar mapping instance id to class.
//! * Raw grids: `RLEMASK1 <height> <width>\n` followed by one byte per pixel.
//! * Videos: a directory of frame files read in lexicographic order.
//! * Token files: a header line `rlemask-tokens v1 <json>` and one line of
//!   space-separated ids.
//! * Patch manifests: JSON describing a patch grid and per-patch transforms.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{InstanceMask, LabelMask, VideoMask};
use crate::patch::Transform;
use crate::token::{SequenceSpec, TokenSequence};

pub const TOKEN_MAGIC: &str = "rlemask-tokens";
pub const TOKEN_VERSION: &str = "v1";
const RAW_MAGIC: &str = "RLEMASK1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn validate_labels(labels: &[u32], classes: u32) -> Result<()> {
    match labels.iter().find(|&&l| l > classes) {
        Some(&label) => Err(Error::LabelRange { label, classes }),
        None => Ok(()),
    }
}

fn is_raw(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "mask")
}

/// Reads a class mask from an 8-bit PNG or a raw `.mask` grid.
pub fn read_mask(path: &Path, classes: u32) -> Result<LabelMask> {
    if is_raw(path) {
        return read_raw(path, classes);
    }
    let img = image::open(path).map_err(|e| format_err(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let labels: Vec<u32> = match img {
        image::DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| u32::from(p.0[0])).collect(),
        other => {
            return Err(format_err(
                path,
                format!("expected a single-channel 8-bit PNG, got {:?}", other.color()),
            ))
        }
    };
    validate_labels(&labels, classes)?;
    LabelMask::new(h, w, classes, labels)
}

pub fn write_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    if is_raw(path) {
        return write_raw(path, mask);
    }
    let bytes = to_bytes(mask, path)?;
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, bytes).expect("size matches");
    buf.save(path).map_err(|e| format_err(path, e.to_string()))
}

fn to_bytes(mask: &LabelMask, path: &Path) -> Result<Vec<u8>> {
    mask.labels()
        .iter()
        .map(|&l| u8::try_from(l).map_err(|_| format_err(path, format!("label {l} does not fit 8 bits"))))
        .collect()
}

pub fn read_raw(path: &Path, classes: u32) -> Result<LabelMask> {
    let data = fs::read(path).map_err(io_err(path))?;
    let newline = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err(path, "missing raw header"))?;
    let header = std::str::from_utf8(&data[..newline]).map_err(|_| format_err(path, "bad raw header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (h, w) = match fields.as_slice() {
        [magic, h, w] if *magic == RAW_MAGIC => (
            h.parse::<usize>().map_err(|_| format_err(path, "bad height"))?,
            w.parse::<usize>().map_err(|_| format_err(path, "bad width"))?,
        ),
        _ => return Err(format_err(path, "not a raw mask file")),
    };
    let body = &data[newline + 1..];
    if body.len() != h * w {
        return Err(format_err(
            path,
            format!("expected {} pixel bytes, found {}", h * w, body.len()),
        ));
    }
    let labels: Vec<u32> = body.iter().map(|&b| u32::from(b)).collect();
    validate_labels(&labels, classes)?;
    LabelMask::new(h, w, classes, labels)
}

pub fn write_raw(path: &Path, mask: &LabelMask) -> Result<()> {
    let mut out = format!("{RAW_MAGIC} {} {}\n", mask.height(), mask.width()).into_bytes();
    out.extend(to_bytes(mask, path)?);
    fs::write(path, out).map_err(io_err(path))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.classes.json"))
}

pub fn read_instance_mask(path: &Path, classes: u32) -> Result<InstanceMask> {
    let img = image::open(path).map_err(|e| format_err(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let ids: Vec<u32> = match img {
        image::DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| u32::from(p.0[0])).collect(),
        image::DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| u32::from(p.0[0])).collect(),
        other => {
            return Err(format_err(
                path,
                format!("expected a single-channel 16-bit PNG, got {:?}", other.color()),
            ))
        }
    };
    let sidecar = sidecar_path(path);
    let text = fs::read_to_string(&sidecar).map_err(io_err(&sidecar))?;
    let raw: BTreeMap<String, u32> =
        serde_json::from_str(&text).map_err(|e| format_err(&sidecar, e.to_string()))?;
    let class_of = raw
        .into_iter()
        .map(|(k, v)| {
            k.parse::<u32>()
                .map(|k| (k, v))
                .map_err(|_| format_err(&sidecar, format!("bad instance id {k:?}")))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    InstanceMask::new(h, w, classes, ids, class_of)
}

pub fn write_instance_mask(path: &Path, mask: &InstanceMask) -> Result<()> {
    let ids = mask
        .ids()
        .iter()
        .map(|&i| {
            u16::try_from(i).map_err(|_| format_err(path, format!("instance {i} does not fit 16 bits")))
        })
        .collect::<Result<Vec<u16>>>()?;
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, ids).expect("size matches");
    buf.save(path).map_err(|e| format_err(path, e.to_string()))?;
    let map: BTreeMap<String, u32> = mask.class_of().iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let sidecar = sidecar_path(path);
    let text = serde_json::to_string_pretty(&map).expect("map serializes");
    fs::write(&sidecar, text + "\n").map_err(io_err(&sidecar))
}

/// Mask files (`.png` or `.mask`) in a directory, sorted by file name.
pub fn list_masks(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| {
            p.is_file()
                && p.extension().is_some_and(|e| e == "png" || e == "mask")
                && !p.to_string_lossy().ends_with(".classes.json")
        })
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn read_video(dir: &Path, classes: u32) -> Result<VideoMask> {
    let frames = list_masks(dir)?
        .iter()
        .map(|p| read_mask(p, classes))
        .collect::<Result<Vec<_>>>()?;
    if frames.is_empty() {
        return Err(format_err(dir, "no frames found"));
    }
    VideoMask::new(frames)
}

pub fn write_video(dir: &Path, video: &VideoMask) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let digits = video.len().to_string().len().max(4);
    video
        .frames()
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let p = dir.join(format!("frame_{t:0digits$}.png"));
            write_mask(&p, f).map(|_| p)
        })
        .collect()
}

/// Serializes a token sequence to its canonical text form.
pub fn format_tokens(seq: &TokenSequence) -> String {
    let header = serde_json::to_string(&seq.spec).expect("spec serializes");
    let ids: Vec<String> = seq.ids.iter().map(u32::to_string).collect();
    format!("{TOKEN_MAGIC} {TOKEN_VERSION} {header}\n{}\n", ids.join(" "))
}

pub fn parse_tokens(text: &str) -> std::result::Result<TokenSequence, String> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let mut parts = header.splitn(3, ' ');
    if parts.next() != Some(TOKEN_MAGIC) {
        return Err("not a token file".into());
    }
    match parts.next() {
        Some(TOKEN_VERSION) => {}
        Some(v) => return Err(format!("unsupported token file version {v:?}")),
        None => return Err("missing version".into()),
    }
    let spec: SequenceSpec = serde_json::from_str(parts.next().ok_or("missing header")?)
        .map_err(|e| format!("bad header: {e}"))?;
    let ids = body
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|_| format!("bad token id {t:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(TokenSequence::new(spec, ids))
}

pub fn write_tokens(path: &Path, seq: &TokenSequence) -> Result<()> {
    fs::write(path, format_tokens(seq)).map_err(io_err(path))
}

pub fn read_tokens(path: &Path) -> Result<TokenSequence> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_tokens(&text).map_err(|m| format_err(path, m))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub top: usize,
    pub left: usize,
    #[serde(default)]
    pub transforms: Vec<Transform>,
}

/// Everything needed to reproduce or invert a patch extraction run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchManifest {
    pub height: usize,
    pub width: usize,
    pub classes: u32,
    pub patch: usize,
    pub stride: usize,
    pub seed: Option<u64>,
    pub patches: Vec<ManifestEntry>,
}

pub fn write_manifest(path: &Path, manifest: &PatchManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<PatchManifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}
