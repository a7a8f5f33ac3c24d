//! Tokenization scheme descriptions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::FlattenOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `(start, length)` per foreground run.
    NaiveBin,
    /// `(start, length, class)` per run.
    NaiveMc,
    /// `(start, length-and-class)` per run.
    Lac,
    /// Background-as-class: `(length, class)` for every run, background included.
    Bac,
    /// One combined length-and-class token per run, background included.
    BacLac,
    /// Ordered positions where the binary mask changes value.
    DiffBin,
    /// `(position, new class)` per value change.
    DiffMc,
    /// `(x, y, length, class)` laid out as four aligned streams.
    SplitStream,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::NaiveBin,
        Scheme::NaiveMc,
        Scheme::Lac,
        Scheme::Bac,
        Scheme::BacLac,
        Scheme::DiffBin,
        Scheme::DiffMc,
        Scheme::SplitStream,
    ];

    pub fn is_binary(self) -> bool {
        matches!(self, Scheme::NaiveBin | Scheme::DiffBin)
    }

    /// Whether every run carries its own absolute start.
    pub fn has_absolute_starts(self) -> bool {
        matches!(
            self,
            Scheme::NaiveBin | Scheme::NaiveMc | Scheme::Lac | Scheme::SplitStream
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NaiveBin => "naive-bin",
            Scheme::NaiveMc => "naive-mc",
            Scheme::Lac => "lac",
            Scheme::Bac => "bac",
            Scheme::BacLac => "bac-lac",
            Scheme::DiffBin => "diff-bin",
            Scheme::DiffMc => "diff-mc",
            Scheme::SplitStream => "split-stream",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StartMode {
    /// A single token indexes the flattened mask.
    #[default]
    #[serde(rename = "1d")]
    Flat,
    /// Separate row and column tokens.
    #[serde(rename = "2d")]
    Coords,
}

impl FromStr for StartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" => Ok(StartMode::Flat),
            "2d" => Ok(StartMode::Coords),
            _ => Err(Error::invalid(format!("unknown start mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOrder {
    #[default]
    Canonical,
    Shuffled(u64),
}

/// Everything needed to tokenize a static mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub height: usize,
    pub width: usize,
    pub classes: u32,
    pub start_mode: StartMode,
    /// `None` selects the extent of the fastest-varying axis.
    pub max_len: Option<usize>,
    pub order: FlattenOrder,
    pub specials: u32,
    pub run_order: RunOrder,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, height: usize, width: usize, classes: u32) -> Self {
        SchemeConfig {
            scheme,
            height,
            width,
            classes,
            start_mode: if scheme == Scheme::SplitStream {
                StartMode::Coords
            } else {
                StartMode::Flat
            },
            max_len: None,
            order: FlattenOrder::RowMajor,
            specials: 0,
            run_order: RunOrder::Canonical,
        }
    }

    pub fn square(scheme: Scheme, side: usize, classes: u32) -> Self {
        Self::new(scheme, side, side, classes)
    }

    pub fn with_start_mode(mut self, mode: StartMode) -> Self {
        self.start_mode = mode;
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = Some(max_len);
        self
    }

    pub fn with_order(mut self, order: FlattenOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_specials(mut self, specials: u32) -> Self {
        self.specials = specials;
        self
    }

    pub fn with_run_order(mut self, run_order: RunOrder) -> Self {
        self.run_order = run_order;
        self
    }

    pub fn max_len(&self) -> usize {
        self.max_len
            .unwrap_or_else(|| self.order.fastest_extent(self.height, self.width))
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    /// Id of the end-of-sequence special, when any specials are reserved.
    pub fn end_id(&self) -> Option<u32> {
        (self.specials > 0).then_some(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::invalid("mask dimensions must be at least 1x1"));
        }
        if self.classes == 0 {
            return Err(Error::invalid("class count must be at least 1"));
        }
        if self.max_len() == 0 {
            return Err(Error::invalid("max_len must be at least 1"));
        }
        if self.order.is_video() {
            return Err(Error::invalid("static schemes need a 2D flatten order"));
        }
        if self.scheme.is_binary() && self.classes != 1 {
            return Err(Error::invalid(format!(
                "{} is a binary scheme but {} classes were configured",
                self.scheme, self.classes
            )));
        }
        match (self.scheme, self.start_mode) {
            (Scheme::Bac | Scheme::BacLac | Scheme::DiffBin | Scheme::DiffMc, StartMode::Coords) => {
                Err(Error::invalid(format!("{} has no start tokens", self.scheme)))
            }
            (Scheme::SplitStream, StartMode::Flat) => Err(Error::invalid("split-stream needs 2D starts")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VideoScheme {
    /// Frames concatenated before run extraction.
    Flat3dC,
    /// Time-fastest interleaving before run extraction.
    Flat3dF,
    /// Per-pixel class tuples collapsed into composite classes.
    Tac,
    /// Composite classes combined with lengths.
    Ltac,
}

impl VideoScheme {
    pub const ALL: [VideoScheme; 4] = [
        VideoScheme::Flat3dC,
        VideoScheme::Flat3dF,
        VideoScheme::Tac,
        VideoScheme::Ltac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VideoScheme::Flat3dC => "3dc",
            VideoScheme::Flat3dF => "3df",
            VideoScheme::Tac => "tac",
            VideoScheme::Ltac => "ltac",
        }
    }
}

impl fmt::Display for VideoScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VideoScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VideoScheme::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown video scheme {s:?}")))
    }
}

/// A video scheme on top of a per-frame base configuration.
///
/// For the flattened schemes the base scheme picks the run payload
/// (binary, multi-class or LAC). The composite schemes ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VideoSchemeConfig {
    pub video: VideoScheme,
    pub frames: usize,
    pub base: SchemeConfig,
}

impl VideoSchemeConfig {
    pub fn new(video: VideoScheme, frames: usize, base: SchemeConfig) -> Self {
        VideoSchemeConfig { video, frames, base }
    }

    /// Maximum run length. Defaults to the frame width for every video scheme.
    pub fn max_len(&self) -> usize {
        self.base.max_len.unwrap_or(self.base.width)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::invalid("video needs at least one frame"));
        }
        let base = &self.base;
        if base.height == 0 || base.width == 0 || base.classes == 0 || self.max_len() == 0 {
            return Err(Error::invalid("degenerate video configuration"));
        }
        if base.order.is_video() {
            return Err(Error::invalid("the base flatten order must be 2D"));
        }
        match self.video {
            VideoScheme::Flat3dC | VideoScheme::Flat3dF => {
                if base.start_mode == StartMode::Coords {
                    return Err(Error::invalid("flattened video schemes use 1D starts"));
                }
                match base.scheme {
                    Scheme::NaiveBin if base.classes != 1 => {
                        Err(Error::invalid("naive-bin needs exactly one class"))
                    }
                    Scheme::NaiveBin | Scheme::NaiveMc | Scheme::Lac => Ok(()),
                    other => Err(Error::invalid(format!(
                        "{other} cannot be used for flattened video"
                    ))),
                }
            }
            VideoScheme::Tac | VideoScheme::Ltac => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        for v in VideoScheme::ALL {
            assert_eq!(v.name().parse::<VideoScheme>().unwrap(), v);
        }
        assert!("lzw".parse::<Scheme>().is_err());
    }

    #[test]
    fn max_len_follows_fastest_axis() {
        let cfg = SchemeConfig::new(Scheme::Lac, 4, 9, 2);
        assert_eq!(cfg.max_len(), 9);
        assert_eq!(cfg.with_order(FlattenOrder::ColumnMajor).max_len(), 4);
        assert_eq!(cfg.with_max_len(3).max_len(), 3);
    }

    #[test]
    fn validation() {
        assert!(SchemeConfig::square(Scheme::NaiveBin, 4, 2).validate().is_err());
        assert!(SchemeConfig::square(Scheme::Bac, 4, 2)
            .with_start_mode(StartMode::Coords)
            .validate()
            .is_err());
        assert!(SchemeConfig::square(Scheme::SplitStream, 4, 2).validate().is_ok());
        assert!(SchemeConfig::square(Scheme::SplitStream, 4, 2)
            .with_start_mode(StartMode::Flat)
            .validate()
            .is_err());
        assert!(SchemeConfig::square(Scheme::Lac, 4, 2)
            .with_max_len(0)
            .validate()
            .is_err());
    }
}
