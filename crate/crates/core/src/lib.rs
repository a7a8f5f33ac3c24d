//! Run-length tokenization of segmentation masks.
//!
//! Masks are flattened, split into runs of constant label and serialized as
//! integer token sequences over an explicit vocabulary layout. Every codec
//! has a matching decoder with a strict and a lenient mode.

pub mod codec;
pub mod constrained;
pub mod error;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod noise;
pub mod patch;
pub mod planner;
pub mod rle;
pub mod scheme;
pub mod structured;
pub mod token;
pub mod video;
pub mod vocab;

pub use codec::{decode_static, encode_static, SplitStreams};
pub use error::{Error, ErrorCategory, Result};
pub use mask::{FlattenOrder, InstanceMask, LabelMask, VideoMask};
pub use metrics::{ClassSelection, ConfusionMatrix, Metrics};
pub use rle::{Run, RunList};
pub use scheme::{RunOrder, Scheme, SchemeConfig, StartMode, VideoScheme, VideoSchemeConfig};
pub use token::{DecodeMode, SequenceSpec, TokenSequence};
pub use video::{decode_video, encode_video};
pub use vocab::{SegmentKind, VocabLayout};
