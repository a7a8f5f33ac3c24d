//! Token sequences and the per-position grammar shared by every codec.
//!
//! A grammar is a set of fixed-shape groups. At a group boundary any group
//! may start (the alternatives must begin with distinct segment kinds) or,
//! when specials are reserved, the end token may appear. Inside a group the
//! next segment kind is fully determined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::{SchemeConfig, VideoSchemeConfig};
use crate::vocab::{SegmentKind, VocabLayout};
use crate::{codec, structured, video};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub alternatives: Vec<Vec<SegmentKind>>,
    pub end_id: Option<u32>,
}

impl Grammar {
    pub fn single(group: Vec<SegmentKind>, end_id: Option<u32>) -> Self {
        Grammar {
            alternatives: vec![group],
            end_id,
        }
    }

    /// Kinds allowed to open a group.
    pub fn openers(&self) -> impl Iterator<Item = SegmentKind> + '_ {
        self.alternatives.iter().map(|g| g[0])
    }

    fn alternative_opened_by(&self, kind: SegmentKind) -> Option<usize> {
        self.alternatives.iter().position(|g| g[0] == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMode {
    /// Any grammar or geometry violation is an error.
    #[default]
    Strict,
    /// Off-segment ids snap to the nearest legal value, a trailing partial
    /// group is dropped, and overlapping runs resolve last-wins.
    Lenient,
}

/// One parsed group: which alternative it is and its segment-relative values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub alternative: usize,
    /// Index of the group's first token in the sequence.
    pub position: usize,
    pub values: Vec<u32>,
}

pub fn parse(ids: &[u32], layout: &VocabLayout, grammar: &Grammar, mode: DecodeMode) -> Result<Vec<Group>> {
    let mut groups = Vec::new();
    let mut pos = 0;
    while pos < ids.len() {
        let id = ids[pos];
        if Some(id) == grammar.end_id {
            if mode == DecodeMode::Strict && pos + 1 != ids.len() {
                return Err(Error::parse(pos + 1, "tokens after end of sequence"));
            }
            break;
        }
        let (alternative, first) = match layout.kind_of(id) {
            Some((kind, value)) if grammar.alternative_opened_by(kind).is_some() => {
                (grammar.alternative_opened_by(kind).unwrap(), value)
            }
            _ if mode == DecodeMode::Strict => {
                return Err(Error::parse(pos, format!("id {id} cannot open a group")));
            }
            _ => nearest_opener(id, layout, grammar)?,
        };
        let shape = &grammar.alternatives[alternative];
        if pos + shape.len() > ids.len() {
            if mode == DecodeMode::Strict {
                return Err(Error::parse(ids.len(), "sequence ends inside a group"));
            }
            break;
        }
        let mut values = Vec::with_capacity(shape.len());
        values.push(first);
        for (offset, &kind) in shape.iter().enumerate().skip(1) {
            let id = ids[pos + offset];
            let seg = layout
                .segment(kind)
                .ok_or_else(|| Error::invalid(format!("layout has no {kind} segment")))?;
            if seg.contains(id) {
                values.push(id - seg.offset);
            } else if mode == DecodeMode::Strict {
                return Err(Error::parse(
                    pos + offset,
                    format!("expected a {kind} token, got id {id}"),
                ));
            } else {
                values.push(seg.nearest_value(id));
            }
        }
        groups.push(Group {
            alternative,
            position: pos,
            values,
        });
        pos += shape.len();
    }
    Ok(groups)
}

fn nearest_opener(id: u32, layout: &VocabLayout, grammar: &Grammar) -> Result<(usize, u32)> {
    grammar
        .alternatives
        .iter()
        .enumerate()
        .filter_map(|(i, g)| layout.segment(g[0]).map(|s| (i, s)))
        .min_by_key(|(_, s)| s.distance(id))
        .map(|(i, s)| (i, s.nearest_value(id)))
        .ok_or_else(|| Error::invalid("grammar has no usable opener"))
}

/// Which codec produced a sequence, with its full configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "kebab-case")]
pub enum SequenceSpec {
    Static(SchemeConfig),
    Video(VideoSchemeConfig),
    ClassWise(SchemeConfig),
    InstanceWise(SchemeConfig),
}

impl SequenceSpec {
    pub fn layout(&self) -> Result<VocabLayout> {
        match self {
            SequenceSpec::Static(cfg) => crate::vocab::build_layout(cfg),
            SequenceSpec::Video(cfg) => video::build_video_layout(cfg),
            SequenceSpec::ClassWise(cfg) => structured::build_cw_layout(cfg),
            SequenceSpec::InstanceWise(cfg) => structured::build_iw_layout(cfg),
        }
    }

    pub fn grammar(&self) -> Result<Grammar> {
        match self {
            SequenceSpec::Static(cfg) => codec::grammar(cfg),
            SequenceSpec::Video(cfg) => video::video_grammar(cfg),
            SequenceSpec::ClassWise(cfg) => structured::cw_grammar(cfg),
            SequenceSpec::InstanceWise(cfg) => structured::iw_grammar(cfg),
        }
    }

    pub fn specials(&self) -> u32 {
        match self {
            SequenceSpec::Static(c) | SequenceSpec::ClassWise(c) | SequenceSpec::InstanceWise(c) => {
                c.specials
            }
            SequenceSpec::Video(v) => v.base.specials,
        }
    }
}

/// Codec output: token ids tagged with the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub spec: SequenceSpec,
    pub ids: Vec<u32>,
}

impl TokenSequence {
    pub fn new(spec: SequenceSpec, ids: Vec<u32>) -> Self {
        TokenSequence { spec, ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Strict grammar check; returns the parsed groups.
    pub fn parse(&self) -> Result<Vec<Group>> {
        let layout = self.spec.layout()?;
        if let Some(pos) = self.ids.iter().position(|&id| id >= layout.total()) {
            return Err(Error::parse(
                pos,
                format!("id {} is outside V = {}", self.ids[pos], layout.total()),
            ));
        }
        parse(&self.ids, &layout, &self.spec.grammar()?, DecodeMode::Strict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> VocabLayout {
        VocabLayout::from_sizes(&[
            (SegmentKind::Special, 1),
            (SegmentKind::Start, 10),
            (SegmentKind::Length, 4),
        ])
        .unwrap()
    }

    fn grammar() -> Grammar {
        Grammar::single(vec![SegmentKind::Start, SegmentKind::Length], Some(0))
    }

    #[test]
    fn strict_parse() {
        let groups = parse(&[1, 11, 5, 14], &layout(), &grammar(), DecodeMode::Strict).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[1].values, vec![4, 3]);
        assert_eq!(groups[1].position, 2);
    }

    #[test]
    fn strict_errors_carry_positions() {
        let err = parse(&[1, 5], &layout(), &grammar(), DecodeMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 1, .. }));
        let err = parse(&[1, 11, 5], &layout(), &grammar(), DecodeMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 3, .. }));
        let err = parse(&[0, 1, 11], &layout(), &grammar(), DecodeMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 1, .. }));
    }

    #[test]
    fn lenient_remaps_and_drops_fragments() {
        // 12 at a length slot stays; 3 at a length slot snaps to length 0; trailing 7 dropped
        let groups = parse(&[12, 3, 1, 11, 7], &layout(), &grammar(), DecodeMode::Lenient).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].values, vec![9, 0]);
        assert_eq!(groups[1].values, vec![0, 0]);
        let stopped = parse(&[1, 11, 0, 2, 12], &layout(), &grammar(), DecodeMode::Lenient).unwrap();
        assert_eq!(stopped.len(), 1);
    }
}
