//! Class-wise and instance-wise sequence layouts.
//!
//! Both layouts are a list of segments, each holding binary runs followed by
//! a terminator token. Class-wise segments come one per class in ascending
//! order and end with that class's separator. Instance-wise segments come one
//! per instance and end with the instance's class token; instance ids are
//! recovered from segment order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{apply_order, check_mask, Payload, RunShape};
use crate::error::{Error, Result};
use crate::mask::{flatten_2d, unflatten_2d, InstanceMask, LabelMask};
use crate::rle::{extract_runs, runs_to_vector, shuffle_in_place, split_runs, Reconstruct, Run, RunList};
use crate::scheme::{Scheme, SchemeConfig};
use crate::token::{parse, DecodeMode, Grammar, Group, SequenceSpec, TokenSequence};
use crate::vocab::{start_sizes, SegmentKind, VocabLayout};

/// The binary sub-scheme shared by every segment.
fn binary_shape(cfg: &SchemeConfig) -> Result<RunShape> {
    let payload = match cfg.scheme {
        Scheme::NaiveBin => Payload::Length,
        Scheme::Lac => Payload::Combined(SegmentKind::Lac),
        other => {
            return Err(Error::invalid(format!(
                "structured layouts use naive-bin or binary lac runs, not {other}"
            )))
        }
    };
    SchemeConfig { classes: 1, ..*cfg }.validate()?;
    Ok(RunShape {
        start: cfg.start_mode,
        payload,
        max_len: cfg.max_len(),
        order: cfg.order,
        height: cfg.height,
        width: cfg.width,
        implied_class: 1,
    })
}

fn structured_layout(cfg: &SchemeConfig, terminator: SegmentKind) -> Result<VocabLayout> {
    let shape = binary_shape(cfg)?;
    let mut sizes = vec![(SegmentKind::Special, u64::from(cfg.specials))];
    sizes.extend(start_sizes(cfg.start_mode, cfg.height, cfg.width));
    let run_kind = match shape.payload {
        Payload::Combined(_) => SegmentKind::Lac,
        _ => SegmentKind::Length,
    };
    sizes.push((run_kind, cfg.max_len() as u64));
    sizes.push((terminator, u64::from(cfg.classes)));
    VocabLayout::from_sizes(&sizes)
}

pub fn build_cw_layout(cfg: &SchemeConfig) -> Result<VocabLayout> {
    structured_layout(cfg, SegmentKind::Separator)
}

pub fn build_iw_layout(cfg: &SchemeConfig) -> Result<VocabLayout> {
    structured_layout(cfg, SegmentKind::Class)
}

pub fn cw_grammar(cfg: &SchemeConfig) -> Result<Grammar> {
    let shape = binary_shape(cfg)?;
    Ok(Grammar {
        alternatives: vec![shape.kinds(), vec![SegmentKind::Separator]],
        end_id: cfg.end_id(),
    })
}

pub fn iw_grammar(cfg: &SchemeConfig) -> Result<Grammar> {
    let shape = binary_shape(cfg)?;
    Ok(Grammar {
        alternatives: vec![shape.kinds(), vec![SegmentKind::Class]],
        end_id: cfg.end_id(),
    })
}

fn binary_runs(vector: &[u32], target: u32, cfg: &SchemeConfig) -> Result<RunList> {
    let binary: Vec<u32> = vector.iter().map(|&v| u32::from(v == target)).collect();
    let mut runs = split_runs(&extract_runs(&binary), cfg.max_len())?;
    apply_order(&mut runs.runs, cfg.run_order);
    Ok(runs)
}

pub fn encode_cw(mask: &LabelMask, cfg: &SchemeConfig) -> Result<TokenSequence> {
    let layout = build_cw_layout(cfg)?;
    let shape = binary_shape(cfg)?;
    check_mask(mask, cfg.height, cfg.width, cfg.classes)?;
    let vector = flatten_2d(mask, cfg.order)?;
    let mut ids = Vec::new();
    for class in 1..=cfg.classes {
        for run in binary_runs(&vector, class, cfg)?.runs {
            shape.push_run(&run, &layout, &mut ids)?;
        }
        ids.push(layout.id_of(SegmentKind::Separator, class - 1)?);
    }
    Ok(TokenSequence::new(SequenceSpec::ClassWise(*cfg), ids))
}

pub fn decode_cw(tokens: &TokenSequence, mode: DecodeMode) -> Result<LabelMask> {
    let SequenceSpec::ClassWise(cfg) = &tokens.spec else {
        return Err(Error::invalid("not a class-wise sequence"));
    };
    let layout = build_cw_layout(cfg)?;
    let shape = binary_shape(cfg)?;
    let groups = parse(&tokens.ids, &layout, &cw_grammar(cfg)?, mode)?;
    let mut runs = Vec::new();
    let mut class = 1u32;
    for g in &groups {
        if class > cfg.classes {
            if mode == DecodeMode::Strict {
                return Err(Error::parse(g.position, "tokens after the last class separator"));
            }
            break;
        }
        if g.alternative == 1 {
            if mode == DecodeMode::Strict && g.values[0] != class - 1 {
                return Err(Error::parse(
                    g.position,
                    format!("expected separator of class {class}, got {}", g.values[0] + 1),
                ));
            }
            class += 1;
        } else {
            runs.push(Run {
                class,
                ..shape.group_run(&g.values)
            });
        }
    }
    if mode == DecodeMode::Strict && class <= cfg.classes {
        return Err(Error::parse(tokens.ids.len(), "missing class separators"));
    }
    let vector = runs_to_vector(&RunList::new(runs, cfg.area()), reconstruct(mode))?;
    unflatten_2d(&vector, cfg.height, cfg.width, cfg.classes, cfg.order)
}

fn reconstruct(mode: DecodeMode) -> Reconstruct {
    match mode {
        DecodeMode::Strict => Reconstruct::Strict,
        DecodeMode::Lenient => Reconstruct::Lenient,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceOrder {
    /// Ascending index of each instance's first pixel in flatten order.
    #[default]
    FirstPixel,
    Shuffled(u64),
}

pub fn encode_iw(mask: &InstanceMask, cfg: &SchemeConfig, order: InstanceOrder) -> Result<TokenSequence> {
    let layout = build_iw_layout(cfg)?;
    let shape = binary_shape(cfg)?;
    if mask.height() != cfg.height || mask.width() != cfg.width {
        return Err(Error::invalid("instance mask size does not match the scheme"));
    }
    if mask.class_of().values().any(|&c| c > cfg.classes) {
        return Err(Error::invalid(
            "instance class exceeds the configured class count",
        ));
    }
    let ids_grid = LabelMask::new(mask.height(), mask.width(), u32::MAX, mask.ids().to_vec())?;
    let vector = flatten_2d(&ids_grid, cfg.order)?;
    let mut first_seen: Vec<u32> = Vec::new();
    for &id in &vector {
        if id != 0 && !first_seen.contains(&id) {
            first_seen.push(id);
        }
    }
    if let InstanceOrder::Shuffled(seed) = order {
        shuffle_in_place(&mut first_seen, seed);
    }
    let mut ids = Vec::new();
    for inst in first_seen {
        for run in binary_runs(&vector, inst, cfg)?.runs {
            shape.push_run(&run, &layout, &mut ids)?;
        }
        ids.push(layout.id_of(SegmentKind::Class, mask.class_of()[&inst] - 1)?);
    }
    Ok(TokenSequence::new(SequenceSpec::InstanceWise(*cfg), ids))
}

/// Decodes into the semantic labels and the instance map. Instance ids are
/// `1..` in serialization order.
pub fn decode_iw(tokens: &TokenSequence, mode: DecodeMode) -> Result<(LabelMask, InstanceMask)> {
    let SequenceSpec::InstanceWise(cfg) = &tokens.spec else {
        return Err(Error::invalid("not an instance-wise sequence"));
    };
    let layout = build_iw_layout(cfg)?;
    let shape = binary_shape(cfg)?;
    let groups = parse(&tokens.ids, &layout, &iw_grammar(cfg)?, mode)?;
    let mut runs = Vec::new();
    let mut pending = Vec::new();
    let mut class_of = BTreeMap::new();
    let mut next_instance = 1u32;
    for g in &groups {
        if g.alternative == 1 {
            class_of.insert(next_instance, g.values[0] + 1);
            runs.extend(pending.drain(..).map(|r: Run| Run {
                class: next_instance,
                ..r
            }));
            next_instance += 1;
        } else {
            pending.push(shape.group_run(&g.values));
        }
    }
    if !pending.is_empty() && mode == DecodeMode::Strict {
        let last: &Group = groups.last().expect("pending runs come from groups");
        return Err(Error::parse(last.position, "instance runs without a class token"));
    }
    let ids = runs_to_vector(&RunList::new(runs, cfg.area()), reconstruct(mode))?;
    let grid = unflatten_2d(&ids, cfg.height, cfg.width, u32::MAX, cfg.order)?.into_labels();
    let instances = InstanceMask::new(cfg.height, cfg.width, cfg.classes, grid, class_of)?;
    Ok((instances.to_label_mask(), instances))
}

/// Per-token loss weights for a class-wise or instance-wise sequence.
///
/// With `equalize`, each terminator weighs as much as the coordinate tokens
/// of its segment (at least 1); coordinate tokens always weigh 1.
pub fn token_weights(tokens: &TokenSequence, equalize: bool) -> Result<Vec<f64>> {
    if !matches!(
        tokens.spec,
        SequenceSpec::ClassWise(_) | SequenceSpec::InstanceWise(_)
    ) {
        return Err(Error::invalid(
            "token weights need a class-wise or instance-wise sequence",
        ));
    }
    let groups = tokens.parse()?;
    let mut weights = vec![1.0; tokens.len()];
    if !equalize {
        return Ok(weights);
    }
    let mut coords = 0usize;
    for g in &groups {
        if g.alternative == 1 {
            weights[g.position] = coords.max(1) as f64;
            coords = 0;
        } else {
            coords += g.values.len();
        }
    }
    Ok(weights)
}
