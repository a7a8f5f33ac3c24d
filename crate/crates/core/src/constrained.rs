//! Grammar-restricted argmax decoding of an `L x V` score matrix.
//!
//! At every row only the ids the grammar allows at that position compete.
//! Ties go to the smallest id. A group is only opened when it fits in the
//! remaining rows, so the output always parses.

use crate::error::{Error, Result};
use crate::token::{SequenceSpec, TokenSequence};
use crate::vocab::{Segment, VocabLayout};

/// Index of the largest score among `ids`, smallest id on ties.
fn argmax_over(row: &[f32], ids: impl Iterator<Item = u32>) -> Option<u32> {
    let mut best: Option<(u32, f32)> = None;
    for id in ids {
        let s = row[id as usize];
        // NaN never displaces a finite score
        if best.is_none_or(|(_, b)| s > b || (b.is_nan() && !s.is_nan())) {
            best = Some((id, s));
        }
    }
    best.map(|(id, _)| id)
}

fn segment_ids(seg: &Segment) -> impl Iterator<Item = u32> {
    seg.offset..seg.offset + seg.size
}

pub fn constrained_argmax_decode(scores: &[Vec<f32>], spec: &SequenceSpec) -> Result<TokenSequence> {
    let layout = spec.layout()?;
    let grammar = spec.grammar()?;
    check_shape(scores, &layout)?;

    let mut ids = Vec::new();
    let mut row = 0;
    while row < scores.len() {
        let remaining = scores.len() - row;
        let openers: Vec<(usize, &Segment)> = grammar
            .alternatives
            .iter()
            .enumerate()
            .filter(|(_, g)| g.len() <= remaining)
            .filter_map(|(i, g)| layout.segment(g[0]).map(|s| (i, s)))
            .collect();
        let candidates = grammar
            .end_id
            .into_iter()
            .chain(openers.iter().flat_map(|(_, s)| segment_ids(s)));
        let Some(first) = argmax_over(&scores[row], candidates) else {
            break;
        };
        if Some(first) == grammar.end_id {
            break;
        }
        let (alt, _) = openers
            .iter()
            .find(|(_, s)| s.contains(first))
            .expect("chosen id comes from an opener segment");
        ids.push(first);
        for (k, kind) in grammar.alternatives[*alt].iter().enumerate().skip(1) {
            let seg = layout.segment(*kind).expect("grammar kinds exist in the layout");
            let id = argmax_over(&scores[row + k], segment_ids(seg)).expect("segments are non-empty");
            ids.push(id);
        }
        row += grammar.alternatives[*alt].len();
    }
    Ok(TokenSequence::new(*spec, ids))
}

/// Plain per-row argmax over the full vocabulary, for comparison.
pub fn unconstrained_argmax(scores: &[Vec<f32>]) -> Vec<u32> {
    scores
        .iter()
        .map(|row| argmax_over(row, 0..row.len() as u32).unwrap_or(0))
        .collect()
}

fn check_shape(scores: &[Vec<f32>], layout: &VocabLayout) -> Result<()> {
    if let Some(bad) = scores.iter().position(|r| r.len() != layout.total() as usize) {
        return Err(Error::invalid(format!(
            "score row {bad} has {} columns, vocabulary has {}",
            scores[bad].len(),
            layout.total()
        )));
    }
    Ok(())
}
