//! Token corruption and robustness measurement.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_static, encode_static};
use crate::error::{Error, Result};
use crate::mask::LabelMask;
use crate::metrics::{mask_metrics, ClassSelection};
use crate::scheme::SchemeConfig;
use crate::token::{DecodeMode, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    /// Remove `k` whole run groups.
    DropRun(usize),
    /// Remove `k` individual tokens.
    DropToken(usize),
    /// Move `k` tokens to another id at most `radius` away within the same segment.
    Perturb { k: usize, radius: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corrupted {
    pub sequence: TokenSequence,
    /// Indices (into the parsed groups) of the groups that were touched, ascending.
    pub groups: Vec<usize>,
    /// Set when `k` was clamped to the available units.
    pub warning: Option<String>,
}

fn pick(rng: &mut ChaCha8Rng, available: usize, k: usize, what: &str) -> (Vec<usize>, Option<String>) {
    let warning = (k > available).then(|| format!("requested {k} {what}, only {available} available"));
    let mut chosen = sample(rng, available, k.min(available)).into_vec();
    chosen.sort_unstable();
    (chosen, warning)
}

pub fn corrupt(tokens: &TokenSequence, corruption: Corruption, seed: u64) -> Result<Corrupted> {
    let groups = tokens.parse()?;
    let layout = tokens.spec.layout()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group_of = |pos: usize| groups.partition_point(|g| g.position <= pos) - 1;

    let (ids, touched, warning) = match corruption {
        Corruption::DropRun(k) => {
            // terminator groups of the structured layouts are not runs
            let runs: Vec<usize> = (0..groups.len())
                .filter(|&i| groups[i].alternative == 0)
                .collect();
            let (chosen, warning) = pick(&mut rng, runs.len(), k, "runs");
            let dropped: Vec<usize> = chosen.iter().map(|&i| runs[i]).collect();
            let mut ids = Vec::with_capacity(tokens.len());
            for (i, g) in groups.iter().enumerate() {
                if dropped.binary_search(&i).is_err() {
                    ids.extend_from_slice(&tokens.ids[g.position..g.position + g.values.len()]);
                }
            }
            (ids, dropped, warning)
        }
        Corruption::DropToken(k) => {
            let (chosen, warning) = pick(&mut rng, tokens.len(), k, "tokens");
            let ids = tokens
                .ids
                .iter()
                .enumerate()
                .filter(|(i, _)| chosen.binary_search(i).is_err())
                .map(|(_, &id)| id)
                .collect();
            let mut touched: Vec<usize> = chosen.iter().map(|&p| group_of(p)).collect();
            touched.dedup();
            (ids, touched, warning)
        }
        Corruption::Perturb { k, radius } => {
            let (chosen, warning) = pick(&mut rng, tokens.len(), k, "tokens");
            let mut ids = tokens.ids.clone();
            for &pos in &chosen {
                let (kind, value) = layout.kind_of(ids[pos]).expect("parsed ids are in range");
                let seg = layout.segment(kind).expect("kind from layout");
                let lo = value.saturating_sub(radius);
                let hi = value.saturating_add(radius).min(seg.size - 1);
                if hi > lo {
                    // uniform over [lo, hi] without the current value
                    let mut v = rng.gen_range(lo..hi);
                    if v >= value {
                        v += 1;
                    }
                    ids[pos] = seg.offset + v;
                }
            }
            let mut touched: Vec<usize> = chosen.iter().map(|&p| group_of(p)).collect();
            touched.dedup();
            (ids, touched, warning)
        }
    };
    Ok(Corrupted {
        sequence: TokenSequence::new(tokens.spec, ids),
        groups: touched,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub trials: usize,
    pub mean_dice: f64,
    pub min_dice: f64,
    pub mean_changed: f64,
    pub max_changed: usize,
    pub warnings: usize,
}

pub fn changed_pixels(a: &LabelMask, b: &LabelMask) -> usize {
    a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count()
}

/// Trial `t` corrupts with seed `seed + t` and decodes leniently.
pub fn robustness_eval(
    mask: &LabelMask,
    cfg: &SchemeConfig,
    corruption: Corruption,
    trials: usize,
    seed: u64,
) -> Result<RobustnessReport> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let clean_tokens = encode_static(mask, cfg)?;
    let clean = decode_static(&clean_tokens, DecodeMode::Strict)?;
    let mut dice = Vec::with_capacity(trials);
    let mut changed = Vec::with_capacity(trials);
    let mut warnings = 0;
    for t in 0..trials {
        let c = corrupt(&clean_tokens, corruption, seed.wrapping_add(t as u64))?;
        warnings += usize::from(c.warning.is_some());
        let decoded = decode_static(&c.sequence, DecodeMode::Lenient)?;
        dice.push(mask_metrics(&clean, &decoded, ClassSelection::default())?.dice);
        changed.push(changed_pixels(&clean, &decoded));
    }
    Ok(RobustnessReport {
        trials,
        mean_dice: dice.iter().sum::<f64>() / trials as f64,
        min_dice: dice.iter().copied().fold(f64::INFINITY, f64::min),
        mean_changed: changed.iter().sum::<usize>() as f64 / trials as f64,
        max_changed: changed.into_iter().max().unwrap_or(0),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Morph {
    Close,
    Open,
}

/// Square-element max (`dilate`) or min filter over in-bounds neighbours.
fn filter(bits: &[bool], h: usize, w: usize, r: usize, dilate: bool) -> Vec<bool> {
    let pass = |src: &[bool], horizontal: bool| -> Vec<bool> {
        let mut out = vec![false; h * w];
        for y in 0..h {
            for x in 0..w {
                let (c, n) = if horizontal { (x, w) } else { (y, h) };
                let lo = c.saturating_sub(r);
                let hi = (c + r).min(n - 1);
                let at = |i: usize| {
                    if horizontal {
                        src[y * w + i]
                    } else {
                        src[i * w + x]
                    }
                };
                out[y * w + x] = if dilate {
                    (lo..=hi).any(at)
                } else {
                    (lo..=hi).all(at)
                };
            }
        }
        out
    };
    pass(&pass(bits, true), false)
}

/// Per-class binary closing or opening with a `(2r+1)`-square element.
/// Where classes overlap afterwards the smallest class id wins.
pub fn morph_repair(mask: &LabelMask, op: Morph, radius: usize) -> Result<LabelMask> {
    if radius == 0 {
        return Err(Error::invalid("radius must be at least 1"));
    }
    let (h, w) = (mask.height(), mask.width());
    let mut out = vec![0u32; h * w];
    for class in (1..=mask.classes()).rev() {
        let bits: Vec<bool> = mask.labels().iter().map(|&l| l == class).collect();
        if !bits.iter().any(|&b| b) {
            continue;
        }
        let result = match op {
            Morph::Close => filter(&filter(&bits, h, w, radius, true), h, w, radius, false),
            Morph::Open => filter(&filter(&bits, h, w, radius, false), h, w, radius, true),
        };
        for (px, on) in out.iter_mut().zip(result) {
            if on {
                *px = class;
            }
        }
    }
    LabelMask::new(h, w, mask.classes(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rle::Run;
    use crate::scheme::Scheme;

    fn three_runs() -> (LabelMask, SchemeConfig) {
        let m = LabelMask::from_rows(&[vec![1, 1, 0, 1, 0, 0, 1, 1, 1, 0]], 1).unwrap();
        (m, SchemeConfig::new(Scheme::NaiveBin, 1, 10, 1))
    }

    #[test]
    fn drop_run_counts() {
        let (m, cfg) = three_runs();
        let seq = encode_static(&m, &cfg).unwrap();
        assert_eq!(corrupt(&seq, Corruption::DropRun(0), 1).unwrap().sequence, seq);
        let one = corrupt(&seq, Corruption::DropRun(1), 1).unwrap();
        assert_eq!(one.sequence.len(), 4);
        assert_eq!(one.groups.len(), 1);
        let all = corrupt(&seq, Corruption::DropRun(5), 1).unwrap();
        assert!(all.sequence.is_empty());
        assert!(all.warning.is_some());
    }

    #[test]
    fn dropping_a_run_changes_exactly_its_pixels() {
        let (m, cfg) = three_runs();
        let seq = encode_static(&m, &cfg).unwrap();
        let lengths = [2, 1, 3];
        for seed in 0..10 {
            let c = corrupt(&seq, Corruption::DropRun(1), seed).unwrap();
            let decoded = decode_static(&c.sequence, DecodeMode::Lenient).unwrap();
            assert_eq!(changed_pixels(&m, &decoded), lengths[c.groups[0]]);
        }
    }

    #[test]
    fn perturb_stays_in_segment() {
        let (m, cfg) = three_runs();
        let seq = encode_static(&m, &cfg).unwrap();
        let layout = seq.spec.layout().unwrap();
        for seed in 0..20 {
            let c = corrupt(&seq, Corruption::Perturb { k: 2, radius: 2 }, seed).unwrap();
            c.sequence.parse().unwrap();
            for (a, b) in seq.ids.iter().zip(&c.sequence.ids) {
                let (ka, va) = layout.kind_of(*a).unwrap();
                let (kb, vb) = layout.kind_of(*b).unwrap();
                assert_eq!(ka, kb);
                assert!(va.abs_diff(vb) <= 2);
            }
        }
    }

    #[test]
    fn robustness_without_corruption_is_perfect() {
        let (m, cfg) = three_runs();
        let r = robustness_eval(&m, &cfg, Corruption::DropRun(0), 3, 7).unwrap();
        assert_eq!((r.mean_dice, r.min_dice, r.max_changed), (1.0, 1.0, 0));
    }

    #[test]
    fn bac_perturbation_leaves_the_prefix_alone() {
        let m = LabelMask::from_rows(&[vec![0, 0, 1, 1, 0, 2, 2, 2, 0, 0]], 2).unwrap();
        let cfg = SchemeConfig::new(Scheme::Bac, 1, 10, 2);
        let seq = encode_static(&m, &cfg).unwrap();
        // clean run starts by prefix sums
        let runs: Vec<Run> = crate::codec::scheme_runs(&m, &cfg).unwrap().runs;
        for seed in 0..30 {
            let c = corrupt(&seq, Corruption::Perturb { k: 1, radius: 3 }, seed).unwrap();
            let decoded = decode_static(&c.sequence, DecodeMode::Lenient).unwrap();
            let start = runs[c.groups[0]].start;
            assert_eq!(&decoded.labels()[..start], &m.labels()[..start]);
        }
    }

    #[test]
    fn closing_fills_a_single_gap() {
        let strip = LabelMask::from_rows(&[vec![1, 1, 0, 1, 1]], 1).unwrap();
        let closed = morph_repair(&strip, Morph::Close, 1).unwrap();
        assert_eq!(closed.labels(), &[1; 5]);
        let empty = LabelMask::zeros(4, 4, 2).unwrap();
        assert_eq!(morph_repair(&empty, Morph::Open, 1).unwrap(), empty);
        assert!(morph_repair(&strip, Morph::Close, 0).is_err());
    }

    #[test]
    fn closing_keeps_solid_blobs() {
        let mut labels = vec![0u32; 49];
        for y in 2..5 {
            for x in 2..5 {
                labels[y * 7 + x] = 1;
            }
        }
        let blob = LabelMask::new(7, 7, 1, labels).unwrap();
        assert_eq!(morph_repair(&blob, Morph::Close, 1).unwrap(), blob);
        assert_eq!(morph_repair(&blob, Morph::Open, 1).unwrap(), blob);
    }

    #[test]
    fn opening_removes_specks() {
        let mut labels = vec![0u32; 25];
        labels[12] = 2;
        let speck = LabelMask::new(5, 5, 2, labels).unwrap();
        assert!(morph_repair(&speck, Morph::Open, 1).unwrap().is_empty());
    }
}
