//! Run extraction and reconstruction over flattened label vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A stretch of `length` identical labels starting at flat index `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub length: usize,
    pub class: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<u32>,
}

impl Run {
    pub fn new(start: usize, length: usize, class: u32) -> Self {
        Run {
            start,
            length,
            class,
            instance: None,
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// Runs over a vector of known length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunList {
    pub runs: Vec<Run>,
    pub len: usize,
}

impl RunList {
    pub fn new(runs: Vec<Run>, len: usize) -> Self {
        RunList { runs, len }
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn covered(&self) -> usize {
        self.runs.iter().map(|r| r.length).sum()
    }

    pub fn is_canonical(&self) -> bool {
        self.runs.windows(2).all(|w| w[0].end() <= w[1].start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reconstruct {
    /// Overlaps and out-of-range runs are errors.
    #[default]
    Strict,
    /// Later runs overwrite earlier ones; out-of-range pixels are clipped.
    Lenient,
}

/// Maximal runs of constant nonzero label, in increasing start order.
pub fn extract_runs(vector: &[u32]) -> RunList {
    let mut runs = all_runs(vector);
    runs.runs.retain(|r| r.class != 0);
    runs
}

/// Maximal runs of constant label, background included, covering the whole vector.
pub fn all_runs(vector: &[u32]) -> RunList {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < vector.len() {
        let class = vector[i];
        let start = i;
        while i < vector.len() && vector[i] == class {
            i += 1;
        }
        runs.push(Run::new(start, i - start, class));
    }
    RunList::new(runs, vector.len())
}

/// Breaks every run longer than `max_len` into consecutive pieces.
pub fn split_runs(runs: &RunList, max_len: usize) -> Result<RunList> {
    if max_len == 0 {
        return Err(Error::invalid("max_len must be at least 1"));
    }
    let mut out = Vec::with_capacity(runs.runs.len());
    for run in &runs.runs {
        let mut start = run.start;
        let mut left = run.length;
        while left > 0 {
            let length = left.min(max_len);
            out.push(Run {
                start,
                length,
                ..*run
            });
            start += length;
            left -= length;
        }
    }
    Ok(RunList::new(out, runs.len))
}

pub fn runs_to_vector(runs: &RunList, mode: Reconstruct) -> Result<Vec<u32>> {
    let mut out = vec![0u32; runs.len];
    match mode {
        Reconstruct::Strict => {
            let mut filled = vec![false; runs.len];
            for run in &runs.runs {
                if run.length == 0 || run.end() > runs.len {
                    return Err(Error::Range {
                        start: run.start,
                        end: run.end(),
                        len: runs.len,
                    });
                }
                for p in run.start..run.end() {
                    if filled[p] {
                        return Err(Error::Overlap { pixel: p });
                    }
                    filled[p] = true;
                    out[p] = run.class;
                }
            }
        }
        Reconstruct::Lenient => {
            for run in &runs.runs {
                let end = run.end().min(runs.len);
                for px in out.iter_mut().take(end).skip(run.start) {
                    *px = run.class;
                }
            }
        }
    }
    Ok(out)
}

/// Seed-deterministic permutation of the runs.
pub fn shuffle_runs(runs: &RunList, seed: u64) -> RunList {
    let mut out = runs.clone();
    shuffle_in_place(&mut out.runs, seed);
    out
}

pub(crate) fn shuffle_in_place<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Linear-scan oracle independent of `all_runs`.
    fn naive_runs(v: &[u32]) -> Vec<(usize, usize, u32)> {
        let mut out: Vec<(usize, usize, u32)> = Vec::new();
        for (i, &l) in v.iter().enumerate() {
            if l == 0 {
                continue;
            }
            match out.last_mut() {
                Some((s, n, c)) if *c == l && *s + *n == i => *n += 1,
                _ => out.push((i, 1, l)),
            }
        }
        out
    }

    fn triples(r: &RunList) -> Vec<(usize, usize, u32)> {
        r.runs.iter().map(|r| (r.start, r.length, r.class)).collect()
    }

    #[test]
    fn extracts_binary_runs() {
        let v = [0, 1, 1, 0, 1, 1, 0, 0, 1, 1];
        assert_eq!(triples(&extract_runs(&v)), vec![(1, 2, 1), (4, 2, 1), (8, 2, 1)]);
        assert_eq!(triples(&extract_runs(&v)), naive_runs(&v));
        assert!(extract_runs(&[0; 7]).is_empty());
        assert_eq!(triples(&extract_runs(&[1, 1, 2, 2])), vec![(0, 2, 1), (2, 2, 2)]);
    }

    #[test]
    fn splits_overlong_runs() {
        let r = RunList::new(vec![Run::new(300, 125, 1)], 6400);
        assert_eq!(
            triples(&split_runs(&r, 80).unwrap()),
            vec![(300, 80, 1), (380, 45, 1)]
        );
        let r = RunList::new(vec![Run::new(5, 3, 1)], 10);
        assert_eq!(split_runs(&r, 80).unwrap(), r);
        let r = RunList::new(vec![Run::new(0, 200, 2)], 200);
        assert_eq!(
            triples(&split_runs(&r, 80).unwrap()),
            vec![(0, 80, 2), (80, 80, 2), (160, 40, 2)]
        );
        assert!(split_runs(&r, 0).is_err());
    }

    #[test]
    fn reconstructs() {
        let r = RunList::new(vec![Run::new(1, 2, 1), Run::new(4, 2, 1)], 10);
        assert_eq!(
            runs_to_vector(&r, Reconstruct::Strict).unwrap(),
            vec![0, 1, 1, 0, 1, 1, 0, 0, 0, 0]
        );
        assert_eq!(
            runs_to_vector(&RunList::new(vec![], 5), Reconstruct::Strict).unwrap(),
            vec![0; 5]
        );
        let overlapping = RunList::new(vec![Run::new(0, 3, 1), Run::new(2, 2, 2)], 5);
        assert_eq!(
            runs_to_vector(&overlapping, Reconstruct::Lenient).unwrap(),
            vec![1, 1, 2, 2, 0]
        );
        assert!(matches!(
            runs_to_vector(&overlapping, Reconstruct::Strict),
            Err(Error::Overlap { pixel: 2 })
        ));
        let long = RunList::new(vec![Run::new(3, 4, 1)], 5);
        assert!(matches!(
            runs_to_vector(&long, Reconstruct::Strict),
            Err(Error::Range { .. })
        ));
        assert_eq!(
            runs_to_vector(&long, Reconstruct::Lenient).unwrap(),
            vec![0, 0, 0, 1, 1]
        );
    }

    #[test]
    fn shuffle_edge_cases() {
        let empty = RunList::new(vec![], 4);
        assert_eq!(shuffle_runs(&empty, 9), empty);
        let one = RunList::new(vec![Run::new(1, 1, 1)], 4);
        assert_eq!(shuffle_runs(&one, 9), one);
        let three = RunList::new(vec![Run::new(0, 1, 1), Run::new(2, 1, 1), Run::new(4, 1, 2)], 6);
        for seed in [1, 2] {
            let mut a = shuffle_runs(&three, seed).runs;
            assert_eq!(shuffle_runs(&three, seed).runs, a, "seed-deterministic");
            a.sort();
            assert_eq!(a, three.runs);
        }
    }

    fn vectors() -> impl Strategy<Value = Vec<u32>> {
        prop::collection::vec(prop_oneof![3 => Just(0u32), 2 => 1u32..4], 0..200)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn extract_then_rebuild_is_identity(v in vectors()) {
            let runs = extract_runs(&v);
            prop_assert_eq!(triples(&runs), naive_runs(&v));
            prop_assert!(runs.is_canonical());
            prop_assert_eq!(runs_to_vector(&runs, Reconstruct::Strict).unwrap(), v.clone());
            prop_assert_eq!(extract_runs(&runs_to_vector(&runs, Reconstruct::Strict).unwrap()), runs);
        }

        #[test]
        fn split_preserves_pixels(v in vectors(), max_len in 1usize..6, seed in any::<u64>()) {
            let runs = extract_runs(&v);
            let split = split_runs(&runs, max_len).unwrap();
            prop_assert!(split.runs.iter().all(|r| r.length <= max_len));
            prop_assert_eq!(split.covered(), runs.covered());
            prop_assert_eq!(runs_to_vector(&split, Reconstruct::Strict).unwrap(), v.clone());
            let shuffled = shuffle_runs(&split, seed);
            prop_assert_eq!(runs_to_vector(&shuffled, Reconstruct::Strict).unwrap(), v);
        }
    }
}
