//! Synthetic mask generators shared by the benchmarks.

use rlemask_core::LabelMask;

/// Deterministic blocky mask: axis-aligned rectangles of varying class.
pub fn blocky_mask(side: usize, classes: u32, blocks: usize, seed: u64) -> LabelMask {
    let mut labels = vec![0u32; side * side];
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut next = |bound: usize| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % bound.max(1)
    };
    for _ in 0..blocks {
        let (y0, x0) = (next(side), next(side));
        let (h, w) = (1 + next(side / 3), 1 + next(side / 3));
        let class = 1 + next(classes as usize) as u32;
        for y in y0..(y0 + h).min(side) {
            for x in x0..(x0 + w).min(side) {
                labels[y * side + x] = class;
            }
        }
    }
    LabelMask::new(side, side, classes, labels).expect("labels are in range")
}
