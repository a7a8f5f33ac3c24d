use std::collections::BTreeMap;

use proptest::prelude::*;
use rlemask_core::codec::{decode_split_stream, encode_split_stream, scheme_runs, tokens_per_run};
use rlemask_core::mask::tac_class_count;
use rlemask_core::structured::{decode_cw, decode_iw, encode_cw, encode_iw, InstanceOrder};
use rlemask_core::{
    decode_static, decode_video, encode_static, encode_video, DecodeMode, FlattenOrder, InstanceMask,
    LabelMask, RunOrder, Scheme, SchemeConfig, StartMode, VideoMask, VideoScheme, VideoSchemeConfig,
};

type Rect = (usize, usize, usize, usize, u32);

/// Paints rectangles (coordinates taken modulo the mask size) over a background.
fn paint(h: usize, w: usize, classes: u32, rects: &[Rect]) -> LabelMask {
    let mut labels = vec![0u32; h * w];
    for &(y, x, rh, rw, c) in rects {
        let (y, x) = (y % h, x % w);
        for yy in y..(y + rh).min(h) {
            for xx in x..(x + rw).min(w) {
                labels[yy * w + xx] = c % (classes + 1);
            }
        }
    }
    LabelMask::new(h, w, classes, labels).unwrap()
}

fn rects() -> impl Strategy<Value = Vec<Rect>> {
    prop::collection::vec((0usize..64, 0usize..64, 1usize..24, 1usize..24, 0u32..6), 0..8)
}

fn order_of(col: bool) -> FlattenOrder {
    if col {
        FlattenOrder::ColumnMajor
    } else {
        FlattenOrder::RowMajor
    }
}

/// A configuration the scheme accepts, built from free choices.
fn config(
    scheme: Scheme,
    h: usize,
    w: usize,
    classes: u32,
    coords: bool,
    col: bool,
    max_len: usize,
) -> SchemeConfig {
    let classes = if scheme.is_binary() { 1 } else { classes };
    let mode = match scheme {
        Scheme::SplitStream => StartMode::Coords,
        Scheme::NaiveBin | Scheme::NaiveMc | Scheme::Lac if coords => StartMode::Coords,
        _ => StartMode::Flat,
    };
    SchemeConfig::new(scheme, h, w, classes)
        .with_start_mode(mode)
        .with_order(order_of(col))
        .with_max_len(max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn static_round_trip(
        h in 1usize..40, w in 1usize..40, classes in 1u32..6, rects in rects(),
        coords in any::<bool>(), col in any::<bool>(), max_len in 1usize..50, specials in 0u32..3,
    ) {
        for scheme in Scheme::ALL {
            let cfg = config(scheme, h, w, classes, coords, col, max_len).with_specials(specials);
            let mask = paint(h, w, cfg.classes, &rects);
            let seq = encode_static(&mask, &cfg).unwrap();
            prop_assert_eq!(&decode_static(&seq, DecodeMode::Strict).unwrap(), &mask, "{}", scheme);
            prop_assert_eq!(&decode_static(&seq, DecodeMode::Lenient).unwrap(), &mask, "{}", scheme);
            let layout = seq.spec.layout().unwrap();
            prop_assert!(seq.ids.iter().all(|&id| id >= specials && id < layout.total()));
        }
    }

    #[test]
    fn split_streams_round_trip(h in 1usize..30, w in 1usize..30, classes in 1u32..5, rects in rects()) {
        let cfg = SchemeConfig::new(Scheme::SplitStream, h, w, classes);
        let mask = paint(h, w, classes, &rects);
        let streams = encode_split_stream(&mask, &cfg).unwrap();
        prop_assert_eq!(decode_split_stream(&streams, &cfg, DecodeMode::Strict).unwrap(), mask);
    }

    #[test]
    fn shuffled_absolute_starts_decode_identically(
        h in 1usize..30, w in 1usize..30, classes in 1u32..5, rects in rects(), seed in any::<u64>(),
    ) {
        for scheme in Scheme::ALL.into_iter().filter(|s| s.has_absolute_starts()) {
            let cfg = config(scheme, h, w, classes, false, false, w);
            let mask = paint(h, w, cfg.classes, &rects);
            let shuffled = encode_static(&mask, &cfg.with_run_order(RunOrder::Shuffled(seed))).unwrap();
            prop_assert_eq!(&decode_static(&shuffled, DecodeMode::Strict).unwrap(), &mask, "{}", scheme);
        }
    }

    #[test]
    fn token_count_law(h in 1usize..40, w in 1usize..40, classes in 2u32..6, rects in rects()) {
        let mask = paint(h, w, classes, &rects);
        let naive = encode_static(&mask, &SchemeConfig::new(Scheme::NaiveMc, h, w, classes)).unwrap();
        let lac = encode_static(&mask, &SchemeConfig::new(Scheme::Lac, h, w, classes)).unwrap();
        prop_assert_eq!(2 * naive.len(), 3 * lac.len());
        let runs = scheme_runs(&mask, &SchemeConfig::new(Scheme::Lac, h, w, classes)).unwrap();
        prop_assert_eq!(lac.len(), runs.runs.len() * tokens_per_run(&lac_cfg(h, w, classes)).unwrap());
    }

    #[test]
    fn video_round_trip(
        n in 1usize..5, h in 1usize..16, w in 1usize..16, classes in 1u32..4,
        frames in prop::collection::vec(rects(), 4), base_pick in 0usize..3,
    ) {
        let video = VideoMask::new((0..n).map(|t| paint(h, w, classes, &frames[t])).collect()).unwrap();
        let base_scheme = match (base_pick, classes) {
            (0, 1) => Scheme::NaiveBin,
            (0, _) | (1, _) => Scheme::NaiveMc,
            _ => Scheme::Lac,
        };
        for v in VideoScheme::ALL {
            if matches!(v, VideoScheme::Tac | VideoScheme::Ltac) && tac_class_count(classes, n).is_none() {
                continue;
            }
            let cfg = VideoSchemeConfig::new(v, n, SchemeConfig::new(base_scheme, h, w, classes));
            let seq = encode_video(&video, &cfg).unwrap();
            prop_assert_eq!(&decode_video(&seq, DecodeMode::Strict).unwrap(), &video, "{}", v);
        }
    }

    #[test]
    fn structured_round_trip(h in 1usize..24, w in 1usize..24, classes in 1u32..5, rects in rects(), lac in any::<bool>()) {
        let mask = paint(h, w, classes, &rects);
        let base = if lac { Scheme::Lac } else { Scheme::NaiveBin };
        let cfg = SchemeConfig::new(base, h, w, classes);
        prop_assert_eq!(decode_cw(&encode_cw(&mask, &cfg).unwrap(), DecodeMode::Strict).unwrap(), mask.clone());

        // every rectangle is its own instance
        let mut ids = vec![0u32; h * w];
        let mut class_of = BTreeMap::new();
        for (i, &(y, x, rh, rw, c)) in rects.iter().enumerate() {
            let id = i as u32 + 1;
            class_of.insert(id, 1 + c % classes);
            for yy in (y % h)..(y % h + rh).min(h) {
                for xx in (x % w)..(x % w + rw).min(w) {
                    ids[yy * w + xx] = id;
                }
            }
        }
        let inst = InstanceMask::new(h, w, classes, ids, class_of).unwrap();
        let seq = encode_iw(&inst, &cfg, InstanceOrder::FirstPixel).unwrap();
        let (semantic, back) = decode_iw(&seq, DecodeMode::Strict).unwrap();
        prop_assert_eq!(semantic, inst.to_label_mask());
        prop_assert_eq!(back.present_instances().len(), inst.present_instances().len());
    }
}

fn lac_cfg(h: usize, w: usize, classes: u32) -> SchemeConfig {
    SchemeConfig::new(Scheme::Lac, h, w, classes)
}

#[test]
fn shuffled_bac_does_not_decode_identically() {
    let mask = LabelMask::from_rows(&[vec![0, 1, 1, 0, 2, 2, 2, 0]], 2).unwrap();
    let cfg = SchemeConfig::new(Scheme::Bac, 1, 8, 2);
    let differs = (0..5u64).any(|seed| {
        let seq = encode_static(&mask, &cfg.with_run_order(RunOrder::Shuffled(seed))).unwrap();
        decode_static(&seq, DecodeMode::Strict).unwrap() != mask
    });
    assert!(differs);
}
