use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rlemask_core::io::{self, ManifestEntry, PatchManifest};
use rlemask_core::metrics::{
    compute_metrics, concentration_mae, length_stats, subsample_quality, ConfusionMatrix,
};
use rlemask_core::noise::{robustness_eval, Corruption};
use rlemask_core::patch::{
    augment_patch, extract_patch, patchify, recompose, unaugment_patch, Combiner, Transform,
};
use rlemask_core::planner::{feasibility_report, vocab_breakdown, vocab_table, PlanParams, PlanScheme};
use rlemask_core::structured::{build_cw_layout, build_iw_layout, encode_cw};
use rlemask_core::{encode_static, ClassSelection, DecodeMode, Error, Metrics, Scheme, SchemeConfig};

use crate::codec::{self, codec, decode, encode_path, load_mask, static_config, write_decoded, Codec};
use crate::table::{num, opt, Table};
use crate::{Cli, Command, CorruptionKind, Global, Mismatch};

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Encode {
            input,
            output,
            shuffle,
        } => encode(g, input, output.as_deref(), *shuffle),
        Command::Decode {
            input,
            output,
            lenient,
        } => {
            let seq = io::read_tokens(input)?;
            let mode = if *lenient {
                DecodeMode::Lenient
            } else {
                DecodeMode::Strict
            };
            write_decoded(output, &decode(&seq, mode)?)
        }
        Command::Roundtrip { inputs } => roundtrip(g, inputs),
        Command::Vocab { limit, table } => vocab(g, *limit, *table),
        Command::Stats {
            inputs,
            thresholds,
            schemes,
        } => stats(g, inputs, thresholds, schemes),
        Command::Patchify {
            input,
            patch,
            stride,
            out_dir,
            augment,
        } => patchify_cmd(g, input, *patch, stride.unwrap_or(*patch), out_dir, *augment),
        Command::Recompose {
            manifest,
            combiner,
            output,
        } => recompose_cmd(g, manifest, combiner, output),
        Command::Metrics {
            gt,
            pred,
            foreground_only,
            concentration_class,
        } => metrics_cmd(g, gt, pred, *foreground_only, *concentration_class),
        Command::SubsampleQuality {
            inputs,
            size,
            foreground_only,
        } => subsample_cmd(g, inputs, *size, *foreground_only),
        Command::Noise {
            input,
            corruption,
            k,
            radius,
            trials,
        } => noise_cmd(g, input, *corruption, *k, *radius, *trials),
        Command::Viz {
            input,
            output,
            scale,
            overlay,
        } => {
            let mask = load_mask(g, input)?;
            let order = match g.flatten {
                crate::Flatten::Row => rlemask_core::FlattenOrder::RowMajor,
                crate::Flatten::Col => rlemask_core::FlattenOrder::ColumnMajor,
            };
            crate::render::render(&mask, order, *scale, *overlay)
                .save(output)
                .map_err(|e| Error::Format {
                    path: output.clone(),
                    message: e.to_string(),
                })?;
            Ok(())
        }
    }
}

fn emit(g: &Global, table: &Table) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(table.render(g.output_format).as_bytes())?;
    Ok(())
}

/// Files named directly plus the masks inside named directories, sorted.
fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for p in inputs {
        if p.is_dir() {
            paths.extend(io::list_masks(p)?);
        } else {
            paths.push(p.clone());
        }
    }
    paths.sort();
    paths.dedup();
    if paths.is_empty() {
        bail!(Error::InvalidArgument("no input masks".into()));
    }
    Ok(paths)
}

fn encode(g: &Global, input: &Path, output: Option<&Path>, shuffle: bool) -> Result<()> {
    let (_, seq) = encode_path(g, input, shuffle)?;
    match output {
        Some(p) => io::write_tokens(p, &seq)?,
        None => std::io::stdout()
            .lock()
            .write_all(io::format_tokens(&seq).as_bytes())?,
    }
    Ok(())
}

fn roundtrip(g: &Global, inputs: &[PathBuf]) -> Result<()> {
    // video inputs are frame directories and are taken as given
    let paths = match codec(g)? {
        Codec::Video(_) => {
            let mut p = inputs.to_vec();
            p.sort();
            p
        }
        _ => expand(inputs)?,
    };
    let results: Vec<Result<(usize, usize)>> = paths
        .par_iter()
        .map(|p| {
            let (original, seq) = encode_path(g, p, false)?;
            let back = codec::decode(&seq, DecodeMode::Strict)?;
            // the token file text must survive as well
            let reparsed = io::parse_tokens(&io::format_tokens(&seq)).map_err(Error::InvalidArgument)?;
            if reparsed != seq {
                bail!(Error::InvalidArgument("token file did not round-trip".into()));
            }
            Ok((seq.len(), original.mismatches(&back)))
        })
        .collect();
    let mut table = Table::new(["input", "tokens", "mismatched", "status"]);
    let mut failed = 0;
    for (p, r) in paths.iter().zip(results) {
        let (tokens, bad) = r.with_context(|| p.display().to_string())?;
        failed += usize::from(bad > 0);
        let status = if bad == 0 { "ok" } else { "MISMATCH" };
        table.push(vec![
            p.display().to_string(),
            tokens.to_string(),
            bad.to_string(),
            status.into(),
        ]);
    }
    emit(g, &table)?;
    if failed > 0 {
        bail!(Mismatch(failed));
    }
    Ok(())
}

fn vocab(g: &Global, limit: u64, table_frames: Option<u64>) -> Result<()> {
    let side = g
        .mask_size
        .ok_or_else(|| Error::InvalidArgument("vocab needs --mask-size".into()))?;
    let mut p = PlanParams::new(side as u64, u64::from(g.classes)).specials(u64::from(g.specials));
    if let Some(mode) = codec::start_mode(g)? {
        p = p.start_mode(mode);
    }
    if let Some(n) = g.frames {
        p = p.frames(n as u64);
    }
    let plan = match codec(g)? {
        Codec::Static(s) => Some(PlanScheme::Static(s)),
        Codec::Video(v) => Some(PlanScheme::Video(v)),
        Codec::ClassWise | Codec::InstanceWise => None,
    };
    let (segments, total): (Vec<(String, u64)>, u64) = match plan {
        Some(plan) => {
            let b = vocab_breakdown(plan, &p)?;
            (
                b.segments.iter().map(|(k, s)| (k.to_string(), *s)).collect(),
                b.total,
            )
        }
        None => {
            let cfg = SchemeConfig::square(Scheme::NaiveBin, side, g.classes).with_specials(g.specials);
            let cfg = match codec::start_mode(g)? {
                Some(m) => cfg.with_start_mode(m),
                None => cfg,
            };
            let layout = if g.scheme == "cw" {
                build_cw_layout(&cfg)?
            } else {
                build_iw_layout(&cfg)?
            };
            let segs = layout
                .segments()
                .iter()
                .map(|s| (s.kind.to_string(), u64::from(s.size)))
                .collect();
            (segs, u64::from(layout.total()))
        }
    };
    let mut t = Table::new(["segment", "size"]);
    for (k, s) in segments {
        t.push(vec![k, s.to_string()]);
    }
    t.push(vec!["total".into(), total.to_string()]);
    emit(g, &t)?;
    println!("V = {total}");
    let fits = total < limit;
    println!("fits V < {limit}: {}", if fits { "yes" } else { "no" });

    if let Some(PlanScheme::Video(v)) = plan {
        let r = feasibility_report(v, &p, limit);
        let mut t = Table::new([
            "scheme",
            "side",
            "classes",
            "limit",
            "max-frames",
            "stated",
            "discrepancy",
        ]);
        t.push(vec![
            r.scheme.to_string(),
            r.side.to_string(),
            r.classes.to_string(),
            r.limit.to_string(),
            r.formula_frames.to_string(),
            r.stated_frames
                .map(|n| n.to_string())
                .unwrap_or_else(|| "-".into()),
            if r.discrepancy { "yes" } else { "no" }.into(),
        ]);
        emit(g, &t)?;
        if let Some(d) = r.diagnostic {
            println!("note: {d}");
        }
    }
    if let Some(n) = table_frames {
        let rows = vocab_table(&p, 1..=n.max(1));
        let names = rows
            .first()
            .map(|(_, r)| r.iter().map(|(v, _)| v.to_string()).collect::<Vec<_>>())
            .unwrap_or_default();
        let mut t = Table::new(std::iter::once("frames".to_string()).chain(names));
        for (frames, row) in rows {
            let cells = row
                .iter()
                .map(|(_, v)| v.map(|v| v.to_string()).unwrap_or_else(|| "overflow".into()));
            t.push(std::iter::once(frames.to_string()).chain(cells).collect());
        }
        emit(g, &t)?;
    }
    Ok(())
}

fn sequence_length(g: &Global, codec: Codec, mask: &rlemask_core::LabelMask) -> Result<usize> {
    Ok(match codec {
        Codec::Static(s) => encode_static(mask, &static_config(g, s, mask.height(), mask.width())?)?.len(),
        Codec::ClassWise => {
            let base = g.base.as_deref().unwrap_or("naive-bin").parse::<Scheme>()?;
            let mut cfg =
                SchemeConfig::new(base, mask.height(), mask.width(), g.classes).with_specials(g.specials);
            if let Some(m) = codec::start_mode(g)? {
                cfg = cfg.with_start_mode(m);
            }
            encode_cw(mask, &cfg)?.len()
        }
        other => bail!(Error::InvalidArgument(format!(
            "stats does not support {other:?}"
        ))),
    })
}

fn stats(g: &Global, inputs: &[PathBuf], thresholds: &[usize], schemes: &[String]) -> Result<()> {
    let paths = expand(inputs)?;
    let masks = paths
        .par_iter()
        .map(|p| load_mask(g, p).with_context(|| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = if schemes.is_empty() {
        vec![g.scheme.clone()]
    } else {
        schemes.to_vec()
    };
    let headers = ["scheme", "count", "mean", "max"]
        .into_iter()
        .map(String::from)
        .chain(thresholds.iter().map(|t| format!(">{t} (%)")));
    let mut table = Table::new(headers);
    for name in names {
        let codec: Codec = name.parse()?;
        let lengths = masks
            .par_iter()
            .map(|m| sequence_length(g, codec, m))
            .collect::<Result<Vec<_>>>()?;
        let s = length_stats(&lengths, thresholds)?;
        let mut row = vec![name, s.count.to_string(), num(s.mean), s.max.to_string()];
        row.extend(s.exceeding.iter().map(|&(_, pct)| num(pct)));
        table.push(row);
    }
    emit(g, &table)
}

const TRANSFORMS: [Transform; 6] = [
    Transform::Rot90(1),
    Transform::Rot90(2),
    Transform::Rot90(3),
    Transform::FlipH,
    Transform::FlipV,
    Transform::Rot90(0),
];

fn patchify_cmd(
    g: &Global,
    input: &Path,
    patch: usize,
    stride: usize,
    out_dir: &Path,
    augment: bool,
) -> Result<()> {
    let mask = io::read_mask(input, g.classes)?;
    let grid = patchify(mask.height(), mask.width(), patch, stride)?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let digits = grid.origins.len().to_string().len().max(4);
    let mut entries = Vec::with_capacity(grid.origins.len());
    for (i, &(top, left)) in grid.origins.iter().enumerate() {
        let transforms = if augment {
            vec![TRANSFORMS[rng.gen_range(0..TRANSFORMS.len())]]
        } else {
            Vec::new()
        };
        let p = augment_patch(&extract_patch(&mask, top, left, patch)?, &transforms)?;
        let file = format!("patch_{i:0digits$}.png");
        io::write_mask(&out_dir.join(&file), &p)?;
        entries.push(ManifestEntry {
            file,
            top,
            left,
            transforms,
        });
    }
    let manifest = PatchManifest {
        height: mask.height(),
        width: mask.width(),
        classes: mask.classes(),
        patch,
        stride,
        seed: augment.then_some(g.seed),
        patches: entries,
    };
    io::write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    let mut t = Table::new(["patches", "patch", "stride", "manifest"]);
    t.push(vec![
        manifest.patches.len().to_string(),
        patch.to_string(),
        stride.to_string(),
        out_dir.join("manifest.json").display().to_string(),
    ]);
    emit(g, &t)
}

fn recompose_cmd(g: &Global, manifest_path: &Path, combiner: &str, output: &Path) -> Result<()> {
    let combiner: Combiner = combiner.parse()?;
    let manifest = io::read_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let patches = manifest
        .patches
        .par_iter()
        .map(|e| {
            let p = io::read_mask(&dir.join(&e.file), manifest.classes)?;
            Ok((unaugment_patch(&p, &e.transforms)?, (e.top, e.left)))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = recompose(&patches, manifest.height, manifest.width, combiner)?;
    io::write_mask(output, &r.mask)?;
    let mut t = Table::new(["combiner", "patches", "uncovered"]);
    t.push(vec![
        combiner_name(combiner),
        patches.len().to_string(),
        r.uncovered.to_string(),
    ]);
    emit(g, &t)
}

fn combiner_name(c: Combiner) -> String {
    format!("{c:?}").to_lowercase()
}

fn pair_paths(gt: &Path, pred: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    if !gt.is_dir() {
        return Ok(vec![(gt.to_path_buf(), pred.to_path_buf())]);
    }
    let a = io::list_masks(gt)?;
    let b = io::list_masks(pred)?;
    let names = |v: &[PathBuf]| {
        v.iter()
            .map(|p| p.file_name().map(|n| n.to_owned()))
            .collect::<Vec<_>>()
    };
    if names(&a) != names(&b) {
        bail!(Error::InvalidArgument(
            "ground-truth and prediction directories hold different file names".into()
        ));
    }
    Ok(a.into_iter().zip(b).collect())
}

fn metrics_table(g: &Global, label: &str, m: &Metrics) -> Result<()> {
    let mut t = Table::new(["class", "rec", "prec", "dice"]);
    for c in &m.per_class {
        t.push(vec![c.class.to_string(), opt(c.rec), opt(c.prec), opt(c.dice)]);
    }
    emit(g, &t)?;
    let mut s = Table::new([
        "set",
        "rec",
        "prec",
        "fw_rec",
        "fw_prec",
        "fw_prec_literal",
        "dice",
        "excluded",
    ]);
    let excluded: Vec<String> = m.excluded.iter().map(u32::to_string).collect();
    s.push(vec![
        label.into(),
        num(m.rec),
        num(m.prec),
        num(m.fw_rec),
        num(m.fw_prec),
        num(m.fw_prec_literal),
        num(m.dice),
        if excluded.is_empty() {
            "-".into()
        } else {
            excluded.join(";")
        },
    ]);
    emit(g, &s)
}

fn metrics_cmd(g: &Global, gt: &Path, pred: &Path, foreground_only: bool, conc: Option<u32>) -> Result<()> {
    let pairs = pair_paths(gt, pred)?;
    let loaded = pairs
        .par_iter()
        .map(|(a, b)| Ok((io::read_mask(a, g.classes)?, io::read_mask(b, g.classes)?)))
        .collect::<Result<Vec<_>>>()?;
    let matrices = loaded
        .par_iter()
        .map(|(a, b)| {
            let mut cm = ConfusionMatrix::new(g.classes);
            cm.accumulate(a, b)?;
            Ok(cm)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = ConfusionMatrix::new(g.classes);
    for cm in &matrices {
        total.merge(cm)?;
    }
    let selection = if foreground_only {
        ClassSelection::foreground_only()
    } else {
        ClassSelection::default()
    };
    metrics_table(g, "all", &compute_metrics(&total, selection)?)?;
    if let Some(class) = conc {
        let c = concentration_mae(&loaded, class)?;
        let mut t = Table::new(["input", "concentration-mae"]);
        for ((p, _), e) in pairs.iter().zip(&c.per_image) {
            t.push(vec![p.display().to_string(), num(*e)]);
        }
        t.push(vec!["median".into(), num(c.median)]);
        emit(g, &t)?;
    }
    Ok(())
}

fn subsample_cmd(g: &Global, inputs: &[PathBuf], size: usize, foreground_only: bool) -> Result<()> {
    let paths = expand(inputs)?;
    let selection = if foreground_only {
        ClassSelection::foreground_only()
    } else {
        ClassSelection::default()
    };
    let results = paths
        .par_iter()
        .map(|p| {
            let m = io::read_mask(p, g.classes)?;
            Ok(subsample_quality(&m, size, selection)?)
        })
        .collect::<Result<Vec<Metrics>>>()?;
    let mut t = Table::new(["input", "rec", "prec", "fw_rec", "fw_prec", "dice"]);
    for (p, m) in paths.iter().zip(&results) {
        t.push(vec![
            p.display().to_string(),
            num(m.rec),
            num(m.prec),
            num(m.fw_rec),
            num(m.fw_prec),
            num(m.dice),
        ]);
    }
    let n = results.len() as f64;
    let avg = |f: fn(&Metrics) -> f64| num(results.iter().map(f).sum::<f64>() / n);
    t.push(vec![
        "mean".into(),
        avg(|m| m.rec),
        avg(|m| m.prec),
        avg(|m| m.fw_rec),
        avg(|m| m.fw_prec),
        avg(|m| m.dice),
    ]);
    emit(g, &t)
}

fn noise_cmd(
    g: &Global,
    input: &Path,
    kind: CorruptionKind,
    k: usize,
    radius: u32,
    trials: usize,
) -> Result<()> {
    let Codec::Static(scheme) = codec(g)? else {
        bail!(Error::InvalidArgument("noise runs on static schemes".into()));
    };
    let mask = load_mask(g, input)?;
    let cfg = static_config(g, scheme, mask.height(), mask.width())?;
    let corruption = match kind {
        CorruptionKind::DropRun => Corruption::DropRun(k),
        CorruptionKind::DropToken => Corruption::DropToken(k),
        CorruptionKind::Perturb => Corruption::Perturb { k, radius },
    };
    let r = robustness_eval(&mask, &cfg, corruption, trials, g.seed)?;
    let mut t = Table::new([
        "scheme",
        "trials",
        "mean_dice",
        "min_dice",
        "mean_changed",
        "max_changed",
        "clamped",
    ]);
    t.push(vec![
        scheme.to_string(),
        r.trials.to_string(),
        num(r.mean_dice),
        num(r.min_dice),
        num(r.mean_changed),
        r.max_changed.to_string(),
        r.warnings.to_string(),
    ]);
    emit(g, &t)
}
