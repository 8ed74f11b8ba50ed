//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (no libtest harness):
//!
//!     cargo test -p objectness-core --test acceptance

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use objectness_core::array_io::{self, RasterImage};
use objectness_core::grabcut::{
    fit_gmm_traced, grabcut_traced, max_flow_min_cut, Color, FlowNetwork,
};
use objectness_core::metrics::{box_iou, mask_iou, mean_iou, recall_at};
use objectness_core::objectness::{bicubic_upscale, stratify};
use objectness_core::pipeline::{generate_proposals, DEFAULT_SCALES};
use objectness_core::{
    BoundingBox, GrabCutParams, ObjectnessHeatmap, RawMap, SegmentationMask, Trimap, TrimapLabel,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn bb(x0: u32, y0: u32, x1: u32, y1: u32) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

// ---------------------------------------------------------------------------
// min-cut

fn min_cut_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut largest = 0;
    for case in 0..200 {
        let inner = rng.gen_range(1..=10usize);
        largest = largest.max(inner);
        let (s, t) = (inner, inner + 1);
        let mut net = FlowNetwork::new(inner + 2, s, t).map_err(|e| e.to_string())?;
        let mut arcs: Vec<(usize, usize, u32)> = Vec::new();
        for from in 0..inner + 2 {
            for to in 0..inner + 2 {
                if from == to || to == s || from == t || !rng.gen_bool(0.35) {
                    continue;
                }
                let cap = rng.gen_range(0..=20u32);
                net.add_arc(from, to, cap as f64)
                    .map_err(|e| e.to_string())?;
                arcs.push((from, to, cap));
            }
        }
        let cut = max_flow_min_cut(&net);
        // enumerate every placement of the inner nodes
        let mut best = u64::MAX;
        for subset in 0u32..(1 << inner) {
            let side = |v: usize| v == s || (v < inner && subset & (1 << v) != 0);
            let cap: u64 = arcs
                .iter()
                .filter(|(a, b, _)| side(*a) && !side(*b))
                .map(|(_, _, c)| *c as u64)
                .sum();
            best = best.min(cap);
        }
        check(cut.flow_value == best as f64, || {
            format!(
                "case {case}: flow {} but brute-force minimum {best}",
                cut.flow_value
            )
        })?;
        let certified: u64 = arcs
            .iter()
            .filter(|(a, b, _)| cut.source_side[*a] && !cut.source_side[*b])
            .map(|(_, _, c)| *c as u64)
            .sum();
        check(
            certified == best && cut.source_side[s] && !cut.source_side[t],
            || format!("case {case}: returned partition has capacity {certified}, minimum {best}"),
        )?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), || {
        format!("took {}", secs(elapsed))
    })?;
    Ok(format!(
        "200 networks up to {largest} inner nodes, exact, {}",
        secs(elapsed)
    ))
}

// ---------------------------------------------------------------------------
// EM

fn em_monotonicity() -> Outcome {
    let mut worst = 0.0f64;
    let mut steps = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clusters = rng.gen_range(1..=6);
        let centres: Vec<Color> = (0..clusters)
            .map(|_| {
                [
                    rng.gen_range(0.0..255.0),
                    rng.gen_range(0.0..255.0),
                    rng.gen_range(0.0..255.0),
                ]
            })
            .collect();
        let n = rng.gen_range(50..400);
        let samples: Vec<Color> = (0..n)
            .map(|i| {
                let c = centres[i % clusters];
                let spread = 2.0 + (i % 7) as f64 * 3.0;
                c.map(|v| {
                    (v + rng.gen_range(-spread..spread))
                        .round()
                        .clamp(0.0, 255.0)
                })
            })
            .collect();
        let k = rng.gen_range(1..=5);
        let fit = fit_gmm_traced(&samples, k, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        for w in fit.log_likelihoods.windows(2) {
            steps += 1;
            let drop = (w[0] - w[1]) / w[0].abs().max(1.0);
            worst = worst.max(drop);
            check(drop <= 1e-9, || {
                format!("seed {seed}: log-likelihood fell from {} to {}", w[0], w[1])
            })?;
        }
    }
    Ok(format!(
        "50 datasets, {steps} EM steps, largest relative drop {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// GrabCut

fn two_colour() -> (RasterImage, Trimap, SegmentationMask) {
    let (w, h) = (32, 32);
    let pixels = (0..w * h)
        .map(|i| {
            if i % w < w / 2 {
                [200, 50, 50]
            } else {
                [50, 50, 200]
            }
        })
        .collect();
    let img = RasterImage::new(w, h, pixels).unwrap();
    let mut trimap = Trimap::filled(w, h, TrimapLabel::ProbableForeground).unwrap();
    for (x, y) in [(3, 3), (10, 20), (5, 28), (12, 9)] {
        trimap.set(x, y, TrimapLabel::SureForeground);
    }
    for (x, y) in [(20, 4), (28, 28), (25, 15), (18, 30)] {
        trimap.set(x, y, TrimapLabel::SureBackground);
    }
    let truth = SegmentationMask::new(w, h, (0..w * h).map(|i| i % w < w / 2).collect()).unwrap();
    (img, trimap, truth)
}

/// Noisy object-on-background image with a trimap mixing all four labels.
fn random_grabcut_fixture(seed: u64) -> (RasterImage, Trimap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.gen_range(16..40);
    let h = rng.gen_range(16..40);
    let obj = bb(
        rng.gen_range(1..w as u32 / 3),
        rng.gen_range(1..h as u32 / 3),
        rng.gen_range(2 * w as u32 / 3..w as u32),
        rng.gen_range(2 * h as u32 / 3..h as u32),
    );
    let fg: [u8; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let bg: [u8; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let noise = rng.gen_range(0..40i32);
    let mut img = RasterImage::filled(w, h, bg).unwrap();
    let mut trimap = Trimap::filled(w, h, TrimapLabel::ProbableBackground).unwrap();
    for y in 0..h {
        for x in 0..w {
            let inside = obj.contains_point(x, y);
            let base = if inside { fg } else { bg };
            img.set(
                x,
                y,
                base.map(|c| (c as i32 + rng.gen_range(-noise..=noise)).clamp(0, 255) as u8),
            );
            let label = match (inside, rng.gen_range(0..10)) {
                (true, 0) => TrimapLabel::SureForeground,
                (true, 1) => TrimapLabel::ProbableBackground,
                (true, _) => TrimapLabel::ProbableForeground,
                (false, 0) => TrimapLabel::SureBackground,
                (false, 1) => TrimapLabel::ProbableForeground,
                (false, _) => TrimapLabel::ProbableBackground,
            };
            trimap.set(x, y, label);
        }
    }
    // at least one seed of each kind
    trimap.set(
        obj.x0 as usize,
        obj.y0 as usize,
        TrimapLabel::SureForeground,
    );
    trimap.set(0, 0, TrimapLabel::SureBackground);
    (img, trimap)
}

fn grabcut_behaviour() -> Outcome {
    let start = Instant::now();
    let mut iterations = 0;
    for seed in 0..20u64 {
        let (img, trimap) = random_grabcut_fixture(seed);
        let params = GrabCutParams {
            rng_seed: seed,
            ..GrabCutParams::default()
        };
        let out =
            grabcut_traced(&img, &trimap, &params).map_err(|e| format!("fixture {seed}: {e}"))?;
        iterations += out.iterations;
        for (i, w) in out.energies.windows(2).enumerate() {
            check(w[1] <= w[0] + 1e-9 * w[0].abs(), || {
                format!(
                    "fixture {seed}: energy rose {} -> {} at iteration {}",
                    w[0],
                    w[1],
                    i + 1
                )
            })?;
        }
        for (i, label) in trimap.labels().iter().enumerate() {
            if label.is_hard() {
                check(out.mask.bits()[i] == label.is_foreground(), || {
                    format!("fixture {seed}: hard label {label:?} at pixel {i} flipped")
                })?;
            }
        }
    }
    let (img, trimap, truth) = two_colour();
    let out =
        grabcut_traced(&img, &trimap, &GrabCutParams::default()).map_err(|e| e.to_string())?;
    let iou = mask_iou(&out.mask, &truth).map_err(|e| e.to_string())?;
    check(iou >= 0.95, || format!("two-colour fixture IoU {iou}"))?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), || {
        format!("took {}", secs(elapsed))
    })?;
    Ok(format!(
        "20 fixtures monotone, hard labels kept, {iterations} iterations; two-colour IoU {iou:.4}; {}",
        secs(elapsed)
    ))
}

// ---------------------------------------------------------------------------
// bicubic

/// Catmull-Rom kernel written out from its piecewise definition.
fn keys(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (a + 2.0) * x.powi(3) - (a + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        a * x.powi(3) - 5.0 * a * x.powi(2) + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

/// Every source sample weighted directly by the 2-D kernel, edges replicated.
fn direct_upscale(src: &[Vec<f64>], out_h: usize, out_w: usize) -> Vec<Vec<f64>> {
    let (h, w) = (src.len(), src[0].len());
    let mut out = vec![vec![0.0; out_w]; out_h];
    for (oy, row) in out.iter_mut().enumerate() {
        let sy = (oy as f64 + 0.5) * h as f64 / out_h as f64 - 0.5;
        for (ox, v) in row.iter_mut().enumerate() {
            let sx = (ox as f64 + 0.5) * w as f64 / out_w as f64 - 0.5;
            let mut acc = 0.0;
            for j in -3..h as i64 + 3 {
                for i in -3..w as i64 + 3 {
                    let wt = keys(sx - i as f64) * keys(sy - j as f64);
                    if wt != 0.0 {
                        let (ci, cj) = (
                            i.clamp(0, w as i64 - 1) as usize,
                            j.clamp(0, h as i64 - 1) as usize,
                        );
                        acc += wt * src[cj][ci];
                    }
                }
            }
            *v = acc.clamp(0.0, 255.0);
        }
    }
    out
}

fn bicubic() -> Outcome {
    let mut impulse = vec![vec![0.0; 4]; 4];
    impulse[1][1] = 255.0;
    let raw = RawMap::new(4, 4, impulse.concat()).unwrap();
    let mut worst = 0.0f64;
    for (oh, ow) in [(8, 8), (16, 16), (12, 8), (5, 7)] {
        let ours = bicubic_upscale(&raw, oh, ow).map_err(|e| e.to_string())?;
        let oracle = direct_upscale(&impulse, oh, ow);
        for (y, row) in oracle.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                worst = worst.max((ours.get(x, y) - v).abs());
            }
        }
    }
    check(worst <= 1e-9, || {
        format!("impulse differs from direct evaluation by {worst:e}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let c: f64 = rng.gen_range(0.0..=255.0);
        let (h, w) = (rng.gen_range(1..8), rng.gen_range(1..8));
        let up = bicubic_upscale(&RawMap::new(w, h, vec![c; w * h]).unwrap(), h * 4, w * 4)
            .map_err(|e| e.to_string())?;
        check(up.values().iter().all(|&v| v == c), || {
            format!("constant {c} not preserved")
        })?;

        let vals: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0.0..=255.0)).collect();
        let map = RawMap::new(w, h, vals.clone()).unwrap();
        let same = bicubic_upscale(&map, h, w).map_err(|e| e.to_string())?;
        check(
            same.values()
                .iter()
                .zip(&vals)
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            || "identity resampling is not bit-exact".into(),
        )?;
    }
    Ok(format!(
        "impulse max error {worst:.1e}; 20 constant maps exact; 20 identity maps bit-exact"
    ))
}

// ---------------------------------------------------------------------------
// stratification

fn stratification() -> Outcome {
    use TrimapLabel::*;
    let t = stratify(&ObjectnessHeatmap::from_rows(&[&[0.0, 10.0], &[20.0, 30.0]]).unwrap());
    check(
        t.labels()
            == [
                ProbableBackground,
                ProbableForeground,
                SureForeground,
                SureForeground,
            ],
        || format!("[[0,10],[20,30]] gave {:?}", t.labels()),
    )?;
    let t = stratify(&ObjectnessHeatmap::zeros(5, 3).unwrap());
    check(t.labels().iter().all(|&l| l == ProbableBackground), || {
        "all-zero map".into()
    })?;
    // mean 10: the 10 sits exactly on it
    let t = stratify(&ObjectnessHeatmap::from_rows(&[&[0.0, 10.0, 20.0]]).unwrap());
    check(t.get(1, 0) == ProbableForeground, || {
        format!("pixel at mean gave {:?}", t.get(1, 0))
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (w, h) = (rng.gen_range(1..20), rng.gen_range(1..20));
        let vals = (0..w * h)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.0..=255.0)
                }
            })
            .collect();
        let t = stratify(&ObjectnessHeatmap::new(w, h, vals).unwrap());
        check(t.labels().iter().all(|&l| l != SureBackground), || {
            "label 0 produced".into()
        })?;
    }
    Ok("3 table examples exact; labels within {1,2,3} on 200 random maps".into())
}

// ---------------------------------------------------------------------------
// CLI end to end

fn objectness_cli(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_objectness"))
        .args(args.iter().map(|a| a.as_ref()))
        .env_remove("RUST_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(out.stdout)
}

fn clean_args(annotations: &Path, out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = ["clean", "--features"].iter().map(PathBuf::from).collect();
    v.push(fixture("clean_features.npy"));
    v.extend(
        ["--width", "64", "--height", "64", "--annotations"]
            .iter()
            .map(PathBuf::from),
    );
    v.push(annotations.to_path_buf());
    v.push("--out".into());
    v.push(out.to_path_buf());
    v
}

fn run_paths(args: &[PathBuf]) -> Result<Vec<u8>, String> {
    let refs: Vec<&dyn AsRef<std::ffi::OsStr>> = args
        .iter()
        .map(|a| a as &dyn AsRef<std::ffi::OsStr>)
        .collect();
    objectness_cli(&refs)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run in 0..3 {
        let mask = dir.path().join(format!("mask{run}.pgm"));
        let kept = dir.path().join(format!("kept{run}.json"));
        let props = dir.path().join(format!("props{run}.json"));
        let seg_out = objectness_cli(&[
            &"segment",
            &"--features",
            &fixture("segment_features.npy"),
            &"--image",
            &fixture("segment_image.ppm"),
            &"--out",
            &mask,
            &"--seed",
            &"42",
        ])?;
        let clean_out = run_paths(&clean_args(&fixture("clean_annotations.json"), &kept))?;
        let prop_out = objectness_cli(&[
            &"propose",
            &"--features",
            &fixture("propose_features.npy"),
            &"--width",
            &"64",
            &"--height",
            &"64",
            &"--out",
            &props,
        ])?;
        let read = |p: &Path| fs::read(p).map_err(|e| e.to_string());
        runs.push(vec![
            read(&mask)?,
            seg_out,
            read(&kept)?,
            clean_out,
            read(&props)?,
            prop_out,
        ]);
    }
    let names = [
        "segment mask",
        "segment stdout",
        "clean output",
        "clean stdout",
        "propose output",
        "propose stdout",
    ];
    for run in 1..3 {
        for (i, name) in names.iter().enumerate() {
            check(runs[run][i] == runs[0][i], || {
                format!("{name} differs in run {}", run + 1)
            })?;
        }
    }
    let bytes: usize = runs[0].iter().map(Vec::len).sum();
    Ok(format!(
        "segment, clean, propose byte-identical over 3 runs ({bytes} bytes each)"
    ))
}

fn cleansing() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let once = dir.path().join("once.json");
    let twice = dir.path().join("twice.json");
    let summary: serde_json::Value = serde_json::from_slice(&run_paths(&clean_args(
        &fixture("clean_annotations.json"),
        &once,
    ))?)
    .map_err(|e| e.to_string())?;
    check(summary["input"] == 10 && summary["dropped"] == 3, || {
        format!("summary {summary}")
    })?;
    let kept: Vec<BoundingBox> = array_io::read_annotations(&once)
        .map_err(|e| e.to_string())?
        .boxes
        .iter()
        .map(|a| a.bbox)
        .collect();
    // blob rectangles drawn by the fixture generator, in annotation order
    let blobs = [
        bb(4, 4, 12, 10),
        bb(20, 3, 26, 13),
        bb(36, 6, 44, 12),
        bb(52, 4, 58, 16),
        bb(6, 26, 16, 34),
        bb(28, 28, 34, 33),
        bb(44, 30, 56, 40),
    ];
    check(kept == blobs, || format!("kept boxes {kept:?}"))?;
    check(summary["tightened"] == 7, || format!("summary {summary}"))?;

    let second: serde_json::Value = serde_json::from_slice(&run_paths(&clean_args(&once, &twice))?)
        .map_err(|e| e.to_string())?;
    let same = fs::read(&once).map_err(|e| e.to_string())?
        == fs::read(&twice).map_err(|e| e.to_string())?;
    check(
        same && second["dropped"] == 0 && second["tightened"] == 0,
        || format!("second pass not a fixed point: {second}"),
    )?;
    Ok("10 boxes: 3 dropped, 7 tightened to exact blob boxes; second pass byte-identical".into())
}

// ---------------------------------------------------------------------------
// proposals

/// Heatmap of non-touching uniform blocks; the blocks double as ground truth.
fn blob_heatmap(rng: &mut ChaCha8Rng) -> (ObjectnessHeatmap, Vec<BoundingBox>) {
    let (w, h) = (64usize, 64usize);
    let mut values = vec![0.0; w * h];
    let mut gt: Vec<BoundingBox> = Vec::new();
    let target = rng.gen_range(1..=6);
    let mut attempts = 0;
    while gt.len() < target && attempts < 500 {
        attempts += 1;
        let (bw, bh) = (rng.gen_range(2..14u32), rng.gen_range(2..14u32));
        let x0 = rng.gen_range(0..w as u32 - bw);
        let y0 = rng.gen_range(0..h as u32 - bh);
        let b = bb(x0, y0, x0 + bw, y0 + bh);
        // keep a one-pixel gap so blobs never touch, even diagonally
        let grown = bb(
            x0.saturating_sub(1),
            y0.saturating_sub(1),
            b.x1 + 1,
            b.y1 + 1,
        );
        if gt.iter().any(|g| grown.intersection(g).is_some()) {
            continue;
        }
        let v = rng.gen_range(100.0..=255.0);
        for y in b.y0..b.y1 {
            for x in b.x0..b.x1 {
                values[y as usize * w + x as usize] = v;
            }
        }
        gt.push(b);
    }
    (ObjectnessHeatmap::new(w, h, values).unwrap(), gt)
}

fn proposal_recall() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut total_gt = 0;
    for case in 0..50 {
        let (heatmap, gt) = blob_heatmap(&mut rng);
        total_gt += gt.len();
        let unit = generate_proposals(&heatmap, &[1.0]).map_err(|e| e.to_string())?;
        let r = recall_at(&unit, &gt, 0.9);
        check(r == 1.0, || {
            format!("case {case}: recall@0.9 {r} with unit scale")
        })?;
        for scales in [&[1.0][..], &DEFAULT_SCALES[..]] {
            let props = generate_proposals(&heatmap, scales).map_err(|e| e.to_string())?;
            let r: Vec<f64> = [0.5, 0.7, 0.9]
                .iter()
                .map(|&t| recall_at(&props, &gt, t))
                .collect();
            check(r[0] >= r[1] && r[1] >= r[2], || {
                format!("case {case}: recall not monotone {r:?}")
            })?;
        }
    }
    Ok(format!(
        "50 heatmaps, {total_gt} GT boxes: recall@0.9 = 1.0 at scale 1; monotone over 0.5/0.7/0.9"
    ))
}

// ---------------------------------------------------------------------------
// metrics

fn mask(w: usize, bits: &[u8]) -> SegmentationMask {
    SegmentationMask::new(w, bits.len() / w, bits.iter().map(|&b| b != 0).collect()).unwrap()
}

fn metrics() -> Outcome {
    let a = bb(0, 0, 10, 10);
    check(box_iou(&a, &a) == 1.0, || "identical boxes".into())?;
    check(box_iou(&a, &bb(20, 20, 30, 30)) == 0.0, || {
        "disjoint boxes".into()
    })?;
    check(box_iou(&a, &bb(5, 0, 15, 10)) == 50.0 / 150.0, || {
        "half-overlap boxes".into()
    })?;

    let m = mask(4, &[1, 1, 0, 0, 1, 1, 0, 0]);
    let comp = mask(4, &[0, 0, 1, 1, 0, 0, 1, 1]);
    let sub = mask(4, &[1, 1, 0, 0, 0, 0, 0, 0]);
    let iou =
        |a: &SegmentationMask, b: &SegmentationMask| mask_iou(a, b).map_err(|e| e.to_string());
    check(iou(&m, &m)? == 1.0, || "mask vs itself".into())?;
    check(iou(&m, &comp)? == 0.0, || "mask vs complement".into())?;
    check(iou(&m, &sub)? == 0.5, || "4 px vs 2 px subset".into())?;
    let mean = mean_iou(&[(m.clone(), m.clone()), (m.clone(), comp.clone())])
        .map_err(|e| e.to_string())?;
    check(mean == 0.5, || format!("mean of 1 and 0 is {mean}"))?;
    check(
        mean_iou(&[(m.clone(), sub.clone())]).map_err(|e| e.to_string())? == 0.5,
        || "singleton mean".into(),
    )?;
    check(mean_iou(&[]).is_err(), || "empty mean accepted".into())?;

    let gt = [bb(0, 0, 10, 10), bb(20, 20, 30, 30)];
    check(recall_at(&gt, &gt, 0.9) == 1.0, || "exact proposals".into())?;
    check(recall_at(&[], &gt, 0.9) == 0.0, || "empty proposals".into())?;
    check(recall_at(&[gt[0]], &gt, 0.9) == 0.5, || {
        "one of two matched".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let random_box = |rng: &mut ChaCha8Rng| {
        let x0 = rng.gen_range(0..50);
        let y0 = rng.gen_range(0..50);
        bb(x0, y0, x0 + rng.gen_range(1..30), y0 + rng.gen_range(1..30))
    };
    for i in 0..1000 {
        let (p, q) = (random_box(&mut rng), random_box(&mut rng));
        let (pq, qp) = (box_iou(&p, &q), box_iou(&q, &p));
        check(pq == qp, || format!("pair {i}: asymmetric {pq} vs {qp}"))?;
        check((0.0..=1.0).contains(&pq), || {
            format!("pair {i}: out of range {pq}")
        })?;
        check((pq == 0.0) == p.intersection(&q).is_none(), || {
            format!("pair {i}: zero iff disjoint")
        })?;
        check((pq == 1.0) == (p == q), || {
            format!("pair {i}: one iff identical")
        })?;
    }
    Ok(
        "box, mask, mean and recall examples exact; 1000 random pairs symmetric and in [0,1]"
            .into(),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("min-cut matches brute force", min_cut_oracle),
        ("EM log-likelihood monotone", em_monotonicity),
        ("GrabCut energy and hard labels", grabcut_behaviour),
        ("bicubic upscaling", bicubic),
        ("stratification table", stratification),
        ("CLI determinism", determinism),
        ("annotation cleansing", cleansing),
        ("proposal recall", proposal_recall),
        ("metrics", metrics),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        match criterion() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
