//! Regenerates the synthetic fixtures under `tests/fixtures/`.
//!
//!     cargo run -p objectness-core --example gen_fixtures
//!
//! Everything is hand-placed geometry, so reruns give identical bytes.

use std::path::{Path, PathBuf};

use objectness_core::array_io::{self, Annotation, AnnotationSet, FeatureMapStack, RasterImage};
use objectness_core::BoundingBox;

fn bb(x0: u32, y0: u32, x1: u32, y1: u32) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

fn ann(b: BoundingBox, label: &str) -> Annotation {
    Annotation {
        bbox: b,
        label: label.to_string(),
        score: None,
    }
}

/// Mild deterministic texture so colour models see some spread.
fn jitter(x: usize, y: usize) -> i32 {
    ((x * 7 + y * 13) % 11) as i32 - 5
}

fn shade(base: [u8; 3], x: usize, y: usize) -> [u8; 3] {
    base.map(|c| (c as i32 + jitter(x, y)).clamp(0, 255) as u8)
}

fn textured(w: usize, h: usize, bg: [u8; 3], objects: &[(BoundingBox, [u8; 3])]) -> RasterImage {
    let mut img = RasterImage::filled(w, h, bg).unwrap();
    for y in 0..h {
        for x in 0..w {
            let base = objects
                .iter()
                .rev()
                .find(|(b, _)| b.contains_point(x, y))
                .map_or(bg, |(_, c)| *c);
            img.set(x, y, shade(base, x, y));
        }
    }
    img
}

/// Channel `c` holds `weights[c] * value` inside each block, zero elsewhere.
fn block_stack(
    h: usize,
    w: usize,
    weights: &[f32],
    blocks: &[(BoundingBox, f32)],
    source: &str,
) -> FeatureMapStack {
    let mut data = vec![0.0f32; weights.len() * h * w];
    for (c, wt) in weights.iter().enumerate() {
        for (b, v) in blocks {
            for y in b.y0 as usize..b.y1 as usize {
                for x in b.x0 as usize..b.x1 as usize {
                    data[c * h * w + y * w + x] += wt * v;
                }
            }
        }
    }
    FeatureMapStack::new(weights.len(), h, w, data, "conv5_3", source).unwrap()
}

fn segment_fixtures(dir: &Path) {
    // 64x64 image, features at stride 16 (4x4 grid)
    let object = bb(12, 10, 52, 54);
    let img = textured(64, 64, [70, 90, 150], &[(object, [210, 150, 40])]);
    array_io::write_image(&img, dir.join("segment_image.ppm")).unwrap();

    let mut data = vec![0.0f32; 8 * 16];
    for c in 0..8 {
        for (y, x, v) in [(1, 1, 4.0), (1, 2, 5.0), (2, 1, 5.0), (2, 2, 6.0)] {
            data[c * 16 + y * 4 + x] = v * (1.0 + c as f32 * 0.25);
        }
    }
    let stack = FeatureMapStack::new(8, 4, 4, data, "conv5_3", "segment_image.ppm").unwrap();
    array_io::write_feature_stack(&stack, dir.join("segment_features.npy")).unwrap();

    let zero =
        FeatureMapStack::new(8, 4, 4, vec![0.0; 128], "conv5_3", "segment_image.ppm").unwrap();
    array_io::write_feature_stack(&zero, dir.join("zero_features.npy")).unwrap();
}

/// Clean fixture blobs and the boxes drawn around them: seven loose boxes
/// around blobs, three over empty regions.
pub fn clean_layout() -> (Vec<(BoundingBox, f32)>, Vec<Annotation>) {
    let blobs = vec![
        (bb(4, 4, 12, 10), 9.0),
        (bb(20, 3, 26, 13), 6.0),
        (bb(36, 6, 44, 12), 8.0),
        (bb(52, 4, 58, 16), 5.0),
        (bb(6, 26, 16, 34), 7.0),
        (bb(28, 28, 34, 33), 4.0),
        (bb(44, 30, 56, 40), 10.0),
        // small companion blob inside the last box; the larger blob wins
        (bb(48, 42, 50, 44), 10.0),
    ];
    let boxes = vec![
        ann(bb(2, 2, 15, 13), "dog"),
        ann(bb(18, 1, 29, 15), "person"),
        ann(bb(34, 4, 47, 14), "cat"),
        ann(bb(50, 2, 61, 18), "person"),
        ann(bb(3, 23, 18, 37), "car"),
        ann(bb(26, 26, 37, 36), "bird"),
        ann(bb(42, 28, 58, 46), "car"),
        ann(bb(4, 44, 20, 60), "ghost"),
        ann(bb(24, 46, 40, 62), "ghost"),
        ann(bb(56, 50, 63, 63), "ghost"),
    ];
    (blobs, boxes)
}

fn clean_fixtures(dir: &Path) {
    let (blobs, boxes) = clean_layout();
    let stack = block_stack(64, 64, &[1.0, 0.5, 0.25], &blobs, "clean_image.ppm");
    array_io::write_feature_stack(&stack, dir.join("clean_features.npy")).unwrap();
    let set = AnnotationSet {
        image: "clean_image.ppm".into(),
        boxes,
    };
    array_io::write_annotations(&set, dir.join("clean_annotations.json")).unwrap();
}

fn propose_fixtures(dir: &Path) {
    let gt = [
        (bb(3, 5, 15, 17), "car"),
        (bb(22, 4, 30, 24), "person"),
        (bb(40, 8, 60, 20), "boat"),
        (bb(6, 36, 26, 58), "dog"),
        (bb(36, 40, 44, 48), "cat"),
        (bb(50, 30, 62, 60), "person"),
    ];
    let blocks: Vec<(BoundingBox, f32)> = gt
        .iter()
        .enumerate()
        .map(|(i, (b, _))| (*b, 3.0 + i as f32))
        .collect();
    let stack = block_stack(64, 64, &[1.0, 2.0], &blocks, "propose_image.ppm");
    array_io::write_feature_stack(&stack, dir.join("propose_features.npy")).unwrap();
    let set = AnnotationSet {
        image: "propose_image.ppm".into(),
        boxes: gt.iter().map(|(b, l)| ann(*b, l)).collect(),
    };
    array_io::write_annotations(&set, dir.join("propose_gt.json")).unwrap();
}

fn instances_fixtures(dir: &Path) {
    // 96x64 image with three objects, features at stride 4
    let red = bb(8, 10, 36, 50);
    let blue = bb(30, 20, 44, 44);
    let green = bb(60, 12, 88, 40);
    let img = textured(
        96,
        64,
        [120, 120, 120],
        &[
            (red, [200, 40, 40]),
            (blue, [40, 60, 210]),
            (green, [40, 190, 60]),
        ],
    );
    array_io::write_image(&img, dir.join("instances_image.ppm")).unwrap();
    let cells = |b: &BoundingBox| bb(b.x0 / 4, b.y0 / 4, b.x1 / 4, b.y1 / 4);
    let stack = block_stack(
        16,
        24,
        &[1.0, 1.0, 0.5, 0.5],
        &[
            (cells(&red), 5.0),
            (cells(&blue), 5.0),
            (cells(&green), 5.0),
        ],
        "instances_image.ppm",
    );
    array_io::write_feature_stack(&stack, dir.join("instances_features.npy")).unwrap();
    let set = AnnotationSet {
        image: "instances_image.ppm".into(),
        boxes: vec![
            Annotation {
                bbox: bb(4, 6, 40, 54),
                label: "car".into(),
                score: Some(0.91),
            },
            Annotation {
                bbox: bb(28, 18, 46, 46),
                label: "person".into(),
                score: Some(0.78),
            },
            Annotation {
                bbox: bb(56, 8, 92, 44),
                label: "plant".into(),
                score: Some(0.66),
            },
        ],
    };
    array_io::write_annotations(&set, dir.join("instances_detections.json")).unwrap();
}

fn main() {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    std::fs::create_dir_all(&dir).unwrap();
    segment_fixtures(&dir);
    clean_fixtures(&dir);
    propose_fixtures(&dir);
    instances_fixtures(&dir);
    println!("fixtures written to {}", dir.display());
}
