use std::path::{Path, PathBuf};

use objectness_core::array_io;
use objectness_core::metrics::{mask_iou, recall_at};
use objectness_core::objectness::objectness;
use objectness_core::pipeline::{self, BoxFeatures};
use objectness_core::{BoundingBox, GrabCutParams, SegmentationMask};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn bb(x0: u32, y0: u32, x1: u32, y1: u32) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

#[test]
fn localize_recovers_fixture_object() {
    let image = array_io::read_image(fixture("segment_image.ppm")).unwrap();
    let stack = array_io::read_feature_stack(fixture("segment_features.npy")).unwrap();
    let mask = pipeline::localize(&image, &stack, &GrabCutParams::default()).unwrap();
    let object = bb(12, 10, 52, 54);
    let truth = SegmentationMask::new(
        64,
        64,
        (0..64 * 64)
            .map(|i| object.contains_point(i % 64, i / 64))
            .collect(),
    )
    .unwrap();
    let iou = mask_iou(&mask, &truth).unwrap();
    assert!(iou >= 0.9, "IoU {iou}");
}

#[test]
fn cleansing_fixture() {
    let stack = array_io::read_feature_stack(fixture("clean_features.npy")).unwrap();
    let set = array_io::read_annotations(fixture("clean_annotations.json")).unwrap();
    let report = pipeline::clean_with_features(&stack, 64, 64, &set, 20.0).unwrap();
    assert_eq!(report.dropped.len(), 3);
    assert!(report.dropped.boxes.iter().all(|a| a.label == "ghost"));
    assert_eq!(report.tightened_count, 7);
    let kept: Vec<BoundingBox> = report.kept.boxes.iter().map(|a| a.bbox).collect();
    // the blobs the generator drew; the last box also holds a smaller blob
    assert_eq!(
        kept,
        [
            bb(4, 4, 12, 10),
            bb(20, 3, 26, 13),
            bb(36, 6, 44, 12),
            bb(52, 4, 58, 16),
            bb(6, 26, 16, 34),
            bb(28, 28, 34, 33),
            bb(44, 30, 56, 40),
        ]
    );
    let again = pipeline::clean_with_features(&stack, 64, 64, &report.kept, 20.0).unwrap();
    assert_eq!(again.kept, report.kept);
    assert_eq!(again.tightened_count, 0);
    assert!(again.dropped.is_empty());
}

#[test]
fn max_threshold_drops_everything_but_peaks() {
    let stack = array_io::read_feature_stack(fixture("clean_features.npy")).unwrap();
    let set = array_io::read_annotations(fixture("clean_annotations.json")).unwrap();
    // only the 10.0-activation blob reaches 255 after global normalization
    let report = pipeline::clean_with_features(&stack, 64, 64, &set, 255.0).unwrap();
    assert_eq!(report.kept.len(), 1);
    assert_eq!(report.kept.boxes[0].bbox, bb(44, 30, 56, 40));
}

#[test]
fn proposals_cover_fixture_ground_truth() {
    let stack = array_io::read_feature_stack(fixture("propose_features.npy")).unwrap();
    let gt: Vec<BoundingBox> = array_io::read_annotations(fixture("propose_gt.json"))
        .unwrap()
        .boxes
        .iter()
        .map(|a| a.bbox)
        .collect();
    let heatmap = objectness(&stack, 64, 64).unwrap();
    let unit = pipeline::generate_proposals(&heatmap, &[1.0]).unwrap();
    assert_eq!(unit.len(), gt.len());
    assert_eq!(recall_at(&unit, &gt, 0.9), 1.0);

    let multi = pipeline::generate_proposals(&heatmap, &pipeline::DEFAULT_SCALES).unwrap();
    assert!(multi.iter().all(|b| b.fits_within(64, 64)));
    let r: Vec<f64> = [0.5, 0.7, 0.9]
        .iter()
        .map(|&t| recall_at(&multi, &gt, t))
        .collect();
    assert!(r[0] >= r[1] && r[1] >= r[2], "{r:?}");
}

#[test]
fn instance_fixture_invariants() {
    let image = array_io::read_image(fixture("instances_image.ppm")).unwrap();
    let stack = array_io::read_feature_stack(fixture("instances_features.npy")).unwrap();
    let dets = array_io::read_annotations(fixture("instances_detections.json")).unwrap();
    let map = pipeline::segment_instances(
        &image,
        BoxFeatures::Shared(&stack),
        &dets,
        &GrabCutParams::default(),
    )
    .unwrap();
    assert_eq!(map.instances.len(), 3);
    // ids follow painting order: mask areas never increase
    for w in map.instances.windows(2) {
        assert_eq!(w[1].id, w[0].id + 1);
        assert!(w[1].mask_area <= w[0].mask_area);
    }
    for y in 0..map.height() {
        for x in 0..map.width() {
            let id = map.get(x, y);
            if id != 0 {
                assert!(map.instance(id).unwrap().bbox.contains_point(x, y));
            }
        }
    }
    let again = pipeline::segment_instances(
        &image,
        BoxFeatures::Shared(&stack),
        &dets,
        &GrabCutParams::default(),
    )
    .unwrap();
    assert_eq!(again, map);
}
