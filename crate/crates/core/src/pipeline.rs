//! End-to-end uses of the objectness heatmap: foreground localisation,
//! detector boxes to instance masks, annotation cleansing and object
//! proposals.

use log::warn;

use crate::array_io::{Annotation, AnnotationSet, FeatureMapStack, RasterImage};
use crate::error::{Error, Result};
use crate::grabcut::{grabcut, GrabCutParams, SegmentationMask};
use crate::metrics::BoundingBox;
use crate::objectness::{
    bicubic_upscale, heatmap_from_raw, normalize, objectness, stratify, sum_activations,
    ObjectnessHeatmap, RawMap,
};
use crate::regions::{above_mean_blobs, largest_region_bbox};

pub const DEFAULT_DROP_THRESHOLD: f64 = 20.0;
pub const DEFAULT_SCALES: [f64; 3] = [1.0, 1.5, 2.0];

/// GrabCut on a heatmap's trimap. A heatmap with no zero pixel seeds no
/// background at all, and its mask is the whole image; a heatmap with no
/// positive pixel stays a `DegenerateTrimap` error.
pub fn segment_heatmap(
    image: &RasterImage,
    heatmap: &ObjectnessHeatmap,
    params: &GrabCutParams,
) -> Result<SegmentationMask> {
    let trimap = stratify(heatmap);
    if trimap.labels().iter().all(|l| l.is_foreground()) {
        params.validate()?;
        if (image.width(), image.height()) == (trimap.width(), trimap.height()) {
            return SegmentationMask::new(
                image.width(),
                image.height(),
                vec![true; image.width() * image.height()],
            );
        }
    }
    grabcut(image, &trimap, params)
}

/// Foreground mask of `image`: heatmap, trimap, GrabCut.
pub fn localize(
    image: &RasterImage,
    stack: &FeatureMapStack,
    params: &GrabCutParams,
) -> Result<SegmentationMask> {
    let heatmap = objectness(stack, image.height(), image.width())?;
    segment_heatmap(image, &heatmap, params)
}

/// Feature-grid window covering `bbox` of a `image_w × image_h` image,
/// never wider or taller than the box itself.
fn feature_window(
    raw: &RawMap,
    image_w: usize,
    image_h: usize,
    bbox: &BoundingBox,
) -> (usize, usize, usize, usize) {
    fn axis(lo: u32, hi: u32, feat: usize, image: usize) -> (usize, usize) {
        let (lo, hi) = (lo as usize, hi as usize);
        let mut start = (lo * feat / image).min(feat - 1);
        let mut end = ((hi * feat).div_ceil(image)).clamp(start + 1, feat);
        let span = hi - lo;
        if end - start > span {
            end = start + span;
        }
        if end > feat {
            start = feat - span;
            end = feat;
        }
        (start, end)
    }
    let (x0, x1) = axis(bbox.x0, bbox.x1, raw.width(), image_w);
    let (y0, y1) = axis(bbox.y0, bbox.y1, raw.height(), image_h);
    (x0, y0, x1, y1)
}

fn check_box(bbox: &BoundingBox, image_w: usize, image_h: usize) -> Result<()> {
    if bbox.fits_within(image_w, image_h) {
        Ok(())
    } else {
        Err(Error::InvalidAnnotation(format!(
            "box {bbox} outside the {image_w}x{image_h} image"
        )))
    }
}

/// Box heatmap from a whole-image raw map: the box's window of the raw map
/// is cropped, then normalized and upscaled on its own.
pub fn box_heatmap_local(
    raw: &RawMap,
    image_w: usize,
    image_h: usize,
    bbox: &BoundingBox,
) -> Result<ObjectnessHeatmap> {
    check_box(bbox, image_w, image_h)?;
    let (x0, y0, x1, y1) = feature_window(raw, image_w, image_h, bbox);
    heatmap_from_raw(
        &raw.crop(x0, y0, x1, y1)?,
        bbox.height() as usize,
        bbox.width() as usize,
    )
}

/// Box heatmap that keeps the whole image's intensity scale: the raw map is
/// normalized over the full image before the box window is cropped and
/// upscaled.
pub fn box_heatmap_global(
    raw: &RawMap,
    image_w: usize,
    image_h: usize,
    bbox: &BoundingBox,
) -> Result<ObjectnessHeatmap> {
    check_box(bbox, image_w, image_h)?;
    let (x0, y0, x1, y1) = feature_window(raw, image_w, image_h, bbox);
    let window = normalize(raw).crop(x0, y0, x1, y1)?;
    let up = bicubic_upscale(&window, bbox.height() as usize, bbox.width() as usize)?;
    ObjectnessHeatmap::new(up.width(), up.height(), up.values().to_vec())
}

/// Where per-box activations come from.
#[derive(Debug, Clone, Copy)]
pub enum BoxFeatures<'a> {
    /// One stack for the whole image; boxes are cropped at feature resolution.
    Shared(&'a FeatureMapStack),
    /// One stack per detection, extracted from the box crop, in detection order.
    PerBox(&'a [FeatureMapStack]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceInfo {
    pub id: u32,
    pub label: String,
    pub score: Option<f64>,
    pub bbox: BoundingBox,
    /// Foreground pixels of the instance's own mask, before overlaps.
    pub mask_area: usize,
    pub detection_index: usize,
}

/// Per-pixel instance ids (0 = background) and the table describing them.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMap {
    width: usize,
    height: usize,
    ids: Vec<u32>,
    pub instances: Vec<InstanceInfo>,
}

impl InstanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.ids[y * self.width + x]
    }

    pub fn instance(&self, id: u32) -> Option<&InstanceInfo> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn foreground(&self) -> SegmentationMask {
        SegmentationMask::new(
            self.width,
            self.height,
            self.ids.iter().map(|&i| i != 0).collect(),
        )
        .expect("dimensions already validated")
    }
}

/// Segments every detection box and composes the masks into one instance
/// map. Larger masks are painted first, so where masks overlap the smaller
/// one stays on top. Boxes whose heatmap cannot seed GrabCut are skipped.
pub fn segment_instances(
    image: &RasterImage,
    features: BoxFeatures<'_>,
    detections: &AnnotationSet,
    params: &GrabCutParams,
) -> Result<InstanceMap> {
    detections.validate_within(image.width(), image.height())?;
    let shared_raw = match features {
        BoxFeatures::Shared(stack) => Some(sum_activations(stack)),
        BoxFeatures::PerBox(stacks) => {
            if stacks.len() != detections.len() {
                return Err(Error::DimMismatch(format!(
                    "{} per-box stacks for {} detections",
                    stacks.len(),
                    detections.len()
                )));
            }
            None
        }
    };

    let mut segmented = Vec::new();
    for (index, det) in detections.boxes.iter().enumerate() {
        let (bw, bh) = (det.bbox.width() as usize, det.bbox.height() as usize);
        let heatmap = match (&shared_raw, features) {
            (Some(raw), _) => box_heatmap_local(raw, image.width(), image.height(), &det.bbox)?,
            (None, BoxFeatures::PerBox(stacks)) => objectness(&stacks[index], bh, bw)?,
            (None, BoxFeatures::Shared(_)) => unreachable!(),
        };
        let crop = image.crop(&det.bbox)?;
        match segment_heatmap(&crop, &heatmap, params) {
            Ok(mask) if mask.area() > 0 => segmented.push((index, mask)),
            Ok(_) => warn!("detection #{index} {}: empty segmentation", det.bbox),
            Err(Error::DegenerateTrimap(msg)) => {
                warn!("detection #{index} {}: skipped, {msg}", det.bbox)
            }
            Err(e) => return Err(e),
        }
    }

    // Paint order: larger masks first; on equal mask area the smaller box,
    // then the lower detection index, is painted later and wins.
    segmented.sort_by(|(ia, ma), (ib, mb)| {
        let (ba, bb) = (&detections.boxes[*ia].bbox, &detections.boxes[*ib].bbox);
        mb.area()
            .cmp(&ma.area())
            .then(bb.area().cmp(&ba.area()))
            .then(ib.cmp(ia))
    });

    let mut ids = vec![0u32; image.width() * image.height()];
    let mut instances = Vec::with_capacity(segmented.len());
    for (order, (index, mask)) in segmented.iter().enumerate() {
        let id = order as u32 + 1;
        let det = &detections.boxes[*index];
        let (x0, y0) = (det.bbox.x0 as usize, det.bbox.y0 as usize);
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if mask.get(x, y) {
                    ids[(y0 + y) * image.width() + x0 + x] = id;
                }
            }
        }
        instances.push(InstanceInfo {
            id,
            label: det.label.clone(),
            score: det.score,
            bbox: det.bbox,
            mask_area: mask.area(),
            detection_index: *index,
        });
    }
    Ok(InstanceMap {
        width: image.width(),
        height: image.height(),
        ids,
        instances,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleansingReport {
    pub kept: AnnotationSet,
    pub dropped: AnnotationSet,
    pub tightened_count: usize,
}

/// Drops boxes whose heatmap never reaches `intensity_threshold` and shrinks
/// the rest to the largest above-mean blob of their heatmap.
///
/// `heatmaps[i]` covers exactly `annotations.boxes[i]`.
pub fn clean_annotations(
    heatmaps: &[ObjectnessHeatmap],
    annotations: &AnnotationSet,
    intensity_threshold: f64,
) -> Result<CleansingReport> {
    if !(0.0..=255.0).contains(&intensity_threshold) {
        return Err(Error::InvalidThreshold(intensity_threshold));
    }
    if heatmaps.len() != annotations.len() {
        return Err(Error::DimMismatch(format!(
            "{} heatmaps for {} annotations",
            heatmaps.len(),
            annotations.len()
        )));
    }
    let mut kept = AnnotationSet::new(annotations.image.clone());
    let mut dropped = AnnotationSet::new(annotations.image.clone());
    let mut tightened_count = 0;
    for (i, (heatmap, ann)) in heatmaps.iter().zip(&annotations.boxes).enumerate() {
        let b = ann.bbox;
        if heatmap.width() != b.width() as usize || heatmap.height() != b.height() as usize {
            return Err(Error::DimMismatch(format!(
                "heatmap #{i} is {}x{} but its box {b} is {}x{}",
                heatmap.width(),
                heatmap.height(),
                b.width(),
                b.height()
            )));
        }
        if heatmap.max() < intensity_threshold {
            dropped.boxes.push(ann.clone());
            continue;
        }
        let tight = largest_region_bbox(heatmap)
            .and_then(|r| r.translate(b.x0, b.y0).intersection(&b))
            .unwrap_or(b);
        if tight != b {
            tightened_count += 1;
        }
        kept.boxes.push(Annotation {
            bbox: tight,
            ..ann.clone()
        });
    }
    Ok(CleansingReport {
        kept,
        dropped,
        tightened_count,
    })
}

/// Cleansing driven by one whole-image feature stack. Box heatmaps keep the
/// image-wide intensity scale so the drop threshold compares boxes against
/// the strongest response in the image.
pub fn clean_with_features(
    stack: &FeatureMapStack,
    image_w: usize,
    image_h: usize,
    annotations: &AnnotationSet,
    intensity_threshold: f64,
) -> Result<CleansingReport> {
    if image_w < stack.width() || image_h < stack.height() {
        return Err(Error::InvalidTarget(format!(
            "image {image_w}x{image_h} smaller than the {}x{} feature grid",
            stack.width(),
            stack.height()
        )));
    }
    annotations.validate_within(image_w, image_h)?;
    let raw = sum_activations(stack);
    let heatmaps = annotations
        .boxes
        .iter()
        .map(|a| box_heatmap_global(&raw, image_w, image_h, &a.bbox))
        .collect::<Result<Vec<_>>>()?;
    clean_annotations(&heatmaps, annotations, intensity_threshold)
}

fn scale_about_center(b: &BoundingBox, s: f64, width: usize, height: usize) -> BoundingBox {
    fn axis(lo: u32, hi: u32, s: f64, limit: usize) -> (u32, u32) {
        let twice_center = (lo + hi) as f64;
        let extent = (hi - lo) as f64 * s;
        let start = ((twice_center - extent) / 2.0).floor().max(0.0);
        let end = ((twice_center + extent) / 2.0).ceil().min(limit as f64);
        (start as u32, end as u32)
    }
    let (x0, x1) = axis(b.x0, b.x1, s, width);
    let (y0, y1) = axis(b.y0, b.y1, s, height);
    BoundingBox::new(x0, y0, x1, y1).expect("scaled box contains the original")
}

/// Boxes around every above-mean blob, each scaled about its centre by
/// every factor in `scales` and clipped to the heatmap. Ordered by blob
/// (largest first) then scale (ascending); duplicates are removed.
pub fn generate_proposals(heatmap: &ObjectnessHeatmap, scales: &[f64]) -> Result<Vec<BoundingBox>> {
    if scales.is_empty() {
        return Err(Error::InvalidParams(
            "at least one proposal scale is required".into(),
        ));
    }
    if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s >= 1.0)) {
        return Err(Error::InvalidParams(format!(
            "proposal scale {s} must be >= 1"
        )));
    }
    let mut ordered = scales.to_vec();
    ordered.sort_by(f64::total_cmp);

    let mut proposals: Vec<BoundingBox> = Vec::new();
    for blob in above_mean_blobs(heatmap) {
        for &s in &ordered {
            let b = scale_about_center(&blob.bbox, s, heatmap.width(), heatmap.height());
            if !proposals.contains(&b) {
                proposals.push(b);
            }
        }
    }
    Ok(proposals)
}
