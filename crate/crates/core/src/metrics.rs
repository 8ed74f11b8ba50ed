//! Box and mask overlap measures, dataset mean IoU and proposal recall.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::grabcut::SegmentationMask;

/// Axis-aligned pixel box with half-open extents: columns `x0..x1`, rows
/// `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundingBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BoundingBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidAnnotation(format!(
                "degenerate box ({x0}, {y0}, {x1}, {y1}): need x0 < x1 and y0 < y1"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.x1 as usize <= width && self.y1 as usize <= height
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn contains_point(&self, x: usize, y: usize) -> bool {
        (self.x0 as usize..self.x1 as usize).contains(&x)
            && (self.y0 as usize..self.y1 as usize).contains(&y)
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        BoundingBox::new(x0, y0, x1, y1).ok()
    }

    pub fn translate(&self, dx: u32, dy: u32) -> BoundingBox {
        BoundingBox {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x0, self.y0, self.x1, self.y1)
    }
}

pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b).map_or(0, |i| i.area());
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Foreground IoU; two empty masks agree perfectly.
pub fn mask_iou(a: &SegmentationMask, b: &SegmentationMask) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimMismatch(format!(
            "masks are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (mut inter, mut union) = (0u64, 0u64);
    for (&p, &q) in a.bits().iter().zip(b.bits()) {
        inter += (p && q) as u64;
        union += (p || q) as u64;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

pub fn mean_iou(pairs: &[(SegmentationMask, SegmentationMask)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("mean IoU over zero mask pairs".into()));
    }
    let total = pairs
        .iter()
        .map(|(a, b)| mask_iou(a, b))
        .sum::<Result<f64>>()?;
    Ok(total / pairs.len() as f64)
}

/// Fraction of ground-truth boxes matched by at least one proposal with
/// IoU ≥ `iou_threshold`. A proposal may match several ground-truth boxes.
pub fn recall_at(
    proposals: &[BoundingBox],
    ground_truth: &[BoundingBox],
    iou_threshold: f64,
) -> f64 {
    if ground_truth.is_empty() {
        return 1.0;
    }
    let hits = ground_truth
        .iter()
        .filter(|gt| proposals.iter().any(|p| box_iou(p, gt) >= iou_threshold))
        .count();
    hits as f64 / ground_truth.len() as f64
}

/// Recall split by ground-truth label.
pub fn recall_per_label<'a>(
    proposals: &[BoundingBox],
    ground_truth: impl IntoIterator<Item = (&'a str, BoundingBox)>,
    iou_threshold: f64,
) -> BTreeMap<String, f64> {
    let mut by_label: BTreeMap<String, Vec<BoundingBox>> = BTreeMap::new();
    for (label, bbox) in ground_truth {
        by_label.entry(label.to_string()).or_default().push(bbox);
    }
    by_label
        .into_iter()
        .map(|(label, boxes)| (label, recall_at(proposals, &boxes, iou_threshold)))
        .collect()
}

pub fn check_iou_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "IoU threshold {t} must lie in (0, 1]"
        )))
    }
}
