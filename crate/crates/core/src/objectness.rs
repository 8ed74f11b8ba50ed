//! Objectness heatmaps built from a layer's summed activations, plus the
//! four-label trimap derived from them.

use crate::array_io::FeatureMapStack;
use crate::error::{Error, Result};
use crate::metrics::BoundingBox;

/// Catmull-Rom parameter of the cubic convolution kernel.
pub const CUBIC_A: f64 = -0.5;

/// Unconstrained real-valued grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RawMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidData(format!(
                "map of {width}x{height} cannot hold {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("map contains NaN or Inf".into()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a map from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == width), "ragged rows");
        Self::new(
            width,
            rows.len(),
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Sub-grid of columns `x0..x1`, rows `y0..y1`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<RawMap> {
        if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
            return Err(Error::InvalidTarget(format!(
                "crop ({x0}, {y0}, {x1}, {y1}) outside {}x{} map",
                self.width, self.height
            )));
        }
        let values = (y0..y1)
            .flat_map(|y| {
                self.values[y * self.width + x0..y * self.width + x1]
                    .iter()
                    .copied()
            })
            .collect();
        RawMap::new(x1 - x0, y1 - y0, values)
    }
}

/// Per-pixel objectness in `[0, 255]` at image resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectnessHeatmap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ObjectnessHeatmap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidData(format!(
                "heatmap of {width}x{height} cannot hold {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::InvalidData(format!(
                "heatmap value {v} outside [0, 255]"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let raw = RawMap::from_rows(rows)?;
        Self::new(raw.width, raw.height, raw.values)
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn crop(&self, bbox: &BoundingBox) -> Result<ObjectnessHeatmap> {
        if !bbox.fits_within(self.width, self.height) {
            return Err(Error::InvalidAnnotation(format!(
                "box {bbox} outside {}x{} heatmap",
                self.width, self.height
            )));
        }
        let (x0, x1) = (bbox.x0 as usize, bbox.x1 as usize);
        let values = (bbox.y0 as usize..bbox.y1 as usize)
            .flat_map(|y| {
                self.values[y * self.width + x0..y * self.width + x1]
                    .iter()
                    .copied()
            })
            .collect();
        ObjectnessHeatmap::new(x1 - x0, bbox.height() as usize, values)
    }
}

/// GrabCut seed labels, with the conventional numeric codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum TrimapLabel {
    SureBackground = 0,
    SureForeground = 1,
    ProbableBackground = 2,
    ProbableForeground = 3,
}

impl TrimapLabel {
    pub fn from_value(v: u16) -> Option<Self> {
        match v {
            0 => Some(Self::SureBackground),
            1 => Some(Self::SureForeground),
            2 => Some(Self::ProbableBackground),
            3 => Some(Self::ProbableForeground),
            _ => None,
        }
    }

    pub fn is_foreground(self) -> bool {
        matches!(self, Self::SureForeground | Self::ProbableForeground)
    }

    pub fn is_hard(self) -> bool {
        matches!(self, Self::SureForeground | Self::SureBackground)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    width: usize,
    height: usize,
    labels: Vec<TrimapLabel>,
}

impl Trimap {
    pub fn new(width: usize, height: usize, labels: Vec<TrimapLabel>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidData(format!(
                "trimap of {width}x{height} cannot hold {} labels",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: TrimapLabel) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[TrimapLabel] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> TrimapLabel {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: TrimapLabel) {
        self.labels[y * self.width + x] = label;
    }
}

/// Per-pixel sum over all channels.
///
/// Each pixel's channel values are summed in ascending order, so the result
/// does not depend on the order in which channels are stored.
pub fn sum_activations(stack: &FeatureMapStack) -> RawMap {
    let (h, w, c) = (stack.height(), stack.width(), stack.channels());
    let plane = h * w;
    let data = stack.data();
    let mut column = Vec::with_capacity(c);
    let values = (0..plane)
        .map(|p| {
            column.clear();
            column.extend((0..c).map(|ch| data[ch * plane + p] as f64));
            column.sort_by(f64::total_cmp);
            column.iter().sum()
        })
        .collect();
    RawMap {
        width: w,
        height: h,
        values,
    }
}

/// Affine rescale onto `[0, 255]`; a constant map becomes all zeros.
pub fn normalize(raw: &RawMap) -> RawMap {
    let (lo, hi) = raw.min_max();
    let range = hi - lo;
    let values = if range > 0.0 {
        raw.values
            .iter()
            .map(|&v| (v - lo) / range * 255.0)
            .collect()
    } else {
        vec![0.0; raw.values.len()]
    };
    RawMap {
        width: raw.width,
        height: raw.height,
        values,
    }
}

/// Cubic convolution kernel with parameter [`CUBIC_A`].
pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Source coordinate sampled by output index `dst` when resizing an axis of
/// length `src_len` to `dst_len` (pixel centres aligned).
pub fn source_coordinate(dst: usize, src_len: usize, dst_len: usize) -> f64 {
    (dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5
}

/// Four clamped taps and their weights for each output index of one axis.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<[(usize, f64); 4]> {
    let last = src_len as isize - 1;
    (0..dst_len)
        .map(|d| {
            let s = source_coordinate(d, src_len, dst_len);
            let base = s.floor();
            let t = s - base;
            let base = base as isize;
            let weights = [
                cubic_kernel(t + 1.0),
                cubic_kernel(t),
                cubic_kernel(1.0 - t),
                cubic_kernel(2.0 - t),
            ];
            std::array::from_fn(|k| ((base - 1 + k as isize).clamp(0, last) as usize, weights[k]))
        })
        .collect()
}

/// Kernel-weighted sum of four taps, taken relative to the second (nearest
/// left) tap. The weights sum to one, so this equals the plain weighted sum,
/// but constant runs come out exact instead of off by rounding.
fn interpolate(taps: &[(usize, f64); 4], sample: impl Fn(usize) -> f64) -> f64 {
    let anchor = sample(taps[1].0);
    anchor
        + taps
            .iter()
            .map(|&(i, w)| w * (sample(i) - anchor))
            .sum::<f64>()
}

/// Separable bicubic resampling to `target_h × target_w`, with edge samples
/// replicated for taps outside the source and the result clamped to
/// `[0, 255]`.
pub fn bicubic_upscale(map: &RawMap, target_h: usize, target_w: usize) -> Result<RawMap> {
    if target_h < map.height || target_w < map.width {
        return Err(Error::InvalidTarget(format!(
            "cannot upscale {}x{} map to smaller {}x{}",
            map.width, map.height, target_w, target_h
        )));
    }
    let col_taps = axis_taps(map.width, target_w);
    let row_taps = axis_taps(map.height, target_h);

    // horizontal pass: height × target_w
    let mut horizontal = vec![0.0; map.height * target_w];
    for y in 0..map.height {
        let src = &map.values[y * map.width..(y + 1) * map.width];
        let dst = &mut horizontal[y * target_w..(y + 1) * target_w];
        for (out, taps) in dst.iter_mut().zip(&col_taps) {
            *out = interpolate(taps, |i| src[i]);
        }
    }

    let mut values = vec![0.0; target_h * target_w];
    for (y, taps) in row_taps.iter().enumerate() {
        let dst = &mut values[y * target_w..(y + 1) * target_w];
        for (x, out) in dst.iter_mut().enumerate() {
            let v = interpolate(taps, |i| horizontal[i * target_w + x]);
            *out = v.clamp(0.0, 255.0);
        }
    }
    Ok(RawMap {
        width: target_w,
        height: target_h,
        values,
    })
}

/// Sum, normalize, then upscale a raw activation map to image size.
pub fn heatmap_from_raw(raw: &RawMap, image_h: usize, image_w: usize) -> Result<ObjectnessHeatmap> {
    let up = bicubic_upscale(&normalize(raw), image_h, image_w)?;
    Ok(ObjectnessHeatmap {
        width: up.width,
        height: up.height,
        values: up.values,
    })
}

/// Objectness heatmap of an `image_h × image_w` image from its feature stack.
pub fn objectness(
    stack: &FeatureMapStack,
    image_h: usize,
    image_w: usize,
) -> Result<ObjectnessHeatmap> {
    heatmap_from_raw(&sum_activations(stack), image_h, image_w)
}

/// Trimap from a heatmap: above the mean intensity is sure foreground,
/// positive but not above the mean is probable foreground, zero is probable
/// background. Sure background is never produced.
pub fn stratify(heatmap: &ObjectnessHeatmap) -> Trimap {
    let mean = heatmap.mean();
    let labels = heatmap
        .values
        .iter()
        .map(|&v| {
            if v > mean {
                TrimapLabel::SureForeground
            } else if v == 0.0 {
                TrimapLabel::ProbableBackground
            } else {
                TrimapLabel::ProbableForeground
            }
        })
        .collect();
    Trimap {
        width: heatmap.width,
        height: heatmap.height,
        labels,
    }
}
