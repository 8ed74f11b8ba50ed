//! Thresholding and connected-component analysis of heatmaps.

use crate::error::{Error, Result};
use crate::metrics::BoundingBox;
use crate::objectness::ObjectnessHeatmap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::InvalidData(format!(
                "mask of {width}x{height} cannot hold {} bits",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    /// Neighbour offsets already visited in a raster scan.
    fn backward_offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1)],
            Connectivity::Eight => &[(-1, 0), (-1, -1), (0, -1), (1, -1)],
        }
    }
}

/// One connected blob of set pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub bbox: BoundingBox,
    /// `(x, y)` coordinates in raster order.
    pub pixels: Vec<(usize, usize)>,
}

impl Region {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Set where the heatmap is strictly above `threshold`.
pub fn binarize(heatmap: &ObjectnessHeatmap, threshold: f64) -> BinaryMask {
    BinaryMask {
        width: heatmap.width(),
        height: heatmap.height(),
        bits: heatmap.values().iter().map(|&v| v > threshold).collect(),
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Maximal connected regions of set pixels, largest first; equal areas are
/// ordered by the top, then left, edge of their boxes.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<Region> {
    let (w, h) = (mask.width, mask.height);
    // two-pass labelling with union-find over provisional labels
    let mut labels = vec![usize::MAX; w * h];
    let mut parent: Vec<usize> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.bits[y * w + x] {
                continue;
            }
            let mut current = usize::MAX;
            for &(dx, dy) in connectivity.backward_offsets() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize {
                    continue;
                }
                let n = labels[ny as usize * w + nx as usize];
                if n == usize::MAX {
                    continue;
                }
                if current == usize::MAX {
                    current = find(&mut parent, n);
                } else {
                    let (a, b) = (find(&mut parent, current), find(&mut parent, n));
                    if a != b {
                        let (lo, hi) = (a.min(b), a.max(b));
                        parent[hi] = lo;
                        current = lo;
                    }
                }
            }
            if current == usize::MAX {
                current = parent.len();
                parent.push(current);
            }
            labels[y * w + x] = current;
        }
    }

    let mut slot_of_root = vec![usize::MAX; parent.len()];
    let mut pixel_lists: Vec<Vec<(usize, usize)>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == usize::MAX {
                continue;
            }
            let root = find(&mut parent, l);
            if slot_of_root[root] == usize::MAX {
                slot_of_root[root] = pixel_lists.len();
                pixel_lists.push(Vec::new());
            }
            pixel_lists[slot_of_root[root]].push((x, y));
        }
    }

    let mut regions: Vec<Region> = pixel_lists
        .into_iter()
        .map(|pixels| {
            let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
            for &(x, y) in &pixels {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
            let bbox = BoundingBox::new(x0 as u32, y0 as u32, x1 as u32, y1 as u32)
                .expect("non-empty region");
            Region { bbox, pixels }
        })
        .collect();
    regions.sort_by(|a, b| {
        b.area()
            .cmp(&a.area())
            .then(a.bbox.y0.cmp(&b.bbox.y0))
            .then(a.bbox.x0.cmp(&b.bbox.x0))
    });
    regions
}

/// Above-mean, 8-connected blobs of a heatmap.
pub fn above_mean_blobs(heatmap: &ObjectnessHeatmap) -> Vec<Region> {
    connected_components(&binarize(heatmap, heatmap.mean()), Connectivity::Eight)
}

/// Tight box around the largest above-mean blob, if there is one.
pub fn largest_region_bbox(heatmap: &ObjectnessHeatmap) -> Option<BoundingBox> {
    above_mean_blobs(heatmap).first().map(|r| r.bbox)
}
