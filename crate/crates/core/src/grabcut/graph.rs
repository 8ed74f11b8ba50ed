//! Pixel graph for GrabCut: contrast-sensitive n-links over the 8-neighbourhood
//! and GMM data terms as t-links.

use std::f64::consts::SQRT_2;

use crate::array_io::RasterImage;
use crate::error::{Error, Result};
use crate::grabcut::flow::FlowNetwork;
use crate::grabcut::gmm::{Color, GmmParams};
use crate::objectness::{Trimap, TrimapLabel};

/// Scale of the "infinite" t-link that pins hard-labelled pixels.
pub const HARD_LINK_SCALE: f64 = 1e9;

/// Offsets of the four forward neighbours: right, down, down-right, down-left.
const FORWARD: [(isize, isize, f64); 4] =
    [(1, 0, 1.0), (0, 1, 1.0), (1, 1, SQRT_2), (-1, 1, SQRT_2)];

pub fn color_of(image: &RasterImage, index: usize) -> Color {
    image.pixels()[index].map(f64::from)
}

fn sq_color_diff(a: [u8; 3], b: [u8; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum()
}

/// Each unordered 8-neighbour pair once.
fn neighbor_pairs(width: usize, height: usize) -> impl Iterator<Item = (usize, usize, f64)> {
    (0..height).flat_map(move |y| {
        (0..width).flat_map(move |x| {
            FORWARD.iter().filter_map(move |&(dx, dy, dist)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                (nx >= 0 && nx < width as isize && ny < height as isize)
                    .then(|| (y * width + x, ny as usize * width + nx as usize, dist))
            })
        })
    })
}

/// Smoothness weights `γ / dist(p, q) · exp(-β ‖c_p − c_q‖²)` of every
/// neighbour pair, with `β = 1 / (2 · mean ‖c_p − c_q‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodWeights {
    pub beta: f64,
    /// `(p, q, weight)` for each unordered pair.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl NeighborhoodWeights {
    pub fn new(image: &RasterImage, gamma: f64) -> Self {
        let px = image.pixels();
        let (mut total, mut count) = (0.0, 0usize);
        for (p, q, _) in neighbor_pairs(image.width(), image.height()) {
            total += sq_color_diff(px[p], px[q]);
            count += 1;
        }
        // a constant image (or a single pixel) has no contrast to normalize
        let beta = if total > 0.0 {
            1.0 / (2.0 * total / count as f64)
        } else {
            0.0
        };
        let pairs = neighbor_pairs(image.width(), image.height())
            .map(|(p, q, dist)| {
                (
                    p,
                    q,
                    gamma / dist * (-beta * sq_color_diff(px[p], px[q])).exp(),
                )
            })
            .collect();
        Self { beta, pairs }
    }

    /// Total weight of pairs whose endpoints carry different labels.
    pub fn boundary_cost(&self, labels: &[bool]) -> f64 {
        self.pairs
            .iter()
            .filter(|(p, q, _)| labels[*p] != labels[*q])
            .map(|(_, _, w)| w)
            .sum()
    }
}

/// Data term of every pixel under both colour models: `(fg, bg)` negative
/// log densities.
pub fn data_terms(image: &RasterImage, fg: &GmmParams, bg: &GmmParams) -> Vec<(f64, f64)> {
    (0..image.pixels().len())
        .map(|i| {
            let c = color_of(image, i);
            (fg.neg_log_density(&c), bg.neg_log_density(&c))
        })
        .collect()
}

/// GrabCut energy of a labelling (`true` = foreground): data terms of every
/// pixel under its label's model plus the boundary cost.
pub fn energy(data: &[(f64, f64)], weights: &NeighborhoodWeights, labels: &[bool]) -> f64 {
    let data_cost: f64 = data
        .iter()
        .zip(labels)
        .map(|(&(fg, bg), &is_fg)| if is_fg { fg } else { bg })
        .sum();
    data_cost + weights.boundary_cost(labels)
}

/// The flow network of one GrabCut iteration together with the constant that
/// relates its cut capacities to the energy.
#[derive(Debug, Clone)]
pub struct PixelGraph {
    pub network: FlowNetwork,
    /// `energy(labels) == cut_capacity + energy_offset` for every labelling
    /// that respects the hard constraints.
    pub energy_offset: f64,
    pub hard_capacity: f64,
}

impl PixelGraph {
    pub fn source(&self) -> usize {
        self.network.source()
    }

    pub fn sink(&self) -> usize {
        self.network.sink()
    }
}

/// Builds the s-t graph: node `i` is pixel `i` (row-major), followed by the
/// source (foreground) and sink (background) terminals.
///
/// The source → pixel arc carries the cost of labelling the pixel background
/// and pixel → sink the cost of labelling it foreground. Both data terms of a
/// pixel are shifted by their minimum so capacities stay non-negative; the
/// shift only adds a labelling-independent constant. Sure-foreground pixels
/// get a source arc of `HARD_LINK_SCALE·γ + max data term + 1` and no sink
/// arc (sure-background mirrored).
pub fn build_graph(
    image: &RasterImage,
    trimap: &Trimap,
    fg: &GmmParams,
    bg: &GmmParams,
    weights: &NeighborhoodWeights,
    gamma: f64,
) -> Result<PixelGraph> {
    if image.width() != trimap.width() || image.height() != trimap.height() {
        return Err(Error::DimMismatch(format!(
            "image {}x{} vs trimap {}x{}",
            image.width(),
            image.height(),
            trimap.width(),
            trimap.height()
        )));
    }
    let n = image.pixels().len();
    let (source, sink) = (n, n + 1);
    let data = data_terms(image, fg, bg);

    let mut offset = 0.0;
    let mut links = Vec::with_capacity(n);
    for (&(d_fg, d_bg), &label) in data.iter().zip(trimap.labels()) {
        match label {
            TrimapLabel::SureForeground => {
                offset += d_fg;
                links.push(None);
            }
            TrimapLabel::SureBackground => {
                offset += d_bg;
                links.push(None);
            }
            _ => {
                let m = d_fg.min(d_bg);
                offset += m;
                links.push(Some((d_bg - m, d_fg - m)));
            }
        }
    }
    let max_data = links
        .iter()
        .flatten()
        .map(|&(s, t)| s.max(t))
        .fold(0.0, f64::max);
    let hard = HARD_LINK_SCALE * gamma + max_data + 1.0;

    let mut net = FlowNetwork::new(n + 2, source, sink)?;
    for (i, (link, &label)) in links.iter().zip(trimap.labels()).enumerate() {
        let (to_source_cap, to_sink_cap) = match (label, link) {
            (TrimapLabel::SureForeground, _) => (hard, 0.0),
            (TrimapLabel::SureBackground, _) => (0.0, hard),
            (_, Some(l)) => *l,
            (_, None) => unreachable!("soft pixels always have data links"),
        };
        if to_source_cap > 0.0 {
            net.add_arc(source, i, to_source_cap)?;
        }
        if to_sink_cap > 0.0 {
            net.add_arc(i, sink, to_sink_cap)?;
        }
    }
    for &(p, q, w) in &weights.pairs {
        if w > 0.0 {
            net.add_edge(p, q, w, w)?;
        }
    }
    Ok(PixelGraph {
        network: net,
        energy_offset: offset,
        hard_capacity: hard,
    })
}
