//! GrabCut segmentation seeded by a trimap.
//!
//! Each outer iteration assigns pixels to their best Gaussian component,
//! re-estimates the foreground and background colour models, and relabels the
//! soft (probable) pixels with a minimum s-t cut. Pixels labelled sure
//! foreground / sure background never change.

pub mod flow;
pub mod gmm;
pub mod graph;

use log::debug;

use crate::array_io::RasterImage;
use crate::error::{Error, Result};
use crate::objectness::{Trimap, TrimapLabel};

pub use flow::{max_flow_min_cut, FlowNetwork, MinCut};
pub use gmm::{fit_gmm, fit_gmm_traced, Color, GaussianComponent, GmmFit, GmmParams};
pub use graph::{build_graph, NeighborhoodWeights, PixelGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrabCutParams {
    /// Gaussian components per colour model.
    pub k: usize,
    /// Smoothness weight.
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop once the relative energy decrease of an iteration drops below this.
    pub energy_epsilon: f64,
    pub rng_seed: u64,
}

impl Default for GrabCutParams {
    fn default() -> Self {
        Self {
            k: 5,
            gamma: 50.0,
            max_iters: 5,
            energy_epsilon: 1e-3,
            rng_seed: 42,
        }
    }
}

impl GrabCutParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "gamma {} must be finite and >= 0",
                self.gamma
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if !(self.energy_epsilon >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "energy_epsilon {} must be >= 0",
                self.energy_epsilon
            )));
        }
        Ok(())
    }
}

/// Binary foreground mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SegmentationMask {
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

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
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

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Result of a GrabCut run with its energy history.
#[derive(Debug, Clone)]
pub struct GrabCutOutcome {
    pub mask: SegmentationMask,
    /// Energy of the initial labelling, then after each outer iteration.
    pub energies: Vec<f64>,
    pub iterations: usize,
}

fn samples_where(image: &RasterImage, labels: &[bool], want: bool) -> Vec<Color> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == want)
        .map(|(i, _)| graph::color_of(image, i))
        .collect()
}

fn initial_model(samples: &[Color], k: usize, seed: u64) -> Result<GmmParams> {
    fit_gmm(samples, k.min(samples.len()), seed)
}

pub fn grabcut(
    image: &RasterImage,
    trimap: &Trimap,
    params: &GrabCutParams,
) -> Result<SegmentationMask> {
    grabcut_traced(image, trimap, params).map(|o| o.mask)
}

pub fn grabcut_traced(
    image: &RasterImage,
    trimap: &Trimap,
    params: &GrabCutParams,
) -> Result<GrabCutOutcome> {
    params.validate()?;
    if image.width() != trimap.width() || image.height() != trimap.height() {
        return Err(Error::DimMismatch(format!(
            "image {}x{} vs trimap {}x{}",
            image.width(),
            image.height(),
            trimap.width(),
            trimap.height()
        )));
    }
    let mut labels: Vec<bool> = trimap.labels().iter().map(|l| l.is_foreground()).collect();
    let fg_count = labels.iter().filter(|&&l| l).count();
    if fg_count == 0 || fg_count == labels.len() {
        let side = if fg_count == 0 {
            "background"
        } else {
            "foreground"
        };
        return Err(Error::DegenerateTrimap(format!(
            "every pixel is seeded as {side}; GrabCut needs both foreground and background seeds"
        )));
    }

    let weights = NeighborhoodWeights::new(image, params.gamma);
    let mut fg = initial_model(
        &samples_where(image, &labels, true),
        params.k,
        params.rng_seed,
    )?;
    let mut bg = initial_model(
        &samples_where(image, &labels, false),
        params.k,
        params.rng_seed.wrapping_add(1),
    )?;
    let mut current = graph::energy(&graph::data_terms(image, &fg, &bg), &weights, &labels);
    let mut energies = vec![current];
    let mut iterations = 0;

    for _ in 0..params.max_iters {
        iterations += 1;
        // Component assignment and model re-estimation. A side emptied by
        // the previous cut keeps its model. The re-estimated pair is kept
        // only if it does not raise the energy of the current labelling.
        let fg_samples = samples_where(image, &labels, true);
        let bg_samples = samples_where(image, &labels, false);
        let new_fg = if fg_samples.is_empty() {
            fg.clone()
        } else {
            fg.refit(&fg_samples)?
        };
        let new_bg = if bg_samples.is_empty() {
            bg.clone()
        } else {
            bg.refit(&bg_samples)?
        };
        let refit_energy = graph::energy(
            &graph::data_terms(image, &new_fg, &new_bg),
            &weights,
            &labels,
        );
        if refit_energy <= current {
            fg = new_fg;
            bg = new_bg;
            current = refit_energy;
        }

        let g = build_graph(image, trimap, &fg, &bg, &weights, params.gamma)?;
        let cut = max_flow_min_cut(&g.network);
        let next: Vec<bool> = trimap
            .labels()
            .iter()
            .zip(&cut.source_side)
            .map(|(&l, &src)| match l {
                TrimapLabel::SureForeground => true,
                TrimapLabel::SureBackground => false,
                _ => src,
            })
            .collect();
        debug_assert!(
            trimap
                .labels()
                .iter()
                .zip(&cut.source_side)
                .all(|(l, &s)| !l.is_hard() || s == l.is_foreground()),
            "min cut violated a hard constraint"
        );
        let next_energy = graph::energy(&graph::data_terms(image, &fg, &bg), &weights, &next);
        debug!(
            "grabcut iteration {iterations}: energy {current:.6} -> {next_energy:.6}, fg {} px",
            next.iter().filter(|&&l| l).count()
        );
        let decrease = current - next_energy;
        labels = next;
        let previous = current;
        current = next_energy;
        energies.push(current);
        if decrease <= params.energy_epsilon * previous.abs() {
            break;
        }
    }

    Ok(GrabCutOutcome {
        mask: SegmentationMask::new(image.width(), image.height(), labels)?,
        energies,
        iterations,
    })
}
