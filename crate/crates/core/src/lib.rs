//! Class-agnostic objectness from convolutional activations.
//!
//! Summing a convolutional layer's activations over channels and bicubically
//! upsampling the result to image resolution gives an objectness heatmap.
//! This crate turns such heatmaps into:
//!
//! * GrabCut seeds (a four-label trimap) and fine-grained foreground masks,
//! * instance segmentations composed from detector boxes,
//! * cleansed detection annotations (empty boxes dropped, the rest tightened),
//! * multi-scale object proposals,
//!
//! plus the IoU / recall metrics used to evaluate them. Feature maps are
//! produced elsewhere and read from NPY files.

pub mod array_io;
pub mod cli;
pub mod error;
pub mod grabcut;
pub mod metrics;
pub mod objectness;
pub mod pipeline;
pub mod regions;

pub use array_io::{Annotation, AnnotationSet, FeatureMapStack, RasterImage};
pub use error::{Error, Result};
pub use grabcut::{grabcut, GmmParams, GrabCutParams, SegmentationMask};
pub use metrics::BoundingBox;
pub use objectness::{ObjectnessHeatmap, RawMap, Trimap, TrimapLabel};
