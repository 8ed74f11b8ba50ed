//! Batch command-line front end. Every subcommand computes its results in
//! memory before touching its declared outputs, then prints one JSON summary
//! line on stdout. Logs go to stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use crate::array_io::{self, Annotation, AnnotationSet, FeatureMapStack};
use crate::error::{Error, Result};
use crate::grabcut::{grabcut, GrabCutParams};
use crate::metrics::{check_iou_threshold, mean_iou, recall_at, recall_per_label, BoundingBox};
use crate::objectness::{objectness, stratify, TrimapLabel};
use crate::pipeline::{self, BoxFeatures};

/// Spatial stride assumed between the feature grid and the image when no
/// image size is given (four 2x poolings).
pub const DEFAULT_FEATURE_STRIDE: usize = 16;

pub const PROPOSAL_LABEL: &str = "object";

#[derive(Debug, Parser)]
#[command(
    name = "objectness",
    version,
    about = "Objectness heatmaps from convolutional activations, with GrabCut localisation, instance masks, annotation cleansing and proposals",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the objectness heatmap as an 8-bit PGM.
    Heatmap(MapArgs),
    /// Write the GrabCut trimap (labels 0..=3) as a PGM.
    Trimap(MapArgs),
    /// Foreground mask of the whole image (255 = foreground).
    Segment(SegmentArgs),
    /// Instance id map from detection boxes, plus a JSON table.
    Instances(InstancesArgs),
    /// Drop object-free boxes and tighten the rest.
    Clean(CleanArgs),
    /// Object proposals from heatmap blobs.
    Propose(ProposeArgs),
    /// Mean IoU over PRED GT mask pairs.
    EvalIou(EvalIouArgs),
    /// Recall of proposals against ground-truth boxes.
    EvalRecall(EvalRecallArgs),
}

#[derive(Debug, Args)]
struct SizeArgs {
    /// Feature stack (NPY, C x H x W float32).
    #[arg(long)]
    features: PathBuf,
    /// Output width in pixels (default: image width, else 16 x feature width).
    #[arg(long, requires = "height", conflicts_with = "image")]
    width: Option<usize>,
    #[arg(long, requires = "width", conflicts_with = "image")]
    height: Option<usize>,
    /// Take the output size from this PPM image.
    #[arg(long)]
    image: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GrabCutArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Gaussian components per colour model.
    #[arg(long = "gmm-k", default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    gmm_k: u64,
    /// Smoothness weight.
    #[arg(long, default_value_t = 50.0, value_parser = parse_gamma)]
    gamma: f64,
    /// Maximum GrabCut iterations.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
}

impl GrabCutArgs {
    fn params(&self) -> GrabCutParams {
        GrabCutParams {
            k: self.gmm_k as usize,
            gamma: self.gamma,
            max_iters: self.iters as usize,
            rng_seed: self.seed,
            ..GrabCutParams::default()
        }
    }
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long)]
    features: PathBuf,
    /// Colour image (binary PPM).
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    grabcut: GrabCutArgs,
}

#[derive(Debug, Args)]
struct InstancesArgs {
    /// Whole-image feature stack; boxes are cropped at feature resolution.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// Detection boxes (annotation JSON).
    #[arg(long)]
    annotations: PathBuf,
    /// Instance id PGM; the table goes to the same path with a .json extension.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    grabcut: GrabCutArgs,
}

#[derive(Debug, Args)]
struct CleanArgs {
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long)]
    annotations: PathBuf,
    /// Cleansed annotation JSON.
    #[arg(long)]
    out: PathBuf,
    /// Boxes whose heatmap never reaches this intensity are dropped.
    #[arg(long = "drop-threshold", default_value_t = pipeline::DEFAULT_DROP_THRESHOLD, value_parser = parse_intensity)]
    drop_threshold: f64,
}

#[derive(Debug, Args)]
struct ProposeArgs {
    #[command(flatten)]
    size: SizeArgs,
    /// Proposal boxes, written as annotation JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = pipeline::DEFAULT_SCALES, value_parser = parse_scale)]
    scales: Vec<f64>,
}

#[derive(Debug, Args)]
struct EvalIouArgs {
    /// Mask PGMs as PRED GT PRED GT ...
    #[arg(required = true, num_args = 2..)]
    masks: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalRecallArgs {
    /// Ground-truth boxes (annotation JSON).
    #[arg(long)]
    annotations: PathBuf,
    /// Proposal boxes (annotation JSON).
    proposals: PathBuf,
    #[arg(long = "iou-threshold", default_value_t = 0.9, value_parser = parse_iou_threshold)]
    iou_threshold: f64,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

fn parse_gamma(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("gamma must be finite and >= 0, got {v}"))
    }
}

fn parse_intensity(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..=255.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("threshold must lie in [0, 255], got {v}"))
    }
}

fn parse_scale(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v.is_finite() && v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("scales must be finite and >= 1, got {v}"))
    }
}

fn parse_iou_threshold(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    check_iou_threshold(v).map(|_| v).map_err(|e| e.to_string())
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on data errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();

    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn target_size(stack: &FeatureMapStack, size: &SizeArgs) -> Result<(usize, usize)> {
    if let (Some(w), Some(h)) = (size.width, size.height) {
        return Ok((w, h));
    }
    if let Some(path) = &size.image {
        let image = array_io::read_image(path)?;
        return Ok((image.width(), image.height()));
    }
    Ok((
        stack.width() * DEFAULT_FEATURE_STRIDE,
        stack.height() * DEFAULT_FEATURE_STRIDE,
    ))
}

fn load_heatmap(
    size: &SizeArgs,
) -> Result<(FeatureMapStack, crate::objectness::ObjectnessHeatmap)> {
    let stack = array_io::read_feature_stack(&size.features)?;
    let (w, h) = target_size(&stack, size)?;
    info!(
        "{}: {}x{}x{} features from layer {} -> {w}x{h}",
        size.features.display(),
        stack.channels(),
        stack.height(),
        stack.width(),
        stack.layer_name
    );
    let heatmap = objectness(&stack, h, w)?;
    Ok((stack, heatmap))
}

fn image_name(stack: &FeatureMapStack, fallback: &Path) -> String {
    if stack.source_image.is_empty() {
        fallback.display().to_string()
    } else {
        stack.source_image.clone()
    }
}

fn execute(command: Command) -> Result<serde_json::Value> {
    match command {
        Command::Heatmap(args) => {
            let (_, heatmap) = load_heatmap(&args.size)?;
            array_io::write_heatmap(&heatmap, &args.out)?;
            Ok(json!({
                "width": heatmap.width(),
                "height": heatmap.height(),
                "mean": heatmap.mean(),
                "max": heatmap.max(),
            }))
        }
        Command::Trimap(args) => {
            let (_, heatmap) = load_heatmap(&args.size)?;
            let trimap = stratify(&heatmap);
            array_io::write_trimap(&trimap, &args.out)?;
            let mut counts = BTreeMap::new();
            for label in [
                TrimapLabel::SureBackground,
                TrimapLabel::SureForeground,
                TrimapLabel::ProbableBackground,
                TrimapLabel::ProbableForeground,
            ] {
                let n = trimap.labels().iter().filter(|&&l| l == label).count();
                counts.insert((label as u8).to_string(), n);
            }
            Ok(
                json!({ "width": trimap.width(), "height": trimap.height(), "label_counts": counts }),
            )
        }
        Command::Segment(args) => {
            let stack = array_io::read_feature_stack(&args.features)?;
            let image = array_io::read_image(&args.image)?;
            let heatmap = objectness(&stack, image.height(), image.width())?;
            let mask = grabcut(&image, &stratify(&heatmap), &args.grabcut.params())?;
            array_io::write_mask(&mask, &args.out)?;
            Ok(json!({
                "width": mask.width(),
                "height": mask.height(),
                "foreground_pixels": mask.area(),
            }))
        }
        Command::Instances(args) => {
            let stack = array_io::read_feature_stack(&args.features)?;
            let image = array_io::read_image(&args.image)?;
            let detections = array_io::read_annotations(&args.annotations)?;
            let map = pipeline::segment_instances(
                &image,
                BoxFeatures::Shared(&stack),
                &detections,
                &args.grabcut.params(),
            )?;
            array_io::write_instance_map(&map, &args.out)?;
            Ok(json!({
                "detections": detections.len(),
                "instances": map.instances.len(),
                "skipped": detections.len() - map.instances.len(),
            }))
        }
        Command::Clean(args) => {
            let stack = array_io::read_feature_stack(&args.size.features)?;
            let (w, h) = target_size(&stack, &args.size)?;
            let annotations = array_io::read_annotations(&args.annotations)?;
            let report =
                pipeline::clean_with_features(&stack, w, h, &annotations, args.drop_threshold)?;
            for dropped in &report.dropped.boxes {
                info!("dropped {} {}", dropped.label, dropped.bbox);
            }
            array_io::write_annotations(&report.kept, &args.out)?;
            Ok(json!({
                "input": annotations.len(),
                "kept": report.kept.len(),
                "dropped": report.dropped.len(),
                "tightened": report.tightened_count,
            }))
        }
        Command::Propose(args) => {
            let (stack, heatmap) = load_heatmap(&args.size)?;
            let boxes = pipeline::generate_proposals(&heatmap, &args.scales)?;
            let set = AnnotationSet {
                image: image_name(&stack, &args.size.features),
                boxes: boxes
                    .into_iter()
                    .map(|bbox| Annotation {
                        bbox,
                        label: PROPOSAL_LABEL.to_string(),
                        score: None,
                    })
                    .collect(),
            };
            array_io::write_annotations(&set, &args.out)?;
            Ok(json!({ "proposals": set.len() }))
        }
        Command::EvalIou(args) => {
            if args.masks.len() % 2 != 0 {
                return Err(Error::InvalidParams(format!(
                    "eval-iou takes PRED GT pairs, got {} paths",
                    args.masks.len()
                )));
            }
            let pairs = args
                .masks
                .chunks(2)
                .map(|pair| {
                    Ok((
                        array_io::read_mask(&pair[0])?,
                        array_io::read_mask(&pair[1])?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({ "mean_iou": mean_iou(&pairs)?, "pairs": pairs.len() }))
        }
        Command::EvalRecall(args) => {
            let gt = array_io::read_annotations(&args.annotations)?;
            let proposals: Vec<BoundingBox> = array_io::read_annotations(&args.proposals)?
                .boxes
                .iter()
                .map(|a| a.bbox)
                .collect();
            let gt_boxes: Vec<BoundingBox> = gt.boxes.iter().map(|a| a.bbox).collect();
            let per_label = recall_per_label(
                &proposals,
                gt.boxes.iter().map(|a| (a.label.as_str(), a.bbox)),
                args.iou_threshold,
            );
            Ok(json!({
                "recall": recall_at(&proposals, &gt_boxes, args.iou_threshold),
                "iou_threshold": args.iou_threshold,
                "ground_truth": gt_boxes.len(),
                "proposals": proposals.len(),
                "per_label": per_label,
            }))
        }
    }
}
