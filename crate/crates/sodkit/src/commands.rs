//! The four subcommands, callable without going through the binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use sodkit_core::metrics::{evaluate_image, mean_curve, pr_curve, ImageMetrics, MetricConfig, PrCurve};
use sodkit_core::model::{ForwardOutput, ModalityInputs, Model};
use sodkit_core::tensor::{bilinear_resize, concat_channels};
use sodkit_core::Tensor;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::{is_image_path, read_image, write_image};
use crate::report::{aggregate_rows, write_pr_csv, EvalReport, Row};
use crate::tensor_file::{read_tensor, write_tensor};

#[derive(Clone, Debug, Args)]
pub struct EvalOptions {
    /// Directory of predicted saliency maps
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth masks, matched to predictions by file stem
    #[arg(long)]
    pub gt: PathBuf,
    /// TOML run configuration; defaults apply when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON report to write
    #[arg(long)]
    pub out: PathBuf,
    /// Bilinearly resize predictions to their ground truth's size
    #[arg(long)]
    pub resize_pred: bool,
    /// Overrides `beta2` from the config
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Overrides `iou_threshold` from the config
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct ForwardOptions {
    /// RGB (or grayscale) input image
    #[arg(long)]
    pub input: PathBuf,
    /// Depth map: a grayscale image or a DUPT tensor
    #[arg(long)]
    pub depth: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Full-resolution mask output, written as an 8-bit grayscale image
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for DUPT dumps of all six output maps
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Overrides `seed` from the config
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Args)]
pub struct PrOptions {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// CSV file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImagePair {
    pub name: String,
    pub pred: PathBuf,
    pub gt: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pairing {
    /// Sorted by name.
    pub pairs: Vec<ImagePair>,
    /// Paths present in only one of the two directories.
    pub unmatched: Vec<String>,
}

fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || !is_image_path(&path) {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(Error::Data(format!(
                "{} and {} share the stem {stem:?}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Matches image files in the two directories by file stem.
pub fn pair_dirs(pred_dir: &Path, gt_dir: &Path) -> Result<Pairing> {
    let pred = images_by_stem(pred_dir)?;
    let mut gt = images_by_stem(gt_dir)?;
    let mut pairing = Pairing::default();
    for (name, p) in pred {
        match gt.remove(&name) {
            Some(g) => pairing.pairs.push(ImagePair { name, pred: p, gt: g }),
            None => pairing.unmatched.push(p.display().to_string()),
        }
    }
    pairing.unmatched.extend(gt.values().map(|g| g.display().to_string()));
    pairing.unmatched.sort();
    Ok(pairing)
}

fn read_map(path: &Path) -> Result<Tensor> {
    let t = read_image(path)?;
    if t.dims()[1] != 1 {
        return Err(Error::Data(format!(
            "{}: expected a single-channel map",
            path.display()
        )));
    }
    Ok(t)
}

/// Prediction and ground truth of one pair at the ground truth's size.
pub fn load_pair(pair: &ImagePair, resize_pred: bool) -> Result<(Tensor, Tensor)> {
    let (p, g) = (read_map(&pair.pred)?, read_map(&pair.gt)?);
    if p.dims() == g.dims() {
        return Ok((p, g));
    }
    let [_, _, gh, gw] = g.nchw()?;
    if !resize_pred {
        return Err(Error::Data(format!(
            "{}: prediction is {}x{} but ground truth is {gh}x{gw} (pass --resize-pred to resample)",
            pair.name,
            p.dims()[2],
            p.dims()[3]
        )));
    }
    Ok((bilinear_resize(&p, gh, gw)?, g))
}

fn require_pairs(pairing: &Pairing, opts: (&Path, &Path)) -> Result<()> {
    if pairing.pairs.is_empty() {
        return Err(Error::Data(format!(
            "no image pairs with matching names in {} and {}",
            opts.0.display(),
            opts.1.display()
        )));
    }
    Ok(())
}

/// Metrics for every pair, in pairing order.
pub fn evaluate_pairs(pairs: &[ImagePair], cfg: &MetricConfig, resize_pred: bool) -> Result<Vec<ImageMetrics>> {
    pairs
        .par_iter()
        .map(|pair| {
            let (p, g) = load_pair(pair, resize_pred)?;
            Ok(evaluate_image(&p, &g, cfg)?)
        })
        .collect()
}

pub fn eval(opts: &EvalOptions) -> Result<EvalReport> {
    let mut config = RunConfig::load_or_default(opts.config.as_deref())?;
    config.beta2 = opts.beta2.unwrap_or(config.beta2);
    config.iou_threshold = opts.threshold.unwrap_or(config.iou_threshold);
    config.validate()?;
    let pairing = pair_dirs(&opts.pred, &opts.gt)?;
    require_pairs(&pairing, (&opts.pred, &opts.gt))?;
    let metrics = evaluate_pairs(&pairing.pairs, &config.metric_config(), opts.resize_pred)?;
    let rows: Vec<Row> = pairing
        .pairs
        .iter()
        .zip(&metrics)
        .map(|(p, m)| Row::new(&p.name, m))
        .collect();
    let report = EvalReport {
        aggregate: aggregate_rows(&rows)?,
        warnings: pairing.unmatched.len() + metrics.iter().filter(|m| m.empty_gt).count(),
        unmatched: pairing.unmatched,
        rows,
        config,
    };
    report.write(&opts.out)?;
    Ok(report)
}

/// Mean curve over all pairs, written as CSV. Sizes must match.
pub fn pr(opts: &PrOptions) -> Result<(PrCurve, Pairing)> {
    let pairing = pair_dirs(&opts.pred, &opts.gt)?;
    require_pairs(&pairing, (&opts.pred, &opts.gt))?;
    let curves = pairing
        .pairs
        .par_iter()
        .map(|pair| {
            let (p, g) = load_pair(pair, false)?;
            Ok(pr_curve(&p, &g)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = mean_curve(&curves)?;
    write_pr_csv(&opts.out, &curve)?;
    Ok((curve, pairing))
}

fn fit(t: Tensor, [h, w]: [usize; 2]) -> Result<Tensor> {
    if t.dims()[2..] == [h, w] {
        Ok(t)
    } else {
        Ok(bilinear_resize(&t, h, w)?)
    }
}

fn read_depth(path: &Path) -> Result<Tensor> {
    let is_tensor = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("dupt"));
    let t = if is_tensor {
        read_tensor(path)?
    } else {
        read_image(path)?
    };
    let dims = t.dims().to_vec();
    let (h, w) = match dims[..] {
        [h, w] | [1, h, w] | [1, 1, h, w] => (h, w),
        _ => {
            return Err(Error::Data(format!(
                "{}: depth must be a single map, got {dims:?}",
                path.display()
            )))
        }
    };
    Ok(t.reshape(&[1, 1, h, w])?)
}

/// File names used by `--dump`, in output order.
pub const DUMP_NAMES: [&str; 6] = ["s16.dupt", "s8.dupt", "s4.dupt", "m4.dupt", "m2.dupt", "m1.dupt"];

pub fn forward(opts: &ForwardOptions) -> Result<ForwardOutput> {
    let mut config = RunConfig::load_or_default(opts.config.as_deref())?;
    config.seed = opts.seed.unwrap_or(config.seed);
    let size = config.input_size;
    let mut rgb = read_image(&opts.input)?;
    if rgb.dims()[1] == 1 {
        rgb = concat_channels(&[&rgb, &rgb, &rgb])?;
    }
    let inputs = ModalityInputs {
        rgb: fit(rgb, size)?,
        depth: opts
            .depth
            .as_deref()
            .map(read_depth)
            .transpose()?
            .map(|d| fit(d, size))
            .transpose()?,
        edge: None,
    };
    let out = Model::new(config.model_config())?.forward(&inputs)?;
    write_image(&opts.out, &out.masks.m1)?;
    if let Some(dir) = &opts.dump {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let maps = out.saliency.as_array().into_iter().chain(out.masks.as_array());
        for (name, t) in DUMP_NAMES.iter().zip(maps) {
            write_tensor(&dir.join(name), t)?;
        }
    }
    Ok(out)
}
