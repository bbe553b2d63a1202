use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use xraysegkit_core::imaging::{encode_rgb_png, load_image, save_image, ImageFormat};
use xraysegkit_core::labels::list_images;
use xraysegkit_core::pipeline::{overlay_rgb, run_segment, SegmentRequest, DEFAULT_CANNY_HIGH, DEFAULT_CANNY_LOW};

use crate::{ensure_parent, parse_pair, usage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fixed,
    Otsu,
    RegionGrow,
    Sobel,
    Prewitt,
    Roberts,
    Canny,
    Snake,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GrowMode {
    SeedRef,
    RunningMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Border {
    Replicate,
    Zero,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Morph {
    Erode,
    Dilate,
    Open,
    Close,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long, value_enum)]
    method: Method,

    /// Input image (.png/.pgm) or a directory of them
    input: PathBuf,
    /// Output image, or a directory when the input is one
    output: PathBuf,

    /// Also write the input with the mask tinted red (RGB PNG); a directory for directory input
    #[arg(long)]
    overlay: Option<PathBuf>,

    /// fixed: foreground is v > t
    #[arg(long, default_value_t = 177)]
    t: u8,

    /// region-grow: seed pixel
    #[arg(long, default_value = "640,790", value_parser = parse_pair::<usize>)]
    seed: (usize, usize),
    /// region-grow: intensity tolerance
    #[arg(long, default_value_t = 60)]
    tau: u8,
    /// region-grow: reference intensity [default: seed-ref]
    #[arg(long, value_enum)]
    mode: Option<GrowMode>,
    /// region-grow: 4 or 8 [default: 4]
    #[arg(long, value_parser = ["4", "8"])]
    connectivity: Option<String>,

    /// sobel/prewitt/roberts: binarize with magnitude > T instead of writing the magnitude
    #[arg(long)]
    edge_threshold: Option<f64>,

    /// Gaussian sigma for canny and snake [default: 1.4 for canny, 2.0 for snake]
    #[arg(long)]
    sigma: Option<f64>,
    /// canny: low hysteresis threshold
    #[arg(long, default_value_t = DEFAULT_CANNY_LOW)]
    low: f64,
    /// canny: high hysteresis threshold
    #[arg(long, default_value_t = DEFAULT_CANNY_HIGH)]
    high: f64,

    /// snake: centre of the starting circle [default: image centre]
    #[arg(long, value_parser = parse_pair::<f64>)]
    center: Option<(f64, f64)>,
    /// snake: radius of the starting circle [default: 0.4 * min(width, height)]
    #[arg(long)]
    radius: Option<f64>,
    /// snake: number of contour points [default: max(8, round(4 * sqrt(radius)))]
    #[arg(long)]
    points: Option<usize>,
    /// snake: continuity weight [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    /// snake: curvature weight [default: 0.01]
    #[arg(long)]
    beta: Option<f64>,
    /// snake: edge attraction weight [default: 1.0]
    #[arg(long)]
    gamma_ext: Option<f64>,
    /// snake: neighbourhood half-width searched per point [default: 1]
    #[arg(long)]
    search_radius: Option<usize>,
    /// snake: iteration cap [default: 500]
    #[arg(long)]
    max_iters: Option<usize>,
    /// snake: stop when at most this fraction of points move [default: 0]
    #[arg(long)]
    move_epsilon: Option<f64>,

    /// Gamma correction applied before segmentation
    #[arg(long)]
    gamma: Option<f64>,
    /// Unsharp-mask sigma applied before segmentation [default: 1.0 when sharpening]
    #[arg(long)]
    sharpen_sigma: Option<f64>,
    /// Unsharp-mask amount [default: 1.0 when sharpening]
    #[arg(long)]
    sharpen_amount: Option<f64>,
    /// Border handling of the gradient operators [default: replicate]
    #[arg(long, value_enum)]
    border: Option<Border>,
    /// Morphological clean-up of the mask
    #[arg(long, value_enum)]
    morph: Option<Morph>,
    /// Structuring element size (odd) [default: 3]
    #[arg(long)]
    morph_size: Option<usize>,
}

fn key<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

impl SegmentArgs {
    /// The parameters in the form shared with the preview endpoint.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut q = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                q.insert(k.to_string(), v);
            }
        };
        put("method", Some(key(&self.method)));
        put("t", Some(self.t.to_string()));
        put("seed", Some(format!("{},{}", self.seed.0, self.seed.1)));
        put("tau", Some(self.tau.to_string()));
        put("mode", self.mode.as_ref().map(key));
        put("connectivity", self.connectivity.clone());
        put("edge_threshold", self.edge_threshold.map(|v| v.to_string()));
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("low", Some(self.low.to_string()));
        put("high", Some(self.high.to_string()));
        put("center", self.center.map(|(x, y)| format!("{x},{y}")));
        put("radius", self.radius.map(|v| v.to_string()));
        put("points", self.points.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("gamma_ext", self.gamma_ext.map(|v| v.to_string()));
        put("search_radius", self.search_radius.map(|v| v.to_string()));
        put("max_iters", self.max_iters.map(|v| v.to_string()));
        put("move_epsilon", self.move_epsilon.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("sharpen_sigma", self.sharpen_sigma.map(|v| v.to_string()));
        put("sharpen_amount", self.sharpen_amount.map(|v| v.to_string()));
        put("border", self.border.as_ref().map(key));
        put("morph", self.morph.as_ref().map(key));
        put("morph_size", self.morph_size.map(|v| v.to_string()));
        q
    }
}

fn output_format(path: &Path) -> anyhow::Result<ImageFormat> {
    match path.extension() {
        None => Ok(ImageFormat::Png),
        Some(_) => ImageFormat::from_path(path)
            .ok_or_else(|| usage(format!("{}: output must be .png or .pgm", path.display()))),
    }
}

struct Job {
    input: PathBuf,
    output: PathBuf,
    overlay: Option<PathBuf>,
}

fn process(job: &Job, req: &SegmentRequest) -> anyhow::Result<String> {
    let img = load_image(&job.input)?;
    let out = run_segment(&img, req).with_context(|| job.input.display().to_string())?;
    ensure_parent(&job.output)?;
    save_image(&out.image, &job.output, output_format(&job.output)?)?;
    if let Some(path) = &job.overlay {
        let mask = out.mask.as_ref().expect("overlay requires a binary method");
        let rgb = overlay_rgb(&img, mask)?;
        ensure_parent(path)?;
        let bytes = encode_rgb_png(img.width(), img.height(), &rgb)?;
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut note = format!("{} -> {}", job.input.display(), job.output.display());
    if let Some(mask) = &out.mask {
        note.push_str(&format!(" ({} foreground px", mask.count()));
        if let Some(t) = out.threshold {
            note.push_str(&format!(", threshold {t}"));
        }
        if let Some(s) = &out.snake {
            note.push_str(&format!(", {} iterations", s.iterations));
        }
        note.push(')');
    }
    Ok(note)
}

pub fn run(args: SegmentArgs) -> anyhow::Result<()> {
    let req = SegmentRequest::from_params(&args.params()).map_err(|e| usage(e.to_string()))?;
    if args.overlay.is_some() && !req.method.is_binary() {
        return Err(usage("--overlay needs a mask; give the gradient methods --edge-threshold"));
    }
    let jobs = if args.input.is_dir() {
        if args.output.extension().is_some() && !args.output.is_dir() {
            return Err(usage("directory input needs an output directory"));
        }
        list_images(&args.input)?
            .into_iter()
            .map(|(stem, input)| Job {
                output: args.output.join(format!("{stem}.png")),
                overlay: args.overlay.as_ref().map(|d| d.join(format!("{stem}.png"))),
                input,
            })
            .collect()
    } else {
        output_format(&args.output)?;
        vec![Job {
            input: args.input.clone(),
            output: args.output.clone(),
            overlay: args.overlay.clone(),
        }]
    };
    if jobs.is_empty() {
        return Err(anyhow!("no .png or .pgm images in {}", args.input.display()));
    }
    let results: Vec<_> = jobs.par_iter().map(|j| process(j, &req)).collect();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(note) => log::info!("{note}"),
            Err(e) => {
                failed += 1;
                eprintln!("error: {e:#}");
            }
        }
    }
    if failed > 0 {
        return Err(anyhow!("{failed} of {} image(s) failed", jobs.len()));
    }
    Ok(())
}
