use std::fs;
use std::io::ErrorKind;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use rayon::prelude::*;
use xraysegkit_core::labels::{load_dataset, parse_prediction_file};
use xraysegkit_core::metrics::{
    confidence_curves, confusion_matrix, evaluate_matches, format_table, map_summary, write_report, ImageSample,
};

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset descriptor with the ground truth
    #[arg(long)]
    dataset: PathBuf,
    /// Directory of <stem>.txt prediction files
    #[arg(long)]
    predictions: PathBuf,
    /// Report directory
    #[arg(long)]
    out: PathBuf,
    /// Confidence threshold for the confusion matrix
    #[arg(long, default_value_t = 0.25, value_parser = unit_interval)]
    conf: f64,
    /// IoU threshold for the confusion matrix
    #[arg(long, default_value_t = 0.45, value_parser = unit_interval)]
    iou: f64,
}

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&args.dataset)?;
    if !args.predictions.is_dir() {
        return Err(anyhow!("predictions directory {} does not exist", args.predictions.display()));
    }
    let num_classes = ds.descriptor.num_classes();
    let loaded: Vec<anyhow::Result<(ImageSample, bool)>> = ds
        .images
        .par_iter()
        .map(|img| {
            let path = args.predictions.join(format!("{}.txt", img.stem));
            let (predictions, found) = match fs::read_to_string(&path) {
                Ok(text) => (
                    parse_prediction_file(&text, num_classes).with_context(|| path.display().to_string())?,
                    true,
                ),
                Err(e) if e.kind() == ErrorKind::NotFound => (Vec::new(), false),
                Err(e) => return Err(anyhow!("{}: {e}", path.display())),
            };
            Ok((
                ImageSample {
                    stem: img.stem.clone(),
                    width: img.width,
                    height: img.height,
                    ground_truth: img.annotations.clone(),
                    predictions,
                },
                found,
            ))
        })
        .collect();
    let mut samples = Vec::with_capacity(loaded.len());
    let mut missing = 0;
    for r in loaded {
        let (sample, found) = r?;
        if !found {
            log::warn!("no prediction file for {}; counting zero predictions", sample.stem);
            missing += 1;
        }
        samples.push(sample);
    }
    if missing > 0 {
        log::warn!("{missing} of {} image(s) had no prediction file", samples.len());
    }

    let names = &ds.descriptor.class_names;
    let matches = evaluate_matches(names, &samples)?;
    let report = map_summary(&matches);
    let matrix = confusion_matrix(names, &samples, args.conf, args.iou)?;
    let curves = confidence_curves(&matches);
    let written = write_report(&report, &matrix, &curves, &args.out)?;
    print!("{}", format_table(&report));
    log::info!("wrote {} file(s) to {}", written.len(), args.out.display());
    Ok(())
}
