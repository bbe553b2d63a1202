use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Subcommand;
use xraysegkit_core::imaging::{load_image, save_image, ImageFormat};
use xraysegkit_core::labels::{load_dataset, mask_to_polygons, rasterize_polygon, serialize_label_file, PolygonAnnotation};
use xraysegkit_core::segment::BinaryMask;

use crate::{ensure_parent, usage};

#[derive(Debug, Subcommand)]
pub enum LabelsCommand {
    /// Check the descriptor, every image header and every label file
    Validate {
        /// Dataset descriptor
        descriptor: PathBuf,
    },
    /// Write one mask PNG per class for an image: <out>/<stem>_<class>.png
    Rasterize {
        /// Dataset descriptor
        #[arg(long)]
        dataset: PathBuf,
        /// Image stem
        stem: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn the foreground (v > 0) of a mask image into a label file
    Trace {
        /// Mask image (.png/.pgm)
        mask: PathBuf,
        /// Class id written on every polygon
        #[arg(long)]
        class: usize,
        /// Drop components smaller than this many pixels
        #[arg(long, default_value_t = 1)]
        min_area: usize,
        /// Output label file [default: standard output]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cmd: LabelsCommand) -> anyhow::Result<()> {
    match cmd {
        LabelsCommand::Validate { descriptor } => {
            let ds = load_dataset(&descriptor)?;
            let unlabelled = ds.unlabelled();
            if !unlabelled.is_empty() {
                log::info!("{} image(s) without instances: {}", unlabelled.len(), unlabelled.join(", "));
            }
            println!("OK, {} images, {} instances", ds.images.len(), ds.instance_count());
            Ok(())
        }
        LabelsCommand::Rasterize { dataset, stem, out } => {
            let ds = load_dataset(&dataset)?;
            let img = ds
                .find(&stem)
                .ok_or_else(|| anyhow!("no image with stem '{stem}' in {}", dataset.display()))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (k, name) in ds.descriptor.class_names.iter().enumerate() {
                let mut mask = BinaryMask::empty(img.width, img.height)?;
                for a in img.annotations.iter().filter(|a| a.class_id == k) {
                    mask = mask.union(&rasterize_polygon(a, img.width, img.height))?;
                }
                let path = out.join(format!("{stem}_{name}.png"));
                save_image(&mask.to_gray(), &path, ImageFormat::Png)?;
                log::info!("{}: {} px", path.display(), mask.count());
            }
            Ok(())
        }
        LabelsCommand::Trace { mask, class, min_area, out } => {
            let img = load_image(&mask)?;
            let m = BinaryMask::from_gray(&img);
            let anns = mask_to_polygons(&m, min_area)
                .into_iter()
                .map(|v| PolygonAnnotation::new(class, v).map_err(|e| anyhow!("traced polygon: {e}")))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let text = serialize_label_file(&anns);
            match out {
                Some(path) => {
                    if path.is_dir() {
                        return Err(usage(format!("{} is a directory", path.display())));
                    }
                    ensure_parent(&path)?;
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    log::info!("{} polygon(s) -> {}", anns.len(), path.display());
                }
                None if text.is_empty() => {}
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}
