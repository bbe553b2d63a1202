//! Preprocess, segment and post-process one image with a named method.
//!
//! The CLI and the annotation service both go through [`run_segment`], so a
//! given request yields the same bytes from either frontend.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::{gamma_correct, gaussian_blur, unsharp_sharpen, BorderPolicy, GrayImage};
use crate::labels::rasterize_pixels;
use crate::segment::{
    canny, gradient_operator, morph, region_grow, snake_evolve, threshold_fixed, threshold_otsu, BinaryMask,
    Connectivity, Contour, GradientKind, GrowMode, MorphOp, Seed, SnakeOutcome, SnakeParams,
};

pub const DEFAULT_THRESHOLD: u8 = 177;
pub const DEFAULT_SEED: (usize, usize) = (640, 790);
pub const DEFAULT_TAU: u8 = 60;
pub const DEFAULT_CANNY_SIGMA: f64 = 1.4;
pub const DEFAULT_CANNY_LOW: f64 = 20.0;
pub const DEFAULT_CANNY_HIGH: f64 = 60.0;
pub const DEFAULT_SNAKE_SIGMA: f64 = 2.0;

/// Method names accepted on the command line and in preview queries.
pub const METHOD_NAMES: [&str; 8] = ["fixed", "otsu", "region-grow", "sobel", "prewitt", "roberts", "canny", "snake"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SegmentMethod {
    Fixed {
        threshold: u8,
    },
    Otsu,
    RegionGrow {
        seed: Seed,
        tau: u8,
        mode: GrowMode,
        connectivity: Connectivity,
    },
    /// Gradient magnitude, clamped to 8 bits, or binarized with `magnitude > threshold`.
    Gradient {
        kind: GradientKind,
        threshold: Option<f64>,
    },
    Canny {
        sigma: f64,
        low: f64,
        high: f64,
    },
    /// Evolves a circle on the Sobel field of the blurred image and fills
    /// the final contour. Center defaults to the image center, radius to
    /// 40% of the shorter side, point count to [`snake_point_count`].
    Snake {
        center: Option<Point>,
        radius: Option<f64>,
        points: Option<usize>,
        sigma: f64,
        params: SnakeParams,
    },
}

impl SegmentMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SegmentMethod::Fixed { .. } => "fixed",
            SegmentMethod::Otsu => "otsu",
            SegmentMethod::RegionGrow { .. } => "region-grow",
            SegmentMethod::Gradient { kind, .. } => match kind {
                GradientKind::Sobel => "sobel",
                GradientKind::Prewitt => "prewitt",
                GradientKind::Roberts => "roberts",
            },
            SegmentMethod::Canny { .. } => "canny",
            SegmentMethod::Snake { .. } => "snake",
        }
    }

    /// True when the method produces a binary mask.
    pub fn is_binary(&self) -> bool {
        !matches!(self, SegmentMethod::Gradient { threshold: None, .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sharpen {
    pub sigma: f64,
    pub amount: f64,
}

/// Enhancement applied before segmentation: gamma first, then sharpening.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub gamma: Option<f64>,
    pub sharpen: Option<Sharpen>,
}

impl Preprocess {
    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        let mut out = match self.gamma {
            Some(g) => gamma_correct(img, g)?,
            None => img.clone(),
        };
        if let Some(s) = self.sharpen {
            out = unsharp_sharpen(&out, s.sigma, s.amount)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostMorph {
    pub op: MorphOp,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub preprocess: Preprocess,
    pub method: SegmentMethod,
    /// Border handling of the gradient operators.
    pub border: BorderPolicy,
    /// Applied to binary outputs only.
    pub morph: Option<PostMorph>,
}

impl SegmentRequest {
    pub fn new(method: SegmentMethod) -> Self {
        Self {
            preprocess: Preprocess::default(),
            method,
            border: BorderPolicy::default(),
            morph: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutput {
    /// Mask as 0/255, or the clamped gradient magnitude.
    pub image: GrayImage,
    pub mask: Option<BinaryMask>,
    /// Threshold picked by Otsu.
    pub threshold: Option<u8>,
    pub snake: Option<SnakeOutcome>,
}

pub fn run_segment(img: &GrayImage, req: &SegmentRequest) -> Result<SegmentOutput> {
    req.validate()?;
    let img = req.preprocess.apply(img)?;
    let mut threshold = None;
    let mut snake = None;
    let produced = match &req.method {
        SegmentMethod::Fixed { threshold: t } => Ok(threshold_fixed(&img, *t)),
        SegmentMethod::Otsu => {
            let (t, mask) = threshold_otsu(&img)?;
            threshold = Some(t);
            Ok(mask)
        }
        SegmentMethod::RegionGrow {
            seed,
            tau,
            mode,
            connectivity,
        } => Ok(region_grow(&img, *seed, *tau, *mode, *connectivity)?),
        SegmentMethod::Gradient { kind, threshold: t } => {
            let field = gradient_operator(&img, *kind, req.border)?;
            match t {
                Some(t) => {
                    if !t.is_finite() || *t < 0.0 {
                        return Err(Error::InvalidParameter(format!("edge threshold {t} must be >= 0")));
                    }
                    let (w, h) = field.dimensions();
                    let m = field.magnitude.data();
                    Ok(BinaryMask::from_fn(w, h, |x, y| m[y * w + x] > *t)?)
                }
                None => Err(field.magnitude.to_gray_clamped()),
            }
        }
        SegmentMethod::Canny { sigma, low, high } => Ok(canny(&img, *sigma, *low, *high)?),
        SegmentMethod::Snake {
            center,
            radius,
            points,
            sigma,
            params,
        } => {
            let (w, h) = img.dimensions();
            let blurred = gaussian_blur(&img, *sigma)?;
            let field = gradient_operator(&blurred, GradientKind::Sobel, req.border)?;
            let c = center.unwrap_or(Point::new((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0));
            let r = radius.unwrap_or(0.4 * w.min(h) as f64);
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParameter(format!("snake radius {r} must be positive")));
            }
            let n = points.unwrap_or_else(|| snake_point_count(r));
            let outcome = snake_evolve(&field, &Contour::circle(c, r, n), params)?;
            let mask = rasterize_pixels(&outcome.contour.points, w, h);
            snake = Some(outcome);
            Ok(mask)
        }
    };
    let (image, mask) = match produced {
        Ok(mut mask) => {
            if let Some(pm) = req.morph {
                mask = morph(&mask, pm.op, pm.size)?;
            }
            (mask.to_gray(), Some(mask))
        }
        Err(gray) => (gray, None),
    };
    Ok(SegmentOutput {
        image,
        mask,
        threshold,
        snake,
    })
}

/// Default number of contour points for a starting circle of `radius`.
///
/// Candidate moves are whole pixels, and a single point stepping inwards
/// only lowers the elastic term while the spacing squared exceeds the
/// radius; `4 sqrt(r)` points keep the spacing near `1.5 sqrt(r)`.
pub fn snake_point_count(radius: f64) -> usize {
    ((4.0 * radius.max(1.0).sqrt()).round() as usize).max(8)
}

/// Interleaved RGB of `img` with `mask` pixels blended half-way to red.
pub fn overlay_rgb(img: &GrayImage, mask: &BinaryMask) -> Result<Vec<u8>> {
    if img.dimensions() != mask.dimensions() {
        return Err(Error::DimensionMismatch("overlay image and mask differ in size".into()));
    }
    let mut out = Vec::with_capacity(img.data().len() * 3);
    for (&v, &m) in img.data().iter().zip(mask.data()) {
        if m {
            out.extend_from_slice(&[(u16::from(v) + 255).div_ceil(2) as u8, v / 2, v / 2]);
        } else {
            out.extend_from_slice(&[v, v, v]);
        }
    }
    Ok(out)
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidParameter(format!("{key}: cannot parse {value:?}"))
}

fn get<T: FromStr>(q: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    q.get(key).map(|v| v.trim().parse::<T>().map_err(|_| bad(key, v))).transpose()
}

fn pair<T: FromStr>(q: &BTreeMap<String, String>, key: &str) -> Result<Option<(T, T)>> {
    let Some(v) = q.get(key) else { return Ok(None) };
    let (a, b) = v.split_once(',').ok_or_else(|| bad(key, v))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) => Ok(Some((a, b))),
        _ => Err(bad(key, v)),
    }
}

fn keyword<T>(q: &BTreeMap<String, String>, key: &str, options: &[(&str, T)]) -> Result<Option<T>>
where
    T: Copy,
{
    let Some(v) = q.get(key) else { return Ok(None) };
    options
        .iter()
        .find(|(name, _)| *name == v.as_str())
        .map(|(_, t)| Some(*t))
        .ok_or_else(|| bad(key, v))
}

impl SegmentRequest {
    /// Builds a request from string parameters, using the same names and
    /// defaults as the `segment` command: `method`, `t`, `seed=x,y`, `tau`,
    /// `mode`, `connectivity`, `sigma`, `low`, `high`, `edge_threshold`,
    /// `center=x,y`, `radius`, `points`, `alpha`, `beta`, `gamma_ext`,
    /// `search_radius`, `max_iters`, `move_epsilon`, `gamma`,
    /// `sharpen_sigma`, `sharpen_amount`, `border`, `morph`, `morph_size`.
    pub fn from_params(q: &BTreeMap<String, String>) -> Result<Self> {
        let name = q.get("method").map(String::as_str).unwrap_or("fixed");
        let method = match name {
            "fixed" => SegmentMethod::Fixed {
                threshold: get(q, "t")?.unwrap_or(DEFAULT_THRESHOLD),
            },
            "otsu" => SegmentMethod::Otsu,
            "region-grow" => {
                let (x, y) = pair(q, "seed")?.unwrap_or(DEFAULT_SEED);
                SegmentMethod::RegionGrow {
                    seed: Seed::new(x, y),
                    tau: get(q, "tau")?.unwrap_or(DEFAULT_TAU),
                    mode: keyword(q, "mode", &[("seed-ref", GrowMode::SeedRef), ("running-mean", GrowMode::RunningMean)])?
                        .unwrap_or_default(),
                    connectivity: keyword(q, "connectivity", &[("4", Connectivity::Four), ("8", Connectivity::Eight)])?
                        .unwrap_or_default(),
                }
            }
            "sobel" | "prewitt" | "roberts" => SegmentMethod::Gradient {
                kind: match name {
                    "sobel" => GradientKind::Sobel,
                    "prewitt" => GradientKind::Prewitt,
                    _ => GradientKind::Roberts,
                },
                threshold: get(q, "edge_threshold")?,
            },
            "canny" => SegmentMethod::Canny {
                sigma: get(q, "sigma")?.unwrap_or(DEFAULT_CANNY_SIGMA),
                low: get(q, "low")?.unwrap_or(DEFAULT_CANNY_LOW),
                high: get(q, "high")?.unwrap_or(DEFAULT_CANNY_HIGH),
            },
            "snake" => {
                let d = SnakeParams::default();
                let params = SnakeParams {
                    alpha: get(q, "alpha")?.unwrap_or(d.alpha),
                    beta: get(q, "beta")?.unwrap_or(d.beta),
                    gamma_ext: get(q, "gamma_ext")?.unwrap_or(d.gamma_ext),
                    search_radius: get(q, "search_radius")?.unwrap_or(d.search_radius),
                    max_iters: get(q, "max_iters")?.unwrap_or(d.max_iters),
                    move_epsilon: get(q, "move_epsilon")?.unwrap_or(d.move_epsilon),
                };
                params.validate()?;
                SegmentMethod::Snake {
                    center: pair(q, "center")?.map(|(x, y)| Point::new(x, y)),
                    radius: get(q, "radius")?,
                    points: get(q, "points")?,
                    sigma: get(q, "sigma")?.unwrap_or(DEFAULT_SNAKE_SIGMA),
                    params,
                }
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown method {other:?} (expected one of {})",
                    METHOD_NAMES.join(", ")
                )))
            }
        };
        let sharpen = match (get::<f64>(q, "sharpen_sigma")?, get::<f64>(q, "sharpen_amount")?) {
            (None, None) => None,
            (s, a) => Some(Sharpen {
                sigma: s.unwrap_or(1.0),
                amount: a.unwrap_or(1.0),
            }),
        };
        let morph_op = keyword(
            q,
            "morph",
            &[
                ("erode", MorphOp::Erode),
                ("dilate", MorphOp::Dilate),
                ("open", MorphOp::Open),
                ("close", MorphOp::Close),
            ],
        )?;
        let morph_size = get(q, "morph_size")?.unwrap_or(3);
        let req = SegmentRequest {
            preprocess: Preprocess {
                gamma: get(q, "gamma")?,
                sharpen,
            },
            method,
            border: keyword(q, "border", &[("replicate", BorderPolicy::Replicate), ("zero", BorderPolicy::ZeroPad)])?
                .unwrap_or_default(),
            morph: morph_op.map(|op| PostMorph {
                op,
                size: morph_size,
            }),
        };
        req.validate()?;
        Ok(req)
    }

    /// Checks every precondition that does not depend on the image, so a
    /// batch can be rejected before any work starts.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} {v} must be > 0")))
            }
        };
        if let Some(g) = self.preprocess.gamma {
            positive("gamma", g)?;
        }
        if let Some(s) = self.preprocess.sharpen {
            positive("sharpen sigma", s.sigma)?;
            if !(s.amount.is_finite() && s.amount >= 0.0) {
                return Err(Error::InvalidParameter(format!("sharpen amount {} must be >= 0", s.amount)));
            }
        }
        match &self.method {
            SegmentMethod::Gradient { threshold: Some(t), .. } if !(t.is_finite() && *t >= 0.0) => {
                return Err(Error::InvalidParameter(format!("edge threshold {t} must be >= 0")));
            }
            SegmentMethod::Canny { sigma, low, high } => {
                positive("sigma", *sigma)?;
                if !(low.is_finite() && high.is_finite() && *low >= 0.0 && high >= low) {
                    return Err(Error::InvalidParameter(format!(
                        "hysteresis thresholds need 0 <= low <= high (got {low}, {high})"
                    )));
                }
            }
            SegmentMethod::Snake {
                radius, points, sigma, params, center,
            } => {
                positive("sigma", *sigma)?;
                if let Some(r) = radius {
                    positive("snake radius", *r)?;
                }
                if let Some(c) = center {
                    if !(c.x.is_finite() && c.y.is_finite()) {
                        return Err(Error::InvalidParameter("snake center must be finite".into()));
                    }
                }
                if points.is_some_and(|n| n < 3) {
                    return Err(Error::InvalidParameter("a snake needs at least 3 points".into()));
                }
                params.validate()?;
            }
            _ => {}
        }
        if let Some(m) = self.morph {
            if !self.method.is_binary() {
                return Err(Error::InvalidParameter(
                    "morphology needs a binary output; set a gradient threshold".into(),
                ));
            }
            if m.size < 3 || m.size.is_multiple_of(2) {
                return Err(Error::InvalidParameter(format!("morph size {} must be odd and >= 3", m.size)));
            }
        }
        Ok(())
    }
}
