//! Brute-force oracles and synthetic fixtures shared by the integration
//! tests and the acceptance suite. Nothing here calls the library code it
//! is used to check.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use xraysegkit_core::geometry::{BoundingBox, Point};
use xraysegkit_core::imaging::GrayImage;
use xraysegkit_core::labels::{Detection, PolygonAnnotation};
use xraysegkit_core::metrics::ImageSample;

// ---------------------------------------------------------------- imaging

/// Integer correlation with replicated borders, anchor at the center for odd
/// sizes and at the top-left for even sizes.
pub fn naive_correlate(img: &GrayImage, kernel: &[i64], kw: usize, kh: usize) -> Vec<i64> {
    let (w, h) = img.dimensions();
    let (ax, ay) = if kw % 2 == 1 { (kw / 2, kh / 2) } else { (0, 0) };
    let mut out = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0i64;
            for j in 0..kh {
                for i in 0..kw {
                    let sx = (x as isize + i as isize - ax as isize).clamp(0, w as isize - 1) as usize;
                    let sy = (y as isize + j as isize - ay as isize).clamp(0, h as isize - 1) as usize;
                    acc += kernel[j * kw + i] * img.get(sx, sy) as i64;
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Otsu by scanning all 256 thresholds with exact rational comparison.
/// Between-class variance is proportional to `(N s0 - n0 S)^2 / (n0 n1)`.
pub fn otsu_exhaustive(pixels: &[u8]) -> Option<u8> {
    let total = pixels.len() as u128;
    let sum: u128 = pixels.iter().map(|&v| v as u128).sum();
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..=255u8 {
        let (mut n0, mut s0) = (0u128, 0u128);
        for &v in pixels {
            if v <= t {
                n0 += 1;
                s0 += v as u128;
            }
        }
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (total * s0).abs_diff(n0 * sum);
        let num = diff * diff;
        let den = n0 * n1;
        match best {
            Some((_, bn, bd)) if num * bd <= bn * den => {}
            _ => best = Some((t, num, den)),
        }
    }
    best.map(|(t, _, _)| t)
}

pub fn offsets(eight: bool) -> Vec<(isize, isize)> {
    let mut v = Vec::new();
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            if (dx, dy) != (0, 0) && (eight || dx == 0 || dy == 0) {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Connected component of `|I(p) - I(seed)| <= tau` containing the seed,
/// found with an explicit stack.
pub fn flood_fill(img: &GrayImage, seed: (usize, usize), tau: u8, eight: bool) -> Vec<bool> {
    let (w, h) = img.dimensions();
    let reference = img.get(seed.0, seed.1) as i32;
    let ok = |x: usize, y: usize| (img.get(x, y) as i32 - reference).abs() <= tau as i32;
    let mut seen = vec![false; w * h];
    let mut stack = vec![seed];
    seen[seed.1 * w + seed.0] = true;
    while let Some((x, y)) = stack.pop() {
        for (dx, dy) in offsets(eight) {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !seen[ny * w + nx] && ok(nx, ny) {
                seen[ny * w + nx] = true;
                stack.push((nx, ny));
            }
        }
    }
    seen
}

/// Number of connected components of `mask` and whether `seed` is set.
pub fn components(mask: &[bool], w: usize, h: usize, eight: bool) -> usize {
    let mut label = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !mask[start] || label[start] {
            continue;
        }
        count += 1;
        label[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in offsets(eight) {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask[j] && !label[j] {
                    label[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

// ---------------------------------------------------------------- geometry

/// Even-odd inside test for the pixel center `(x + 0.5, y + 0.5)`, one pixel
/// at a time. Crossings are counted on edges with `y_lo <= yc < y_hi` whose
/// crossing abscissa is `<= xc`.
pub fn center_inside(vertices: &[Point], x: usize, y: usize) -> bool {
    let (xc, yc) = (x as f64 + 0.5, y as f64 + 0.5);
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let (mut a, mut b) = (vertices[i], vertices[(i + 1) % n]);
        if (a.y, a.x) > (b.y, b.x) {
            std::mem::swap(&mut a, &mut b);
        }
        if a.y == b.y || !(a.y <= yc && yc < b.y) {
            continue;
        }
        let cross = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
        if cross <= xc {
            inside = !inside;
        }
    }
    inside
}

/// Dense raster of a pixel-unit polygon by per-pixel inside tests,
/// restricted to its bounding box.
pub fn raster_oracle(vertices: &[Point], w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    if vertices.len() < 3 {
        return out;
    }
    let x0 = vertices.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let y0 = vertices.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let x1 = (vertices.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).ceil().max(0.0) as usize).min(w);
    let y1 = (vertices.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil().max(0.0) as usize).min(h);
    for y in y0..y1 {
        for x in x0..x1 {
            out[y * w + x] = center_inside(vertices, x, y);
        }
    }
    out
}

pub fn dense_iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Random convex polygon: points on an ellipse at sorted random angles.
pub fn random_convex(rng: &mut StdRng, cx: f64, cy: f64, rx: f64, ry: f64, n: usize) -> Vec<Point> {
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles
        .into_iter()
        .map(|t| Point::new(cx + rx * t.cos(), cy + ry * t.sin()))
        .collect()
}

/// Random star-shaped polygon around `(cx, cy)` with radii in `[0.4r, r]`.
pub fn random_star(rng: &mut StdRng, cx: f64, cy: f64, r: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * (i as f64 + rng.random_range(0.0..0.8)) / n as f64;
            let rr = r * rng.random_range(0.4..1.0);
            Point::new(cx + rr * t.cos(), cy + rr * t.sin())
        })
        .collect()
}

// ---------------------------------------------------------------- images

/// Anti-aliased disk (4x4 supersampling); pixel `(x, y)` covers
/// `[x, x + 1) x [y, y + 1)`.
pub fn disk_image(w: usize, h: usize, center: Point, radius: f64, inside: u8, outside: u8) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let mut hits = 0;
        for j in 0..4 {
            for i in 0..4 {
                let px = x as f64 + (i as f64 + 0.5) / 4.0;
                let py = y as f64 + (j as f64 + 0.5) / 4.0;
                if Point::new(px, py).distance(center) <= radius {
                    hits += 1;
                }
            }
        }
        let v = outside as f64 + (inside as f64 - outside as f64) * hits as f64 / 16.0;
        v.round() as u8
    })
    .unwrap()
}

// ---------------------------------------------------------------- metrics

fn poly_box(vertices: &[Point]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in vertices {
        b = (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y));
    }
    b
}

pub fn box_iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let iw = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let ih = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    let inter = iw * ih;
    let union = (a.2 - a.0) * (a.3 - a.1) + (b.2 - b.0) * (b.3 - b.1) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn det_box(d: &Detection) -> (f64, f64, f64, f64) {
    (d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max)
}

/// Packed bitset raster of a normalized polygon.
fn bit_raster(vertices: &[Point], w: usize, h: usize) -> Vec<u64> {
    let px: Vec<Point> = vertices.iter().map(|p| Point::new(p.x * w as f64, p.y * h as f64)).collect();
    let dense = raster_oracle(&px, w, h);
    let mut bits = vec![0u64; (w * h).div_ceil(64)];
    for (i, &b) in dense.iter().enumerate() {
        if b {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

fn bit_iou(a: &[u64], b: &[u64]) -> f64 {
    let inter: u32 = a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum();
    let union: u32 = a.iter().zip(b).map(|(x, y)| (x | y).count_ones()).sum();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Greedy matching by repeated selection of the highest-confidence
/// unprocessed prediction (earliest on ties).
pub fn greedy_oracle(confs: &[f64], ious: &[Vec<f64>], n_gt: usize, thresh: f64) -> Vec<bool> {
    let mut done = vec![false; confs.len()];
    let mut gt_used = vec![false; n_gt];
    let mut tp = vec![false; confs.len()];
    for _ in 0..confs.len() {
        let mut pick = None;
        for i in 0..confs.len() {
            if done[i] {
                continue;
            }
            match pick {
                Some(p) if confs[p] >= confs[i] => {}
                _ => pick = Some(i),
            }
        }
        let p = pick.unwrap();
        done[p] = true;
        let mut best: Option<usize> = None;
        for g in 0..n_gt {
            if gt_used[g] || ious[p][g] < thresh {
                continue;
            }
            if best.is_none_or(|b| ious[p][g] > ious[p][b]) {
                best = Some(g);
            }
        }
        if let Some(g) = best {
            gt_used[g] = true;
            tp[p] = true;
        }
    }
    tp
}

/// 101-point AP from an explicit list of PR points.
pub fn ap_oracle(ranked_tp: &[bool], total_gt: usize) -> f64 {
    if total_gt == 0 {
        return 0.0;
    }
    let mut pts = Vec::new();
    let mut tp = 0;
    for (k, &hit) in ranked_tp.iter().enumerate() {
        if hit {
            tp += 1;
        }
        pts.push((tp as f64 / total_gt as f64, tp as f64 / (k + 1) as f64));
    }
    let mut sum = 0.0;
    for j in 0..=100 {
        let r = j as f64 / 100.0;
        let best = pts.iter().filter(|(rec, _)| *rec >= r).map(|(_, p)| *p).fold(0.0, f64::max);
        sum += best;
    }
    sum / 101.0
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub class: String,
    pub images: usize,
    pub instances: usize,
    /// P, R, mAP50, mAP50-95
    pub boxes: [f64; 4],
    pub masks: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct OracleCurve {
    pub kind: &'static str,
    pub task: &'static str,
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct OracleEval {
    pub rows: Vec<OracleRow>,
    pub thresholds: [f64; 2],
    pub curves: Vec<OracleCurve>,
}

struct Scored {
    conf: f64,
    image: usize,
    pred: usize,
    tp: [bool; 10],
}

/// Independent end-to-end evaluator: IoU from per-pixel inside tests,
/// selection-based greedy matching, explicit PR enumeration and a
/// threshold-by-threshold confidence sweep.
pub fn brute_force_eval(class_names: &[String], images: &[ImageSample]) -> OracleEval {
    let nc = class_names.len();
    // the decimal values 0.50, 0.55, ..., 0.95
    let thresholds: Vec<f64> = (0..10).map(|k| format!("0.{}", 50 + 5 * k).parse().unwrap()).collect();
    let mut gt_count = vec![0usize; nc];
    let mut scored: [Vec<Vec<Scored>>; 2] = [
        (0..nc).map(|_| Vec::new()).collect(),
        (0..nc).map(|_| Vec::new()).collect(),
    ];
    for (ii, img) in images.iter().enumerate() {
        for g in &img.ground_truth {
            gt_count[g.class_id] += 1;
        }
        let gt_bits: Vec<Vec<u64>> = img
            .ground_truth
            .iter()
            .map(|g| bit_raster(&g.vertices, img.width, img.height))
            .collect();
        for c in 0..nc {
            let pidx: Vec<usize> = (0..img.predictions.len()).filter(|&i| img.predictions[i].class_id == c).collect();
            let gidx: Vec<usize> = (0..img.ground_truth.len()).filter(|&i| img.ground_truth[i].class_id == c).collect();
            let confs: Vec<f64> = pidx.iter().map(|&i| img.predictions[i].confidence).collect();
            for task in 0..2 {
                let ious: Vec<Vec<f64>> = pidx
                    .iter()
                    .map(|&p| {
                        let d = &img.predictions[p];
                        gidx.iter()
                            .map(|&g| {
                                let gt = &img.ground_truth[g];
                                if task == 0 {
                                    box_iou(det_box(d), poly_box(&gt.vertices))
                                } else {
                                    match &d.mask_polygon {
                                        None => 0.0,
                                        Some(v) => bit_iou(&bit_raster(v, img.width, img.height), &gt_bits[g]),
                                    }
                                }
                            })
                            .collect()
                    })
                    .collect();
                let mut ladder = vec![[false; 10]; pidx.len()];
                for (k, &t) in thresholds.iter().enumerate() {
                    for (p, hit) in greedy_oracle(&confs, &ious, gidx.len(), t).into_iter().enumerate() {
                        ladder[p][k] = hit;
                    }
                }
                for (p, &pi) in pidx.iter().enumerate() {
                    scored[task][c].push(Scored {
                        conf: confs[p],
                        image: ii,
                        pred: pi,
                        tp: ladder[p],
                    });
                }
            }
        }
    }
    for task in scored.iter_mut() {
        for list in task.iter_mut() {
            list.sort_by(|a, b| {
                b.conf
                    .partial_cmp(&a.conf)
                    .unwrap()
                    .then(a.image.cmp(&b.image))
                    .then(a.pred.cmp(&b.pred))
            });
        }
    }
    let present: Vec<usize> = (0..nc).filter(|&c| gt_count[c] > 0).collect();
    let taus: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
    let counts = |list: &[Scored], tau: f64| {
        let kept = list.iter().filter(|s| s.conf >= tau).count();
        let tp = list.iter().filter(|s| s.conf >= tau && s.tp[0]).count();
        (kept, tp)
    };

    let mut per_task = Vec::new();
    let mut curves = Vec::new();
    for (task, task_name) in ["box", "mask"].iter().enumerate() {
        // sweep[class] = (p, r, f1) per tau
        let mut sweeps: Vec<(usize, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
        for &c in &present {
            let (mut ps, mut rs, mut fs) = (Vec::new(), Vec::new(), Vec::new());
            for &tau in &taus {
                let (kept, tp) = counts(&scored[task][c], tau);
                let p = if kept == 0 { 1.0 } else { tp as f64 / kept as f64 };
                let r = tp as f64 / gt_count[c] as f64;
                let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
                ps.push(p);
                rs.push(r);
                fs.push(f);
            }
            sweeps.push((c, ps, rs, fs));
        }
        let mean = |sel: usize| -> Vec<f64> {
            (0..taus.len())
                .map(|i| {
                    if sweeps.is_empty() {
                        return 0.0;
                    }
                    let vals = sweeps.iter().map(|s| match sel {
                        0 => s.1[i],
                        1 => s.2[i],
                        _ => s.3[i],
                    });
                    vals.sum::<f64>() / sweeps.len() as f64
                })
                .collect()
        };
        let (mp, mr, mf) = (mean(0), mean(1), mean(2));
        let mut best = 0;
        for i in 0..taus.len() {
            if mf[i] > mf[best] {
                best = i;
            }
        }
        let tau = taus[best];
        let mut metrics = Vec::new();
        for &c in &present {
            let (kept, tp) = counts(&scored[task][c], tau);
            let p = if kept == 0 { 0.0 } else { tp as f64 / kept as f64 };
            let r = tp as f64 / gt_count[c] as f64;
            let aps: Vec<f64> = (0..10)
                .map(|k| {
                    let flags: Vec<bool> = scored[task][c].iter().map(|s| s.tp[k]).collect();
                    ap_oracle(&flags, gt_count[c])
                })
                .collect();
            metrics.push([p, r, aps[0], aps.iter().sum::<f64>() / 10.0]);
        }
        per_task.push((metrics, tau));

        if !present.is_empty() {
            let pr = |p: &[f64], r: &[f64]| -> Vec<(f64, f64)> {
                let mut xs: Vec<f64> = r.to_vec();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                xs.iter()
                    .map(|&x| {
                        let y = (0..r.len()).filter(|&i| r[i] == x).map(|i| p[i]).fold(f64::NEG_INFINITY, f64::max);
                        (x, y)
                    })
                    .collect()
            };
            let vs = |v: &[f64]| -> Vec<(f64, f64)> { taus.iter().copied().zip(v.iter().copied()).collect() };
            for kind in ["f1-conf", "precision-conf", "recall-conf", "precision-recall"] {
                let mut series: Vec<(String, Vec<(f64, f64)>)> = sweeps
                    .iter()
                    .map(|(c, p, r, f)| {
                        let pts = match kind {
                            "f1-conf" => vs(f),
                            "precision-conf" => vs(p),
                            "recall-conf" => vs(r),
                            _ => pr(p, r),
                        };
                        (class_names[*c].clone(), pts)
                    })
                    .collect();
                let all = match kind {
                    "f1-conf" => vs(&mf),
                    "precision-conf" => vs(&mp),
                    "recall-conf" => vs(&mr),
                    _ => pr(&mp, &mr),
                };
                series.push(("all".to_string(), all));
                for (label, points) in series {
                    curves.push(OracleCurve {
                        kind,
                        task: task_name,
                        label,
                        points,
                    });
                }
            }
        }
    }
    // library order: kind-major, then task
    let order = |k: &str| ["f1-conf", "precision-conf", "recall-conf", "precision-recall"].iter().position(|x| *x == k).unwrap();
    curves.sort_by_key(|c| (order(c.kind), if c.task == "box" { 0 } else { 1 }));

    let mut rows = Vec::new();
    if !images.is_empty() {
        let avg = |m: &[[f64; 4]]| -> [f64; 4] {
            let mut out = [0.0; 4];
            if m.is_empty() {
                return out;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = m.iter().map(|r| r[j]).sum::<f64>() / m.len() as f64;
            }
            out
        };
        rows.push(OracleRow {
            class: "all".into(),
            images: images.len(),
            instances: gt_count.iter().sum(),
            boxes: avg(&per_task[0].0),
            masks: avg(&per_task[1].0),
        });
        for (i, &c) in present.iter().enumerate() {
            rows.push(OracleRow {
                class: class_names[c].clone(),
                images: images.len(),
                instances: gt_count[c],
                boxes: per_task[0].0[i],
                masks: per_task[1].0[i],
            });
        }
    }
    OracleEval {
        rows,
        thresholds: [per_task[0].1, per_task[1].1],
        curves,
    }
}

/// Confusion matrix by brute force: class-agnostic selection-greedy on box IoU.
pub fn brute_force_confusion(nc: usize, images: &[ImageSample], conf: f64, iou: f64) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; nc + 1]; nc + 1];
    for img in images {
        let preds: Vec<&Detection> = img.predictions.iter().filter(|p| p.confidence >= conf).collect();
        let confs: Vec<f64> = preds.iter().map(|p| p.confidence).collect();
        let ious: Vec<Vec<f64>> = preds
            .iter()
            .map(|p| img.ground_truth.iter().map(|g| box_iou(det_box(p), poly_box(&g.vertices))).collect())
            .collect();
        // replay the selection to learn which gt each prediction took
        let mut done = vec![false; preds.len()];
        let mut used = vec![false; img.ground_truth.len()];
        for _ in 0..preds.len() {
            let mut pick: Option<usize> = None;
            for i in 0..preds.len() {
                if !done[i] && pick.is_none_or(|p| confs[i] > confs[p]) {
                    pick = Some(i);
                }
            }
            let p = pick.unwrap();
            done[p] = true;
            let mut best: Option<usize> = None;
            for g in 0..img.ground_truth.len() {
                if !used[g] && ious[p][g] >= iou && best.is_none_or(|b| ious[p][g] > ious[p][b]) {
                    best = Some(g);
                }
            }
            match best {
                Some(g) => {
                    used[g] = true;
                    m[img.ground_truth[g].class_id][preds[p].class_id] += 1;
                }
                None => m[nc][preds[p].class_id] += 1,
            }
        }
        for (g, u) in used.iter().enumerate() {
            if !u {
                m[img.ground_truth[g].class_id][nc] += 1;
            }
        }
    }
    m
}

fn clamp_unit(p: Point) -> Point {
    Point::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0))
}

fn random_conf(rng: &mut StdRng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random_range(0..=20) as f64 / 20.0,
        1 => rng.random_range(0..=4) as f64 / 4.0,
        _ => rng.random_range(0.0..=1.0),
    }
}

/// Random dataset with planted hits, near misses, duplicates, class swaps,
/// box-only predictions and spurious detections.
pub fn planted_dataset(rng: &mut StdRng) -> (Vec<String>, Vec<ImageSample>) {
    let nc = rng.random_range(1..=6);
    let names: Vec<String> = (0..nc).map(|c| format!("class{c}")).collect();
    let n_images = rng.random_range(0..=20);
    let mut images = Vec::with_capacity(n_images);
    for i in 0..n_images {
        let w = rng.random_range(24..=96);
        let h = rng.random_range(24..=96);
        let n_gt = rng.random_range(0..=50);
        let mut gts = Vec::new();
        let mut preds = Vec::new();
        for _ in 0..n_gt {
            let class = rng.random_range(0..nc);
            let r = rng.random_range(0.03..0.2);
            let (cx, cy) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let n = rng.random_range(3..=7);
            let verts: Vec<Point> = random_star(rng, cx, cy, r, n).into_iter().map(clamp_unit).collect();
            let gt = PolygonAnnotation::new(class, verts.clone()).unwrap();
            let copies = match rng.random_range(0..10) {
                0..=1 => 0,
                2..=8 => 1,
                _ => 2,
            };
            for _ in 0..copies {
                let jitter = rng.random_range(0.0..0.5) * r;
                let moved: Vec<Point> = verts
                    .iter()
                    .map(|p| {
                        clamp_unit(Point::new(
                            p.x + rng.random_range(-jitter..=jitter),
                            p.y + rng.random_range(-jitter..=jitter),
                        ))
                    })
                    .collect();
                let pc = if rng.random_range(0..8) == 0 { rng.random_range(0..nc) } else { class };
                let conf = random_conf(rng);
                if rng.random_range(0..10) == 0 {
                    let b = Detection::from_polygon(pc, conf, moved).bbox;
                    preds.push(Detection::from_box(pc, conf, b));
                } else {
                    preds.push(Detection::from_polygon(pc, conf, moved));
                }
            }
            gts.push(gt);
        }
        for _ in 0..rng.random_range(0..=6) {
            let (cx, cy) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let r = rng.random_range(0.03..0.2);
            let v: Vec<Point> = random_star(rng, cx, cy, r, 5)
                .into_iter()
                .map(clamp_unit)
                .collect();
            let conf = random_conf(rng);
            preds.push(Detection::from_polygon(rng.random_range(0..nc), conf, v));
        }
        // shuffle prediction order so input order differs from confidence order
        for k in (1..preds.len()).rev() {
            let j = rng.random_range(0..=k);
            preds.swap(k, j);
        }
        images.push(ImageSample {
            stem: format!("img{i:03}"),
            width: w,
            height: h,
            ground_truth: gts,
            predictions: preds,
        });
    }
    (names, images)
}

pub fn bbox_of(v: &[Point]) -> BoundingBox {
    let (a, b, c, d) = poly_box(v);
    BoundingBox::new(a, b, c, d).unwrap()
}

// ---------------------------------------------------------------- scenario checks

use xraysegkit_core::imaging::gaussian_blur;
use xraysegkit_core::segment::{
    canny, gradient_operator, snake_energy, snake_evolve, Contour, GradientField, GradientKind, SnakeParams,
};
use xraysegkit_core::imaging::BorderPolicy;
use xraysegkit_core::pipeline::snake_point_count;

/// Outcome of Canny on one synthetic disk.
pub struct DiskEdges {
    /// Largest distance from an edge pixel center to the true circle.
    pub max_deviation: f64,
    /// Fraction of 360 sampled circle points with an edge pixel within 2 px.
    pub coverage: f64,
    pub edge_pixels: usize,
}

pub fn canny_disk_trial(rng: &mut StdRng) -> DiskEdges {
    let radius = rng.random_range(15.0..=45.0);
    let size = (2.0 * radius) as usize + 24;
    let center = Point::new(
        size as f64 / 2.0 + rng.random_range(-2.0..2.0),
        size as f64 / 2.0 + rng.random_range(-2.0..2.0),
    );
    let contrast: u8 = rng.random_range(100..=200);
    let outside: u8 = rng.random_range(0..=(255 - contrast));
    let (inside, outside) = if rng.random() {
        (outside + contrast, outside)
    } else {
        (outside, outside + contrast)
    };
    let img = disk_image(size, size, center, radius, inside, outside);
    let edges = canny(&img, 1.4, 20.0, 60.0).unwrap();
    let mut pts = Vec::new();
    for y in 0..size {
        for x in 0..size {
            if edges.get(x, y) {
                pts.push(Point::new(x as f64 + 0.5, y as f64 + 0.5));
            }
        }
    }
    let max_deviation = pts
        .iter()
        .map(|p| (p.distance(center) - radius).abs())
        .fold(0.0, f64::max);
    let covered = (0..360)
        .filter(|&a| {
            let t = (a as f64).to_radians();
            let q = Point::new(center.x + radius * t.cos(), center.y + radius * t.sin());
            pts.iter().any(|p| p.distance(q) <= 2.0)
        })
        .count();
    DiskEdges {
        max_deviation,
        coverage: covered as f64 / 360.0,
        edge_pixels: pts.len(),
    }
}

/// Field the snake runs on: Sobel of the blurred image.
pub fn snake_field(img: &GrayImage, sigma: f64) -> GradientField {
    gradient_operator(&gaussian_blur(img, sigma).unwrap(), GradientKind::Sobel, BorderPolicy::Replicate).unwrap()
}

/// Random image, weights and starting contour; returns the energy trace.
pub fn snake_random_trial(rng: &mut StdRng) -> Vec<f64> {
    let (w, h) = (rng.random_range(40..=80), rng.random_range(40..=80));
    let mut img = GrayImage::filled(w, h, rng.random_range(0..80)).unwrap();
    for _ in 0..rng.random_range(1..=4) {
        let c = Point::new(rng.random_range(5.0..w as f64 - 5.0), rng.random_range(5.0..h as f64 - 5.0));
        let r = rng.random_range(4.0..15.0);
        let v = rng.random_range(100..=255);
        let blob = disk_image(w, h, c, r, v, 0);
        img = GrayImage::from_fn(w, h, |x, y| img.get(x, y).max(blob.get(x, y))).unwrap();
    }
    let field = snake_field(&img, rng.random_range(0.8..2.5));
    let params = SnakeParams {
        alpha: rng.random_range(0.0..0.5),
        beta: rng.random_range(0.0..0.5),
        gamma_ext: rng.random_range(0.1..3.0),
        search_radius: rng.random_range(1..=2),
        max_iters: 200,
        move_epsilon: 0.0,
    };
    let n = rng.random_range(8..=40);
    let c = Point::new(w as f64 / 2.0, h as f64 / 2.0);
    let r = rng.random_range(8.0..(w.min(h) as f64 / 2.0 - 2.0));
    let pts: Vec<Point> = Contour::circle(c, r, n)
        .points
        .into_iter()
        .map(|p| {
            Point::new(
                (p.x + rng.random_range(-2.0..2.0)).clamp(0.0, w as f64 - 1.0),
                (p.y + rng.random_range(-2.0..2.0)).clamp(0.0, h as f64 - 1.0),
            )
        })
        .collect();
    let init = Contour::closed(pts);
    let out = snake_evolve(&field, &init, &params).unwrap();
    assert_eq!(out.energy_trace.len(), out.iterations + 1);
    let recomputed = snake_energy(&field, &out.contour, &params);
    assert!((recomputed - out.energy_trace.last().unwrap()).abs() <= 1e-9 * recomputed.abs().max(1.0));
    out.energy_trace
}

pub fn non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|p| p[1] <= p[0] + 1e-9 * p[0].abs().max(1.0))
}

/// Mean |distance to center - radius| after evolving a circle of radius
/// `radius + offset` on a disk of `radius`; also returns iterations used.
pub fn snake_disk_error(radius: f64, offset: f64) -> (f64, usize) {
    let points = snake_point_count(radius + offset);
    let size = (2.0 * (radius + offset)) as usize + 20;
    let center = Point::new(size as f64 / 2.0, size as f64 / 2.0);
    let img = disk_image(size, size, center, radius, 220, 30);
    let field = snake_field(&img, 2.0);
    // sampled on the pixel grid, so the true edge sits half a pixel off the
    // continuous circle
    let grid_center = Point::new(center.x - 0.5, center.y - 0.5);
    let init = Contour::circle(grid_center, radius + offset, points);
    let out = snake_evolve(&field, &init, &SnakeParams::default()).unwrap();
    let err = out
        .contour
        .points
        .iter()
        .map(|p| (p.distance(grid_center) - radius).abs())
        .sum::<f64>()
        / points as f64;
    (err, out.iterations)
}

use xraysegkit_core::labels::{mask_to_polygons, parse_label_file, rasterize_polygon, serialize_label_file};

/// Random label file content: up to 20 polygons of 3..=12 vertices.
pub fn random_annotations(rng: &mut StdRng, num_classes: usize) -> Vec<PolygonAnnotation> {
    (0..rng.random_range(0..=20))
        .map(|_| {
            let n = rng.random_range(3..=12);
            let v = (0..n)
                .map(|_| Point::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)))
                .collect();
            PolygonAnnotation::new(rng.random_range(0..num_classes), v).unwrap()
        })
        .collect()
}

/// Largest coordinate error of parse(serialize(x)) against x, or None when
/// the classes or counts differ.
pub fn label_round_trip_error(anns: &[PolygonAnnotation], num_classes: usize) -> Option<f64> {
    let text = serialize_label_file(anns);
    let back = parse_label_file(&text, num_classes).ok()?;
    if back.len() != anns.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (a, b) in anns.iter().zip(&back) {
        if a.class_id != b.class_id || a.vertices.len() != b.vertices.len() {
            return None;
        }
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            worst = worst.max((p.x - q.x).abs()).max((p.y - q.y).abs());
        }
    }
    Some(worst)
}

/// A convex polygon whose raster covers at least 400 pixels, traced back
/// into polygons and re-rasterized; returns the IoU of the two rasters.
pub fn trace_round_trip_iou(rng: &mut StdRng) -> f64 {
    loop {
        let (w, h) = (rng.random_range(40..=160), rng.random_range(40..=160));
        let n = rng.random_range(3..=10);
        let (cx, cy) = (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
        let (rx, ry) = (rng.random_range(0.1..0.3), rng.random_range(0.1..0.3));
        let v: Vec<Point> = random_convex(rng, cx, cy, rx, ry, n)
            .into_iter()
            .map(|p| Point::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0)))
            .collect();
        if v.len() < 3 {
            continue;
        }
        let poly = PolygonAnnotation::new(0, v).unwrap();
        let original = rasterize_polygon(&poly, w, h);
        if original.count() < 400 {
            continue;
        }
        let traced = mask_to_polygons(&original, 1);
        let mut back = vec![false; w * h];
        for t in traced {
            let m = rasterize_polygon(&PolygonAnnotation::new(0, t).unwrap(), w, h);
            for (b, v) in back.iter_mut().zip(m.data()) {
                *b |= *v;
            }
        }
        return dense_iou(original.data(), &back);
    }
}

use xraysegkit_core::metrics::{
    confidence_curves, confusion_matrix, evaluate_matches, map_summary, CurveKind, IouKind, TaskMetrics,
};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn metrics_array(m: &TaskMetrics) -> [f64; 4] {
    [m.precision, m.recall, m.map50, m.map50_95]
}

/// Runs the library evaluation on one dataset and compares every output
/// with the brute-force evaluator. Also checks mAP50-95 <= mAP50.
pub fn check_against_oracle(names: &[String], images: &[ImageSample], conf: f64, iou: f64) -> Result<(), String> {
    let matches = evaluate_matches(names, images).map_err(|e| e.to_string())?;
    let report = map_summary(&matches);
    let curves = confidence_curves(&matches);
    let matrix = confusion_matrix(names, images, conf, iou).map_err(|e| e.to_string())?;
    let oracle = brute_force_eval(names, images);

    if report.rows.len() != oracle.rows.len() {
        return Err(format!("row count {} vs {}", report.rows.len(), oracle.rows.len()));
    }
    for (r, o) in report.rows.iter().zip(&oracle.rows) {
        if r.class != o.class || r.images != o.images || r.instances != o.instances {
            return Err(format!("row header {:?} vs {:?}", (&r.class, r.images, r.instances), (&o.class, o.images, o.instances)));
        }
        for (got, want) in [(metrics_array(&r.boxes), o.boxes), (metrics_array(&r.masks), o.masks)] {
            if !got.iter().zip(&want).all(|(a, b)| close(*a, *b)) {
                return Err(format!("class {}: {got:?} vs oracle {want:?}", r.class));
            }
            if got[3] > got[2] + 1e-12 {
                return Err(format!("class {}: mAP50-95 {} > mAP50 {}", r.class, got[3], got[2]));
            }
        }
    }
    if !close(report.box_conf_threshold, oracle.thresholds[0]) || !close(report.mask_conf_threshold, oracle.thresholds[1]) {
        return Err("F1-optimal thresholds differ".into());
    }

    let want = brute_force_confusion(names.len(), images, conf, iou);
    if matrix.counts != want {
        return Err(format!("confusion {:?} vs oracle {want:?}", matrix.counts));
    }
    let gt_total: usize = images.iter().map(|i| i.ground_truth.len()).sum();
    if matrix.ground_truth_total() != gt_total as u64 {
        return Err("confusion rows do not sum to the instance count".into());
    }

    if curves.len() != oracle.curves.len() {
        return Err(format!("curve count {} vs {}", curves.len(), oracle.curves.len()));
    }
    for (c, o) in curves.iter().zip(&oracle.curves) {
        let task = if c.task == IouKind::Box { "box" } else { "mask" };
        if c.kind.name() != o.kind || task != o.task || c.label != o.label || c.points.len() != o.points.len() {
            return Err(format!("curve header {} {task} {} vs {} {} {}", c.kind.name(), c.label, o.kind, o.task, o.label));
        }
        if !c.points.iter().zip(&o.points).all(|(a, b)| close(a.0, b.0) && close(a.1, b.1)) {
            return Err(format!("curve {} {task} {} differs", c.kind.name(), c.label));
        }
        if !c.points.windows(2).all(|p| p[0].0 < p[1].0) {
            return Err(format!("curve {} x not strictly increasing", c.kind.name()));
        }
        if c.kind == CurveKind::RecallConfidence && !c.points.windows(2).all(|p| p[1].1 <= p[0].1 + 1e-12) {
            return Err("recall rises with the threshold".into());
        }
    }
    Ok(())
}
