use serde::{Deserialize, Serialize};

use super::GradientField;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Ordered contour points in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Contour {
    pub fn closed(points: Vec<Point>) -> Self {
        Self {
            points,
            closed: true,
        }
    }

    /// `n` points evenly spaced on a circle, starting at angle 0.
    pub fn circle(center: Point, radius: f64, n: usize) -> Self {
        let points = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            })
            .collect();
        Self::closed(points)
    }

    pub fn centroid(&self) -> Point {
        let n = self.points.len().max(1) as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }
}

/// Weights and stopping rules for [`snake_evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnakeParams {
    /// Elasticity (first-difference) weight.
    pub alpha: f64,
    /// Rigidity (second-difference) weight.
    pub beta: f64,
    /// Weight of the normalized squared gradient magnitude.
    pub gamma_ext: f64,
    pub search_radius: usize,
    pub max_iters: usize,
    /// Stop once fewer than this fraction of points move in an iteration.
    pub move_epsilon: f64,
}

impl Default for SnakeParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.01,
            gamma_ext: 1.0,
            search_radius: 1,
            max_iters: 500,
            move_epsilon: 0.0,
        }
    }
}

impl SnakeParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.alpha, self.beta, self.gamma_ext];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("snake weights must be finite and >= 0".into()));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter(
                "at least one of alpha, beta, gamma_ext must be positive".into(),
            ));
        }
        if self.search_radius < 1 || self.max_iters < 1 {
            return Err(Error::InvalidParameter(
                "search_radius and max_iters must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.move_epsilon) {
            return Err(Error::InvalidParameter("move_epsilon must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnakeOutcome {
    pub contour: Contour,
    pub iterations: usize,
    /// Total energy before the first iteration and after each one.
    pub energy_trace: Vec<f64>,
}

/// Squared gradient magnitude scaled to `[0, 1]`, sampled bilinearly.
struct ExternalEnergy {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ExternalEnergy {
    fn new(field: &GradientField) -> Self {
        let (width, height) = field.dimensions();
        let sq: Vec<f64> = field.magnitude.data().iter().map(|m| m * m).collect();
        let max = sq.iter().copied().fold(0.0, f64::max);
        let values = if max > 0.0 {
            sq.iter().map(|v| v / max).collect()
        } else {
            sq
        };
        Self {
            width,
            height,
            values,
        }
    }

    fn in_bounds(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= (self.width - 1) as f64 && p.y <= (self.height - 1) as f64
    }

    fn sample(&self, p: Point) -> f64 {
        let x0 = p.x.floor().clamp(0.0, (self.width - 1) as f64);
        let y0 = p.y.floor().clamp(0.0, (self.height - 1) as f64);
        let fx = p.x - x0;
        let fy = p.y - y0;
        let (x0, y0) = (x0 as usize, y0 as usize);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let v = |x: usize, y: usize| self.values[y * self.width + x];
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

struct EnergyModel<'a> {
    ext: &'a ExternalEnergy,
    params: &'a SnakeParams,
}

impl EnergyModel<'_> {
    /// Elastic term attached to index `k`: `|p_k - p_{k-1}|^2`.
    fn elastic(&self, pts: &[Point], k: usize) -> f64 {
        let n = pts.len();
        pts[k % n].distance_squared(pts[(k + n - 1) % n])
    }

    /// Rigidity term attached to index `k`: `|p_{k-1} - 2 p_k + p_{k+1}|^2`.
    fn rigid(&self, pts: &[Point], k: usize) -> f64 {
        let n = pts.len();
        let prev = pts[(k + n - 1) % n];
        let cur = pts[k % n];
        let next = pts[(k + 1) % n];
        let dx = prev.x - 2.0 * cur.x + next.x;
        let dy = prev.y - 2.0 * cur.y + next.y;
        dx * dx + dy * dy
    }

    fn total(&self, pts: &[Point]) -> f64 {
        (0..pts.len())
            .map(|i| {
                self.params.alpha * self.elastic(pts, i) + self.params.beta * self.rigid(pts, i)
                    - self.params.gamma_ext * self.ext.sample(pts[i])
            })
            .sum()
    }

    /// Every term of the total energy that depends on `pts[i]`.
    fn local(&self, pts: &[Point], i: usize) -> f64 {
        let n = pts.len();
        let a = self.params.alpha * (self.elastic(pts, i) + self.elastic(pts, i + 1));
        let b = self.params.beta
            * (self.rigid(pts, i + n - 1) + self.rigid(pts, i) + self.rigid(pts, i + 1));
        a + b - self.params.gamma_ext * self.ext.sample(pts[i])
    }
}

/// Total snake energy of `contour` over `field`.
pub fn snake_energy(field: &GradientField, contour: &Contour, params: &SnakeParams) -> f64 {
    let ext = ExternalEnergy::new(field);
    EnergyModel {
        ext: &ext,
        params,
    }
    .total(&contour.points)
}

/// Greedy active contour.
///
/// Each iteration visits the points in order and moves each one to the
/// position in its `(2r+1)^2` window that minimizes the energy terms that
/// depend on it: elasticity `alpha |p_i - p_{i-1}|^2`, rigidity
/// `beta |p_{i-1} - 2 p_i + p_{i+1}|^2` (each summed over the neighbouring
/// indices that involve `p_i`) and the external term `-gamma_ext * g(p_i)`
/// where `g` is the squared gradient magnitude normalized to `[0, 1]`. The
/// point stays put unless a candidate is strictly better; among equal
/// candidates the first in row-major offset order wins. Because every
/// accepted move lowers the total energy by exactly the local difference,
/// the total energy never increases.
pub fn snake_evolve(field: &GradientField, init: &Contour, params: &SnakeParams) -> Result<SnakeOutcome> {
    params.validate()?;
    if !init.closed {
        return Err(Error::InvalidContour("contour must be closed".into()));
    }
    if init.points.len() < 3 {
        return Err(Error::InvalidContour(format!(
            "closed contour needs at least 3 points, got {}",
            init.points.len()
        )));
    }
    let ext = ExternalEnergy::new(field);
    if let Some(p) = init.points.iter().find(|p| !ext.in_bounds(**p)) {
        return Err(Error::InvalidContour(format!(
            "point ({}, {}) lies outside the {}x{} field",
            p.x, p.y, ext.width, ext.height
        )));
    }
    let model = EnergyModel {
        ext: &ext,
        params,
    };
    let r = params.search_radius as isize;
    let mut pts = init.points.clone();
    let mut trace = vec![model.total(&pts)];
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        let mut moved = 0usize;
        for i in 0..pts.len() {
            let origin = pts[i];
            let mut best = origin;
            let mut best_e = model.local(&pts, i);
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let cand = Point::new(origin.x + dx as f64, origin.y + dy as f64);
                    if !ext.in_bounds(cand) {
                        continue;
                    }
                    pts[i] = cand;
                    let e = model.local(&pts, i);
                    if e < best_e {
                        best_e = e;
                        best = cand;
                    }
                }
            }
            pts[i] = best;
            if best != origin {
                moved += 1;
            }
        }
        trace.push(model.total(&pts));
        let fraction = moved as f64 / pts.len() as f64;
        if moved == 0 || fraction < params.move_epsilon {
            break;
        }
    }

    Ok(SnakeOutcome {
        contour: Contour::closed(pts),
        iterations,
        energy_trace: trace,
    })
}
