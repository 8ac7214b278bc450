//! Gaussian keypoint heatmaps: target rendering, the joint-candidate loss and
//! multi-peak extraction.

use crate::error::{invalid, Result};
use crate::geometry::Point;

/// Default heatmap size (width x height) for a 256x320 input crop.
pub const DEFAULT_HEATMAP_WIDTH: usize = 64;
pub const DEFAULT_HEATMAP_HEIGHT: usize = 80;
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_MU: f64 = 0.5;
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.1;
pub const DEFAULT_PEAK_WINDOW: usize = 3;

/// Dense response grid, row-major, pixel `(x, y)` at `values[y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    sigma: f64,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(width: usize, height: usize, sigma: f64) -> Result<Self> {
        check_grid(width, height, sigma)?;
        Ok(Self {
            width,
            height,
            sigma,
            values: vec![0.0; width * height],
        })
    }

    pub fn from_values(width: usize, height: usize, sigma: f64, values: Vec<f64>) -> Result<Self> {
        check_grid(width, height, sigma)?;
        if values.len() != width * height {
            return Err(invalid(format!(
                "expected {} values for a {width}x{height} grid, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("heatmap values must be finite and non-negative"));
        }
        Ok(Self {
            width,
            height,
            sigma,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &Heatmap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pointwise `self + scale * other`.
    pub fn add_scaled(&self, other: &Heatmap, scale: f64) -> Result<Heatmap> {
        if !self.same_shape(other) {
            return Err(invalid("heatmap dimensions differ"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(Heatmap {
            width: self.width,
            height: self.height,
            sigma: self.sigma,
            values,
        })
    }

    pub fn mean_squared_error(&self, other: &Heatmap) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(invalid(format!(
                "heatmap dimensions differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.values.len() as f64)
    }
}

fn check_grid(width: usize, height: usize, sigma: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("grid must be non-empty, got {width}x{height}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Unnormalized Gaussian mixture: each center contributes `exp(-d^2 / 2 sigma^2)`,
/// so an isolated center peaks at exactly 1.0. Centers off the grid still
/// contribute their tails.
pub fn render_gaussian(centers: &[Point], sigma: f64, width: usize, height: usize) -> Result<Heatmap> {
    let mut map = Heatmap::zeros(width, height, sigma)?;
    let denom = 2.0 * sigma * sigma;
    for y in 0..height {
        for x in 0..width {
            let q = Point::new(x as f64, y as f64);
            map.values[y * width + x] = centers
                .iter()
                .map(|p| (-q.distance_sq(*p) / denom).exp())
                .sum();
        }
    }
    Ok(map)
}

/// Training target for one joint type of one proposal: the target peak `T`
/// plus interference peaks `C` attenuated by `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTarget {
    pub target: Heatmap,
    pub interference: Heatmap,
    mu: f64,
}

impl CompositeTarget {
    pub fn new(target: Heatmap, interference: Heatmap, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        if !target.same_shape(&interference) {
            return Err(invalid("target and interference grids differ in size"));
        }
        Ok(Self {
            target,
            interference,
            mu,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// The supervision grid `T + mu * C`.
    pub fn composite(&self) -> Heatmap {
        self.target
            .add_scaled(&self.interference, self.mu)
            .expect("shapes checked at construction")
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(invalid(format!("attenuation factor must lie in [0, 1], got {mu}")));
    }
    Ok(())
}

pub fn compose_training_target(
    target_joints: &[Point],
    interference_joints: &[Point],
    mu: f64,
    sigma: f64,
    width: usize,
    height: usize,
) -> Result<CompositeTarget> {
    check_mu(mu)?;
    let target = render_gaussian(target_joints, sigma, width, height)?;
    let interference = render_gaussian(interference_joints, sigma, width, height)?;
    CompositeTarget::new(target, interference, mu)
}

/// Joint-candidate loss: mean over joint types of the per-grid MSE between the
/// prediction and `T + mu * C`.
pub fn jc_loss(predicted: &[Heatmap], composite: &[CompositeTarget]) -> Result<f64> {
    if predicted.len() != composite.len() {
        return Err(invalid(format!(
            "{} predicted channels but {} targets",
            predicted.len(),
            composite.len()
        )));
    }
    if predicted.is_empty() {
        return Err(invalid("at least one joint channel is required"));
    }
    let mut total = 0.0;
    for (p, c) in predicted.iter().zip(composite) {
        total += p.mean_squared_error(&c.composite())?;
    }
    Ok(total / predicted.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub location: Point,
    pub response: f64,
}

/// Local maxima of a `window x window` neighborhood above `score_threshold`,
/// strongest first. Equal values inside a window resolve to the lower
/// row-major index, so plateaus yield one peak.
pub fn extract_peaks(heatmap: &Heatmap, score_threshold: f64, window: usize) -> Result<Vec<Peak>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(invalid(format!("window must be odd and at least 3, got {window}")));
    }
    if !(score_threshold.is_finite() && score_threshold >= 0.0) {
        return Err(invalid(format!("score threshold must be non-negative, got {score_threshold}")));
    }
    let (w, h) = (heatmap.width, heatmap.height);
    let r = window / 2;
    let mut found: Vec<(usize, f64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let v = heatmap.values[idx];
            if v <= score_threshold {
                continue;
            }
            let mut is_peak = true;
            'scan: for ny in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for nx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    let nidx = ny * w + nx;
                    if nidx == idx {
                        continue;
                    }
                    let nv = heatmap.values[nidx];
                    if nv > v || (nv == v && nidx < idx) {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                found.push((idx, v));
            }
        }
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(found
        .into_iter()
        .map(|(idx, response)| Peak {
            location: Point::new((idx % w) as f64, (idx / w) as f64),
            response,
        })
        .collect())
}
