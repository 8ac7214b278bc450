//! Tunable constants in one place. Values come from built-in defaults,
//! overridden by a JSON config file, overridden by command-line flags.

use std::path::Path;

use crowdpose::heatmap::{DEFAULT_MU, DEFAULT_PEAK_THRESHOLD, DEFAULT_SIGMA};
use crowdpose::joints::{JointSpec, COCO_JOINT_SIGMAS, JOINT_COUNT};
use crowdpose::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::formats::read_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Interference response level.
    pub mu: f64,
    /// Heatmap Gaussian deviation; also the response size of simulated candidates.
    pub sigma: f64,
    pub peak_threshold: f64,
    /// Per-joint control deviation used for grouping.
    pub delta: [f64; JOINT_COUNT],
    /// Per-joint constants used by OKS.
    pub oks_sigmas: [f64; JOINT_COUNT],
    pub bbox_nms_iou: f64,
    pub oks_dedup: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            sigma: DEFAULT_SIGMA,
            peak_threshold: DEFAULT_PEAK_THRESHOLD,
            delta: COCO_JOINT_SIGMAS,
            oks_sigmas: COCO_JOINT_SIGMAS,
            bbox_nms_iou: 0.5,
            oks_dedup: 0.7,
            seed: 0,
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub peak_threshold: Option<f64>,
    pub bbox_nms_iou: Option<f64>,
    pub oks_dedup: Option<f64>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut c = match file {
            Some(path) => read_file::<Config>(path)?,
            None => Config::default(),
        };
        let o = overrides;
        c.mu = o.mu.unwrap_or(c.mu);
        c.sigma = o.sigma.unwrap_or(c.sigma);
        c.peak_threshold = o.peak_threshold.unwrap_or(c.peak_threshold);
        c.bbox_nms_iou = o.bbox_nms_iou.unwrap_or(c.bbox_nms_iou);
        c.oks_dedup = o.oks_dedup.unwrap_or(c.oks_dedup);
        c.seed = o.seed.unwrap_or(c.seed);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(0.0..=1.0).contains(&self.mu) {
            return bad(format!("mu must lie in [0, 1], got {}", self.mu));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.peak_threshold) {
            return bad(format!("peak threshold must lie in [0, 1], got {}", self.peak_threshold));
        }
        for (name, t) in [("bbox NMS IoU", self.bbox_nms_iou), ("OKS dedup threshold", self.oks_dedup)] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {t}"));
            }
        }
        if self.oks_sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("OKS sigmas must be positive".into());
        }
        self.joint_spec().map(|_| ())
    }

    pub fn joint_spec(&self) -> Result<JointSpec> {
        JointSpec::with_deltas(self.delta)
    }
}
