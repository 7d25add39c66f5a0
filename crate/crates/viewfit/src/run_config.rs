//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys and
//! out-of-range values are errors so a typo never silently falls back to a
//! default.

use std::fmt;

use thiserror::Error;
use viewfit_core::geometry::Dimensions;
use viewfit_core::metrics::{EvalConfig, Interpolation};
use viewfit_core::orientation::LossWeights;
use viewfit_core::synth::{Interval, ObjectSampler, SceneRanges};
use viewfit_core::viewpoint::DEFAULT_FACE_BAND;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: {reason}")]
    OutOfRange { key: &'static str, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub face_band: f64,
    pub n_bins: usize,
    pub overlap: f64,
    pub loss_weights: LossWeights,
    pub max_truncation: f64,
    pub interpolation: Interpolation,
    pub iou_2d: f64,
    pub iou_3d: [f64; 2],
    pub class: String,
    pub objects_per_frame: usize,
    pub image_width: f64,
    pub image_height: f64,
    pub ranges: SceneRanges,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalConfig::default();
        let sampler = ObjectSampler::default();
        Self {
            face_band: DEFAULT_FACE_BAND,
            n_bins: 2,
            overlap: 0.1,
            loss_weights: LossWeights::TRAINING_DEFAULT,
            max_truncation: 0.5,
            interpolation: eval.interpolation,
            iou_2d: eval.iou_2d,
            iou_3d: eval.iou_3d,
            class: eval.class,
            objects_per_frame: 4,
            image_width: sampler.image_width,
            image_height: sampler.image_height,
            ranges: sampler.ranges,
        }
    }
}

fn floats<const N: usize>(value: &str) -> Option<[f64; N]> {
    let parts: Vec<f64> = value.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().ok()?;
    parts.try_into().ok()
}

fn interval(value: &str) -> Option<Interval> {
    floats::<2>(value).map(|[a, b]| Interval::new(a, b))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: i + 1,
                reason: "expected `key=value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(|e| match e {
                SetError::Unknown => ConfigError::UnknownKey(key.to_string()),
                SetError::BadValue => ConfigError::Malformed { line: i + 1, reason: format!("bad value for `{key}`: `{value}`") },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, SetError> {
            v.parse().map_err(|_| SetError::BadValue)
        }
        let r = &mut self.ranges;
        match key {
            "face_band" => self.face_band = num(value)?,
            "n_bins" => self.n_bins = num(value)?,
            "overlap" => self.overlap = num(value)?,
            "loss_weights" => {
                let [d, a, c, v] = floats::<4>(value).ok_or(SetError::BadValue)?;
                self.loss_weights = LossWeights { dims: d, ang: a, conf: c, view: v };
            }
            "max_truncation" => self.max_truncation = num(value)?,
            "interpolation" => {
                self.interpolation = match value {
                    "11" => Interpolation::Eleven,
                    "40" => Interpolation::Forty,
                    _ => return Err(SetError::BadValue),
                }
            }
            "iou_2d" => self.iou_2d = num(value)?,
            "iou_3d" => self.iou_3d = floats::<2>(value).ok_or(SetError::BadValue)?,
            "class" => self.class = value.to_string(),
            "objects_per_frame" => self.objects_per_frame = num(value)?,
            "image_width" => self.image_width = num(value)?,
            "image_height" => self.image_height = num(value)?,
            "tx" => r.tx = interval(value).ok_or(SetError::BadValue)?,
            "ty" => r.ty = interval(value).ok_or(SetError::BadValue)?,
            "tz" => r.tz = interval(value).ok_or(SetError::BadValue)?,
            "theta" => r.theta = interval(value).ok_or(SetError::BadValue)?,
            "dims_mean" => {
                let [l, h, w] = floats::<3>(value).ok_or(SetError::BadValue)?;
                r.dims_mean = Dimensions { l, h, w };
            }
            "dims_spread" => r.dims_spread = num(value)?,
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &'static str, reason: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { key, reason })
            }
        };
        let quarter = std::f64::consts::FRAC_PI_4;
        check(self.face_band > 0.0 && self.face_band < quarter, "face_band", "must lie in (0, pi/4)")?;
        check(self.n_bins >= 2, "n_bins", "must be at least 2")?;
        check(
            self.overlap >= 0.0 && self.overlap < std::f64::consts::TAU / self.n_bins as f64,
            "overlap",
            "must lie in [0, 2pi/n_bins)",
        )?;
        let w = &self.loss_weights;
        check([w.dims, w.ang, w.conf, w.view].iter().all(|x| *x >= 0.0), "loss_weights", "must be non-negative")?;
        check((0.0..=1.0).contains(&self.max_truncation), "max_truncation", "must lie in [0, 1]")?;
        check(self.iou_2d > 0.0 && self.iou_2d <= 1.0, "iou_2d", "must lie in (0, 1]")?;
        check(self.iou_3d.iter().all(|t| *t > 0.0 && *t <= 1.0), "iou_3d", "must lie in (0, 1]")?;
        check(!self.class.is_empty(), "class", "must not be empty")?;
        check(self.objects_per_frame >= 1, "objects_per_frame", "must be at least 1")?;
        check(self.image_width > 0.0 && self.image_height > 0.0, "image_width", "image size must be positive")?;
        let r = &self.ranges;
        for (iv, key) in [(r.tx, "tx"), (r.ty, "ty"), (r.tz, "tz"), (r.theta, "theta")] {
            check(iv.min <= iv.max, key, "min must not exceed max")?;
        }
        check(r.tz.min > 0.0, "tz", "objects must be in front of the camera")?;
        check(r.dims_mean.is_valid(), "dims_mean", "must be positive")?;
        check((0.0..1.0).contains(&r.dims_spread), "dims_spread", "must lie in [0, 1)")?;
        Ok(())
    }

    pub fn sampler(&self) -> ObjectSampler {
        ObjectSampler {
            image_width: self.image_width,
            image_height: self.image_height,
            ranges: self.ranges,
            ..ObjectSampler::default()
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            class: self.class.clone(),
            iou_2d: self.iou_2d,
            iou_3d: self.iou_3d,
            interpolation: self.interpolation,
            ..EvalConfig::default()
        }
    }
}

enum SetError {
    Unknown,
    BadValue,
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = &self.loss_weights;
        let r = &self.ranges;
        let interp = match self.interpolation {
            Interpolation::Eleven => 11,
            Interpolation::Forty => 40,
        };
        writeln!(f, "face_band={}", self.face_band)?;
        writeln!(f, "n_bins={}", self.n_bins)?;
        writeln!(f, "overlap={}", self.overlap)?;
        writeln!(f, "loss_weights={},{},{},{}", w.dims, w.ang, w.conf, w.view)?;
        writeln!(f, "max_truncation={}", self.max_truncation)?;
        writeln!(f, "interpolation={interp}")?;
        writeln!(f, "iou_2d={}", self.iou_2d)?;
        writeln!(f, "iou_3d={},{}", self.iou_3d[0], self.iou_3d[1])?;
        writeln!(f, "class={}", self.class)?;
        writeln!(f, "objects_per_frame={}", self.objects_per_frame)?;
        writeln!(f, "image_width={}", self.image_width)?;
        writeln!(f, "image_height={}", self.image_height)?;
        writeln!(f, "tx={},{}", r.tx.min, r.tx.max)?;
        writeln!(f, "ty={},{}", r.ty.min, r.ty.max)?;
        writeln!(f, "tz={},{}", r.tz.min, r.tz.max)?;
        writeln!(f, "theta={},{}", r.theta.min, r.theta.max)?;
        writeln!(f, "dims_mean={},{},{}", r.dims_mean.l, r.dims_mean.h, r.dims_mean.w)?;
        writeln!(f, "dims_spread={}", r.dims_spread)
    }
}
