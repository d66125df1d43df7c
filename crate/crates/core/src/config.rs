//! Pipeline parameters and their flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! tau_m = 30
//! closing_radius = 5
//! sigma_c = 30.0
//! ```
//!
//! Every key is optional and falls back to [`PipelineConfig::default`]; unknown keys and
//! repeated keys are errors.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::densify::{FilterParams, DEFAULT_W_MIN};
use crate::error::{Error, Result};

/// Radius of the coarse filtering pass.
pub const STAGE1_RADIUS: usize = 4;
/// Radius of the full-resolution filtering pass.
pub const STAGE2_RADIUS: usize = 2;
/// Coarse-pass reduction factor along each axis.
pub const DOWNSAMPLE_FACTOR: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Motion threshold on the Euclidean RGB distance between consecutive frames.
    pub tau_m: f32,
    /// Half-width of the square closing element, pixels.
    pub closing_radius: usize,
    /// Half-width of the occlusion averaging window, pixels.
    pub occl_window: usize,
    /// Depth offset behind the local mean that marks a sample occluded, meters.
    pub occl_delta: f32,
    pub stage1_radius: usize,
    pub stage2_radius: usize,
    pub downsample_factor: usize,
    pub sigma_c: f32,
    pub sigma_p_stage1: f32,
    pub sigma_p_stage2: f32,
    /// Depth-gradient threshold for contour suppression, meters per pixel.
    pub grad_thresh: f32,
    pub w_min: f32,
    pub remove_afterimages: bool,
    pub remove_occluded: bool,
    pub contour_filter: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_m: 30.0,
            closing_radius: 5,
            occl_window: 7,
            occl_delta: 0.3,
            stage1_radius: STAGE1_RADIUS,
            stage2_radius: STAGE2_RADIUS,
            downsample_factor: DOWNSAMPLE_FACTOR,
            sigma_c: 30.0,
            sigma_p_stage1: STAGE1_RADIUS as f32 / 2.0,
            sigma_p_stage2: STAGE2_RADIUS as f32 / 2.0,
            grad_thresh: 0.10,
            w_min: DEFAULT_W_MIN,
            remove_afterimages: true,
            remove_occluded: true,
            contour_filter: true,
        }
    }
}

const KEYS: &[&str] = &[
    "tau_m",
    "closing_radius",
    "occl_window",
    "occl_delta",
    "stage1_radius",
    "stage2_radius",
    "downsample_factor",
    "sigma_c",
    "sigma_p_stage1",
    "sigma_p_stage2",
    "grad_thresh",
    "w_min",
    "remove_afterimages",
    "remove_occluded",
    "contour_filter",
];

fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("line {line}: cannot parse `{value}` for `{key}`")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau_m", self.tau_m),
            ("occl_delta", self.occl_delta),
            ("sigma_c", self.sigma_c),
            ("sigma_p_stage1", self.sigma_p_stage1),
            ("sigma_p_stage2", self.sigma_p_stage2),
            ("grad_thresh", self.grad_thresh),
            ("w_min", self.w_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let at_least_one = [
            ("occl_window", self.occl_window),
            ("stage1_radius", self.stage1_radius),
            ("stage2_radius", self.stage2_radius),
            ("downsample_factor", self.downsample_factor),
        ];
        for (name, v) in at_least_one {
            if v < 1 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn stage1_params(&self) -> FilterParams {
        FilterParams {
            r: self.stage1_radius,
            sigma_c: self.sigma_c,
            sigma_p: self.sigma_p_stage1,
            w_min: self.w_min,
        }
    }

    pub fn stage2_params(&self) -> FilterParams {
        FilterParams {
            r: self.stage2_radius,
            sigma_c: self.sigma_c,
            sigma_p: self.sigma_p_stage2,
            w_min: self.w_min,
        }
    }

    /// Parses a flat `key = value` document on top of the defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {line_no}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(Error::config(format!("line {line_no}: unknown key `{key}`")));
            };
            if seen.contains(&known) {
                return Err(Error::config(format!("line {line_no}: duplicate key `{key}`")));
            }
            seen.push(known);
            match known {
                "tau_m" => cfg.tau_m = parse(key, value, line_no)?,
                "closing_radius" => cfg.closing_radius = parse(key, value, line_no)?,
                "occl_window" => cfg.occl_window = parse(key, value, line_no)?,
                "occl_delta" => cfg.occl_delta = parse(key, value, line_no)?,
                "stage1_radius" => cfg.stage1_radius = parse(key, value, line_no)?,
                "stage2_radius" => cfg.stage2_radius = parse(key, value, line_no)?,
                "downsample_factor" => cfg.downsample_factor = parse(key, value, line_no)?,
                "sigma_c" => cfg.sigma_c = parse(key, value, line_no)?,
                "sigma_p_stage1" => cfg.sigma_p_stage1 = parse(key, value, line_no)?,
                "sigma_p_stage2" => cfg.sigma_p_stage2 = parse(key, value, line_no)?,
                "grad_thresh" => cfg.grad_thresh = parse(key, value, line_no)?,
                "w_min" => cfg.w_min = parse(key, value, line_no)?,
                "remove_afterimages" => cfg.remove_afterimages = parse(key, value, line_no)?,
                "remove_occluded" => cfg.remove_occluded = parse(key, value, line_no)?,
                "contour_filter" => cfg.contour_filter = parse(key, value, line_no)?,
                _ => unreachable!("key list and match arms out of sync"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse_kv(&text)
    }

    /// Renders every field in the file format accepted by [`PipelineConfig::parse_kv`].
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("tau_m", &self.tau_m);
        put("closing_radius", &self.closing_radius);
        put("occl_window", &self.occl_window);
        put("occl_delta", &self.occl_delta);
        put("stage1_radius", &self.stage1_radius);
        put("stage2_radius", &self.stage2_radius);
        put("downsample_factor", &self.downsample_factor);
        put("sigma_c", &self.sigma_c);
        put("sigma_p_stage1", &self.sigma_p_stage1);
        put("sigma_p_stage2", &self.sigma_p_stage2);
        put("grad_thresh", &self.grad_thresh);
        put("w_min", &self.w_min);
        put("remove_afterimages", &self.remove_afterimages);
        put("remove_occluded", &self.remove_occluded);
        put("contour_filter", &self.contour_filter);
        s
    }
}
