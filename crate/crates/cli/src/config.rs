//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use roadmetric::estimators::exponents;
use roadmetric::metric::SolverConfig;

use crate::CliError;

/// Every key accepted in a config file or as a `--key value` override.
pub const KEYS: &[&str] = &[
    "d",
    "gamma",
    "epsilon",
    "v0",
    "window_radius",
    "hop_neighbors",
    "refine_tol",
    "refine_max_iters",
    "candidate_depth",
    "ingest_recursive_junctions",
    "kendall_alpha",
    "kendall_depth",
    "n_scales",
    "x",
    "y",
    "t_list",
    "n_samples",
    "epsilon_ratio",
    "road_cap",
    "grid_half_width",
    "grid_n",
    "on_road_radius",
    "fit_lo",
    "fit_hi",
    "r",
    "control_exponent",
    "r_seq",
    "v_seq",
    "scale_lo",
    "scale_hi",
    "sample_file",
    "master_seed",
    "workers",
    "out_dir",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    pub gamma: f64,
    /// Hop speed; also the default truncation speed.
    pub epsilon: f64,
    pub v0: Option<f64>,
    pub window_radius: Option<f64>,
    pub hop_neighbors: usize,
    pub refine_tol: f64,
    pub refine_max_iters: usize,
    pub candidate_depth: usize,
    pub ingest_recursive_junctions: bool,
    pub kendall_alpha: f64,
    pub kendall_depth: usize,
    /// Dyadic scales of the ball-exit certificate.
    pub n_scales: usize,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub t_list: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    /// `ε = t / epsilon_ratio` in the quick-connection experiment.
    pub epsilon_ratio: f64,
    pub road_cap: usize,
    pub grid_half_width: Option<f64>,
    pub grid_n: Option<usize>,
    pub on_road_radius: f64,
    pub fit_lo: Option<f64>,
    pub fit_hi: Option<f64>,
    pub r: f64,
    pub control_exponent: f64,
    pub r_seq: Vec<f64>,
    pub v_seq: Vec<f64>,
    pub scale_lo: usize,
    pub scale_hi: usize,
    /// Sample read by `dist` and `field` instead of drawing one.
    pub sample_file: Option<PathBuf>,
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Line of each key set from a file; command-line overrides map to 0.
    origin: BTreeMap<String, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 2,
            gamma: 3.0,
            epsilon: 0.1,
            v0: None,
            window_radius: None,
            hop_neighbors: 16,
            refine_tol: 1e-10,
            refine_max_iters: 200,
            candidate_depth: 2,
            ingest_recursive_junctions: false,
            kendall_alpha: 0.25,
            kendall_depth: 12,
            n_scales: 8,
            x: None,
            y: None,
            t_list: None,
            n_samples: None,
            epsilon_ratio: 50.0,
            road_cap: 400,
            grid_half_width: None,
            grid_n: None,
            on_road_radius: 0.5,
            fit_lo: None,
            fit_hi: None,
            r: 0.25,
            control_exponent: 1.0,
            r_seq: vec![1.0, 0.5, 0.25],
            v_seq: vec![2.0, 2.0f64.sqrt(), 1.0],
            scale_lo: 0,
            scale_hi: 2,
            sample_file: None,
            master_seed: 0,
            workers: 0,
            out_dir: PathBuf::from("."),
            origin: BTreeMap::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError>
where
    T::Err: Display,
{
    value.parse().map_err(|e| CliError::Config {
        key: key.to_string(),
        line,
        msg: format!("cannot parse {value:?}: {e}"),
    })
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|s| parse_num::<f64>(key, s.trim(), line))
        .collect()
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config {
            key: key.to_string(),
            line,
            msg: format!("expected true or false, got {value:?}"),
        }),
    }
}

/// Parses and validates a config file.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| CliError::Config {
            key: body.to_string(),
            line,
            msg: "expected `key = value`".into(),
        })?;
        cfg.set(key.trim(), value.trim(), line)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Sets one key; `line` is 0 for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config {
                key: key.to_string(),
                line,
                msg: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(CliError::Config {
                key: key.to_string(),
                line,
                msg: "missing value".into(),
            });
        }
        if let Some(&first) = self.origin.get(key) {
            if line > 0 && first > 0 {
                return Err(CliError::Config {
                    key: key.to_string(),
                    line,
                    msg: format!("duplicate key, first set on line {first}"),
                });
            }
        }
        let (k, v, l) = (key, value, line);
        match key {
            "d" => self.d = parse_num(k, v, l)?,
            "gamma" => self.gamma = parse_num(k, v, l)?,
            "epsilon" => self.epsilon = parse_num(k, v, l)?,
            "v0" => self.v0 = Some(parse_num(k, v, l)?),
            "window_radius" => self.window_radius = Some(parse_num(k, v, l)?),
            "hop_neighbors" => self.hop_neighbors = parse_num(k, v, l)?,
            "refine_tol" => self.refine_tol = parse_num(k, v, l)?,
            "refine_max_iters" => self.refine_max_iters = parse_num(k, v, l)?,
            "candidate_depth" => self.candidate_depth = parse_num(k, v, l)?,
            "ingest_recursive_junctions" => self.ingest_recursive_junctions = parse_bool(k, v, l)?,
            "kendall_alpha" => self.kendall_alpha = parse_num(k, v, l)?,
            "kendall_depth" => self.kendall_depth = parse_num(k, v, l)?,
            "n_scales" => self.n_scales = parse_num(k, v, l)?,
            "x" => self.x = Some(parse_list(k, v, l)?),
            "y" => self.y = Some(parse_list(k, v, l)?),
            "t_list" => self.t_list = Some(parse_list(k, v, l)?),
            "n_samples" => self.n_samples = Some(parse_num(k, v, l)?),
            "epsilon_ratio" => self.epsilon_ratio = parse_num(k, v, l)?,
            "road_cap" => self.road_cap = parse_num(k, v, l)?,
            "grid_half_width" => self.grid_half_width = Some(parse_num(k, v, l)?),
            "grid_n" => self.grid_n = Some(parse_num(k, v, l)?),
            "on_road_radius" => self.on_road_radius = parse_num(k, v, l)?,
            "fit_lo" => self.fit_lo = Some(parse_num(k, v, l)?),
            "fit_hi" => self.fit_hi = Some(parse_num(k, v, l)?),
            "r" => self.r = parse_num(k, v, l)?,
            "control_exponent" => self.control_exponent = parse_num(k, v, l)?,
            "r_seq" => self.r_seq = parse_list(k, v, l)?,
            "v_seq" => self.v_seq = parse_list(k, v, l)?,
            "scale_lo" => self.scale_lo = parse_num(k, v, l)?,
            "scale_hi" => self.scale_hi = parse_num(k, v, l)?,
            "sample_file" => self.sample_file = Some(PathBuf::from(v)),
            "master_seed" => self.master_seed = parse_num(k, v, l)?,
            "workers" => self.workers = parse_num(k, v, l)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        self.origin.insert(key.to_string(), line);
        Ok(())
    }

    fn fail(&self, key: &str, msg: String) -> CliError {
        CliError::Config {
            key: key.to_string(),
            line: self.origin.get(key).copied().unwrap_or(0),
            msg,
        }
    }

    /// Whether `key` was given explicitly.
    pub fn is_set(&self, key: &str) -> bool {
        self.origin.contains_key(key)
    }

    /// Truncation speed of sampled windows.
    pub fn v0(&self) -> f64 {
        self.v0.unwrap_or(self.epsilon)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.d < 2 {
            return Err(self.fail("d", format!("need d >= 2, got {}", self.d)));
        }
        if !(self.gamma > self.d as f64) || !self.gamma.is_finite() {
            return Err(self.fail(
                "gamma",
                format!(
                    "need gamma > d, got gamma = {} with d = {}",
                    self.gamma, self.d
                ),
            ));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(self.fail(
                "epsilon",
                format!("epsilon must be positive, got {}", self.epsilon),
            ));
        }
        if !(self.v0() > 0.0) {
            return Err(self.fail("v0", format!("v0 must be positive, got {}", self.v0())));
        }
        if self.epsilon < self.v0() {
            return Err(self.fail(
                "epsilon",
                format!(
                    "need epsilon >= v0, got epsilon = {} with v0 = {}",
                    self.epsilon,
                    self.v0()
                ),
            ));
        }
        for (key, v) in [("x", &self.x), ("y", &self.y)] {
            if let Some(p) = v {
                if p.len() != self.d {
                    return Err(self.fail(
                        key,
                        format!("expected {} coordinates, got {}", self.d, p.len()),
                    ));
                }
            }
        }
        for (key, v) in [
            ("window_radius", self.window_radius),
            ("grid_half_width", self.grid_half_width),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(self.fail(key, format!("must be positive, got {v}")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.fit_lo, self.fit_hi) {
            if !(lo < hi) {
                return Err(self.fail("fit_hi", format!("need fit_lo < fit_hi, got {lo} and {hi}")));
            }
        }
        if !(self.epsilon_ratio > 0.0) {
            return Err(self.fail("epsilon_ratio", "must be positive".into()));
        }
        if self.hop_neighbors == 0 {
            return Err(self.fail("hop_neighbors", "must be at least 1".into()));
        }
        if !(self.kendall_alpha > 0.0 && self.kendall_alpha <= 1.0 / 3.0) {
            return Err(self.fail("kendall_alpha", "must lie in (0, 1/3]".into()));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(self.fail("r", format!("must lie in (0, 1], got {}", self.r)));
        }
        if self.scale_lo > self.scale_hi {
            return Err(self.fail("scale_hi", "need scale_lo <= scale_hi".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            hop_neighbors: self.hop_neighbors,
            refine_tol: self.refine_tol,
            refine_max_iters: self.refine_max_iters,
            candidate_depth: self.candidate_depth,
            ingest_recursive_junctions: self.ingest_recursive_junctions,
            kendall_alpha: self.kendall_alpha,
            kendall_depth: self.kendall_depth,
        }
    }

    /// Effective configuration with the derived exponents, one pair per key.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let opt = |v: Option<String>| v.unwrap_or_else(|| "default".into());
        let mut out: Vec<(String, String)> = vec![
            ("d".into(), self.d.to_string()),
            ("gamma".into(), self.gamma.to_string()),
            ("epsilon".into(), self.epsilon.to_string()),
            ("v0".into(), self.v0().to_string()),
            (
                "window_radius".into(),
                opt(self.window_radius.map(|v| v.to_string())),
            ),
            ("hop_neighbors".into(), self.hop_neighbors.to_string()),
            ("refine_tol".into(), self.refine_tol.to_string()),
            ("refine_max_iters".into(), self.refine_max_iters.to_string()),
            ("candidate_depth".into(), self.candidate_depth.to_string()),
            (
                "ingest_recursive_junctions".into(),
                self.ingest_recursive_junctions.to_string(),
            ),
            ("kendall_alpha".into(), self.kendall_alpha.to_string()),
            ("kendall_depth".into(), self.kendall_depth.to_string()),
            ("n_scales".into(), self.n_scales.to_string()),
            ("x".into(), opt(self.x.as_deref().map(list))),
            ("y".into(), opt(self.y.as_deref().map(list))),
            ("t_list".into(), opt(self.t_list.as_deref().map(list))),
            (
                "n_samples".into(),
                opt(self.n_samples.map(|v| v.to_string())),
            ),
            ("epsilon_ratio".into(), self.epsilon_ratio.to_string()),
            ("road_cap".into(), self.road_cap.to_string()),
            (
                "grid_half_width".into(),
                opt(self.grid_half_width.map(|v| v.to_string())),
            ),
            ("grid_n".into(), opt(self.grid_n.map(|v| v.to_string()))),
            ("on_road_radius".into(), self.on_road_radius.to_string()),
            ("fit_lo".into(), opt(self.fit_lo.map(|v| v.to_string()))),
            ("fit_hi".into(), opt(self.fit_hi.map(|v| v.to_string()))),
            ("r".into(), self.r.to_string()),
            ("control_exponent".into(), self.control_exponent.to_string()),
            ("r_seq".into(), list(&self.r_seq)),
            ("v_seq".into(), list(&self.v_seq)),
            ("scale_lo".into(), self.scale_lo.to_string()),
            ("scale_hi".into(), self.scale_hi.to_string()),
            (
                "sample_file".into(),
                opt(self.sample_file.as_ref().map(|p| p.display().to_string())),
            ),
            ("master_seed".into(), self.master_seed.to_string()),
            ("workers".into(), self.workers.to_string()),
            ("out_dir".into(), self.out_dir.display().to_string()),
        ];
        if let Ok(e) = exponents(self.d, self.gamma) {
            out.push(("sigma".into(), e.sigma.to_string()));
            out.push(("s_star".into(), e.s_star.to_string()));
            out.push(("s_lower".into(), e.s_lower.to_string()));
            out.push(("scale_exp".into(), e.scale_exp.to_string()));
        }
        out
    }
}
