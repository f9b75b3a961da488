//! Monte Carlo experiments on the road metric and their post-processing:
//! quick connections, ball volumes, scaling, multiscale bounds, mixing,
//! covering dimension and speed recovery.
//!
//! Every experiment draws sample `i` from `derive_seed(master_seed, i)` and
//! aggregates in task order, so results are reproducible from the master
//! seed and the configuration alone.

mod bounds;
mod correlation;
mod dimension;
mod qcp;
mod scaling;
mod speed;
mod volume;

use rayon::prelude::*;

pub use bounds::{multiscale_bound, multiscale_mc_check, MultiscaleReport};
pub use correlation::{correlation_decay, CorrelationConfig, CorrelationPoint};
pub use dimension::{box_dimension, covering_counts, fit_covering};
pub use qcp::{qcp_curve, QcpConfig, QcpPoint};
pub use scaling::{scaling_ks, ScalingConfig, ScalingOutcome};
pub use speed::{recover_speed, road_speed_at};
pub use volume::{
    on_road_point, theta_ratio, volume_curve, volume_curves, PointMode, SampleVolumes, ThetaPoint,
    VolumeConfig, VolumeCurve,
};

use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// Exponents attached to `(d, γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponents {
    /// Quick-connection exponent.
    pub sigma: f64,
    /// Ball-volume exponent at typical points, also the metric dimension.
    pub s_star: f64,
    /// Ball-volume exponent at points on roads.
    pub s_lower: f64,
    /// Time scaling exponent `(γ−d)/(γ−1)`.
    pub scale_exp: f64,
}

pub fn exponents(d: usize, gamma: f64) -> Result<Exponents> {
    let df = d as f64;
    if d < 2 || !(gamma > df) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need gamma > d >= 2, got d = {d}, gamma = {gamma}"
        )));
    }
    let gap = gamma - df;
    let s_star = (gamma - 1.0) * df / gap;
    Ok(Exponents {
        sigma: (gamma - 1.0) * (df + gamma - 2.0) / gap,
        s_star,
        s_lower: s_star - (df - 1.0) / gap,
        scale_exp: gap / (gamma - 1.0),
    })
}

/// One point of an estimated curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Log-log least-squares fit `log value = slope·log t + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

/// Fits the points with `t` inside `window` and positive value.
pub fn fit_exponent(points: &[CurvePoint], window: (f64, f64)) -> Result<ExponentFit> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument(format!(
            "fit window must satisfy lo < hi, got {window:?}"
        )));
    }
    let used: Vec<&CurvePoint> = points
        .iter()
        .filter(|p| p.t >= window.0 && p.t <= window.1 && p.value > 0.0 && p.t > 0.0)
        .collect();
    if used.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 positive points in the fit window, found {}",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.t.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.value.ln()).collect();
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::InvalidArgument("fit abscissas are all equal".into()));
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        window,
        n_points: used.len(),
    })
}

/// Hop speed as a function of the time scale of an experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonRule {
    Fixed(f64),
    /// `ε = t / c`.
    Proportional(f64),
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::Proportional(50.0)
    }
}

impl EpsilonRule {
    pub fn epsilon(&self, t: f64) -> f64 {
        match *self {
            EpsilonRule::Fixed(e) => e,
            EpsilonRule::Proportional(c) => t / c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EpsilonRule::Fixed(e) => e > 0.0 && e.is_finite(),
            EpsilonRule::Proportional(c) => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid epsilon rule {self:?}"
            )))
        }
    }
}

/// Runs `n` independent tasks, results in task order.
pub(crate) fn run_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// One value of a report row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

/// Tabular experiment output with its effective configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Vec<(String, String)>,
    /// Git blob hash of the code version string.
    pub code_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, config: Vec<(String, String)>, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.to_string(),
            config,
            code_hash: content_hash(code_version()),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn code_version() -> &'static str {
    concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"))
}

/// SHA-1 of `"blob <len>\0<text>"`, as git hashes file contents.
pub fn content_hash(text: &str) -> String {
    use sha1::{Digest, Sha1};
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests;
