use super::run_tasks;
use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::metric::{t_eps_upper, SolverConfig};
use crate::sampler::{derive_seed, sample_process, WindowSpec};
use crate::stats::{ks_two_sample, KsResult};

/// Scaling-law experiment comparing `T_ε(0, r·e_d)` with `T_ε(0, e_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingConfig {
    pub d: usize,
    pub gamma: f64,
    pub r: f64,
    /// Samples per ensemble.
    pub n: usize,
    /// Hop speed at unit scale; at scale `r` it is `r^{(d−1)/(γ−1)}` times this.
    pub epsilon: f64,
    /// Window radius at unit scale, centred at `e_d / 2`; scaled by `r`.
    pub window_radius: f64,
    /// Time exponent of the negative control, `r^{-control_exponent}`.
    pub control_exponent: f64,
    pub solver: SolverConfig,
    pub master_seed: u64,
}

impl ScalingConfig {
    pub fn new(d: usize, gamma: f64, r: f64, n: usize, master_seed: u64) -> Self {
        ScalingConfig {
            d,
            gamma,
            r,
            n,
            epsilon: 0.2,
            window_radius: 2.5,
            control_exponent: 1.0,
            solver: SolverConfig::new(0.2),
            master_seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingOutcome {
    /// Unit-scale times.
    pub unit: Vec<f64>,
    /// Times at scale `r`, before rescaling.
    pub scaled: Vec<f64>,
    /// KS test of the unit times against the scaled times times `r^{-(γ−d)/(γ−1)}`.
    pub ks: KsResult,
    /// Same test with the control exponent.
    pub control: KsResult,
}

fn ensemble(config: &ScalingConfig, scale: f64, offset: u64) -> Result<Vec<f64>> {
    let d = config.d;
    let e = Vector::basis(d, d - 1);
    let speed_scale = scale.powf((d as f64 - 1.0) / (config.gamma - 1.0));
    let eps = config.epsilon * speed_scale;
    let window = WindowSpec::new(
        d,
        config.gamma,
        &e * (0.5 * scale),
        config.window_radius * scale,
        eps,
    )?;
    let mut solver = config.solver.clone();
    solver.epsilon = eps;
    let (x, y) = (Vector::zeros(d), &e * scale);
    run_tasks(config.n, |i| {
        let s = sample_process(derive_seed(config.master_seed, offset + i as u64), &window)?;
        Ok(t_eps_upper(&s, &x, &y, &solver)?.time)
    })
    .into_iter()
    .collect()
}

/// Two-sample KS test of the scaling law on independent ensembles.
pub fn scaling_ks(config: &ScalingConfig) -> Result<ScalingOutcome> {
    if !(config.r > 0.0 && config.r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "r must lie in (0, 1], got {}",
            config.r
        )));
    }
    if config.n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let unit = ensemble(config, 1.0, 0)?;
    let scaled = ensemble(config, config.r, config.n as u64)?;
    let expo = (config.gamma - config.d as f64) / (config.gamma - 1.0);
    let right: Vec<f64> = scaled.iter().map(|t| t * config.r.powf(-expo)).collect();
    let wrong: Vec<f64> = scaled
        .iter()
        .map(|t| t * config.r.powf(-config.control_exponent))
        .collect();
    Ok(ScalingOutcome {
        ks: ks_two_sample(&unit, &right)?,
        control: ks_two_sample(&unit, &wrong)?,
        unit,
        scaled,
    })
}
