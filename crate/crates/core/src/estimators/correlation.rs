use super::run_tasks;
use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::sampler::{derive_seed, sample_process, ProcessSample, WindowSpec};
use crate::stats::correlation;

/// Correlation of the indicator `V^x_radius ≥ threshold` between two points.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationConfig {
    pub d: usize,
    pub gamma: f64,
    pub radius: f64,
    pub threshold: f64,
    pub separations: Vec<f64>,
    pub n_samples: usize,
    /// Evaluate the second point on an independently seeded sample.
    pub independent: bool,
    pub master_seed: u64,
}

impl CorrelationConfig {
    pub fn new(
        d: usize,
        gamma: f64,
        separations: Vec<f64>,
        n_samples: usize,
        master_seed: u64,
    ) -> Self {
        CorrelationConfig {
            d,
            gamma,
            radius: 1.0,
            threshold: 1.0,
            separations,
            n_samples,
            independent: false,
            master_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationPoint {
    pub separation: f64,
    pub correlation: f64,
    /// Standard error under independence, `1/√n`.
    pub stderr: f64,
    pub n: usize,
}

fn indicator(sample: &ProcessSample, x: &Vector, radius: f64, threshold: f64) -> f64 {
    let hit = sample
        .roads
        .iter()
        .any(|r| r.speed >= threshold && r.line.distance_to(x) <= radius);
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Empirical correlation of the statistic at `0` and at `s·e_1`, per `s`.
/// The window holds exactly the roads that can affect either indicator.
pub fn correlation_decay(config: &CorrelationConfig) -> Result<Vec<CorrelationPoint>> {
    if config.n_samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if let Some(s) = config
        .separations
        .iter()
        .find(|&&s| !(s >= 0.0 && s.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "separation must be nonnegative, got {s}"
        )));
    }
    let d = config.d;
    let e = Vector::basis(d, 0);
    let origin = Vector::zeros(d);
    let n = config.n_samples;
    let mut out = Vec::with_capacity(config.separations.len());
    for (k, &s) in config.separations.iter().enumerate() {
        let window = WindowSpec::new(
            d,
            config.gamma,
            &e * (0.5 * s),
            0.5 * s + config.radius,
            config.threshold,
        )?;
        let far = &e * s;
        let base = (k as u64) << 40;
        let pairs = run_tasks(n, |i| -> Result<(f64, f64)> {
            let seed = derive_seed(config.master_seed, base + 2 * i as u64);
            let a = sample_process(seed, &window)?;
            let b = if config.independent {
                sample_process(
                    derive_seed(config.master_seed, base + 2 * i as u64 + 1),
                    &window,
                )?
            } else {
                a.clone()
            };
            Ok((
                indicator(&a, &origin, config.radius, config.threshold),
                indicator(&b, &far, config.radius, config.threshold),
            ))
        });
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for p in pairs {
            let (a, b) = p?;
            xs.push(a);
            ys.push(b);
        }
        out.push(CorrelationPoint {
            separation: s,
            correlation: correlation(&xs, &ys),
            stderr: 1.0 / (n as f64).sqrt(),
            n,
        });
    }
    Ok(out)
}
