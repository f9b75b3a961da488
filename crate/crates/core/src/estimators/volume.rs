use super::{exponents, run_tasks, CurvePoint};
use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::metric::{ball_volume, FieldEngine, GridSpec, SolverConfig};
use crate::sampler::{derive_seed, sample_process, ProcessSample, WindowSpec};
use crate::stats::{mean, std_error};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointMode {
    /// The window centre.
    Typical,
    /// A point on a fast road near the centre.
    OnRoad,
}

/// Ball-volume experiment on planar samples with a fixed hop speed.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeConfig {
    pub gamma: f64,
    pub t_list: Vec<f64>,
    pub n_samples: usize,
    pub epsilon: f64,
    /// Sampling window radius, centred at the origin.
    pub window_radius: f64,
    /// Square grid of side `2·grid_half_width` centred at the chosen point.
    pub grid_half_width: f64,
    pub grid_n: usize,
    /// On-road points come from the fastest road meeting this ball around
    /// the centre.
    pub on_road_radius: f64,
    pub solver: SolverConfig,
    pub master_seed: u64,
}

impl VolumeConfig {
    pub fn new(
        gamma: f64,
        t_list: Vec<f64>,
        n_samples: usize,
        epsilon: f64,
        master_seed: u64,
    ) -> Self {
        VolumeConfig {
            gamma,
            t_list,
            n_samples,
            epsilon,
            window_radius: 4.0,
            grid_half_width: 2.0,
            grid_n: 256,
            on_road_radius: 0.5,
            solver: SolverConfig::new(epsilon),
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_list.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::InvalidArgument("radii must be nonnegative".into()));
        }
        if self.grid_n == 0 || !(self.grid_half_width > 0.0) {
            return Err(Error::InvalidConfig("grid must be nonempty".into()));
        }
        if !(self.on_road_radius > 0.0) {
            return Err(Error::InvalidConfig(
                "on_road_radius must be positive".into(),
            ));
        }
        Ok(())
    }

    fn window(&self) -> Result<WindowSpec> {
        WindowSpec::centered(2, self.gamma, self.window_radius, self.epsilon)
    }
}

/// Per-sample volumes at the configured radii.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVolumes {
    pub index: usize,
    pub point: Vector,
    /// Speed of the road through the point; 0 for typical points.
    pub speed: f64,
    /// `None` where the ball touches the grid boundary.
    pub volumes: Vec<Option<f64>>,
}

/// Mean volumes over the samples whose balls stay inside the grid at every
/// radius, so all points average the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeCurve {
    pub mode: PointMode,
    pub points: Vec<CurvePoint>,
    /// Samples whose ball reaches the grid boundary, per radius.
    pub contaminated: Vec<usize>,
    /// Samples left out of every point because some radius is contaminated.
    pub dropped: usize,
    /// Samples without a usable road in on-road mode.
    pub skipped: usize,
    /// Largest radius at which the all-hop area `π(εt)²` exceeds a tenth of
    /// the mean volume; fits should sit above it.
    pub crossover: f64,
    pub samples: Vec<SampleVolumes>,
}

/// Projection of the centre onto the fastest road meeting `B̄(0, radius)`.
pub fn on_road_point(sample: &ProcessSample, radius: f64) -> Option<(Vector, f64)> {
    let c = &sample.window.center;
    sample
        .roads
        .iter()
        .filter(|r| r.line.distance_to(c) <= radius && r.speed > 0.0)
        .max_by(|a, b| a.speed.total_cmp(&b.speed))
        .map(|r| (r.line.project(c), r.speed))
}

fn sample_volumes(
    config: &VolumeConfig,
    sample: &ProcessSample,
    engine: &FieldEngine,
    mode: PointMode,
    index: usize,
) -> Result<Option<SampleVolumes>> {
    let (point, speed) = match mode {
        PointMode::Typical => (sample.window.center.clone(), 0.0),
        PointMode::OnRoad => match on_road_point(sample, config.on_road_radius) {
            Some(p) if p.1 > config.epsilon => p,
            _ => return Ok(None),
        },
    };
    let grid = GridSpec::centered([point[0], point[1]], config.grid_half_width, config.grid_n)?;
    let reach = config.t_list.iter().copied().fold(0.0, f64::max);
    let field = engine.field_within(&point, &grid, reach.max(f64::MIN_POSITIVE))?;
    let mut volumes = Vec::with_capacity(config.t_list.len());
    for &t in &config.t_list {
        let b = ball_volume(&field, t)?;
        volumes.push((!b.boundary_contaminated).then_some(b.volume));
    }
    Ok(Some(SampleVolumes {
        index,
        point,
        speed,
        volumes,
    }))
}

fn summarize(
    config: &VolumeConfig,
    mode: PointMode,
    samples: Vec<Option<SampleVolumes>>,
) -> VolumeCurve {
    let skipped = samples.iter().filter(|s| s.is_none()).count();
    let samples: Vec<SampleVolumes> = samples.into_iter().flatten().collect();
    let complete: Vec<&SampleVolumes> = samples
        .iter()
        .filter(|s| s.volumes.iter().all(Option::is_some))
        .collect();
    let mut points = Vec::with_capacity(config.t_list.len());
    let mut contaminated = Vec::with_capacity(config.t_list.len());
    let mut crossover = 0.0f64;
    for (k, &t) in config.t_list.iter().enumerate() {
        contaminated.push(samples.iter().filter(|s| s.volumes[k].is_none()).count());
        let vals: Vec<f64> = complete.iter().filter_map(|s| s.volumes[k]).collect();
        let (m, se) = if vals.is_empty() {
            (0.0, 0.0)
        } else {
            (mean(&vals), std_error(&vals))
        };
        let hop_area = std::f64::consts::PI * (config.epsilon * t).powi(2);
        if m > 0.0 && hop_area > 0.1 * m {
            crossover = crossover.max(t);
        }
        points.push(CurvePoint {
            t,
            value: m,
            stderr: se,
            n: vals.len(),
        });
    }
    VolumeCurve {
        mode,
        points,
        contaminated,
        dropped: samples.len() - complete.len(),
        skipped,
        crossover,
        samples,
    }
}

/// Volumes of ε-balls at both point classes on the same samples.
pub fn volume_curves(config: &VolumeConfig) -> Result<(VolumeCurve, VolumeCurve)> {
    config.validate()?;
    let window = config.window()?;
    let mut solver = config.solver.clone();
    solver.epsilon = config.epsilon;
    let per = run_tasks(config.n_samples, |i| -> Result<_> {
        let sample = sample_process(derive_seed(config.master_seed, i as u64), &window)?;
        let engine = FieldEngine::new(&sample, &solver)?;
        Ok((
            sample_volumes(config, &sample, &engine, PointMode::Typical, i)?,
            sample_volumes(config, &sample, &engine, PointMode::OnRoad, i)?,
        ))
    });
    let (mut typ, mut road) = (Vec::new(), Vec::new());
    for p in per {
        let (a, b) = p?;
        typ.push(a);
        road.push(b);
    }
    Ok((
        summarize(config, PointMode::Typical, typ),
        summarize(config, PointMode::OnRoad, road),
    ))
}

/// Mean volume of ε-balls of each radius around points of one class.
pub fn volume_curve(config: &VolumeConfig, mode: PointMode) -> Result<VolumeCurve> {
    config.validate()?;
    let window = config.window()?;
    let mut solver = config.solver.clone();
    solver.epsilon = config.epsilon;
    let per = run_tasks(config.n_samples, |i| -> Result<_> {
        let sample = sample_process(derive_seed(config.master_seed, i as u64), &window)?;
        let engine = FieldEngine::new(&sample, &solver)?;
        sample_volumes(config, &sample, &engine, mode, i)
    });
    let samples = per.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(summarize(config, mode, samples))
}

/// Summary of `λ(ball) / (V(X)·t^{s_*})` over on-road samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaPoint {
    pub t: f64,
    pub mean: f64,
    pub cv: f64,
    pub n: usize,
}

/// Ratio statistics from an on-road volume curve.
pub fn theta_ratio(curve: &VolumeCurve, gamma: f64) -> Result<Vec<ThetaPoint>> {
    if curve.mode != PointMode::OnRoad {
        return Err(Error::InvalidArgument("ratio needs on-road volumes".into()));
    }
    let s_lower = exponents(2, gamma)?.s_lower;
    let mut out = Vec::with_capacity(curve.points.len());
    for (k, p) in curve.points.iter().enumerate() {
        let ratios: Vec<f64> = curve
            .samples
            .iter()
            .filter_map(|s| s.volumes[k].map(|v| v / (s.speed * p.t.powf(s_lower))))
            .filter(|r| r.is_finite())
            .collect();
        let (m, cv) = if ratios.len() < 2 {
            (ratios.first().copied().unwrap_or(0.0), 0.0)
        } else {
            let m = mean(&ratios);
            (m, crate::stats::variance(&ratios).sqrt() / m)
        };
        out.push(ThetaPoint {
            t: p.t,
            mean: m,
            cv,
            n: ratios.len(),
        });
    }
    Ok(out)
}
