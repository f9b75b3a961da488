use crate::error::{check_dim, Error, Result};
use crate::geom::Vector;
use crate::metric::{t_eps_upper, SolverConfig};
use crate::sampler::ProcessSample;

/// Fastest road passing within `tol` of `x`: (index, speed).
pub fn road_speed_at(sample: &ProcessSample, x: &Vector, tol: f64) -> Option<(usize, f64)> {
    sample
        .roads
        .iter()
        .enumerate()
        .filter(|(_, r)| r.line.distance_to(x) <= tol)
        .max_by(|a, b| a.1.speed.total_cmp(&b.1.speed))
        .map(|(i, r)| (i, r.speed))
}

/// Estimate of `1/V(x)` for `x` on a road: the smallest quotient
/// `T_ε(x, x ± h·u)/h` over `h`, `u` the direction of the fastest road
/// through `x`.
pub fn recover_speed(
    sample: &ProcessSample,
    x: &Vector,
    h_list: &[f64],
    epsilon: f64,
) -> Result<f64> {
    check_dim(sample.dim(), x.dim())?;
    if h_list.is_empty() || h_list.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidArgument(
            "offsets must be positive and nonempty".into(),
        ));
    }
    let (road, _) = road_speed_at(sample, x, 1e-9)
        .ok_or_else(|| Error::InvalidArgument("point does not lie on a sampled road".into()))?;
    let dir = sample.roads[road].line.direction().clone();
    let config = SolverConfig::new(epsilon);
    let mut best = f64::INFINITY;
    for &h in h_list {
        for sign in [1.0, -1.0] {
            let y = x.offset(&dir, sign * h);
            best = best.min(t_eps_upper(sample, x, &y, &config)?.time / h);
        }
    }
    Ok(best)
}
