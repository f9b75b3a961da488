use super::check_epsilon;
use crate::error::{check_dim, Error, Result};
use crate::geom::Vector;
use crate::sampler::{fastest_in_ball, ProcessSample};

/// Largest radius around `z` whose ball stays inside the sampling window.
fn window_reach(sample: &ProcessSample, z: &Vector) -> f64 {
    let w = &sample.window;
    (w.radius - w.center.distance(z)) * (1.0 + 1e-12)
}

/// Lower bound on the ε-distance: any path leaving `B̄(z, r)` spends time at
/// least `r / max(ε, V)` inside it, `V` being the fastest speed meeting the
/// ball. Maximized over `r = |x−y|·2^{-j}`, `j < n_scales`, and `z ∈ {x, y}`;
/// radii whose ball leaves the window are skipped.
pub fn lower_certificate(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    epsilon: f64,
    n_scales: usize,
) -> Result<f64> {
    check_epsilon(sample, epsilon)?;
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    if n_scales == 0 {
        return Err(Error::InvalidArgument("n_scales must be at least 1".into()));
    }
    let dist = x.distance(y);
    let mut best = 0.0f64;
    for z in [x, y] {
        let reach = window_reach(sample, z);
        let mut r = dist;
        for _ in 0..n_scales {
            if r <= reach && r > 0.0 {
                let v = fastest_in_ball(sample, z, r)?.speed;
                best = best.max(r / epsilon.max(v));
            }
            r *= 0.5;
        }
    }
    Ok(best)
}

/// Same bound with the supremum over all radii in `(0, |x−y|]`, attained
/// just inside the distance of some road from `z`.
pub fn lower_certificate_exact(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    epsilon: f64,
) -> Result<f64> {
    check_epsilon(sample, epsilon)?;
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    let dist = x.distance(y);
    let mut best = 0.0f64;
    let mut roads: Vec<(f64, f64)> = Vec::with_capacity(sample.count());
    for z in [x, y] {
        let limit = dist.min(window_reach(sample, z));
        if limit <= 0.0 {
            continue;
        }
        roads.clear();
        roads.extend(
            sample
                .roads
                .iter()
                .map(|r| (r.line.distance_to(z), r.speed)),
        );
        roads.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut v = 0.0f64;
        for &(d, speed) in &roads {
            if d > limit {
                break;
            }
            if d > 0.0 {
                best = best.max(d / epsilon.max(v));
            }
            v = v.max(speed);
        }
        best = best.max(limit / epsilon.max(v));
    }
    Ok(best)
}

/// Ball-exit bound around one point: `f(r) = r / max(ε, V_r)` where `V_r` is
/// the fastest speed meeting `B̄(z, r)`, never taken below `floor`.
pub(crate) struct ExitProfile {
    /// Radii at which the fastest speed jumps, with the speed just before.
    jumps: Vec<(f64, f64)>,
    /// Running maximum of the bound just before each jump.
    prefix: Vec<f64>,
    /// Speed reached after each jump.
    after: Vec<f64>,
    eps: f64,
    floor: f64,
}

impl ExitProfile {
    pub(crate) fn new<'a, I>(roads: I, z: &Vector, eps: f64, floor: f64) -> Self
    where
        I: Iterator<Item = &'a crate::sampler::Road>,
    {
        let mut by_dist: Vec<(f64, f64)> =
            roads.map(|r| (r.line.distance_to(z), r.speed)).collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut jumps = Vec::new();
        let mut prefix = Vec::new();
        let mut after = Vec::new();
        let mut v = floor;
        let mut best = 0.0f64;
        for (d, speed) in by_dist {
            if speed > v {
                best = best.max(d / eps.max(v));
                jumps.push((d, v));
                prefix.push(best);
                v = speed;
                after.push(v);
            }
        }
        ExitProfile {
            jumps,
            prefix,
            after,
            eps,
            floor,
        }
    }

    fn speed_at(&self, r: f64) -> f64 {
        let k = self.jumps.partition_point(|&(d, _)| d <= r);
        if k == 0 {
            self.floor
        } else {
            self.after[k - 1]
        }
    }

    /// Bound at radius `r` exactly.
    pub(crate) fn at(&self, r: f64) -> f64 {
        r / self.eps.max(self.speed_at(r))
    }

    /// Supremum of the bound over radii in `(0, a]`.
    pub(crate) fn sup_upto(&self, a: f64) -> f64 {
        let k = self.jumps.partition_point(|&(d, _)| d <= a);
        let before = if k == 0 { 0.0 } else { self.prefix[k - 1] };
        before.max(self.at(a))
    }

    /// Radii where the bound has a local supremum, within `(0, a]`.
    pub(crate) fn peaks(&self, a: f64) -> impl Iterator<Item = f64> + '_ {
        self.jumps
            .iter()
            .map(|&(d, _)| d * (1.0 - 1e-12))
            .filter(move |&d| d > 0.0 && d <= a)
            .chain(std::iter::once(a))
    }
}

/// Combined exit bound for two disjoint balls around `x` and `y` with radii
/// summing to at most `|x−y|`: a path spends `f_x(r) + f_y(s)` inside them.
pub(crate) fn split_bound(px: &ExitProfile, py: &ExitProfile, dist: f64, reach: (f64, f64)) -> f64 {
    let (rx, ry) = (reach.0.min(dist), reach.1.min(dist));
    let mut best = 0.0f64;
    if rx > 0.0 {
        for r in px.peaks(rx) {
            let rest = (dist - r).min(ry);
            let other = if rest > 0.0 { py.sup_upto(rest) } else { 0.0 };
            best = best.max(px.at(r) + other);
        }
    }
    if ry > 0.0 {
        for s in py.peaks(ry) {
            let rest = (dist - s).min(rx);
            let other = if rest > 0.0 { px.sup_upto(rest) } else { 0.0 };
            best = best.max(py.at(s) + other);
        }
    }
    best
}

/// Lower bound on the ε-distance from the time spent inside two disjoint
/// balls around the endpoints; at least [`lower_certificate_exact`].
pub fn lower_certificate_split(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    epsilon: f64,
) -> Result<f64> {
    check_epsilon(sample, epsilon)?;
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    let px = ExitProfile::new(sample.roads.iter(), x, epsilon, 0.0);
    let py = ExitProfile::new(sample.roads.iter(), y, epsilon, 0.0);
    let reach = (window_reach(sample, x), window_reach(sample, y));
    Ok(split_bound(&px, &py, x.distance(y), reach))
}
