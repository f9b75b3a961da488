use super::{check_epsilon, LegMode, PathLeg};
use crate::error::{check_dim, Error, Result};
use crate::geom::Vector;
use crate::sampler::{fastest_two_ball_road, ProcessSample};

/// Path produced by the recursive fastest-road construction.
#[derive(Clone, Debug, PartialEq)]
pub struct KendallPath {
    pub time: f64,
    /// Road entry and exit points in travel order.
    pub junctions: Vec<Vector>,
    pub legs: Vec<PathLeg>,
}

/// Recursive binary-tree construction: join each pending pair through the
/// fastest road meeting both α-balls, then recurse on the two flanks.
pub fn kendall_recursive_upper(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    alpha: f64,
    max_depth: usize,
    epsilon: f64,
) -> Result<KendallPath> {
    if !(alpha > 0.0 && alpha <= 1.0 / 3.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1/3], got {alpha}"
        )));
    }
    check_epsilon(sample, epsilon)?;
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    let mut legs = Vec::new();
    recurse(sample, x, y, alpha, max_depth, epsilon, &mut legs)?;
    let mut junctions = Vec::new();
    for leg in &legs {
        if let LegMode::Road(_) = leg.mode {
            junctions.push(leg.from.clone());
            junctions.push(leg.to.clone());
        }
    }
    let time = legs.iter().map(|l| l.duration).sum();
    Ok(KendallPath {
        time,
        junctions,
        legs,
    })
}

fn hop(from: &Vector, to: &Vector, epsilon: f64, legs: &mut Vec<PathLeg>) {
    if from != to {
        legs.push(PathLeg {
            from: from.clone(),
            to: to.clone(),
            mode: LegMode::Hop,
            duration: from.distance(to) / epsilon,
        });
    }
}

fn recurse(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    alpha: f64,
    depth: usize,
    epsilon: f64,
    legs: &mut Vec<PathLeg>,
) -> Result<()> {
    let dist = x.distance(y);
    if dist == 0.0 {
        return Ok(());
    }
    if depth == 0 {
        hop(x, y, epsilon, legs);
        return Ok(());
    }
    let r = alpha * dist;
    let (road, _) = fastest_two_ball_road(sample, x, r, y, r)?;
    let Some(idx) = road else {
        hop(x, y, epsilon, legs);
        return Ok(());
    };
    let line = &sample.roads[idx].line;
    let (p, q) = (line.project(x), line.project(y));
    recurse(sample, x, &p, alpha, depth - 1, epsilon, legs)?;
    let len = p.distance(&q);
    if len > 0.0 {
        let speed = sample.roads[idx].speed;
        if speed > epsilon {
            legs.push(PathLeg {
                from: p.clone(),
                to: q.clone(),
                mode: LegMode::Road(idx),
                duration: len / speed,
            });
        } else {
            hop(&p, &q, epsilon, legs);
        }
    }
    recurse(sample, &q, y, alpha, depth - 1, epsilon, legs)
}
