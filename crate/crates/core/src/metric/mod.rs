//! The ε-approximation metric: ε-paths travel along roads at their speed
//! limits and hop between roads in straight lines at speed ε.

mod certificate;
mod field;
mod graph;
mod kendall;
mod knn;
mod oracle;
mod refine;

use std::io::Write;

pub use certificate::{lower_certificate, lower_certificate_exact, lower_certificate_split};
pub(crate) use certificate::{split_bound, ExitProfile};
pub use field::{
    ball_volume, distance_field, BallVolume, DistanceField, FieldEngine, GridSpec, LineIndex,
    SourceMap,
};
pub use graph::{Edge, EdgeKind, Ingest, Node, NodeTag, ShortestPaths, TransferGraph};
pub use kendall::{kendall_recursive_upper, KendallPath};
pub use oracle::grid_oracle;
pub use refine::refine_path;

use crate::error::{check_dim, Error, Result};
use crate::geom::Vector;
use crate::sampler::ProcessSample;

/// Parameters of the ε-metric solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Hop edges from each node to this many nearest nodes on other roads.
    pub hop_neighbors: usize,
    /// Absolute time tolerance of path refinement.
    pub refine_tol: f64,
    pub refine_max_iters: usize,
    /// Extra dyadic candidates on each side of every base candidate.
    pub candidate_depth: usize,
    /// Splice the recursive construction's path into the graph before solving.
    pub ingest_recursive_junctions: bool,
    pub kendall_alpha: f64,
    pub kendall_depth: usize,
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            hop_neighbors: 16,
            refine_tol: 1e-10,
            refine_max_iters: 200,
            candidate_depth: 2,
            ingest_recursive_junctions: false,
            kendall_alpha: 0.25,
            kendall_depth: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.hop_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "hop_neighbors must be at least 1".into(),
            ));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidConfig("refine_tol must be positive".into()));
        }
        if !(self.kendall_alpha > 0.0 && self.kendall_alpha <= 1.0 / 3.0) {
            return Err(Error::InvalidConfig(format!(
                "kendall_alpha must lie in (0, 1/3], got {}",
                self.kendall_alpha
            )));
        }
        Ok(())
    }

    /// Rejects hop speeds below the sample's truncation speed.
    pub fn check_sample(&self, sample: &ProcessSample) -> Result<()> {
        check_epsilon(sample, self.epsilon)
    }
}

pub(crate) fn check_epsilon(sample: &ProcessSample, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if epsilon < sample.window.v0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon {epsilon} is below the sample truncation speed v0 = {}",
            sample.window.v0
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegMode {
    Road(usize),
    Hop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathLeg {
    pub from: Vector,
    pub to: Vector,
    pub mode: LegMode,
    pub duration: f64,
}

/// An ε-path with per-leg timing.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSolution {
    pub legs: Vec<PathLeg>,
    pub total_time: f64,
}

impl PathSolution {
    pub fn empty() -> Self {
        PathSolution {
            legs: Vec::new(),
            total_time: 0.0,
        }
    }

    pub fn from_legs(legs: Vec<PathLeg>) -> Self {
        let total_time = legs.iter().map(|l| l.duration).sum();
        PathSolution { legs, total_time }
    }

    /// Road indices in travel order.
    pub fn road_sequence(&self) -> Vec<usize> {
        self.legs
            .iter()
            .filter_map(|l| match l.mode {
                LegMode::Road(r) => Some(r),
                LegMode::Hop => None,
            })
            .collect()
    }

    /// Reversed path; durations are unchanged.
    pub fn reversed(&self) -> PathSolution {
        let legs = self
            .legs
            .iter()
            .rev()
            .map(|l| PathLeg {
                from: l.to.clone(),
                to: l.from.clone(),
                mode: l.mode,
                duration: l.duration,
            })
            .collect();
        PathSolution {
            legs,
            total_time: self.total_time,
        }
    }

    /// Checks the structural invariants against the sample.
    pub fn validate(&self, sample: &ProcessSample, epsilon: f64) -> Result<()> {
        let sum: f64 = self.legs.iter().map(|l| l.duration).sum();
        if (sum - self.total_time).abs() > 1e-12 * self.total_time.abs().max(1e-300) {
            return Err(Error::InvalidArgument(format!(
                "total time {} differs from leg sum {sum}",
                self.total_time
            )));
        }
        for w in self.legs.windows(2) {
            let gap = w[0].to.distance(&w[1].from);
            if gap > 1e-9 * (1.0 + w[0].to.norm()) {
                return Err(Error::InvalidArgument(format!(
                    "legs do not chain (gap {gap})"
                )));
            }
        }
        for leg in &self.legs {
            let len = leg.from.distance(&leg.to);
            let speed = match leg.mode {
                LegMode::Road(r) => {
                    let road = sample.roads.get(r).ok_or_else(|| {
                        Error::InvalidArgument(format!("road index {r} out of range"))
                    })?;
                    for p in [&leg.from, &leg.to] {
                        let off = road.line.distance_to(p);
                        if off > 1e-9 * (1.0 + p.norm()) {
                            return Err(Error::InvalidArgument(format!(
                                "road leg endpoint {off} off road {r}"
                            )));
                        }
                    }
                    road.speed
                }
                LegMode::Hop => epsilon,
            };
            if leg.duration < len / speed * (1.0 - 1e-9) - 1e-15 {
                return Err(Error::InvalidArgument(
                    "leg faster than its speed limit".into(),
                ));
            }
        }
        Ok(())
    }

    /// One line per leg: mode, from coordinates, to coordinates, duration.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for leg in &self.legs {
            match leg.mode {
                LegMode::Road(r) => write!(out, "road:{r}")?,
                LegMode::Hop => write!(out, "hop")?,
            }
            for c in leg.from.coords().iter().chain(leg.to.coords()) {
                write!(out, " {c:.16e}")?;
            }
            writeln!(out, " {:.16e}", leg.duration)?;
        }
        Ok(())
    }
}

/// Result of [`t_eps_upper`].
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBound {
    /// Duration of the returned path; at least the true ε-distance.
    pub time: f64,
    pub path: PathSolution,
    /// Shortest-path time in the transfer graph before refinement.
    pub graph_time: f64,
    /// Some path point lies beyond 0.8 of the window radius.
    pub window_suspect: bool,
}

/// Upper bound on the ε-distance from `x` to `y`: transfer-graph shortest
/// path improved by refinement on its road sequence.
pub fn t_eps_upper(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    config: &SolverConfig,
) -> Result<UpperBound> {
    config.validate()?;
    config.check_sample(sample)?;
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    if x == y {
        return Ok(UpperBound {
            time: 0.0,
            path: PathSolution::empty(),
            graph_time: 0.0,
            window_suspect: false,
        });
    }
    // Solve in a canonical orientation so the result is exactly symmetric.
    let flip = y.coords() < x.coords();
    let (a, b) = if flip { (y, x) } else { (x, y) };
    let ingest = if config.ingest_recursive_junctions {
        let k = kendall_recursive_upper(
            sample,
            a,
            b,
            config.kendall_alpha,
            config.kendall_depth,
            config.epsilon,
        )?;
        Ingest {
            paths: vec![k.legs],
        }
    } else {
        Ingest::default()
    };
    let graph = TransferGraph::build(sample, &[a.clone(), b.clone()], config, &ingest)?;
    let mut result = solve_on_graph(sample, &graph, a, b, config)?;
    if flip {
        result.path = result.path.reversed();
    }
    Ok(result)
}

/// Shortest path between the graph's first two terminals followed by
/// refinement.
pub(crate) fn solve_on_graph(
    sample: &ProcessSample,
    graph: &TransferGraph,
    x: &Vector,
    y: &Vector,
    config: &SolverConfig,
) -> Result<UpperBound> {
    let eps = config.epsilon;
    let (src, dst) = (graph.terminals[0], graph.terminals[1]);
    let sp = graph.shortest_paths(src, eps);
    let graph_time = sp.dist[dst];
    let nodes = sp
        .node_path(dst)
        .ok_or_else(|| Error::InvalidArgument("terminals are disconnected".into()))?;
    let legs = graph.legs_of(&nodes, eps);
    let seq = refine::initial_sequence(sample, &legs);
    let path = refine::refine_from(
        sample,
        &seq,
        x,
        y,
        eps,
        config.refine_tol,
        config.refine_max_iters,
    );
    let path = if path.total_time <= graph_time {
        path
    } else {
        PathSolution::from_legs(legs)
    };
    let window = &sample.window;
    let limit = 0.8 * window.radius;
    let window_suspect = path
        .legs
        .iter()
        .any(|l| l.from.distance(&window.center) > limit || l.to.distance(&window.center) > limit);
    Ok(UpperBound {
        time: path.total_time,
        path,
        graph_time,
        window_suspect,
    })
}

#[cfg(test)]
mod tests;
