use rayon::prelude::*;

use super::{Ingest, SolverConfig, TransferGraph};
use crate::error::{check_dim, Error, Result};
use crate::geom::{Line, Vector};
use crate::sampler::ProcessSample;

/// Axis-aligned pixel grid in the plane; pixel `(i, j)` covers
/// `[lower + (i, j)·h, lower + (i+1, j+1)·h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(lower: [f64; 2], upper: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        let g = GridSpec {
            lower,
            upper,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid of side `2·half_width` centred at `c`.
    pub fn centered(c: [f64; 2], half_width: f64, n: usize) -> Result<Self> {
        GridSpec::new(
            [c[0] - half_width, c[1] - half_width],
            [c[0] + half_width, c[1] + half_width],
            n,
            n,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument(
                "grid must have at least one pixel".into(),
            ));
        }
        if !(self.upper[0] > self.lower[0] && self.upper[1] > self.lower[1]) {
            return Err(Error::InvalidArgument(
                "grid upper corner must exceed lower corner".into(),
            ));
        }
        Ok(())
    }

    pub fn pixel_size(&self) -> [f64; 2] {
        [
            (self.upper[0] - self.lower[0]) / self.nx as f64,
            (self.upper[1] - self.lower[1]) / self.ny as f64,
        ]
    }

    pub fn pixel_area(&self) -> f64 {
        let [hx, hy] = self.pixel_size();
        hx * hy
    }

    pub fn pixel_diameter(&self) -> f64 {
        let [hx, hy] = self.pixel_size();
        hx.hypot(hy)
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Vector {
        let [hx, hy] = self.pixel_size();
        Vector::new(&[
            self.lower[0] + (i as f64 + 0.5) * hx,
            self.lower[1] + (j as f64 + 0.5) * hy,
        ])
    }

    /// Pixel containing `p`, if inside the grid.
    pub fn locate(&self, p: &Vector) -> Option<(usize, usize)> {
        let [hx, hy] = self.pixel_size();
        let fx = (p[0] - self.lower[0]) / hx;
        let fy = (p[1] - self.lower[1]) / hy;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }
}

/// Rasterized ε-distance from an origin, stored row-major with row 0 at the
/// lower edge.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    pub origin: Vector,
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub seed: u64,
    /// Smallest value on the grid boundary; balls of smaller radius fit
    /// inside the grid.
    pub max_reliable: f64,
}

impl DistanceField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Arrival times along one road from a fixed source.
struct RoadProfile<'a> {
    line: &'a Line,
    speed: f64,
    /// Node parameters, sorted, and their arrival times.
    params: Vec<f64>,
    times: Vec<f64>,
    min_time: f64,
    /// Foot of the source on the road, its distance, and the refraction
    /// offset of the best direct entry.
    foot: f64,
    height: f64,
    delta: f64,
}

fn refraction(h: f64, v: f64, eps: f64) -> f64 {
    h * eps / (v * v - eps * eps).sqrt()
}

impl RoadProfile<'_> {
    /// Earliest arrival at parameter `s` by hopping straight onto the road.
    fn direct(&self, s: f64, eps: f64) -> f64 {
        let off = (s - self.foot).abs();
        if off <= self.delta {
            off.hypot(self.height) / eps
        } else {
            self.delta.hypot(self.height) / eps + (off - self.delta) / self.speed
        }
    }

    /// Parameters whose direct arrival is at most `bound`.
    fn direct_range(&self, bound: f64, eps: f64) -> Option<(f64, f64)> {
        let reach = bound * eps;
        if self.height > reach {
            return None;
        }
        let corner = self.delta.hypot(self.height);
        let off = if corner >= reach {
            (reach * reach - self.height * self.height).sqrt()
        } else {
            self.delta + (bound - corner / eps) * self.speed
        };
        let off = off * (1.0 + 1e-12) + 1e-12;
        Some((self.foot - off, self.foot + off))
    }

    /// Earliest arrival at parameter `s` through graph nodes.
    fn arrival(&self, s: f64) -> f64 {
        let k = self.params.partition_point(|&q| q <= s);
        let mut t = f64::INFINITY;
        if k > 0 {
            t = t.min(self.times[k - 1] + (s - self.params[k - 1]) / self.speed);
        }
        if k < self.params.len() {
            t = t.min(self.times[k] + (self.params[k] - s) / self.speed);
        }
        t
    }

    /// Arrival at `p` through this road if it can beat `best`, else `best`.
    fn improve(&self, p: &Vector, best: f64, eps: f64) -> f64 {
        let h = self.line.distance_to(p);
        if self.min_time.min(self.height / eps) + h / eps >= best {
            return best;
        }
        best.min(self.reach(self.line.parameter_of(p), h, eps))
    }

    /// Earliest arrival at a point with foot `foot` and distance `h` whose
    /// last leg is a hop leaving this road.
    fn reach(&self, foot: f64, h: f64, eps: f64) -> f64 {
        let delta = refraction(h, self.speed, eps);
        let hop = |s: f64| (s - foot).hypot(h) / eps;
        let mut best = f64::INFINITY;
        if !self.params.is_empty() {
            for s in [foot - delta, foot + delta] {
                best = best.min(self.arrival(s) + hop(s));
            }
            let lo = self.params.partition_point(|&q| q <= foot - delta);
            let hi = self.params.partition_point(|&q| q < foot + delta);
            for k in lo..hi {
                best = best.min(self.times[k] + hop(self.params[k]));
            }
        }
        // Entering and leaving this road without passing a node.
        let ride = (foot - self.foot).abs() - self.delta - delta;
        if ride > 0.0 {
            let t = self.delta.hypot(self.height) / eps + ride / self.speed + delta.hypot(h) / eps;
            best = best.min(t);
        }
        best
    }
}

/// Uniform cell index of lines over a padded box; each cell lists the lines
/// passing within half a cell diagonal of its centre.
pub struct LineIndex {
    lower: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    pad: f64,
    box_lo: [f64; 2],
    box_hi: [f64; 2],
    cells: Vec<Vec<u32>>,
}

impl LineIndex {
    pub fn new<'b>(
        lines: impl Iterator<Item = &'b Line>,
        lower: [f64; 2],
        upper: [f64; 2],
        cell: f64,
        pad: f64,
    ) -> Self {
        let lo = [lower[0] - pad, lower[1] - pad];
        let nx = (((upper[0] + pad - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((upper[1] + pad - lo[1]) / cell).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let reach = cell * std::f64::consts::FRAC_1_SQRT_2;
        for (k, line) in lines.enumerate() {
            let (a, u) = (line.anchor(), line.direction());
            // Cells of each column that the line's reach band meets.
            for i in 0..nx {
                let x0 = lo[0] + i as f64 * cell;
                let (j0, j1) = if u[0].abs() < 1e-12 {
                    if (a[0] - (x0 + 0.5 * cell)).abs() > reach {
                        continue;
                    }
                    (0, ny - 1)
                } else {
                    let ya = a[1] + (x0 - reach - a[0]) / u[0] * u[1];
                    let yb = a[1] + (x0 + cell + reach - a[0]) / u[0] * u[1];
                    let (ylo, yhi) = (ya.min(yb) - reach, ya.max(yb) + reach);
                    let j0 = ((ylo - lo[1]) / cell).floor().max(0.0);
                    let j1 = ((yhi - lo[1]) / cell).floor();
                    if j1 < 0.0 || j0 >= ny as f64 {
                        continue;
                    }
                    (j0 as usize, (j1 as usize).min(ny - 1))
                };
                for j in j0..=j1 {
                    let c = Vector::new(&[x0 + 0.5 * cell, lo[1] + (j as f64 + 0.5) * cell]);
                    if line.distance_to(&c) <= reach {
                        cells[j * nx + i].push(k as u32);
                    }
                }
            }
        }
        LineIndex {
            lower: lo,
            cell,
            nx,
            ny,
            pad,
            box_lo: lower,
            box_hi: upper,
            cells,
        }
    }

    /// Calls `f` once for every line within `rho` of `p` (and possibly a few
    /// more). Returns false, without calling `f`, when the query disk is not
    /// covered by the index.
    fn visit(
        &self,
        p: &Vector,
        rho: f64,
        seen: &mut [u32],
        stamp: u32,
        mut f: impl FnMut(usize),
    ) -> bool {
        let inside = (0..2).all(|a| {
            p[a] - rho >= self.box_lo[a] - self.pad && p[a] + rho <= self.box_hi[a] + self.pad
        });
        if !inside {
            return false;
        }
        let span = |c: f64, lo: f64, n: usize| {
            let a = ((c - rho - lo) / self.cell).floor().max(0.0) as usize;
            let b = (((c + rho - lo) / self.cell).floor().max(0.0) as usize).min(n - 1);
            (a, b)
        };
        let (i0, i1) = span(p[0], self.lower[0], self.nx);
        let (j0, j1) = span(p[1], self.lower[1], self.ny);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in &self.cells[j * self.nx + i] {
                    let k = k as usize;
                    if seen[k] != stamp {
                        seen[k] = stamp;
                        f(k);
                    }
                }
            }
        }
        true
    }
}

/// Transfer graph without terminals, reusable for distance maps from many
/// sources. Entry onto and exit from each road are optimized in closed form.
pub struct FieldEngine<'a> {
    sample: &'a ProcessSample,
    graph: TransferGraph,
    epsilon: f64,
}

/// Distances from one source, evaluable at arbitrary points.
pub struct SourceMap<'a> {
    origin: Vector,
    profiles: Vec<RoadProfile<'a>>,
    epsilon: f64,
}

impl<'a> FieldEngine<'a> {
    pub fn new(sample: &'a ProcessSample, config: &SolverConfig) -> Result<Self> {
        let graph = TransferGraph::build(sample, &[], config, &Ingest::default())?;
        Ok(FieldEngine {
            sample,
            graph,
            epsilon: config.epsilon,
        })
    }

    pub fn graph(&self) -> &TransferGraph {
        &self.graph
    }

    /// Index of the usable roads over `grid`, shared by all sources.
    pub fn line_index(&self, grid: &GridSpec) -> LineIndex {
        let [hx, hy] = grid.pixel_size();
        let cell = (4.0 * hx.max(hy))
            .max((grid.upper[0] - grid.lower[0]).max(grid.upper[1] - grid.lower[1]) / 64.0);
        let lines = self
            .sample
            .roads
            .iter()
            .filter(|r| r.speed > self.epsilon)
            .map(|r| &r.line);
        LineIndex::new(lines, grid.lower, grid.upper, cell, 4.0 * cell)
    }

    /// One-to-all distances from `x`.
    pub fn source(&self, x: &Vector) -> Result<SourceMap<'a>> {
        self.source_within(x, f64::INFINITY)
    }

    /// Distances from `x`, exact up to `bound`; larger values are only
    /// guaranteed to exceed `bound`.
    pub fn source_within(&self, x: &Vector, bound: f64) -> Result<SourceMap<'a>> {
        check_dim(self.sample.dim(), x.dim())?;
        if !(bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bound must be positive, got {bound}"
            )));
        }
        let eps = self.epsilon;
        let sample = self.sample;
        let mut profiles: Vec<RoadProfile<'a>> = Vec::new();
        let mut seeds = Vec::new();
        for (r, road) in sample.roads.iter().enumerate() {
            if road.speed <= eps {
                continue;
            }
            let height = road.line.distance_to(x);
            let prof = RoadProfile {
                line: &road.line,
                speed: road.speed,
                params: Vec::new(),
                times: Vec::new(),
                min_time: f64::INFINITY,
                foot: road.line.parameter_of(x),
                height,
                delta: refraction(height, road.speed, eps),
            };
            let ids = &self.graph.road_nodes[r];
            let (lo, hi) = match prof.direct_range(bound, eps) {
                Some((a, b)) => {
                    let param = |n: &u32| self.graph.nodes[*n as usize].param;
                    (
                        ids.partition_point(|n| param(n) < a),
                        ids.partition_point(|n| param(n) <= b),
                    )
                }
                None => (0, 0),
            };
            for &n in &ids[lo..hi] {
                let s = self.graph.nodes[n as usize].param;
                seeds.push((n as usize, prof.direct(s, eps)));
            }
            profiles.push(prof);
        }
        for (id, node) in self.graph.nodes.iter().enumerate() {
            if node.road().is_none() {
                seeds.push((id, x.distance(&node.pos) / eps));
            }
        }
        let sp = self.graph.shortest_paths_bounded(&seeds, eps, bound);
        let active = sample
            .roads
            .iter()
            .enumerate()
            .filter(|(_, r)| r.speed > eps);
        for (prof, (r, _)) in profiles.iter_mut().zip(active) {
            for &n in &self.graph.road_nodes[r] {
                let t = sp.dist[n as usize];
                if t.is_finite() {
                    prof.params.push(self.graph.nodes[n as usize].param);
                    prof.times.push(t);
                }
            }
            prof.min_time = prof.times.iter().copied().fold(f64::INFINITY, f64::min);
        }
        Ok(SourceMap {
            origin: x.clone(),
            profiles,
            epsilon: eps,
        })
    }

    /// Distance field from `x` over a planar grid.
    pub fn field(&self, x: &Vector, grid: &GridSpec) -> Result<DistanceField> {
        self.field_within(x, grid, f64::INFINITY)
    }

    /// Distance field exact up to `bound`; pixels beyond it read some value
    /// above `bound`.
    pub fn field_within(&self, x: &Vector, grid: &GridSpec, bound: f64) -> Result<DistanceField> {
        if self.sample.dim() != 2 {
            return Err(Error::InvalidArgument("distance fields need d = 2".into()));
        }
        grid.validate()?;
        let map = self.source_within(x, bound)?;
        let index = self.line_index(grid);
        let hop = grid.pixel_size()[0] / self.epsilon;
        let cap = bound * (1.0 + 1e-9);
        let mut values = vec![0.0; grid.nx * grid.ny];
        values
            .par_chunks_mut(grid.nx)
            .enumerate()
            .for_each(|(j, row)| {
                let mut seen = vec![0u32; map.profiles.len()];
                let mut stamp = 0u32;
                let mut prev = f64::INFINITY;
                for (i, out) in row.iter_mut().enumerate() {
                    stamp += 1;
                    // The left neighbour plus a hop bounds the value from above.
                    let p = grid.pixel_center(i, j);
                    prev = map.time_below(&p, (prev + hop).min(cap), &index, &mut seen, stamp);
                    *out = prev;
                }
            });
        let mut max_reliable = f64::INFINITY;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny {
                    max_reliable = max_reliable.min(values[j * grid.nx + i]);
                }
            }
        }
        Ok(DistanceField {
            origin: x.clone(),
            grid: grid.clone(),
            values,
            epsilon: self.epsilon,
            seed: self.sample.seed,
            max_reliable,
        })
    }
}

impl SourceMap<'_> {
    pub fn origin(&self) -> &Vector {
        &self.origin
    }

    /// Travel time from the source to `p`.
    pub fn time_to(&self, p: &Vector) -> f64 {
        let mut best = self.origin.distance(p) / self.epsilon;
        for prof in &self.profiles {
            best = best.min(prof.improve(p, best, self.epsilon));
        }
        best
    }

    /// Travel time to `p` given an upper bound `bound` on it; only roads
    /// within hop reach of `p` under that bound are examined.
    fn time_below(
        &self,
        p: &Vector,
        bound: f64,
        index: &LineIndex,
        seen: &mut [u32],
        stamp: u32,
    ) -> f64 {
        let eps = self.epsilon;
        let mut best = (self.origin.distance(p) / eps).min(bound);
        let profiles = &self.profiles;
        if !index.visit(p, eps * best, seen, stamp, |k| {
            best = best.min(profiles[k].improve(p, best, eps));
        }) {
            for prof in profiles {
                best = best.min(prof.improve(p, best, eps));
            }
        }
        best
    }

    /// Whether the travel time to `p` is at most `t`.
    pub fn within(&self, p: &Vector, t: f64) -> bool {
        let eps = self.epsilon;
        self.origin.distance(p) / eps <= t
            || self
                .profiles
                .iter()
                .any(|prof| prof.improve(p, f64::INFINITY, eps) <= t)
    }

    fn within_indexed(
        &self,
        p: &Vector,
        t: f64,
        index: &LineIndex,
        seen: &mut [u32],
        stamp: u32,
    ) -> bool {
        let eps = self.epsilon;
        if self.origin.distance(p) / eps <= t {
            return true;
        }
        let bound = t * (1.0 + 1e-12);
        let mut hit = false;
        let profiles = &self.profiles;
        if !index.visit(p, eps * bound, seen, stamp, |k| {
            hit = hit || profiles[k].improve(p, bound, eps) <= t;
        }) {
            return self.within(p, t);
        }
        hit
    }

    /// Segments that can carry a path of duration at most `t`: road
    /// abscissa range and the hop reach left at that time.
    fn reachable_segments(&self, t: f64) -> Vec<(Vector, Vector, f64)> {
        let eps = self.epsilon;
        let mut out = Vec::new();
        for prof in &self.profiles {
            let first = prof.min_time.min(prof.height / eps);
            if first > t {
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (&s, &at) in prof.params.iter().zip(&prof.times) {
                if at <= t {
                    lo = lo.min(s - (t - at) * prof.speed);
                    hi = hi.max(s + (t - at) * prof.speed);
                }
            }
            let entry = prof.delta.hypot(prof.height) / eps;
            if prof.height / eps <= t {
                let run = prof.delta + (t - entry).max(0.0) * prof.speed;
                lo = lo.min(prof.foot - run);
                hi = hi.max(prof.foot + run);
            }
            if lo <= hi {
                out.push((
                    prof.line.point_at(lo),
                    prof.line.point_at(hi),
                    eps * (t - first),
                ));
            }
        }
        out
    }

    /// Marks every pixel of `grid` whose centre is within time `t`.
    /// Returns the number of newly marked pixels.
    pub fn cover(&self, grid: &GridSpec, t: f64, covered: &mut [bool], index: &LineIndex) -> usize {
        let mut seen = vec![0u32; self.profiles.len()];
        let mut stamp = 0u32;
        let mut capsules = self.reachable_segments(t);
        capsules.push((self.origin.clone(), self.origin.clone(), self.epsilon * t));
        let [hx, hy] = grid.pixel_size();
        let mut marked = 0;
        for (a, b, w) in capsules {
            let (ylo, yhi) = (a[1].min(b[1]) - w, a[1].max(b[1]) + w);
            let j0 = ((ylo - grid.lower[1]) / hy - 0.5).ceil().max(0.0) as usize;
            let j1 = ((yhi - grid.lower[1]) / hy - 0.5).floor();
            if j1 < 0.0 {
                continue;
            }
            let j1 = (j1 as usize).min(grid.ny.saturating_sub(1));
            let dy = b[1] - a[1];
            for j in j0..=j1 {
                let y = grid.lower[1] + (j as f64 + 0.5) * hy;
                // Parameter range of the segment within vertical distance w of the row.
                let (u0, u1) = if dy.abs() < 1e-300 {
                    (0.0, 1.0)
                } else {
                    let p = (y - w - a[1]) / dy;
                    let q = (y + w - a[1]) / dy;
                    (p.min(q).max(0.0), p.max(q).min(1.0))
                };
                if u0 > u1 {
                    continue;
                }
                let xa = a[0] + u0 * (b[0] - a[0]);
                let xb = a[0] + u1 * (b[0] - a[0]);
                let (xlo, xhi) = (xa.min(xb) - w, xa.max(xb) + w);
                let i0 = ((xlo - grid.lower[0]) / hx - 0.5).ceil().max(0.0) as usize;
                let i1 = ((xhi - grid.lower[0]) / hx - 0.5).floor();
                if i1 < 0.0 {
                    continue;
                }
                let i1 = (i1 as usize).min(grid.nx.saturating_sub(1));
                for i in i0..=i1 {
                    let k = j * grid.nx + i;
                    if covered[k] {
                        continue;
                    }
                    stamp += 1;
                    if self.within_indexed(&grid.pixel_center(i, j), t, index, &mut seen, stamp) {
                        covered[k] = true;
                        marked += 1;
                    }
                }
            }
        }
        marked
    }
}

/// ε-distance field from `x` over a planar grid. Pixel values are exact
/// minima over ε-paths whose road-to-road transfers happen at graph nodes.
pub fn distance_field(
    sample: &ProcessSample,
    x: &Vector,
    grid: &GridSpec,
    config: &SolverConfig,
) -> Result<DistanceField> {
    if sample.dim() != 2 {
        return Err(Error::InvalidArgument("distance fields need d = 2".into()));
    }
    FieldEngine::new(sample, config)?.field(x, grid)
}

/// Area of an ε-ball read off a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallVolume {
    pub volume: f64,
    /// The ball reaches the grid boundary, so `volume` underestimates.
    pub boundary_contaminated: bool,
}

/// Pixel count with value at most `t`, times the pixel area.
pub fn ball_volume(field: &DistanceField, t: f64) -> Result<BallVolume> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be nonnegative, got {t}"
        )));
    }
    let count = field.values.iter().filter(|&&v| v <= t).count();
    Ok(BallVolume {
        volume: count as f64 * field.grid.pixel_area(),
        boundary_contaminated: t >= field.max_reliable,
    })
}
