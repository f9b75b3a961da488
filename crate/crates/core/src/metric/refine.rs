//! Junction refinement for a fixed road sequence.
//!
//! Parameters are laid out as `[a_1, b_1, …, a_k, b_k]` (entry and exit
//! abscissa on each road). The objective is a sum of `2k + 1` terms
//! `hop_0, road_1, hop_1, …, road_k, hop_k`; term `t` depends on parameters
//! `t − 1` and `t` only.

use super::{LegMode, PathLeg, PathSolution};
use crate::error::{check_dim, Error, Result};
use crate::geom::{closest_pair, Line, Vector, PARALLEL_TOL};
use crate::sampler::ProcessSample;

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const MAX_EXPANSIONS: usize = 80;
const MAX_SECTIONS: usize = 200;

struct Chain<'a> {
    x: &'a Vector,
    y: &'a Vector,
    lines: Vec<&'a Line>,
    speeds: Vec<f64>,
    eps: f64,
}

impl Chain<'_> {
    fn k(&self) -> usize {
        self.lines.len()
    }

    /// Junction point for parameter slot `m`; `-1` is x and `2k` is y.
    fn point(&self, p: &[f64], m: isize) -> Vector {
        if m < 0 {
            self.x.clone()
        } else if m as usize >= p.len() {
            self.y.clone()
        } else {
            let m = m as usize;
            self.lines[m / 2].point_at(p[m])
        }
    }

    fn term(&self, p: &[f64], t: usize) -> f64 {
        if t.is_multiple_of(2) {
            let m = t as isize;
            self.point(p, m - 1).distance(&self.point(p, m)) / self.eps
        } else {
            (p[t] - p[t - 1]).abs() / self.speeds[t / 2]
        }
    }

    fn total(&self, p: &[f64]) -> f64 {
        (0..=2 * self.k()).map(|t| self.term(p, t)).sum()
    }

    /// Sum of the terms touched by parameters `lo..=hi`.
    fn local(&self, p: &[f64], lo: usize, hi: usize) -> f64 {
        (lo..=hi + 1).map(|t| self.term(p, t)).sum()
    }

    /// Length scale for line searches on parameter `m`.
    fn step(&self, p: &[f64], m: usize) -> f64 {
        let mut s: f64 = 0.0;
        for t in [m, m + 1] {
            let l = if t % 2 == 0 {
                let t = t as isize;
                self.point(p, t - 1).distance(&self.point(p, t))
            } else {
                (p[t] - p[t - 1]).abs()
            };
            s = s.max(l);
        }
        (0.25 * s).max(1e-9 * (1.0 + p[m].abs()))
    }
}

/// Minimizes a convex function of one variable starting from `x0`; never
/// returns a point worse than `x0`.
fn minimize_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    f0: f64,
    step: f64,
    xtol: f64,
) -> (f64, f64) {
    let mut best = (x0, f0);
    let consider = |x: f64, fx: f64, best: &mut (f64, f64)| {
        if fx < best.1 {
            *best = (x, fx);
        }
    };
    let f_plus = f(x0 + step);
    consider(x0 + step, f_plus, &mut best);
    let (mut lo, mut hi);
    if f_plus < f0 {
        lo = x0;
        let (mut b, mut fb) = (x0 + step, f_plus);
        let mut h = step;
        hi = b + h;
        for _ in 0..MAX_EXPANSIONS {
            h *= 2.0;
            let c = b + h;
            let fc = f(c);
            consider(c, fc, &mut best);
            hi = c;
            if fc >= fb {
                break;
            }
            lo = b;
            b = c;
            fb = fc;
        }
    } else {
        let f_minus = f(x0 - step);
        consider(x0 - step, f_minus, &mut best);
        if f_minus < f0 {
            hi = x0;
            let (mut b, mut fb) = (x0 - step, f_minus);
            let mut h = step;
            lo = b - h;
            for _ in 0..MAX_EXPANSIONS {
                h *= 2.0;
                let c = b - h;
                let fc = f(c);
                consider(c, fc, &mut best);
                lo = c;
                if fc >= fb {
                    break;
                }
                hi = b;
                b = c;
                fb = fc;
            }
        } else {
            lo = x0 - step;
            hi = x0 + step;
        }
    }
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    for _ in 0..MAX_SECTIONS {
        if hi - lo <= xtol.max(4.0 * f64::EPSILON * (1.0 + lo.abs().max(hi.abs()))) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = f(c);
            consider(c, fc, &mut best);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = f(d);
            consider(d, fd, &mut best);
        }
    }
    best
}

fn descend(chain: &Chain, p: &mut [f64], tol: f64, max_iters: usize) {
    let n = p.len();
    if n == 0 {
        return;
    }
    let xtol = 0.5 * tol * chain.eps;
    let mut current = chain.total(p);
    for _ in 0..max_iters {
        let start = current;
        for m in 0..n {
            let base = chain.local(p, m, m);
            let step = chain.step(p, m);
            let x0 = p[m];
            let mut q = p.to_vec();
            let (xm, _) = minimize_1d(
                |v| {
                    q[m] = v;
                    chain.local(&q, m, m)
                },
                x0,
                base,
                step,
                xtol,
            );
            p[m] = xm;
        }
        // Slide each road leg as a whole.
        for m in (0..n).step_by(2) {
            let base = chain.local(p, m, m + 1);
            let step = chain.step(p, m).max(chain.step(p, m + 1));
            let (a0, b0) = (p[m], p[m + 1]);
            let mut q = p.to_vec();
            let (shift, _) = minimize_1d(
                |s| {
                    q[m] = a0 + s;
                    q[m + 1] = b0 + s;
                    chain.local(&q, m, m + 1)
                },
                0.0,
                base,
                step,
                xtol,
            );
            p[m] = a0 + shift;
            p[m + 1] = b0 + shift;
        }
        // Joint moves of an exit and the next entry when the hop between
        // them has collapsed (a turn at a crossing).
        for m in (1..n.saturating_sub(1)).step_by(2) {
            let hop = chain
                .point(p, m as isize)
                .distance(&chain.point(p, m as isize + 1));
            let scale = 1.0 + chain.point(p, m as isize).norm();
            if hop > 1e-7 * scale {
                continue;
            }
            let base = chain.local(p, m, m + 1);
            let step_outer = chain.step(p, m).max(1e-6 * scale);
            let step_inner = chain.step(p, m + 1).max(1e-6 * scale);
            let a0 = p[m + 1];
            let mut q = p.to_vec();
            let (xm, fm) = minimize_1d(
                |v| {
                    q[m] = v;
                    let f_start = chain.local(&q, m, m + 1);
                    let (_, fa) = minimize_1d(
                        |w| {
                            q[m + 1] = w;
                            chain.local(&q, m, m + 1)
                        },
                        a0,
                        f_start,
                        step_inner,
                        xtol,
                    );
                    q[m + 1] = a0;
                    fa
                },
                p[m],
                base,
                step_outer,
                xtol,
            );
            if fm < base {
                // Recover the inner optimum at the chosen outer value.
                let mut r = p.to_vec();
                r[m] = xm;
                let f_start = chain.local(&r, m, m + 1);
                let (a, fa) = minimize_1d(
                    |w| {
                        r[m + 1] = w;
                        chain.local(&r, m, m + 1)
                    },
                    a0,
                    f_start,
                    step_inner,
                    xtol,
                );
                if fa < base {
                    p[m] = xm;
                    p[m + 1] = a;
                }
            }
        }
        current = chain.total(p);
        if start - current < tol {
            break;
        }
    }
}

/// Road entry/exit parameters along a road sequence.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Sequence {
    pub roads: Vec<usize>,
    pub params: Vec<f64>,
}

/// Reads the road sequence of a graph path; consecutive legs on the same
/// road are merged.
pub(crate) fn initial_sequence(sample: &ProcessSample, legs: &[PathLeg]) -> Sequence {
    let mut seq = Sequence {
        roads: Vec::new(),
        params: Vec::new(),
    };
    for leg in legs {
        if let LegMode::Road(r) = leg.mode {
            let line = &sample.roads[r].line;
            let (a, b) = (line.parameter_of(&leg.from), line.parameter_of(&leg.to));
            if seq.roads.last() == Some(&r) {
                *seq.params.last_mut().unwrap() = b;
            } else {
                seq.roads.push(r);
                seq.params.push(a);
                seq.params.push(b);
            }
        }
    }
    seq
}

fn path_from(chain: &Chain, roads: &[usize], p: &[f64]) -> PathSolution {
    let mut legs = Vec::new();
    let k = roads.len();
    for t in 0..=2 * k {
        let m = t as isize;
        let (from, to) = (chain.point(p, m - 1), chain.point(p, m));
        if t % 2 == 0 {
            if from != to {
                let duration = from.distance(&to) / chain.eps;
                legs.push(PathLeg {
                    from,
                    to,
                    mode: LegMode::Hop,
                    duration,
                });
            }
        } else {
            legs.push(PathLeg {
                from,
                to,
                mode: LegMode::Road(roads[t / 2]),
                duration: chain.term(p, t),
            });
        }
    }
    PathSolution::from_legs(legs)
}

/// Drops road legs of zero length and merges consecutive legs on the same
/// road when the road is faster than hopping. Returns true if anything
/// changed.
fn prune(roads: &mut Vec<usize>, p: &mut Vec<f64>, speeds: &[f64], eps: f64) -> bool {
    let mut changed = false;
    let mut i = 0;
    while i < roads.len() {
        let (a, b) = (p[2 * i], p[2 * i + 1]);
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs()) {
            roads.remove(i);
            p.drain(2 * i..2 * i + 2);
            changed = true;
        } else {
            i += 1;
        }
    }
    let mut i = 1;
    while i < roads.len() {
        if roads[i] == roads[i - 1] && speeds[roads[i]] > eps {
            let b = p[2 * i + 1];
            roads.remove(i);
            p.drain(2 * i - 1..2 * i + 1);
            p[2 * i - 1] = b;
            changed = true;
        } else {
            i += 1;
        }
    }
    changed
}

/// Refines a sequence with known starting parameters.
pub(crate) fn refine_from(
    sample: &ProcessSample,
    seq: &Sequence,
    x: &Vector,
    y: &Vector,
    eps: f64,
    tol: f64,
    max_iters: usize,
) -> PathSolution {
    let speeds: Vec<f64> = sample.roads.iter().map(|r| r.speed).collect();
    let mut roads = seq.roads.clone();
    let mut p = seq.params.clone();
    prune(&mut roads, &mut p, &speeds, eps);
    loop {
        let chain = Chain {
            x,
            y,
            lines: roads.iter().map(|&r| &sample.roads[r].line).collect(),
            speeds: roads.iter().map(|&r| speeds[r]).collect(),
            eps,
        };
        descend(&chain, &mut p, tol, max_iters);
        if !prune(&mut roads, &mut p, &speeds, eps) {
            return path_from(&chain, &roads, &p);
        }
    }
}

/// Optimizes entry and exit points along a fixed road sequence.
pub fn refine_path(
    sample: &ProcessSample,
    road_sequence: &[usize],
    x: &Vector,
    y: &Vector,
    epsilon: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PathSolution> {
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if let Some(&r) = road_sequence.iter().find(|&&r| r >= sample.count()) {
        return Err(Error::InvalidArgument(format!(
            "road index {r} out of range"
        )));
    }
    let mut params = Vec::with_capacity(2 * road_sequence.len());
    let mut prev = x.clone();
    for (i, &r) in road_sequence.iter().enumerate() {
        let line = &sample.roads[r].line;
        let a = line.parameter_of(&prev);
        let b = match road_sequence.get(i + 1) {
            Some(&next) => closest_pair(line, &sample.roads[next].line, PARALLEL_TOL)?.s,
            None => line.parameter_of(y),
        };
        params.push(a);
        params.push(b);
        prev = line.point_at(b);
    }
    let seq = Sequence {
        roads: road_sequence.to_vec(),
        params,
    };
    Ok(refine_from(sample, &seq, x, y, epsilon, tol, max_iters))
}
