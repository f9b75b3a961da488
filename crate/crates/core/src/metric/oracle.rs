//! Exhaustive reference solver for samples with a handful of roads: every
//! road sequence up to a given length, junction abscissas minimized by
//! dynamic programming over parameter grids that are refined around the
//! best grid path.

use super::check_epsilon;
use crate::error::{check_dim, Error, Result};
use crate::geom::{Line, Vector};
use crate::sampler::ProcessSample;

const GRID: usize = 301;
const ZOOM_LEVELS: usize = 5;

struct Stage<'a> {
    line: &'a Line,
    speed: f64,
    entry: Vec<f64>,
    exit: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Best grid path along a fixed sequence: (time, entry/exit per stage).
fn solve_grid(stages: &[Stage], x: &Vector, y: &Vector, eps: f64) -> (f64, Vec<(f64, f64)>) {
    let k = stages.len();
    // back_a[i][b] = entry index used for exit b; back_b[i][a] = previous exit index.
    let mut back_a: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut back_b: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut g: Vec<f64> = Vec::new();
    let mut prev_pts: Vec<Vector> = Vec::new();
    for (i, st) in stages.iter().enumerate() {
        let entry_pts: Vec<Vector> = st.entry.iter().map(|&a| st.line.point_at(a)).collect();
        let mut f = vec![f64::INFINITY; st.entry.len()];
        let mut bb = vec![0usize; st.entry.len()];
        for (ai, pa) in entry_pts.iter().enumerate() {
            if i == 0 {
                f[ai] = x.distance(pa) / eps;
            } else {
                for (bi, pb) in prev_pts.iter().enumerate() {
                    let t = g[bi] + pb.distance(pa) / eps;
                    if t < f[ai] {
                        f[ai] = t;
                        bb[ai] = bi;
                    }
                }
            }
        }
        let mut gi = vec![f64::INFINITY; st.exit.len()];
        let mut ba = vec![0usize; st.exit.len()];
        for (bi, &b) in st.exit.iter().enumerate() {
            for (ai, &a) in st.entry.iter().enumerate() {
                let t = f[ai] + (b - a).abs() / st.speed;
                if t < gi[bi] {
                    gi[bi] = t;
                    ba[bi] = ai;
                }
            }
        }
        back_a.push(ba);
        back_b.push(bb);
        g = gi;
        prev_pts = st.exit.iter().map(|&b| st.line.point_at(b)).collect();
    }
    let (mut best, mut bi) = (f64::INFINITY, 0usize);
    for (j, pb) in prev_pts.iter().enumerate() {
        let t = g[j] + pb.distance(y) / eps;
        if t < best {
            best = t;
            bi = j;
        }
    }
    let mut junctions = vec![(0.0, 0.0); k];
    for i in (0..k).rev() {
        let ai = back_a[i][bi];
        junctions[i] = (stages[i].entry[ai], stages[i].exit[bi]);
        bi = back_b[i][ai];
    }
    (best, junctions)
}

fn sequences(n_roads: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for r in 0..n_roads {
                if s.last() != Some(&r) {
                    let mut t = s.clone();
                    t.push(r);
                    next.push(t);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Minimum ε-path time over all road sequences of length at most `max_len`
/// (plus the direct hop), by grid dynamic programming.
pub fn grid_oracle(
    sample: &ProcessSample,
    x: &Vector,
    y: &Vector,
    epsilon: f64,
    max_len: usize,
) -> Result<f64> {
    check_epsilon(sample, epsilon)?;
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    if sample.count() > 4 {
        return Err(Error::InvalidArgument(
            "oracle is limited to four roads".into(),
        ));
    }
    let dist = x.distance(y);
    let mut best = dist / epsilon;
    if dist == 0.0 {
        return Ok(0.0);
    }
    for seq in sequences(sample.count(), max_len) {
        let mut stages: Vec<Stage> = seq
            .iter()
            .map(|&r| {
                let line = &sample.roads[r].line;
                let (sx, sy) = (line.parameter_of(x), line.parameter_of(y));
                let lo = sx.min(sy) - 2.0 * dist;
                let hi = sx.max(sy) + 2.0 * dist;
                Stage {
                    line,
                    speed: sample.roads[r].speed,
                    entry: linspace(lo, hi, GRID),
                    exit: linspace(lo, hi, GRID),
                }
            })
            .collect();
        let mut width = stages
            .iter()
            .map(|st| (st.entry[GRID - 1] - st.entry[0]) / (GRID - 1) as f64)
            .fold(0.0, f64::max);
        let mut time = f64::INFINITY;
        for level in 0..=ZOOM_LEVELS {
            let (t, junctions) = solve_grid(&stages, x, y, epsilon);
            time = time.min(t);
            if level == ZOOM_LEVELS {
                break;
            }
            let half = 4.0 * width;
            for (st, &(a, b)) in stages.iter_mut().zip(&junctions) {
                st.entry = linspace(a - half, a + half, GRID);
                st.exit = linspace(b - half, b + half, GRID);
            }
            width = 2.0 * half / (GRID - 1) as f64;
        }
        best = best.min(time);
    }
    Ok(best)
}
