//! Truncated Poisson road process.
//!
//! Roads are lines of the invariant line process marked with a speed limit.
//! A [`WindowSpec`] restricts the process to lines hitting a ball and to
//! speeds above a cutoff `v0`; inside that window the number of roads is
//! Poisson with mean `R^{d-1} v0^{-(γ-1)}` and speeds are Pareto with tail
//! exponent `γ - 1`.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{check_dim, Error, Result};
use crate::geom::{closest_pair, sample_line_hitting_ball, Ball, Line, Vector, PARALLEL_TOL};

/// Sampling window: lines hitting `B̄(center, radius)` with speed at least `v0`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSpec {
    pub d: usize,
    pub gamma: f64,
    pub center: Vector,
    pub radius: f64,
    pub v0: f64,
}

impl WindowSpec {
    pub fn new(d: usize, gamma: f64, center: Vector, radius: f64, v0: f64) -> Result<Self> {
        let w = WindowSpec {
            d,
            gamma,
            center,
            radius,
            v0,
        };
        w.validate()?;
        Ok(w)
    }

    /// Window centred at the origin.
    pub fn centered(d: usize, gamma: f64, radius: f64, v0: f64) -> Result<Self> {
        Self::new(d, gamma, Vector::zeros(d), radius, v0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidArgument(format!(
                "d must be at least 2, got {}",
                self.d
            )));
        }
        check_dim(self.d, self.center.dim())?;
        if !(self.gamma > self.d as f64) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must exceed d = {}, got {}",
                self.d, self.gamma
            )));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "window radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.v0 > 0.0) || !self.v0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "v0 must be positive, got {}",
                self.v0
            )));
        }
        Ok(())
    }

    pub fn ball(&self) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius,
        }
    }

    /// Mean number of roads in the window, `R^{d-1} v0^{-(γ-1)}`.
    pub fn expected_road_count(&self) -> f64 {
        self.radius.powi(self.d as i32 - 1) * self.v0.powf(-(self.gamma - 1.0))
    }

    /// Pareto speed from a uniform mark `u ∈ (0, 1]`.
    pub fn speed_from_mark(&self, u: f64) -> f64 {
        self.v0 * u.powf(-1.0 / (self.gamma - 1.0))
    }

    /// `P(v ≥ u)` for a sampled speed.
    pub fn speed_tail(&self, u: f64) -> f64 {
        if u <= self.v0 {
            1.0
        } else {
            (u / self.v0).powf(-(self.gamma - 1.0))
        }
    }
}

pub fn expected_road_count(window: &WindowSpec) -> f64 {
    window.expected_road_count()
}

/// A line with a speed limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Road {
    pub line: Line,
    pub speed: f64,
}

/// A realisation of the truncated road process.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSample {
    pub window: WindowSpec,
    pub roads: Vec<Road>,
    pub seed: u64,
}

impl ProcessSample {
    pub fn empty(window: WindowSpec, seed: u64) -> Self {
        ProcessSample {
            window,
            roads: Vec::new(),
            seed,
        }
    }

    pub fn count(&self) -> usize {
        self.roads.len()
    }

    pub fn dim(&self) -> usize {
        self.window.d
    }

    /// Checks the sample invariants: dimensions, window hits, speed cutoff and
    /// pairwise distinct speeds.
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        let tol = 1e-9 * (1.0 + self.window.radius);
        for (i, r) in self.roads.iter().enumerate() {
            check_dim(self.window.d, r.line.dim())?;
            if r.line.distance_to(&self.window.center) > self.window.radius + tol {
                return Err(Error::InvalidArgument(format!(
                    "road {i} misses the window"
                )));
            }
            if !(r.speed >= self.window.v0) || !r.speed.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "road {i} has speed {} below v0 = {}",
                    r.speed, self.window.v0
                )));
            }
        }
        let mut speeds: Vec<f64> = self.roads.iter().map(|r| r.speed).collect();
        speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if speeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("two roads share a speed".into()));
        }
        Ok(())
    }

    /// Same lines under another tail exponent, speeds mapped by
    /// `v ↦ v^{(γ-1)/(γ'-1)}` (the window cutoff is mapped the same way).
    /// The map carries the Poisson intensity for `γ` onto the one for `γ'`.
    pub fn recouple(&self, gamma: f64) -> Result<ProcessSample> {
        let expo = (self.window.gamma - 1.0) / (gamma - 1.0);
        let window = WindowSpec::new(
            self.window.d,
            gamma,
            self.window.center.clone(),
            self.window.radius,
            self.window.v0.powf(expo),
        )?;
        Ok(ProcessSample {
            window,
            roads: self
                .roads
                .iter()
                .map(|r| Road {
                    line: r.line.clone(),
                    speed: r.speed.powf(expo),
                })
                .collect(),
            seed: self.seed,
        })
    }

    /// Keeps only roads whose speed is strictly above `speed`.
    pub fn faster_than(&self, speed: f64) -> ProcessSample {
        ProcessSample {
            window: self.window.clone(),
            roads: self
                .roads
                .iter()
                .filter(|r| r.speed > speed)
                .cloned()
                .collect(),
            seed: self.seed,
        }
    }
}

/// RNG used for every sampling routine, seeded from a 64-bit value.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples the truncated process: Poisson count, then independent lines and
/// Pareto speeds. Deterministic in `seed`.
pub fn sample_process(seed: u64, window: &WindowSpec) -> Result<ProcessSample> {
    window.validate()?;
    let mut rng = rng_from_seed(seed);
    let mean = window.expected_road_count();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(format!("road count mean {mean}: {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let ball = window.ball();
    let mut roads = Vec::with_capacity(count);
    for _ in 0..count {
        let line = sample_line_hitting_ball(&mut rng, &ball)?;
        let u = 1.0 - rng.random::<f64>();
        roads.push(Road {
            line,
            speed: window.speed_from_mark(u),
        });
    }
    Ok(ProcessSample {
        window: window.clone(),
        roads,
        seed,
    })
}

/// Roads of the window in decreasing speed order, generated lazily.
///
/// The quantities `R^{d-1} v^{-(γ-1)}` of the successive speeds form a
/// unit-rate Poisson process, so the stream stops after a Poisson number of
/// roads with the same law as [`sample_process`]. Consumers that only need the
/// fastest roads can stop early.
pub struct FastestFirst {
    rng: ChaCha8Rng,
    window: WindowSpec,
    ball: Ball,
    scale: f64,
    arrival: f64,
}

impl FastestFirst {
    pub fn new(seed: u64, window: &WindowSpec) -> Result<Self> {
        window.validate()?;
        Ok(FastestFirst {
            rng: rng_from_seed(seed),
            ball: window.ball(),
            scale: window.radius.powi(window.d as i32 - 1),
            window: window.clone(),
            arrival: 0.0,
        })
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }
}

impl Iterator for FastestFirst {
    type Item = Road;

    fn next(&mut self) -> Option<Road> {
        let e: f64 = Exp1.sample(&mut self.rng);
        self.arrival += e;
        let speed = (self.arrival / self.scale).powf(-1.0 / (self.window.gamma - 1.0));
        if speed < self.window.v0 {
            // Exhausted; keep returning None.
            self.arrival = f64::INFINITY;
            return None;
        }
        let line = sample_line_hitting_ball(&mut self.rng, &self.ball).ok()?;
        Some(Road { line, speed })
    }
}

/// Whole sample drawn through [`FastestFirst`]; roads sorted by decreasing speed.
pub fn sample_process_fastest_first(seed: u64, window: &WindowSpec) -> Result<ProcessSample> {
    let roads = FastestFirst::new(seed, window)?.collect();
    Ok(ProcessSample {
        window: window.clone(),
        roads,
        seed,
    })
}

/// Answer to a fastest-road query.
///
/// Sampled roads all have speed at least `v0`, so `speed` equals the speed of
/// the fastest road of the untruncated process whenever that speed is at least
/// `exact_above`; otherwise it is a lower bound (possibly 0). `in_window` is
/// false when the query ball is not inside the sampling window, in which case
/// roads missing the window are unaccounted for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedQuery {
    pub speed: f64,
    pub exact_above: f64,
    pub in_window: bool,
}

fn ball_in_window(window: &WindowSpec, x: &Vector, r: f64) -> bool {
    window.center.distance(x) + r <= window.radius * (1.0 + 1e-12)
}

/// Speed of the fastest sampled road hitting `B̄(x, r)`; 0 if none.
pub fn fastest_in_ball(sample: &ProcessSample, x: &Vector, r: f64) -> Result<SpeedQuery> {
    check_dim(sample.dim(), x.dim())?;
    let speed = sample
        .roads
        .iter()
        .filter(|road| road.line.distance_to(x) <= r)
        .map(|road| road.speed)
        .fold(0.0, f64::max);
    Ok(SpeedQuery {
        speed,
        exact_above: sample.window.v0,
        in_window: ball_in_window(&sample.window, x, r),
    })
}

/// Speed of the fastest sampled road hitting both `B̄(x, r)` and `B̄(y, s)`.
pub fn fastest_two_ball(
    sample: &ProcessSample,
    x: &Vector,
    r: f64,
    y: &Vector,
    s: f64,
) -> Result<SpeedQuery> {
    Ok(fastest_two_ball_road(sample, x, r, y, s)?.1)
}

/// Like [`fastest_two_ball`], also returning the index of the road.
pub fn fastest_two_ball_road(
    sample: &ProcessSample,
    x: &Vector,
    r: f64,
    y: &Vector,
    s: f64,
) -> Result<(Option<usize>, SpeedQuery)> {
    check_dim(sample.dim(), x.dim())?;
    check_dim(sample.dim(), y.dim())?;
    let mut best: Option<usize> = None;
    for (i, road) in sample.roads.iter().enumerate() {
        if road.line.distance_to(x) <= r
            && road.line.distance_to(y) <= s
            && best.is_none_or(|b| road.speed > sample.roads[b].speed)
        {
            best = Some(i);
        }
    }
    let speed = best.map_or(0.0, |b| sample.roads[b].speed);
    Ok((
        best,
        SpeedQuery {
            speed,
            exact_above: sample.window.v0,
            in_window: ball_in_window(&sample.window, x, r) && ball_in_window(&sample.window, y, s),
        },
    ))
}

/// Degenerate crossings found in a sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrossingReport {
    /// d = 2: triples of roads passing within `tol` of a common point.
    pub triples: Vec<(usize, usize, usize)>,
    /// d ≥ 3: pairs of roads at distance below `tol`.
    pub pairs: Vec<(usize, usize)>,
}

impl CrossingReport {
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty() && self.pairs.is_empty()
    }
}

/// Looks for triple crossings (d = 2) or intersecting pairs (d ≥ 3).
pub fn check_simple_crossings(sample: &ProcessSample, tol: f64) -> Result<CrossingReport> {
    let roads = &sample.roads;
    let mut report = CrossingReport::default();
    if sample.dim() >= 3 {
        for i in 0..roads.len() {
            for j in i + 1..roads.len() {
                if closest_pair(&roads[i].line, &roads[j].line, PARALLEL_TOL)?.gap < tol {
                    report.pairs.push((i, j));
                }
            }
        }
        return Ok(report);
    }
    // For each road, sort the crossing parameters of all other roads along it
    // and inspect neighbours that land within `tol` of each other.
    for i in 0..roads.len() {
        let mut hits: Vec<(f64, usize, Vector)> = Vec::new();
        for j in 0..roads.len() {
            if j == i {
                continue;
            }
            let cp = closest_pair(&roads[i].line, &roads[j].line, PARALLEL_TOL)?;
            if cp.gap < tol {
                hits.push((cp.s, j, cp.a));
            }
        }
        hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for a in 0..hits.len() {
            for b in a + 1..hits.len() {
                if hits[b].0 - hits[a].0 > tol {
                    break;
                }
                let (j, k) = (hits[a].1, hits[b].1);
                if i < j.min(k) && hits[a].2.distance(&hits[b].2) < tol {
                    report.triples.push((i, j.min(k), j.max(k)));
                }
            }
        }
    }
    report.triples.sort_unstable();
    report.triples.dedup();
    Ok(report)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-task seed derived from a master seed by 64-bit avalanche mixing.
pub fn derive_seed(master: u64, task_index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(task_index.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a sample in the plain-text exchange format: a header line
/// `d gamma R_win v0 seed count c_1 … c_d` followed by one line per road
/// holding the anchor coordinates, the direction coordinates and the speed.
pub fn write_sample<W: Write>(sample: &ProcessSample, mut out: W) -> Result<()> {
    let w = &sample.window;
    let mut header = format!(
        "{} {} {} {} {} {}",
        w.d,
        fmt_f64(w.gamma),
        fmt_f64(w.radius),
        fmt_f64(w.v0),
        sample.seed,
        sample.count()
    );
    for c in w.center.coords() {
        header.push(' ');
        header.push_str(&fmt_f64(*c));
    }
    writeln!(out, "{header}")?;
    for road in &sample.roads {
        let fields: Vec<String> = road
            .line
            .anchor()
            .coords()
            .iter()
            .chain(road.line.direction().coords())
            .chain(std::iter::once(&road.speed))
            .map(|x| fmt_f64(*x))
            .collect();
        writeln!(out, "{}", fields.join(" "))?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {tok:?}"),
    })
}

/// Reads a sample written by [`write_sample`]. The window centre defaults to
/// the origin when the header omits it.
pub fn read_sample<R: BufRead>(input: R) -> Result<ProcessSample> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let header = header?;
    let mut tok = header.split_whitespace();
    let d: usize = parse_field(tok.next(), 1, "d")?;
    let gamma: f64 = parse_field(tok.next(), 1, "gamma")?;
    let radius: f64 = parse_field(tok.next(), 1, "R_win")?;
    let v0: f64 = parse_field(tok.next(), 1, "v0")?;
    let seed: u64 = parse_field(tok.next(), 1, "seed")?;
    let count: usize = parse_field(tok.next(), 1, "count")?;
    let center: Vec<f64> = tok
        .map(|t| parse_field(Some(t), 1, "center coordinate"))
        .collect::<Result<_>>()?;
    let center = if center.is_empty() {
        Vector::zeros(d)
    } else {
        Vector::from(center)
    };
    let window = WindowSpec::new(d, gamma, center, radius, v0)?;
    let mut roads = Vec::with_capacity(count);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_field(Some(t), i + 1, "road field"))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * d + 1 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {} fields, found {}", 2 * d + 1, vals.len()),
            });
        }
        let anchor = Vector::new(&vals[..d]);
        let direction = Vector::new(&vals[d..2 * d]);
        roads.push(Road {
            line: Line::from_parts(anchor, direction)?,
            speed: vals[2 * d],
        });
    }
    if roads.len() != count {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header announces {count} roads, found {}", roads.len()),
        });
    }
    Ok(ProcessSample {
        window,
        roads,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road(point: &[f64], dir: &[f64], speed: f64) -> Road {
        Road {
            line: Line::through(&Vector::new(point), &Vector::new(dir)).unwrap(),
            speed,
        }
    }

    #[test]
    fn expected_counts() {
        let w = WindowSpec::centered(2, 3.0, 1.0, 0.1).unwrap();
        assert!((w.expected_road_count() - 100.0).abs() < 1e-9);
        let w = WindowSpec::centered(2, 3.0, 2.0, 1.0).unwrap();
        assert_eq!(w.expected_road_count(), 2.0);
        let w = WindowSpec::centered(2, 3.0, 2.0, 1e200).unwrap();
        assert_eq!(w.expected_road_count(), 0.0);
    }

    #[test]
    fn window_validation() {
        assert!(WindowSpec::centered(2, 2.0, 1.0, 1.0).is_err());
        assert!(WindowSpec::centered(2, 3.0, 0.0, 1.0).is_err());
        assert!(WindowSpec::centered(2, 3.0, 1.0, 0.0).is_err());
        assert!(WindowSpec::new(2, 3.0, Vector::zeros(3), 1.0, 1.0).is_err());
    }

    #[test]
    fn sample_is_deterministic_and_valid() {
        let w = WindowSpec::centered(2, 3.0, 1.0, 0.2).unwrap();
        let a = sample_process(17, &w).unwrap();
        let b = sample_process(17, &w).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert!(a.count() > 0);
        let c = sample_process(18, &w).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fastest_first_is_sorted_and_valid() {
        let w = WindowSpec::centered(3, 4.0, 1.5, 0.3).unwrap();
        let s = sample_process_fastest_first(5, &w).unwrap();
        s.validate().unwrap();
        assert!(s.roads.windows(2).all(|p| p[0].speed > p[1].speed));
    }

    #[test]
    fn fastest_queries() {
        let w = WindowSpec::centered(2, 3.0, 5.0, 1.0).unwrap();
        let empty = ProcessSample::empty(w.clone(), 0);
        let x = Vector::zeros(2);
        assert_eq!(fastest_in_ball(&empty, &x, 1.0).unwrap().speed, 0.0);
        assert_eq!(
            fastest_two_ball(&empty, &x, 1.0, &x, 1.0).unwrap().speed,
            0.0
        );

        let mut s = empty.clone();
        s.roads.push(road(&[0.0, 0.5], &[1.0, 0.0], 7.0));
        assert_eq!(fastest_in_ball(&s, &x, 0.4).unwrap().speed, 0.0);
        assert_eq!(fastest_in_ball(&s, &x, 0.6).unwrap().speed, 7.0);

        let mut s = empty.clone();
        s.roads.push(road(&[0.0, 0.0], &[1.0, 1.0], 3.0));
        let y = Vector::new(&[2.0, 2.0]);
        assert_eq!(fastest_two_ball(&s, &x, 0.1, &y, 0.1).unwrap().speed, 3.0);
        let q = fastest_in_ball(&s, &Vector::new(&[4.9, 0.0]), 1.0).unwrap();
        assert!(!q.in_window);
    }

    #[test]
    fn crossings_detect_concurrent_lines() {
        let w = WindowSpec::centered(2, 3.0, 5.0, 1.0).unwrap();
        let mut s = ProcessSample::empty(w, 0);
        s.roads.push(road(&[1.0, 1.0], &[1.0, 0.0], 2.0));
        s.roads.push(road(&[1.0, 1.0], &[0.0, 1.0], 3.0));
        s.roads.push(road(&[1.0, 1.0], &[1.0, 1.0], 4.0));
        s.roads.push(road(&[0.0, 3.0], &[1.0, 0.2], 5.0));
        let rep = check_simple_crossings(&s, 1e-9).unwrap();
        assert_eq!(rep.triples, vec![(0, 1, 2)]);

        let w3 = WindowSpec::centered(3, 4.0, 5.0, 1.0).unwrap();
        let mut s3 = ProcessSample::empty(w3, 0);
        s3.roads.push(road(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 2.0));
        s3.roads.push(road(&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 3.0));
        s3.roads.push(road(&[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0], 4.0));
        let rep = check_simple_crossings(&s3, 1e-9).unwrap();
        assert_eq!(rep.pairs, vec![(0, 1)]);
    }

    #[test]
    fn derived_seeds() {
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
        let mut all: Vec<u64> = (0..=100_000).map(|i| derive_seed(12345, i)).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 100_001);
    }

    #[test]
    fn text_format_round_trip() {
        let w = WindowSpec::new(3, 4.5, Vector::new(&[0.1, -0.2, 0.3]), 1.3, 0.4).unwrap();
        let s = sample_process(99, &w).unwrap();
        let mut buf = Vec::new();
        write_sample(&s, &mut buf).unwrap();
        let back = read_sample(&buf[..]).unwrap();
        assert_eq!(back, s);
        let header = String::from_utf8(buf).unwrap();
        assert!(header.starts_with(&format!(
            "3 4.5000000000000000e0 1.3000000000000000e0 4.0000000000000002e-1 99 {}",
            s.count()
        )));
    }

    #[test]
    fn bad_text_is_rejected() {
        assert!(read_sample(&b""[..]).is_err());
        assert!(read_sample(&b"2 3 1 1 0 1\n0 0 1 0\n"[..]).is_err());
        assert!(matches!(
            read_sample(&b"2 3 1 1 0 2\n0 0 1 0 5\n"[..]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn recoupling_keeps_lines() {
        let w = WindowSpec::centered(2, 3.0, 1.0, 1.0).unwrap();
        let s = sample_process(4, &w).unwrap();
        let t = s.recouple(5.0).unwrap();
        assert_eq!(t.window.v0, 1.0);
        for (a, b) in s.roads.iter().zip(&t.roads) {
            assert_eq!(a.line, b.line);
            assert!((b.speed - a.speed.sqrt()).abs() < 1e-12);
        }
        t.validate().unwrap();
    }
}
