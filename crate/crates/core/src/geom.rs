//! Affine lines in ℝ^d and the rotation/translation invariant line measure.
//!
//! Lines are stored in a canonical form: a unit direction whose first
//! non-negligible coordinate is positive, and the foot of the perpendicular
//! dropped from the origin. Two descriptions of the same geometric line map to
//! the same canonical fields.
//!
//! The invariant measure is normalised so that the lines hitting a ball of
//! radius `r` have mass `υ_{d-1} r^{d-1}`, where `υ_s` is the volume of the
//! unit ball of ℝ^s.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use smallvec::SmallVec;

use crate::error::{check_dim, Error, Result};

/// Threshold on `1 - |cos θ|` below which two lines are treated as parallel.
pub const PARALLEL_TOL: f64 = 1e-12;

/// Coordinates below this magnitude are ignored when choosing the sign of a
/// canonical direction.
const SIGN_TOL: f64 = 1e-12;

/// A point or displacement in ℝ^d. Inline storage up to d = 4.
#[derive(Clone, PartialEq)]
pub struct Vector(SmallVec<[f64; 4]>);

impl Vector {
    pub fn new(coords: &[f64]) -> Self {
        Vector(SmallVec::from_slice(coords))
    }

    pub fn zeros(d: usize) -> Self {
        Vector(SmallVec::from_elem(0.0, d))
    }

    /// The `i`-th canonical basis vector (0-based).
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + t * dir`
    pub fn offset(&self, dir: &Vector, t: f64) -> Vector {
        Vector(self.0.iter().zip(&dir.0).map(|(a, b)| a + t * b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(SmallVec::from_vec(v))
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * rhs).collect())
    }
}

/// An affine line in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    direction: Vector,
    anchor: Vector,
}

impl Line {
    /// Canonical line through `point` with the given (nonzero) direction.
    pub fn through(point: &Vector, direction: &Vector) -> Result<Line> {
        check_dim(point.dim(), direction.dim())?;
        if point.dim() < 2 {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension must be at least 2, got {}",
                point.dim()
            )));
        }
        if !point.is_finite() || !direction.is_finite() {
            return Err(Error::InvalidArgument("non-finite coordinates".into()));
        }
        let n2 = direction.norm_sq();
        if n2 == 0.0 {
            return Err(Error::InvalidArgument("zero direction vector".into()));
        }
        // Already-canonical fields keep their bits so that canonicalisation is idempotent.
        let slack = 8.0 * point.dim() as f64 * f64::EPSILON;
        let mut u = if (n2 - 1.0).abs() <= slack {
            direction.clone()
        } else {
            direction * (1.0 / n2.sqrt())
        };
        if let Some(lead) = u.0.iter().find(|c| c.abs() > SIGN_TOL) {
            if *lead < 0.0 {
                u = &u * -1.0;
            }
        }
        let mut anchor = point.clone();
        for _ in 0..8 {
            let along = anchor.dot(&u);
            if along.abs() <= slack * anchor.norm() {
                break;
            }
            anchor = anchor.offset(&u, -along);
        }
        Ok(Line {
            direction: u,
            anchor,
        })
    }

    /// Rebuilds a line from stored canonical fields, re-validating them.
    pub fn from_parts(anchor: Vector, direction: Vector) -> Result<Line> {
        Line::through(&anchor, &direction)
    }

    pub fn direction(&self) -> &Vector {
        &self.direction
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    /// Point at signed arc-length `t` from the anchor.
    pub fn point_at(&self, t: f64) -> Vector {
        self.anchor.offset(&self.direction, t)
    }

    /// Arc-length parameter of the orthogonal projection of `x`.
    pub fn parameter_of(&self, x: &Vector) -> f64 {
        (x - &self.anchor).dot(&self.direction)
    }

    /// Orthogonal projection of `x` onto the line.
    pub fn project(&self, x: &Vector) -> Vector {
        self.point_at(self.parameter_of(x))
    }

    /// Euclidean distance from `x` to the line.
    pub fn distance_to(&self, x: &Vector) -> f64 {
        let w = x - &self.anchor;
        let t = w.dot(&self.direction);
        w.offset(&self.direction, -t).norm()
    }

    /// Whether the line meets the closed ball.
    pub fn hits(&self, ball: &Ball) -> bool {
        self.distance_to(&ball.center) <= ball.radius
    }
}

pub fn canonicalize_line(point: &Vector, direction: &Vector) -> Result<Line> {
    Line::through(point, direction)
}

pub fn project_point(x: &Vector, line: &Line) -> Result<Vector> {
    check_dim(line.dim(), x.dim())?;
    Ok(line.project(x))
}

pub fn point_line_distance(x: &Vector, line: &Line) -> Result<f64> {
    check_dim(line.dim(), x.dim())?;
    Ok(line.distance_to(x))
}

/// A closed Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vector,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Ball> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.center.distance(x) <= self.radius
    }
}

/// Closest points between two lines.
#[derive(Clone, Debug)]
pub struct ClosestPair {
    /// Point on the first line.
    pub a: Vector,
    /// Point on the second line.
    pub b: Vector,
    /// Arc-length parameter of `a` on the first line.
    pub s: f64,
    /// Arc-length parameter of `b` on the second line.
    pub t: f64,
    pub gap: f64,
    pub parallel: bool,
}

/// Closest points between `l1` and `l2`. For parallel lines (|cos θ| above
/// `1 - parallel_tol`) the pair is the anchor of `l1` and its projection on `l2`.
pub fn closest_pair(l1: &Line, l2: &Line, parallel_tol: f64) -> Result<ClosestPair> {
    check_dim(l1.dim(), l2.dim())?;
    let u1 = &l1.direction;
    let u2 = &l2.direction;
    let w0 = &l1.anchor - &l2.anchor;
    let c = u1.dot(u2);
    let (s, t, parallel) = if c.abs() > 1.0 - parallel_tol {
        (0.0, l2.parameter_of(&l1.anchor), true)
    } else {
        let d = u1.dot(&w0);
        let e = u2.dot(&w0);
        let s = (c * e - d) / (1.0 - c * c);
        (s, e + s * c, false)
    };
    let a = l1.point_at(s);
    let b = l2.point_at(t);
    let gap = a.distance(&b);
    Ok(ClosestPair {
        a,
        b,
        s,
        t,
        gap,
        parallel,
    })
}

/// Lebesgue measure of the unit ball of ℝ^s, `π^{s/2} / Γ(s/2 + 1)`.
pub fn unit_ball_volume(s: u32) -> f64 {
    // υ_s = (2π / s) υ_{s-2}
    let mut v = if s.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = 2 + s % 2;
    while k <= s {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Invariant measure of the set of lines hitting a ball of radius `r` in ℝ^d.
pub fn mu_ball_mass(d: usize, r: f64) -> f64 {
    unit_ball_volume(d as u32 - 1) * r.powi(d as i32 - 1)
}

/// Isotropic unit vector in ℝ^d (normalised standard Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vector {
    loop {
        let g: Vector = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect::<Vec<_>>()
            .into();
        let n = g.norm();
        if n > 1e-150 {
            return &g * (1.0 / n);
        }
    }
}

/// Draws a line from the invariant measure restricted to lines hitting `ball`,
/// normalised to a probability.
pub fn sample_line_hitting_ball<R: Rng + ?Sized>(rng: &mut R, ball: &Ball) -> Result<Line> {
    if !(ball.radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive, got {}",
            ball.radius
        )));
    }
    let d = ball.center.dim();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 2".into(),
        ));
    }
    let u = random_unit_vector(rng, d);
    // Uniform direction inside the hyperplane orthogonal to u.
    let w = loop {
        let g = random_unit_vector(rng, d);
        let w = g.offset(&u, -g.dot(&u));
        let n = w.norm();
        if n > 1e-6 {
            break &w * (1.0 / n);
        }
    };
    let radius = ball.radius * rng.random::<f64>().powf(1.0 / (d as f64 - 1.0));
    Line::through(&ball.center.offset(&w, radius), &u)
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Estimates the invariant measure of the lines hitting both balls.
pub fn two_ball_hit_fraction<R: Rng + ?Sized>(
    b1: &Ball,
    b2: &Ball,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    check_dim(b1.center.dim(), b2.center.dim())?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    let mass = mu_ball_mass(b1.center.dim(), b1.radius);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        if sample_line_hitting_ball(rng, b1)?.hits(b2) {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    Ok(Estimate {
        value: mass * p,
        stderr: mass * (p * (1.0 - p) / n_samples as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c)
    }

    #[test]
    fn canonical_examples() {
        let l = Line::through(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(l.anchor(), &v(&[0.0, 0.0]));
        assert_eq!(l.direction(), &v(&[1.0, 0.0]));

        let l = Line::through(&v(&[3.0, 5.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(l.anchor(), &v(&[0.0, 5.0]));

        let l = Line::through(&v(&[1.0, 1.0]), &v(&[-2.0, 0.0])).unwrap();
        assert_eq!(l.anchor(), &v(&[0.0, 1.0]));
        assert_eq!(l.direction(), &v(&[1.0, 0.0]));
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(matches!(
            Line::through(&v(&[1.0, 1.0]), &v(&[0.0, 0.0])),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Line::through(&v(&[1.0, 1.0, 0.0]), &v(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_and_distance() {
        let xaxis = Line::through(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(xaxis.project(&v(&[0.0, 1.0])), v(&[0.0, 0.0]));
        assert_eq!(xaxis.project(&v(&[4.0, 0.0])), v(&[4.0, 0.0]));
        let l = Line::through(&v(&[0.0, 1.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(l.project(&v(&[2.0, 3.0])), v(&[2.0, 1.0]));

        assert_eq!(xaxis.distance_to(&v(&[0.0, 1.0])), 1.0);
        assert_eq!(xaxis.distance_to(&v(&[5.0, 0.0])), 0.0);
        assert_eq!(xaxis.distance_to(&v(&[3.0, 4.0])), 4.0);
    }

    #[test]
    fn closest_pair_examples() {
        let x = Line::through(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        let y = Line::through(&v(&[0.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
        let cp = closest_pair(&x, &y, PARALLEL_TOL).unwrap();
        assert_eq!(cp.a, v(&[0.0, 0.0]));
        assert_eq!(cp.b, v(&[0.0, 0.0]));
        assert_eq!(cp.gap, 0.0);

        let y1 = Line::through(&v(&[0.0, 1.0]), &v(&[1.0, 0.0])).unwrap();
        let cp = closest_pair(&x, &y1, PARALLEL_TOL).unwrap();
        assert!(cp.parallel);
        assert_eq!(cp.gap, 1.0);

        let x3 = Line::through(&v(&[0.0, 0.0, 0.0]), &v(&[1.0, 0.0, 0.0])).unwrap();
        let l2 = Line::through(&v(&[0.0, 0.0, 1.0]), &v(&[0.0, 1.0, 0.0])).unwrap();
        let cp = closest_pair(&x3, &l2, PARALLEL_TOL).unwrap();
        assert_eq!(cp.a, v(&[0.0, 0.0, 0.0]));
        assert_eq!(cp.b, v(&[0.0, 0.0, 1.0]));
        assert_eq!(cp.gap, 1.0);
    }

    #[test]
    fn closest_pair_oblique_2d() {
        let l1 = Line::through(&v(&[1.0, 2.0]), &v(&[1.0, 1.0])).unwrap();
        let l2 = Line::through(&v(&[-3.0, 0.5]), &v(&[2.0, -1.0])).unwrap();
        let cp = closest_pair(&l1, &l2, PARALLEL_TOL).unwrap();
        assert!(cp.gap < 1e-12);
        assert!(l1.distance_to(&cp.a) < 1e-12 && l2.distance_to(&cp.a) < 1e-12);
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert_eq!(mu_ball_mass(2, 1.0), 2.0);
        assert!((mu_ball_mass(3, 2.0) - 4.0 * PI).abs() < 1e-12);
        assert_eq!(mu_ball_mass(4, 0.0), 0.0);
    }

    #[test]
    fn sampled_lines_hit_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let ball = Ball::new(Vector::new(&vec![0.5; d]), 0.7).unwrap();
            for _ in 0..2000 {
                let l = sample_line_hitting_ball(&mut rng, &ball).unwrap();
                assert!(l.distance_to(&ball.center) <= ball.radius + 1e-12);
                assert!((l.direction().norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!(
            sample_line_hitting_ball(&mut rng, &Ball::new(Vector::zeros(2), 0.0).unwrap()).is_err()
        );
    }

    #[test]
    fn identical_balls_hit_with_certainty() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = Ball::new(v(&[1.0, -1.0, 2.0]), 0.3).unwrap();
        let est = two_ball_hit_fraction(&b, &b, 1000, &mut rng).unwrap();
        assert!((est.value - mu_ball_mass(3, 0.3)).abs() < 1e-15);
        assert_eq!(est.stderr, 0.0);
    }
}
