use super::run_tasks;
use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::sampler::{derive_seed, sample_process, WindowSpec};
use crate::stats::proportion;

fn check_sequences(r_seq: &[f64], v_seq: &[f64], n: usize, k: usize) -> Result<()> {
    if r_seq.len() != v_seq.len() {
        return Err(Error::InvalidArgument(format!(
            "radius and speed sequences differ in length ({} vs {})",
            r_seq.len(),
            v_seq.len()
        )));
    }
    if !(n <= k && k < r_seq.len()) {
        return Err(Error::InvalidArgument(format!(
            "need n <= K < {}, got n = {n}, K = {k}",
            r_seq.len()
        )));
    }
    for (name, s) in [("radius", r_seq), ("speed", v_seq)] {
        if s.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "{name} sequence must be positive"
            )));
        }
        if s.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(format!(
                "{name} sequence is not decreasing"
            )));
        }
    }
    Ok(())
}

/// Upper bound on `P(V^x_{r_k} ≥ v_k for all n ≤ k ≤ K)`:
/// `r_K^{d−1} v_n^{−(γ−1)} exp(Σ_{k=n+1}^{K} r_{k−1}^{d−1} v_k^{−(γ−1)})`.
pub fn multiscale_bound(
    r_seq: &[f64],
    v_seq: &[f64],
    n: usize,
    k: usize,
    d: usize,
    gamma: f64,
) -> Result<f64> {
    check_sequences(r_seq, v_seq, n, k)?;
    let (a, b) = (d as f64 - 1.0, gamma - 1.0);
    let sum: f64 = (n + 1..=k)
        .map(|j| r_seq[j - 1].powf(a) * v_seq[j].powf(-b))
        .sum();
    Ok(r_seq[k].powf(a) * v_seq[n].powf(-b) * sum.exp())
}

/// Lower bound `1 − exp(−r_K^{d−1} v_n^{−(γ−1)})`: one road of speed at
/// least `v_n` through the smallest ball realizes every scale at once.
fn multiscale_lower(r_seq: &[f64], v_seq: &[f64], n: usize, k: usize, d: usize, gamma: f64) -> f64 {
    let m = r_seq[k].powf(d as f64 - 1.0) * v_seq[n].powf(-(gamma - 1.0));
    -(-m).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiscaleReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

impl MultiscaleReport {
    pub fn passes(&self) -> bool {
        self.upper_ok && self.lower_ok
    }
}

/// Monte Carlo estimate of `P(V^x_{r_k} ≥ v_k for all n ≤ k ≤ K)` checked
/// against both bounds with a 3σ allowance.
#[allow(clippy::too_many_arguments)]
pub fn multiscale_mc_check(
    x: &Vector,
    r_seq: &[f64],
    v_seq: &[f64],
    n: usize,
    k: usize,
    window: &WindowSpec,
    n_samples: usize,
    master_seed: u64,
) -> Result<MultiscaleReport> {
    let (d, gamma) = (window.d, window.gamma);
    let upper_bound = multiscale_bound(r_seq, v_seq, n, k, d, gamma)?;
    window.validate()?;
    let vmin = v_seq[n..=k].iter().copied().fold(f64::INFINITY, f64::min);
    if window.v0 > vmin {
        return Err(Error::InvalidConfig(format!(
            "window v0 = {} exceeds the smallest speed threshold {vmin}",
            window.v0
        )));
    }
    if window.center.distance(x) + r_seq[0] > window.radius * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "window of radius {} does not cover the ball of radius {} around x",
            window.radius, r_seq[0]
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let hits = run_tasks(n_samples, |i| -> Result<bool> {
        let s = sample_process(derive_seed(master_seed, i as u64), window)?;
        let mut best = vec![0.0f64; k + 1 - n];
        for road in &s.roads {
            let h = road.line.distance_to(x);
            for (j, b) in best.iter_mut().enumerate() {
                if h <= r_seq[n + j] {
                    *b = b.max(road.speed);
                }
            }
        }
        Ok(best.iter().zip(&v_seq[n..=k]).all(|(b, v)| b >= v))
    });
    let mut count = 0usize;
    for h in hits {
        count += h? as usize;
    }
    let (estimate, stderr) = proportion(count, n_samples);
    let lower_bound = multiscale_lower(r_seq, v_seq, n, k, d, gamma);
    // With zero or full counts the binomial error vanishes; allow one event.
    let slack = (3.0 * stderr).max(1.0 / n_samples as f64);
    Ok(MultiscaleReport {
        estimate,
        stderr,
        n_samples,
        upper_bound,
        lower_bound,
        upper_ok: estimate <= upper_bound + slack,
        lower_ok: estimate >= lower_bound - slack,
    })
}
