//! One runner per subcommand. Each returns the text printed on success.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use roadmetric::estimators::{
    covering_counts, fit_covering, fit_exponent, multiscale_mc_check, qcp_curve, scaling_ks,
    theta_ratio, volume_curves, EpsilonRule, ExperimentReport, QcpConfig, ScalingConfig,
    VolumeConfig,
};
use roadmetric::geom::Vector;
use roadmetric::metric::{
    kendall_recursive_upper, lower_certificate_split, t_eps_upper, FieldEngine, GridSpec,
};
use roadmetric::sampler::{
    derive_seed, read_sample, sample_process, write_sample, ProcessSample, WindowSpec,
};

use crate::battery::{self, Tier};
use crate::output::{
    field_scale, format_real, meta_path, write_field_pgm, write_meta, write_report,
};
use crate::{CliError, RunConfig};

fn point(v: &Option<Vec<f64>>, default: Vector) -> Vector {
    v.as_deref().map_or(default, Vector::new)
}

fn require_planar(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.d != 2 {
        return Err(CliError::Usage(format!(
            "{what} needs d = 2, got d = {}",
            cfg.d
        )));
    }
    Ok(())
}

fn out_file(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    Ok(cfg.out_dir_created()?.join(name))
}

fn seed_header(cfg: &RunConfig) -> Vec<(String, String)> {
    vec![("master_seed".into(), cfg.master_seed.to_string())]
}

/// The sample named by `sample_file`, or a fresh draw from `master_seed`
/// in `window`.
fn load_or_sample(cfg: &RunConfig, window: &WindowSpec) -> Result<ProcessSample, CliError> {
    match &cfg.sample_file {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::io(path, e))?;
            let s = read_sample(BufReader::new(f)).map_err(|e| match e {
                roadmetric::Error::Io(e) => CliError::io(path, e),
                e => CliError::Model(e),
            })?;
            if s.dim() != cfg.d {
                return Err(CliError::Usage(format!(
                    "{} holds a d = {} sample, config has d = {}",
                    path.display(),
                    s.dim(),
                    cfg.d
                )));
            }
            Ok(s)
        }
        None => Ok(sample_process(cfg.master_seed, window)?),
    }
}

pub fn sample(cfg: &RunConfig) -> Result<String, CliError> {
    let center = point(&cfg.x, Vector::zeros(cfg.d));
    let window = WindowSpec::new(
        cfg.d,
        cfg.gamma,
        center,
        cfg.window_radius.unwrap_or(4.0),
        cfg.v0(),
    )?;
    let s = sample_process(cfg.master_seed, &window)?;
    let path = out_file(cfg, "sample.txt")?;
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_sample(&s, BufWriter::new(f)).map_err(|e| match e {
        roadmetric::Error::Io(e) => CliError::io(&path, e),
        e => CliError::Model(e),
    })?;
    write_meta(&meta_path(&path), &seed_header(cfg), &cfg.echo())?;
    Ok(format!("{} roads -> {}", s.count(), path.display()))
}

pub fn dist(cfg: &RunConfig) -> Result<String, CliError> {
    let x = point(&cfg.x, Vector::zeros(cfg.d));
    let y = point(&cfg.y, Vector::basis(cfg.d, cfg.d - 1));
    let mid = &(&x + &y) * 0.5;
    let radius = cfg.window_radius.unwrap_or(4.0 * x.distance(&y).max(1.0));
    let window = WindowSpec::new(cfg.d, cfg.gamma, mid, radius, cfg.v0())?;
    let s = load_or_sample(cfg, &window)?;
    let solver = cfg.solver();
    let lower = lower_certificate_split(&s, &x, &y, cfg.epsilon)?;
    let upper = t_eps_upper(&s, &x, &y, &solver)?;
    let kendall = kendall_recursive_upper(
        &s,
        &x,
        &y,
        cfg.kendall_alpha,
        cfg.kendall_depth,
        cfg.epsilon,
    )?;
    if lower > upper.time * (1.0 + 1e-9) + 1e-12 {
        return Err(CliError::Invariant(format!(
            "lower certificate {lower} exceeds the solver time {}",
            upper.time
        )));
    }
    let mut text = format!(
        "lower_certificate = {}\nt_eps_upper = {}\nkendall_recursive_upper = {}\ngap = {}",
        format_real(lower),
        format_real(upper.time),
        format_real(kendall.time),
        format_real(upper.time - lower)
    );
    if upper.window_suspect {
        text.push_str("\nwarning: path runs close to the window boundary");
    }
    Ok(text)
}

pub fn field(cfg: &RunConfig) -> Result<String, CliError> {
    require_planar(cfg, "field")?;
    let x = point(&cfg.x, Vector::zeros(2));
    let hw = cfg.grid_half_width.unwrap_or(2.0);
    let grid = GridSpec::centered([x[0], x[1]], hw, cfg.grid_n.unwrap_or(256))?;
    let window = WindowSpec::new(
        2,
        cfg.gamma,
        x.clone(),
        cfg.window_radius.unwrap_or(2.0 * hw),
        cfg.v0(),
    )?;
    let s = load_or_sample(cfg, &window)?;
    let f = FieldEngine::new(&s, &cfg.solver())?.field(&x, &grid)?;
    let path = out_file(cfg, "field.pgm")?;
    let v_max = field_scale(&f);
    let mut echo = seed_header(cfg);
    echo.extend(cfg.echo());
    write_field_pgm(&f, &path, v_max, &echo)?;
    Ok(format!(
        "{}x{} field, max {} -> {}",
        grid.nx,
        grid.ny,
        format_real(v_max),
        path.display()
    ))
}

/// `2^{-k/4}` for `k = 12, …, 0`.
fn default_qcp_ts() -> Vec<f64> {
    (0..=12)
        .rev()
        .map(|k| 2f64.powf(-(k as f64) / 4.0))
        .collect()
}

fn fit_window(cfg: &RunConfig, lo: f64, hi: f64) -> (f64, f64) {
    (cfg.fit_lo.unwrap_or(lo), cfg.fit_hi.unwrap_or(hi))
}

fn fit_text(points: &[roadmetric::estimators::CurvePoint], window: (f64, f64)) -> String {
    match fit_exponent(points, window) {
        Ok(f) => format!(
            "{:.4} (r2 {:.4}, {} points)",
            f.slope, f.r_squared, f.n_points
        ),
        Err(e) => format!("unavailable: {e}"),
    }
}

pub fn qcp(cfg: &RunConfig) -> Result<String, CliError> {
    let t_list = cfg.t_list.clone().unwrap_or_else(default_qcp_ts);
    let mut q = QcpConfig::new(
        cfg.d,
        cfg.gamma,
        t_list,
        cfg.n_samples.unwrap_or(10_000),
        cfg.master_seed,
    );
    q.epsilon_rule = EpsilonRule::Proportional(cfg.epsilon_ratio);
    q.road_cap = cfg.road_cap;
    q.solver = cfg.solver();
    if let Some(r) = cfg.window_radius {
        q.window_radius = r;
    }
    let points = qcp_curve(&q)?;
    let mut report = ExperimentReport::new(
        "qcp",
        cfg.echo(),
        &["t", "estimate_upper", "estimate_cert", "stderr", "n"],
    );
    for p in &points {
        report.push_row(vec![
            p.t.into(),
            p.upper.value.into(),
            p.cert.value.into(),
            p.upper.stderr.into(),
            p.upper.n.into(),
        ]);
        if p.capped > 0 {
            report.warnings.push(format!(
                "t = {}: {} samples exceeded road_cap",
                p.t, p.capped
            ));
        }
    }
    let path = write_report(&cfg.out_dir_created()?, &report)?;
    let upper: Vec<_> = points.iter().map(|p| p.upper).collect();
    let window = fit_window(cfg, 0.0, 1.0);
    Ok(format!(
        "slope {} -> {}",
        fit_text(&upper, window),
        path.display()
    ))
}

/// `2^{j/8}` for `j = 0, …, 16`.
fn default_volume_ts() -> Vec<f64> {
    (0..=16).map(|j| 2f64.powf(j as f64 / 8.0)).collect()
}

pub fn volume(cfg: &RunConfig) -> Result<String, CliError> {
    require_planar(cfg, "volume")?;
    let t_list = cfg.t_list.clone().unwrap_or_else(default_volume_ts);
    let mut v = VolumeConfig::new(
        cfg.gamma,
        t_list,
        cfg.n_samples.unwrap_or(8),
        cfg.epsilon,
        cfg.master_seed,
    );
    v.window_radius = cfg.window_radius.unwrap_or(12.0);
    v.grid_half_width = cfg.grid_half_width.unwrap_or(9.0);
    v.grid_n = cfg.grid_n.unwrap_or(300);
    v.on_road_radius = cfg.on_road_radius;
    v.solver = cfg.solver();
    if !cfg.is_set("hop_neighbors") {
        v.solver.hop_neighbors = 4;
    }
    if !cfg.is_set("candidate_depth") {
        v.solver.candidate_depth = 0;
    }
    let (typ, road) = volume_curves(&v)?;
    let theta = theta_ratio(&road, cfg.gamma)?;
    let mut report = ExperimentReport::new(
        "volume",
        cfg.echo(),
        &[
            "t",
            "typical",
            "typical_stderr",
            "typical_n",
            "on_road",
            "on_road_stderr",
            "on_road_n",
            "typical_contaminated",
            "on_road_contaminated",
            "theta_mean",
            "theta_cv",
        ],
    );
    for (k, ((a, b), th)) in typ.points.iter().zip(&road.points).zip(&theta).enumerate() {
        report.push_row(vec![
            a.t.into(),
            a.value.into(),
            a.stderr.into(),
            a.n.into(),
            b.value.into(),
            b.stderr.into(),
            b.n.into(),
            typ.contaminated[k].into(),
            road.contaminated[k].into(),
            th.mean.into(),
            th.cv.into(),
        ]);
    }
    report.warnings.push(format!(
        "samples dropped for boundary contamination: typical {}, on-road {}",
        typ.dropped, road.dropped
    ));
    report.warnings.push(format!(
        "on-road samples without a usable road: {}",
        road.skipped
    ));
    report.warnings.push(format!(
        "all-hop crossover radius: typical {}, on-road {}",
        typ.crossover, road.crossover
    ));
    let path = write_report(&cfg.out_dir_created()?, &report)?;
    let window = fit_window(cfg, 2.0, 4.0);
    Ok(format!(
        "typical slope {}\non-road slope {}\n-> {}",
        fit_text(&typ.points, window),
        fit_text(&road.points, window),
        path.display()
    ))
}

pub fn scaling(cfg: &RunConfig) -> Result<String, CliError> {
    let n = cfg.n_samples.unwrap_or(1000);
    let mut s = ScalingConfig::new(cfg.d, cfg.gamma, cfg.r, n, cfg.master_seed);
    if cfg.is_set("epsilon") {
        s.epsilon = cfg.epsilon;
    }
    if let Some(r) = cfg.window_radius {
        s.window_radius = r;
    }
    s.control_exponent = cfg.control_exponent;
    s.solver = cfg.solver();
    let out = scaling_ks(&s)?;
    let mut report = ExperimentReport::new(
        "scaling",
        cfg.echo(),
        &[
            "r",
            "n",
            "ks_stat",
            "p_value",
            "control_ks_stat",
            "control_p_value",
        ],
    );
    report.push_row(vec![
        cfg.r.into(),
        n.into(),
        out.ks.statistic.into(),
        out.ks.p_value.into(),
        out.control.statistic.into(),
        out.control.p_value.into(),
    ]);
    let path = write_report(&cfg.out_dir_created()?, &report)?;
    Ok(format!(
        "ks {:.4} p {:.4}, control ks {:.4} p {:.4} -> {}",
        out.ks.statistic,
        out.ks.p_value,
        out.control.statistic,
        out.control.p_value,
        path.display()
    ))
}

/// Nine scales from 4 down by factors of `2^{1/8}`.
fn default_dim_ts() -> Vec<f64> {
    (0..9)
        .map(|j| 4.0 * std::f64::consts::SQRT_2 * 2f64.powf(-(j as f64) / 8.0))
        .collect()
}

pub fn dim(cfg: &RunConfig) -> Result<String, CliError> {
    require_planar(cfg, "dim")?;
    let mut scales = cfg.t_list.clone().unwrap_or_else(default_dim_ts);
    scales.sort_by(|a, b| b.total_cmp(a));
    let grid = GridSpec::centered(
        [0.0, 0.0],
        cfg.grid_half_width.unwrap_or(8.0),
        cfg.grid_n.unwrap_or(200),
    )?;
    let window = WindowSpec::centered(2, cfg.gamma, cfg.window_radius.unwrap_or(12.0), cfg.v0())?;
    let mut solver = cfg.solver();
    if !cfg.is_set("hop_neighbors") {
        solver.hop_neighbors = 4;
    }
    if !cfg.is_set("candidate_depth") {
        solver.candidate_depth = 0;
    }
    let mut report = ExperimentReport::new("dim", cfg.echo(), &["sample", "t", "count"]);
    let mut lines = Vec::new();
    for i in 0..cfg.n_samples.unwrap_or(1) {
        let s = sample_process(derive_seed(cfg.master_seed, i as u64), &window)?;
        let engine = FieldEngine::new(&s, &solver)?;
        let field = engine.field(&Vector::zeros(2), &grid)?;
        let counts = covering_counts(&engine, &field, &scales)?;
        for c in &counts {
            report.push_row(vec![i.into(), c.t.into(), (c.value as usize).into()]);
        }
        match fit_covering(&counts) {
            Ok(f) => lines.push(format!(
                "sample {i}: slope {:.4} (r2 {:.4})",
                f.slope, f.r_squared
            )),
            Err(e) => lines.push(format!("sample {i}: slope unavailable: {e}")),
        }
    }
    let path = write_report(&cfg.out_dir_created()?, &report)?;
    lines.push(format!("-> {}", path.display()));
    Ok(lines.join("\n"))
}

pub fn bounds(cfg: &RunConfig) -> Result<String, CliError> {
    let (n, k) = (cfg.scale_lo, cfg.scale_hi);
    let x = point(&cfg.x, Vector::zeros(cfg.d));
    let r0 = cfg.r_seq.first().copied().unwrap_or(1.0);
    let vmin = cfg
        .v_seq
        .get(n..=k)
        .unwrap_or(&[])
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let v0 = if cfg.is_set("v0") { cfg.v0() } else { vmin };
    let window = WindowSpec::new(
        cfg.d,
        cfg.gamma,
        x.clone(),
        cfg.window_radius.unwrap_or(r0),
        v0,
    )?;
    let samples = cfg.n_samples.unwrap_or(100_000);
    let rep = multiscale_mc_check(
        &x,
        &cfg.r_seq,
        &cfg.v_seq,
        n,
        k,
        &window,
        samples,
        cfg.master_seed,
    )?;
    let mut report = ExperimentReport::new(
        "bounds",
        cfg.echo(),
        &[
            "n",
            "K",
            "upper_bound",
            "lower_bound",
            "estimate",
            "stderr",
            "n_samples",
            "upper_ok",
            "lower_ok",
        ],
    );
    report.push_row(vec![
        n.into(),
        k.into(),
        rep.upper_bound.into(),
        rep.lower_bound.into(),
        rep.estimate.into(),
        rep.stderr.into(),
        samples.into(),
        rep.upper_ok.into(),
        rep.lower_ok.into(),
    ]);
    let path = write_report(&cfg.out_dir_created()?, &report)?;
    let text = format!(
        "estimate {:.6} +- {:.6}, bounds [{:.6}, {:.6}] -> {}",
        rep.estimate,
        rep.stderr,
        rep.lower_bound,
        rep.upper_bound,
        path.display()
    );
    if !rep.passes() {
        return Err(CliError::Invariant(text));
    }
    Ok(text)
}

/// Runs the battery, printing one line per check as it finishes.
pub fn verify(tier: Tier, only: Option<&[String]>) -> Result<String, CliError> {
    let results = battery::run(tier, only, |r| println!("{}", r.line()));
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(format!("{} checks passed", results.len()))
    } else {
        Err(CliError::Invariant(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

impl RunConfig {
    fn out_dir_created(&self) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(&self.out_dir, e))?;
        Ok(self.out_dir.clone())
    }
}
