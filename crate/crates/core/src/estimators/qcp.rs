use super::{run_tasks, CurvePoint, EpsilonRule};
use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::metric::{split_bound, t_eps_upper, ExitProfile, SolverConfig};
use crate::sampler::{derive_seed, FastestFirst, ProcessSample, Road, WindowSpec};
use crate::stats::proportion;

/// Quick-connection experiment: `P(T_ε(0, e_d) ≤ t)` for each `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct QcpConfig {
    pub d: usize,
    pub gamma: f64,
    pub t_list: Vec<f64>,
    pub n_per_t: usize,
    pub epsilon_rule: EpsilonRule,
    /// Radius of the sampling window centred at `e_d / 2`.
    pub window_radius: f64,
    /// Largest road set handed to the path solver.
    pub road_cap: usize,
    /// Solver template; its `epsilon` is replaced per `t`.
    pub solver: SolverConfig,
    pub master_seed: u64,
}

impl QcpConfig {
    pub fn new(d: usize, gamma: f64, t_list: Vec<f64>, n_per_t: usize, master_seed: u64) -> Self {
        QcpConfig {
            d,
            gamma,
            t_list,
            n_per_t,
            epsilon_rule: EpsilonRule::default(),
            window_radius: 1.5,
            road_cap: 400,
            solver: SolverConfig::new(1.0),
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.epsilon_rule.validate()?;
        if let Some(t) = self.t_list.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "t must lie in (0, 1], got {t}"
            )));
        }
        if !(self.window_radius >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "window radius {} does not cover the unit balls around the endpoints",
                self.window_radius
            )));
        }
        if self.road_cap == 0 {
            return Err(Error::InvalidConfig("road_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Estimates at one `t`. `upper` counts samples whose solver path takes at
/// most `t`; `cert` counts samples whose lower certificate is at most `t`.
/// The true probability lies between them up to sampling noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QcpPoint {
    pub t: f64,
    pub epsilon: f64,
    pub upper: CurvePoint,
    pub cert: CurvePoint,
    /// Samples left between the two bounds.
    pub undecided: usize,
    /// Samples whose road count exceeded the solver cap.
    pub capped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Separated,
    Connected,
    Open { capped: bool },
}

/// Reveals roads fastest first, alternating the two-ball lower bound (with
/// unrevealed roads assumed as fast as the next one) and the solver on the
/// revealed roads, until one of them settles `T_ε ≤ t`.
fn classify(
    seed: u64,
    window: &WindowSpec,
    t: f64,
    cfg: &SolverConfig,
    cap: usize,
) -> Result<Outcome> {
    let d = window.d;
    let x = Vector::zeros(d);
    let y = Vector::basis(d, d - 1);
    let reach = window.radius - window.center.distance(&x);
    let eps = cfg.epsilon;
    let mut stream = FastestFirst::new(seed, window)?.peekable();
    let mut roads: Vec<Road> = Vec::new();
    let mut solved = 0usize;
    let mut w = 1.0 / t;
    loop {
        while let Some(r) = stream.next_if(|r| r.speed >= w) {
            roads.push(r);
        }
        let floor = stream.peek().map_or(0.0, |r| r.speed);
        let px = ExitProfile::new(roads.iter(), &x, eps, floor);
        let py = ExitProfile::new(roads.iter(), &y, eps, floor);
        if split_bound(&px, &py, 1.0, (reach, reach)) > t {
            return Ok(Outcome::Separated);
        }
        if roads.len() > solved {
            if roads.len() > cap {
                return Ok(Outcome::Open { capped: true });
            }
            let sample = ProcessSample {
                window: window.clone(),
                roads: roads.clone(),
                seed,
            };
            solved = roads.len();
            if t_eps_upper(&sample, &x, &y, cfg)?.time <= t {
                return Ok(Outcome::Connected);
            }
        }
        if floor == 0.0 {
            return Ok(Outcome::Open { capped: false });
        }
        w = (w / std::f64::consts::SQRT_2).min(floor);
    }
}

/// Quick-connection curve. Sample `i` uses the same seed for every `t`, so
/// the curves at different `t` are coupled.
pub fn qcp_curve(config: &QcpConfig) -> Result<Vec<QcpPoint>> {
    config.validate()?;
    let d = config.d;
    let center = &Vector::basis(d, d - 1) * 0.5;
    let mut out = Vec::with_capacity(config.t_list.len());
    for &t in &config.t_list {
        let eps = config.epsilon_rule.epsilon(t);
        let window = WindowSpec::new(d, config.gamma, center.clone(), config.window_radius, eps)?;
        let mut solver = config.solver.clone();
        solver.epsilon = eps;
        solver.validate()?;
        let outcomes = run_tasks(config.n_per_t, |i| {
            classify(
                derive_seed(config.master_seed, i as u64),
                &window,
                t,
                &solver,
                config.road_cap,
            )
        });
        let (mut connected, mut open, mut capped) = (0usize, 0usize, 0usize);
        for o in outcomes {
            match o? {
                Outcome::Connected => connected += 1,
                Outcome::Open { capped: c } => {
                    open += 1;
                    capped += c as usize;
                }
                Outcome::Separated => {}
            }
        }
        let n = config.n_per_t;
        let (pu, su) = proportion(connected, n);
        let (pc, sc) = proportion(connected + open, n);
        out.push(QcpPoint {
            t,
            epsilon: eps,
            upper: CurvePoint {
                t,
                value: pu,
                stderr: su,
                n,
            },
            cert: CurvePoint {
                t,
                value: pc,
                stderr: sc,
                n,
            },
            undecided: open,
            capped,
        });
    }
    Ok(out)
}
