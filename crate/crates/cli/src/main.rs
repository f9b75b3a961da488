use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use roadmetric_cli::battery::Tier;
use roadmetric_cli::config::KEYS;
use roadmetric_cli::{commands, parse_config, CliError, RunConfig};

/// Monte Carlo experiments on random road metrics.
#[derive(Parser)]
#[command(name = "roadmetric", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides `master_seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores (overrides `workers`).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Config keys given as `--key value` or `--key=value`.
#[derive(Args)]
struct Overrides {
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    rest: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a process sample and write it to `sample.txt`.
    Sample(Overrides),
    /// Print the certificate, solver and recursive-construction times between `x` and `y`.
    Dist(Overrides),
    /// Write the distance field from `x` as a 16-bit PGM.
    Field(Overrides),
    /// Quick-connection curve.
    Qcp(Overrides),
    /// Ball volumes at typical and on-road points.
    Volume(Overrides),
    /// Scaling-law KS test.
    Scaling(Overrides),
    /// Covering counts and box-dimension fits.
    Dim(Overrides),
    /// Multiscale bound check.
    Bounds(Overrides),
    /// Run the verification battery.
    Verify {
        /// Reduced workloads, minutes.
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        /// Every acceptance criterion at full size, hours.
        #[arg(long)]
        full: bool,
        /// Only these check ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

fn apply_overrides(cfg: &mut RunConfig, rest: &[String]) -> Result<(), CliError> {
    let mut it = rest.iter();
    while let Some(arg) = it.next() {
        let flag = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("expected --key value, got {arg:?}")))?;
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        let key = match key.replace('-', "_").as_str() {
            "seed" => "master_seed".to_string(),
            "out" => "out_dir".to_string(),
            k => k.to_string(),
        };
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("unknown option --{flag}")));
        }
        cfg.set(&key, &value, 0)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set("master_seed", &s.to_string(), 0)?;
    }
    if let Some(o) = &cli.out {
        cfg.set("out_dir", &o.display().to_string(), 0)?;
    }
    if let Some(w) = cli.workers {
        cfg.set("workers", &w.to_string(), 0)?;
    }
    let overrides = match &cli.command {
        Command::Sample(o)
        | Command::Dist(o)
        | Command::Field(o)
        | Command::Qcp(o)
        | Command::Volume(o)
        | Command::Scaling(o)
        | Command::Dim(o)
        | Command::Bounds(o) => o.rest.as_slice(),
        Command::Verify { .. } => &[],
    };
    apply_overrides(&mut cfg, overrides)?;
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    match cli.command {
        Command::Sample(_) => commands::sample(&cfg),
        Command::Dist(_) => commands::dist(&cfg),
        Command::Field(_) => commands::field(&cfg),
        Command::Qcp(_) => commands::qcp(&cfg),
        Command::Volume(_) => commands::volume(&cfg),
        Command::Scaling(_) => commands::scaling(&cfg),
        Command::Dim(_) => commands::dim(&cfg),
        Command::Bounds(_) => commands::bounds(&cfg),
        Command::Verify { full, only, .. } => {
            let tier = if full { Tier::Full } else { Tier::Quick };
            commands::verify(tier, (!only.is_empty()).then_some(only.as_slice()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
