use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nearfield_zzb::runner::{
    detect_threshold, emit, load_config, render, run_sweep, sweep_points, BoundCurve, Engine, Format,
    ScenarioConfig,
};
use nearfield_zzb::Error;

#[derive(Parser)]
#[command(name = "nfzzb", version, about = "Near-field Ziv-Zakai and Cramer-Rao bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global CRB along the sweep.
    Crb(Common),
    /// Ziv-Zakai bound along the sweep.
    Zzb(Common),
    /// Monte Carlo ML mean-squared error along the sweep.
    Mle(Common),
    /// Every engine listed in the scenario.
    Sweep(Common),
    /// SNR threshold where the ZZB meets the global CRB within a ratio.
    Threshold(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Sweep override: a single value or `start:stop:step`, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Number of antennas.
    #[arg(long)]
    k: Option<usize>,
    /// Array aperture in meters; replaces any spacing in the scenario.
    #[arg(long)]
    aperture_m: Option<f64>,
    /// Engine list override; repeat for several.
    #[arg(long = "engine")]
    engines: Vec<String>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value_t = 2.0)]
    threshold_ratio: f64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 4,
        Error::NonConvergence(_) | Error::Singular(_) | Error::Conditioning(_) => 3,
        _ => 2,
    }
}

fn parse_snr(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("--snr-db `{spec}`: expected a value or start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x] => Ok(vec![*x]),
        [a, b, s] => sweep_points(*a, *b, *s),
        _ => Err(bad()),
    }
}

fn default_zzb(cfg: &ScenarioConfig) -> Vec<Engine> {
    let listed: Vec<Engine> = cfg.engines.iter().copied().filter(Engine::is_zzb).collect();
    if !listed.is_empty() {
        return listed;
    }
    if cfg.priors.iter().all(|c| c.prior.is_known_angle()) {
        vec![Engine::ZzbKnownAoa]
    } else {
        vec![Engine::ZzbJointDistance]
    }
}

fn prepare(cmd: &Command, args: &Common) -> Result<ScenarioConfig, Error> {
    let base = load_config(&args.config)?;
    let mut doc = base.doc.clone();
    if let Some(k) = args.k {
        doc.array.num_antennas = k;
    }
    if let Some(a) = args.aperture_m {
        doc.array.aperture_m = Some(a);
        doc.array.spacing_m = None;
        doc.array.spacing_wavelengths = None;
    }
    if let Some(seed) = args.seed {
        doc.monte_carlo.seed = seed;
    }
    if let Some(out) = &args.out {
        doc.output = Some(out.clone());
    }
    let engines = if !args.engines.is_empty() {
        args.engines
            .iter()
            .map(|e| e.parse())
            .collect::<Result<Vec<Engine>, _>>()?
    } else {
        match cmd {
            Command::Crb(_) => vec![Engine::CrbGlobal],
            Command::Zzb(_) => default_zzb(&base),
            Command::Mle(_) => vec![Engine::Mle],
            Command::Sweep(_) => base.engines.clone(),
            Command::Threshold(_) => {
                let mut e = default_zzb(&base);
                e.push(Engine::CrbGlobal);
                e
            }
        }
    };
    doc.engines = engines;
    let mut cfg = ScenarioConfig::from_doc(doc)?;
    if let Some(spec) = &args.snr_db {
        cfg.set_snr_points(parse_snr(spec)?)?;
    }
    Ok(cfg)
}

fn write(curves: &[BoundCurve], format: Format, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => {
            for p in emit(curves, format, path)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => print!("{}", render(curves, format)),
    }
    Ok(())
}

fn run(cmd: Command) -> Result<u8, Error> {
    let args = match &cmd {
        Command::Crb(a) | Command::Zzb(a) | Command::Mle(a) | Command::Sweep(a) | Command::Threshold(a) => a,
    };
    let format: Format = args.format.parse()?;
    let cfg = prepare(&cmd, args)?;
    let curves = run_sweep(&cfg)?;

    for c in &curves {
        for w in &c.metadata.warnings {
            eprintln!("warning: {}: {w}", c.label);
        }
        for f in &c.metadata.failures {
            eprintln!("warning: {}: {} at {} dB: {}", c.label, f.series, f.snr_db, f.message);
        }
    }

    let out = cfg.doc.output.as_ref();
    if let Command::Threshold(_) = cmd {
        println!("curve,threshold_db");
        for c in &curves {
            if c.series(nearfield_zzb::runner::SERIES_ZZB).is_none() {
                continue;
            }
            let t = detect_threshold(c, args.threshold_ratio)?;
            match t {
                Some(db) => println!("{},{}", c.label, nearfield_zzb::runner::fmt_g12(db)),
                None => println!("{},none", c.label),
            }
        }
        if let Some(path) = out {
            write(&curves, format, Some(path))?;
        }
    } else {
        write(&curves, format, out)?;
    }

    if curves.iter().any(|c| !c.is_converged()) {
        eprintln!("error: at least one zzb value did not meet the convergence target");
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
