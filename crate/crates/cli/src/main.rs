use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fritem::bench::{run_condition_study, run_mse_study, run_table1, StudyReport, DEFAULT_SEED};
use fritem::config::{Config, NoiseSection, RecoveryMethod};
use fritem::encoder::instants_from_csv;
use fritem::{bound_c, encode, filter, reconstruct, validate_rate, BoundMode, Error, FiringRecord, PulseShape};

/// Integrate-and-fire time encoding of FRI signals.
#[derive(Debug, Parser)]
#[command(name = "fritem", version)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed for studies.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Kernel variant: with-dc (matrix A) or no-dc (matrix B).
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Assume delays on a uniform grid and recover them with OMP.
    #[arg(long, global = true)]
    on_grid: bool,
    #[arg(long, global = true)]
    grid_resolution: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Run the noise study without jitter.
    #[arg(long, global = true)]
    noiseless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    WithDc,
    NoDc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StudyKind {
    Table1,
    Cond,
    Mse,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter and encode the configured signal; writes firings.csv and firings.json.
    Simulate,
    /// Recover FRI parameters from firings; writes recovered.json.
    Recover {
        /// Firing file (.json record or n,t_n CSV); overrides the config entry.
        #[arg(long)]
        firings: Option<PathBuf>,
    },
    /// Run one of the experiment studies.
    Study {
        #[arg(value_enum)]
        which: StudyKind,
        /// Largest L in the conditioning study.
        #[arg(long, default_value_t = 10)]
        l_max: usize,
    },
    /// Write samples and parameters of the sampling kernel.
    KernelDump {
        #[arg(long, default_value_t = 1024)]
        points: usize,
    },
}

enum Failure {
    /// Malformed input or configuration.
    Usage(String),
    /// Sampling/recovery precondition or numerical failure.
    Precondition(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_precondition() {
            Failure::Precondition(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            if !path.is_file() {
                return Err(Failure::Usage(format!("config file {} not found", path.display())));
            }
            Config::load(path)?
        }
        None => Config::default(),
    };
    if cli.method.is_some() || cli.on_grid || cli.grid_resolution.is_some() {
        let mut r = cfg.recovery();
        if let Some(m) = cli.method {
            r.method = match m {
                MethodArg::WithDc => RecoveryMethod::WithDc,
                MethodArg::NoDc => RecoveryMethod::NoDc,
            };
            if let Some(k) = cfg.kernel.as_mut() {
                k.include_dc = None;
            }
        }
        r.on_grid |= cli.on_grid;
        if cli.grid_resolution.is_some() {
            r.grid_resolution = cli.grid_resolution;
        }
        cfg.recovery = Some(r);
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.trials.is_some() {
        cfg.trials = cli.trials;
    }
    if cli.noiseless {
        cfg.noise = Some(NoiseSection { variance: 0.0 });
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Simulate => simulate(&cfg, &cli.out),
        Command::Recover { firings } => recover(&cfg, firings.as_deref(), &cli.out),
        Command::Study { which, l_max } => study(&cfg, *which, *l_max, &cli.out),
        Command::KernelDump { points } => {
            let spec = cfg.kernel_spec()?;
            write(&cli.out.join("kernel.json"), &spec.to_json()?)?;
            write(&cli.out.join("kernel.csv"), &spec.samples_csv(*points))?;
            println!("kernel K={} include_dc={} sup|g|={:.6}", spec.K(), spec.include_dc(), spec.sup_norm());
            Ok(())
        }
    }
}

fn simulate(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let x = cfg.signal()?;
    let spec = cfg.kernel_spec()?;
    let y = filter(x, &spec)?;
    let params = cfg.tem_params(Some(&spec))?;
    let tight = bound_c(x, &spec, BoundMode::Grid)?;
    match bound_c(x, &spec, BoundMode::Analytic) {
        Ok(a) => println!("bound c: grid {tight:.6e}, analytic {a:.6e}, used {:.6e}", params.c()),
        Err(_) => println!("bound c: grid {tight:.6e}, used {:.6e}", params.c()),
    }
    let rate = validate_rate(&params, spec.K(), spec.period());
    println!(
        "firing rate: min {:.6} max {:.6} required {:.6} per period -> {}",
        rate.min_rate * spec.period(),
        rate.max_rate * spec.period(),
        rate.required * spec.period(),
        if rate.ok { "ok" } else { "insufficient" }
    );
    if !rate.ok {
        return Err(Error::RateBelowRequired { min_rate: rate.min_rate, required: rate.required }.into());
    }
    let (t0, tobs) = cfg.window();
    let rec = encode(&y, &params, t0, tobs)?;
    write(&out.join("firings.csv"), &rec.to_csv())?;
    write(&out.join("firings.json"), &rec.to_json()?)?;
    println!("{} firings in [{t0}, {})", rec.len(), t0 + tobs);
    Ok(())
}

fn recover(cfg: &Config, firings: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let path = firings
        .map(Path::to_path_buf)
        .or_else(|| cfg.firings.clone())
        .ok_or_else(|| Failure::Usage("no firings file: pass --firings or set `firings` in the config".into()))?;
    if !path.is_file() {
        return Err(Failure::Usage(format!("firings file {} not found", path.display())));
    }
    let spec = cfg.kernel_spec()?;
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(e.to_string()))?;
    let rec = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        FiringRecord::from_json(&text)?
    } else {
        FiringRecord::new(cfg.tem_params(None)?, instants_from_csv(&text)?)?
    };
    let pulse = cfg.signal.as_ref().map_or(PulseShape::Dirac, |x| x.pulse().clone());
    let l = cfg.model_order()?;
    let est = reconstruct(&rec.instants, &rec.params, &spec, &pulse, l, cfg.delay_model()?)?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let json = est.to_json()?;
    write(&out.join("recovered.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn study(cfg: &Config, which: StudyKind, l_max: usize, out: &Path) -> Result<(), Failure> {
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let report: StudyReport = match which {
        StudyKind::Table1 => run_table1(seed)?,
        StudyKind::Cond => {
            let l_max = cfg.study.as_ref().and_then(|s| s.l_max).unwrap_or(l_max);
            run_condition_study(1..=l_max, cfg.trials.unwrap_or(1000), seed)?
        }
        StudyKind::Mse => run_mse_study(&cfg.mse_config()?)?,
    };
    let (csv, json) = report.write(out)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Precondition(format!("{} study: some checks failed", report.scenario)))
    }
}
