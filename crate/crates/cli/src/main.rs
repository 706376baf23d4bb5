use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use logcwt::cwt::{alpha_grid, default_betas, find_extrema, scalogram, ysat_from_cwt, ExclusionRadius};
use logcwt::decompose::{decompose, DecompositionConfig};
use logcwt::info::{
    configurational_information_3, mutual_information_2, mutual_redundancy_scaled, shannon_entropy,
    DiscreteDistribution,
};
use logcwt::kdv::{kdv_residual, soliton, uniform_grid, GridFunction, KdvParams};
use logcwt::model::{synthesize, WaveTable};
use logcwt::timeseries::{first_difference, Column, TimeSeries};
use logcwt::trend::{auto_group, chains_to_json, DEFAULT_GROUP_TOLERANCE};
use logcwt::{Error, ErrorKind};

const EXIT_INPUT: u8 = 2;
const EXIT_PARAMETER: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "logcwt", version, about = "Logistic-wavelet decomposition toolkit")]
#[command(args_override_self = true)]
struct Cli {
    /// JSON object of flag values for the subcommand; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Scalogram of the series' first difference and its extrema.
    Scalogram(ScalogramArgs),
    /// Drift plus logistic-wave decomposition.
    Decompose(DecomposeArgs),
    /// Sample a wave table, optionally with Gaussian noise.
    Synthesize(SynthesizeArgs),
    /// Chains of waves with proportional amplitude and shift.
    Trend(TrendArgs),
    /// Entropy and information measures of a discrete distribution.
    Entropy(EntropyArgs),
    /// Finite-difference residual of the KdV soliton at two resolutions.
    KdvCheck(KdvArgs),
}

#[derive(Args, Debug, Serialize)]
struct SeriesInput {
    /// Series CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Value column, by header name or 0-based index (default: 1, or 0 for a
    /// single-column file).
    #[arg(long)]
    column: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct ScalogramArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[arg(long, default_value_t = 1.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 30.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha_step: f64,
    /// Minimum |CWT| of a reported extremum (default: 3x median |CWT|).
    #[arg(long)]
    min_abs: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DecomposeArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[arg(long, default_value_t = 22)]
    max_waves: usize,
    #[arg(long, default_value_t = 0.9939)]
    stop_r2: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SynthesizeArgs {
    /// Wave table JSON (`waves.json` layout).
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of samples, at t = 1..=n.
    #[arg(long, default_value_t = 514)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TrendArgs {
    #[arg(long)]
    waves: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GROUP_TOLERANCE)]
    group_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Measure {
    #[value(name = "H")]
    H,
    #[value(name = "T2")]
    T2,
    #[value(name = "T3")]
    T3,
    #[value(name = "R")]
    R,
}

#[derive(Args, Debug, Serialize)]
struct EntropyArgs {
    /// Distribution as JSON (`[{"outcome": [...], "p": ...}]`) or CSV.
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, value_enum)]
    measure: Measure,
    /// 1-based variables for H (default: all).
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<usize>>,
    /// Scale in R12 = -alpha*T12.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct KdvArgs {
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long, default_value_t = 0.001)]
    tau: f64,
    /// Spatial grid covers [-L, L].
    #[arg(long, default_value_t = 20.0)]
    half_width: f64,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Usage(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e.kind() {
                ErrorKind::Input => EXIT_INPUT,
                ErrorKind::Parameter => EXIT_PARAMETER,
                ErrorKind::Numerical => EXIT_NUMERICAL,
            },
            Failure::Usage(_) => EXIT_PARAMETER,
            Failure::Input(_) => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) | Failure::Input(m) => f.write_str(m),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

const SUBCOMMANDS: [&str; 6] = ["scalogram", "decompose", "synthesize", "trend", "entropy", "kdv-check"];

/// Splices the flags from `--config` in right after the subcommand name, so
/// anything given on the command line comes later and overrides them.
fn expand_config(args: Vec<String>) -> Outcome<Vec<String>> {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            config = args.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else if sub.is_none() && SUBCOMMANDS.contains(&a.as_str()) {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Input(format!("cannot read config {path}: {e}")))?;
    let obj: serde_json::Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("config {path} is not a JSON object: {e}")))?;
    let mut flags = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => flags.extend([flag, s]),
            Value::Number(n) => flags.extend([flag, n.to_string()]),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .into_iter()
                    .map(|v| match v {
                        Value::String(s) => s,
                        other => other.to_string(),
                    })
                    .collect();
                flags.extend([flag, parts.join(",")]);
            }
            Value::Object(_) => {
                return Err(Failure::Usage(format!("config key {key:?}: nested objects are not flags")));
            }
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn read_series(s: &SeriesInput) -> Outcome<TimeSeries> {
    let column = match &s.column {
        Some(c) => match c.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(c.clone()),
        },
        None => match TimeSeries::from_csv_path(&s.input, 1usize) {
            Err(Error::MissingColumn(_)) => Column::Index(0),
            other => return Ok(other?),
        },
    };
    Ok(TimeSeries::from_csv_path(&s.input, column)?)
}

fn create_dir(out: &Path) -> Outcome<()> {
    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Outcome<()> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn create(path: &Path) -> Outcome<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Outcome<String> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Core(Error::Json(e)))
}

/// Writes `manifest.json` echoing the effective parameters.
fn write_manifest(out: &Path, command: &Command, outputs: &[&str]) -> Outcome<()> {
    let manifest = json!({
        "tool": "logcwt",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "outputs": outputs,
    });
    write(&out.join("manifest.json"), to_json(&manifest)? + "\n")
}

fn run(cli: &Cli) -> Outcome<()> {
    let log = |m: &str| {
        if cli.verbose {
            eprintln!("{m}");
        }
    };
    match &cli.command {
        Command::Scalogram(a) => {
            let x = read_series(&a.series)?;
            let alphas = alpha_grid(a.alpha_min, a.alpha_max, a.alpha_step)?;
            if let Some(m) = a.min_abs {
                if !(m >= 0.0) {
                    return Err(Failure::Usage(format!("--min-abs must be >= 0, got {m}")));
                }
            }
            let diff = first_difference(&x)?;
            let s = scalogram(&diff, &alphas, &default_betas(&diff))?;
            log(&format!("scalogram {} x {}", s.shape().0, s.shape().1));
            let threshold = a.min_abs.unwrap_or_else(|| 3.0 * s.median_abs());
            let extrema: Vec<Value> = find_extrema(&s, threshold, ExclusionRadius::default())
                .iter()
                .map(|e| {
                    let mut v = serde_json::to_value(e).expect("plain struct");
                    v["y_sat"] = json!(ysat_from_cwt(e));
                    v
                })
                .collect();
            create_dir(&a.out)?;
            s.write_csv(create(&a.out.join("scalogram.csv"))?)?;
            write(&a.out.join("extrema.json"), to_json(&extrema)? + "\n")?;
            write_manifest(&a.out, &cli.command, &["scalogram.csv", "extrema.json"])?;
        }
        Command::Decompose(a) => {
            let x = read_series(&a.series)?;
            let cfg = DecompositionConfig {
                max_waves: a.max_waves,
                stop_r2: a.stop_r2,
                ..Default::default()
            };
            let d = decompose(&x, &cfg)?;
            log(&format!("{} waves, R² = {:.6}", d.model.waves.len(), d.fit.r_squared));
            let table = WaveTable::from_model(&d.model, Some((d.fit.r_squared, d.fit.rmse)));
            create_dir(&a.out)?;
            write(&a.out.join("waves.json"), table.to_json_string()? + "\n")?;
            table.write_csv(create(&a.out.join("waves.csv"))?)?;
            write(&a.out.join("fit.json"), to_json(&d.fit)? + "\n")?;
            write_manifest(&a.out, &cli.command, &["waves.json", "waves.csv", "fit.json"])?;
        }
        Command::Synthesize(a) => {
            let m = WaveTable::from_json_path(&a.params)?.model()?;
            let x = synthesize(&m, a.n, a.noise_sigma, a.seed)?;
            create_dir(&a.out)?;
            x.write_csv_path(a.out.join("series.csv"))?;
            write_manifest(&a.out, &cli.command, &["series.csv"])?;
        }
        Command::Trend(a) => {
            let table = WaveTable::from_json_path(&a.waves)?;
            table.model()?;
            let chains = auto_group(&table.waves, a.group_tol)?;
            log(&format!("{} chain(s)", chains.len()));
            create_dir(&a.out)?;
            write(&a.out.join("chains.json"), chains_to_json(&chains)? + "\n")?;
            write_manifest(&a.out, &cli.command, &["chains.json"])?;
        }
        Command::Entropy(a) => {
            let d = DiscreteDistribution::from_path(&a.dist)?;
            let value = match a.measure {
                Measure::H => {
                    let vars: Vec<usize> = match &a.vars {
                        Some(v) => v
                            .iter()
                            .map(|&k| {
                                k.checked_sub(1)
                                    .ok_or_else(|| Failure::Usage("--vars are 1-based".into()))
                            })
                            .collect::<Outcome<_>>()?,
                        None => (0..d.arity()).collect(),
                    };
                    shannon_entropy(&d, &vars)?
                }
                Measure::T2 => mutual_information_2(&d)?,
                Measure::T3 => configurational_information_3(&d)?,
                Measure::R => mutual_redundancy_scaled(&d, a.alpha)?,
            };
            println!("{value}");
            if let Some(out) = &a.out {
                create_dir(out)?;
                let report = json!({ "measure": a.measure, "bits": value });
                write(&out.join("entropy.json"), to_json(&report)? + "\n")?;
                write_manifest(out, &cli.command, &["entropy.json"])?;
            }
        }
        Command::KdvCheck(a) => {
            let report = kdv_check(a)?;
            println!("{}", to_json(&report)?);
            if let Some(out) = &a.out {
                create_dir(out)?;
                write(&out.join("kdv.json"), to_json(&report)? + "\n")?;
                write_manifest(out, &cli.command, &["kdv.json"])?;
            }
        }
    }
    Ok(())
}

fn kdv_check(a: &KdvArgs) -> Outcome<Value> {
    KdvParams::new(a.k, 1.0, 0.0)?;
    for (name, v) in [("h", a.h), ("tau", a.tau), ("half-width", a.half_width)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::Usage(format!("--{name} must be positive, got {v}")));
        }
    }
    let residual = |h: f64, tau: f64| -> Outcome<f64> {
        let nx = (2.0 * a.half_width / h).round() as usize + 1;
        let g = GridFunction::sample(uniform_grid(-a.half_width, h, nx), uniform_grid(0.0, tau, a.levels), |x, t| {
            soliton(a.k, x, t)
        })?;
        Ok(kdv_residual(&g)?)
    };
    let coarse = residual(a.h, a.tau)?;
    let fine = residual(a.h / 2.0, a.tau / 2.0)?;
    let factor = coarse / fine;
    Ok(json!({
        "k": a.k,
        "levels": [
            { "h": a.h, "tau": a.tau, "residual": coarse },
            { "h": a.h / 2.0, "tau": a.tau / 2.0, "residual": fine },
        ],
        "factor": factor,
        "order": factor.log2(),
    }))
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_PARAMETER)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
