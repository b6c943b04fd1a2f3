//! `ite` — command-line driver for the transmission-eigenvalue routines.
//!
//! Subcommands map one-to-one onto the library entry points: `sweep`
//! (real-line determinant scan), `beyn` (contour solver on the modal
//! blocks), `bie` (contour solver on the boundary-integral blocks), `lsm`
//! (far-field linear-sampling scan), `eoc` (convergence of the spectrum as
//! eta -> 0), `monotonicity` (first eigenvalue per eta), and `dirichlet`
//! (the eta -> infinity limit spectrum).
//!
//! Settings resolve in three layers: built-in defaults, then a flat
//! `key = value` config file given with `--config`, then command-line flags.
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ite_cli::{render, sig17, Record, ResultEnvelope, Schema};
use ite_core::bie_sphere::bie_eigenvalues;
use ite_core::farfield_lsm::{lsm_scan, FarFieldGrid, LsmParams, PhaseSign};
use ite_core::sphere_modal::{
    dirichlet_limit_eigenvalues, eoc_table, modal_nep_eigenvalues, monotonicity_sweep,
    scan_real_eigenvalues, ConductiveSphere, DirichletBall, MultiplicityHint, ScanParams,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "ite", version, about = "Transmission eigenvalues of a conductive ball")]
struct Cli {
    /// Flat key=value settings file; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write results here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct MediumOpts {
    /// Ball radius R.
    #[arg(long)]
    radius: Option<f64>,
    /// Refractive index n (n > 0, n != 1).
    #[arg(long)]
    n: Option<f64>,
    /// Conductivity parameter eta (eta >= 0).
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args)]
struct RangeOpts {
    /// Lower end of the wave-number interval.
    #[arg(long)]
    kmin: Option<f64>,
    /// Upper end of the wave-number interval.
    #[arg(long)]
    kmax: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Scan det M_p along the real line and refine every root.
    Sweep {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        /// Scan grid step.
        #[arg(long)]
        step: Option<f64>,
        /// Largest spherical-harmonic order.
        #[arg(long)]
        pmax: Option<usize>,
    },
    /// Contour (moment-method) solve on the block-diagonal modal matrices.
    Beyn {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        #[arg(long)]
        pmax: Option<usize>,
        /// Trapezoid nodes on the contour.
        #[arg(long)]
        nodes: Option<usize>,
        /// Seed for the random probe matrix.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Contour solve on the boundary-integral blocks Z_p.
    Bie {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        #[arg(long)]
        pmax: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Linear-sampling scan of the far-field operator.
    Lsm {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        #[arg(long)]
        step: Option<f64>,
        /// Relative multiplicative noise level applied to the far-field data.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sampling point, comma-separated x,y,z.
        #[arg(long)]
        point: Option<String>,
        /// Peak threshold as a multiple of the median density norm.
        #[arg(long)]
        peak_ratio: Option<f64>,
        /// Sign convention of the point-source far field, +1 or -1.
        #[arg(long)]
        phase_sign: Option<i8>,
    },
    /// Convergence order of selected eigenvalues as eta is halved toward 0.
    Eoc {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        pmax: Option<usize>,
        /// Starting eta; the sequence halves from here.
        #[arg(long)]
        eta_start: Option<f64>,
        /// Number of eta values in the halving sequence.
        #[arg(long)]
        levels: Option<usize>,
        /// 1-based eigenvalue indices to track, comma-separated.
        #[arg(long)]
        indices: Option<String>,
    },
    /// First eigenvalue for each eta in a list.
    Monotonicity {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        pmax: Option<usize>,
        /// Comma-separated eta values.
        #[arg(long)]
        eta_list: Option<String>,
    },
    /// Interior Dirichlet eigenvalues of the two limit balls.
    Dirichlet {
        #[command(flatten)]
        medium: MediumOpts,
        #[command(flatten)]
        range: RangeOpts,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        pmax: Option<usize>,
    },
}

/// Configuration problem: reported on stderr, exit code 2.
struct ConfigError(String);

/// Numerical problem in a valid configuration: exit code 1.
struct RunError(String);

/// Flat `key = value` file; `#` starts a comment. Every key must be in the
/// known set, whether or not the chosen subcommand consumes it.
fn load_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>, ConfigError> {
    const KNOWN: &[&str] = &[
        "radius", "n", "eta", "kmin", "kmax", "step", "pmax", "nodes", "seed",
        "delta", "point", "peak-ratio", "phase-sign", "eta-start", "levels",
        "indices", "eta-list", "format", "output",
    ];
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN.contains(&key.as_str()) {
            return Err(ConfigError(format!(
                "{}: unknown configuration key `{key}`",
                path.display()
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Layered lookup: flag, then config file (parsed, naming the key on a parse
/// failure), then the built-in default.
fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ConfigError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| ConfigError(format!("config key `{key}`: cannot parse `{raw}`"))),
        None => Ok(default),
    }
}

struct Medium {
    radius: f64,
    n: f64,
    eta: f64,
}

impl Medium {
    fn resolve(
        opts: MediumOpts,
        file: &BTreeMap<String, String>,
        default_eta: f64,
    ) -> Result<Self, ConfigError> {
        let radius = resolve(opts.radius, file, "radius", 1.0)?;
        let n = resolve(opts.n, file, "n", 4.0)?;
        let eta = resolve(opts.eta, file, "eta", default_eta)?;
        if !(radius > 0.0) {
            return Err(ConfigError(format!("radius must be positive, got {radius}")));
        }
        if !(n > 0.0) {
            return Err(ConfigError(format!("n must be positive, got {n}")));
        }
        if n == 1.0 {
            return Err(ConfigError(
                "n = 1 is excluded by Assumption 2.1 (the contrast n - 1 must not \
                 vanish); choose n > 0 with n != 1"
                    .into(),
            ));
        }
        if !(eta >= 0.0) {
            return Err(ConfigError(format!("eta must be >= 0, got {eta}")));
        }
        Ok(Self { radius, n, eta })
    }

    fn sphere(&self) -> Result<ConductiveSphere, ConfigError> {
        ConductiveSphere::new(self.radius, self.n, self.eta)
            .map_err(|e| ConfigError(e.to_string()))
    }

    fn echo(&self, into: &mut BTreeMap<String, String>) {
        into.insert("radius".into(), sig17(self.radius));
        into.insert("n".into(), sig17(self.n));
        into.insert("eta".into(), sig17(self.eta));
    }
}

fn resolve_range(
    opts: RangeOpts,
    file: &BTreeMap<String, String>,
    default: (f64, f64),
) -> Result<(f64, f64), ConfigError> {
    let lo = resolve(opts.kmin, file, "kmin", default.0)?;
    let hi = resolve(opts.kmax, file, "kmax", default.1)?;
    if !(0.0 < lo && lo < hi) {
        return Err(ConfigError(format!(
            "wave-number range must be positive and ordered, got ({lo}, {hi})"
        )));
    }
    Ok((lo, hi))
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| ConfigError(format!("{what}: cannot parse `{}`", s.trim())))
        })
        .collect()
}

fn hint_name(hint: MultiplicityHint) -> &'static str {
    match hint {
        MultiplicityHint::SimpleSignChange => "simple_sign_change",
        MultiplicityHint::TouchingZero => "touching_zero",
    }
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let file = match &cli.config {
        Some(path) => load_config_file(path).map_err(config_fail)?,
        None => BTreeMap::new(),
    };
    let format = match cli.format {
        Some(f) => f,
        None => match file.get("format").map(String::as_str) {
            None => Format::Csv,
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => {
                return Err(config_fail(ConfigError(format!(
                    "config key `format`: expected csv or json, got `{other}`"
                ))))
            }
        },
    };
    let output = cli
        .output
        .or_else(|| file.get("output").map(PathBuf::from));

    let mut echo = BTreeMap::new();
    let start = Instant::now();
    let (name, schema, records) = dispatch(cli.command, &file, &mut echo)
        .map_err(|e| match e {
            Fail::Config(c) => config_fail(c),
            Fail::Run(r) => {
                eprintln!("ite: {}", r.0);
                ExitCode::from(1)
            }
        })?;
    let envelope = ResultEnvelope {
        version: VERSION.into(),
        command: name.into(),
        config: echo,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        records,
        warnings: Vec::new(),
    };
    emit(&envelope, schema, format, output.as_deref()).map_err(|e| {
        eprintln!("ite: {e}");
        ExitCode::from(1)
    })
}

fn config_fail(e: ConfigError) -> ExitCode {
    eprintln!("ite: {}", e.0);
    ExitCode::from(2)
}

enum Fail {
    Config(ConfigError),
    Run(RunError),
}

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail::Config(e)
    }
}

impl<E: std::fmt::Display> From<E> for RunError
where
    E: std::error::Error,
{
    fn from(e: E) -> Self {
        RunError(e.to_string())
    }
}

fn dispatch(
    command: Command,
    file: &BTreeMap<String, String>,
    echo: &mut BTreeMap<String, String>,
) -> Result<(&'static str, Schema, Vec<Record>), Fail> {
    match command {
        Command::Sweep { medium, range, step, pmax } => {
            let medium = Medium::resolve(medium, file, 1.0)?;
            let interval = resolve_range(range, file, (0.1, 5.0))?;
            let step = resolve(step, file, "step", 1e-3)?;
            let pmax = resolve(pmax, file, "pmax", 25)?;
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("step".into(), sig17(step));
            echo.insert("pmax".into(), pmax.to_string());
            let params = ScanParams { k_interval: interval, p_max: pmax, grid_step: step };
            let records = scan_real_eigenvalues(&medium.sphere()?, &params)
                .map_err(|e| Fail::Run(e.into()))?
                .into_iter()
                .map(|r| Record::Eigenvalue {
                    k: r.k,
                    p: r.order,
                    multiplicity_hint: hint_name(r.hint).into(),
                    residual: r.residual,
                })
                .collect();
            Ok(("sweep", Schema::Eigenvalues, records))
        }
        Command::Beyn { medium, range, pmax, nodes, seed } => {
            let medium = Medium::resolve(medium, file, 1.0)?;
            let interval = resolve_range(range, file, (2.5, 4.5))?;
            let pmax = resolve(pmax, file, "pmax", 8)?;
            let nodes = resolve(nodes, file, "nodes", 64)?;
            let seed = resolve(seed, file, "seed", 11)?;
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("pmax".into(), pmax.to_string());
            echo.insert("nodes".into(), nodes.to_string());
            echo.insert("seed".into(), seed.to_string());
            let eigs = modal_nep_eigenvalues(&medium.sphere()?, interval, pmax, nodes, seed)
                .map_err(|e| Fail::Run(e.into()))?;
            let records = eigs
                .into_iter()
                .map(|e| Record::Eigenvalue {
                    k: e.k.re,
                    p: e.block,
                    multiplicity_hint: "contour".into(),
                    residual: e.residual,
                })
                .collect();
            Ok(("beyn", Schema::Eigenvalues, records))
        }
        Command::Bie { medium, range, pmax, nodes, seed } => {
            let medium = Medium::resolve(medium, file, 1.0)?;
            let interval = resolve_range(range, file, (2.5, 4.5))?;
            let pmax = resolve(pmax, file, "pmax", 8)?;
            let nodes = resolve(nodes, file, "nodes", 64)?;
            let seed = resolve(seed, file, "seed", 11)?;
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("pmax".into(), pmax.to_string());
            echo.insert("nodes".into(), nodes.to_string());
            echo.insert("seed".into(), seed.to_string());
            let eigs = bie_eigenvalues(&medium.sphere()?, interval, pmax, nodes, seed)
                .map_err(|e| Fail::Run(e.into()))?;
            let records = eigs
                .into_iter()
                .map(|e| Record::Eigenvalue {
                    k: e.k.re,
                    p: e.order,
                    multiplicity_hint: "contour".into(),
                    residual: e.residual,
                })
                .collect();
            Ok(("bie", Schema::Eigenvalues, records))
        }
        Command::Lsm { medium, range, step, delta, seed, point, peak_ratio, phase_sign } => {
            let medium = Medium::resolve(medium, file, 1.0)?;
            let interval = resolve_range(range, file, (2.5, 4.5))?;
            let step = resolve(step, file, "step", 0.01)?;
            let delta = resolve(delta, file, "delta", 0.005)?;
            let seed = resolve(seed, file, "seed", 7)?;
            let peak_ratio = resolve(peak_ratio, file, "peak-ratio", 5.0)?;
            let phase_raw = resolve(phase_sign, file, "phase-sign", 1)?;
            let phase_sign = match phase_raw {
                1 => PhaseSign::Positive,
                -1 => PhaseSign::Negative,
                other => {
                    return Err(Fail::Config(ConfigError(format!(
                        "phase-sign must be 1 or -1, got {other}"
                    ))))
                }
            };
            let point_raw = resolve(point, file, "point", "0.5,0.3,0.2".to_string())?;
            let coords: Vec<f64> = parse_list(&point_raw, "point")?;
            let point: [f64; 3] = coords.try_into().map_err(|_| {
                Fail::Config(ConfigError("point needs exactly three coordinates".into()))
            })?;
            if !(delta >= 0.0) {
                return Err(Fail::Config(ConfigError(format!(
                    "delta must be >= 0, got {delta}"
                ))));
            }
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("step".into(), sig17(step));
            echo.insert("delta".into(), sig17(delta));
            echo.insert("seed".into(), seed.to_string());
            echo.insert("peak-ratio".into(), sig17(peak_ratio));
            echo.insert("phase-sign".into(), phase_raw.to_string());
            echo.insert("point".into(), point.map(sig17).join(","));
            let params = LsmParams {
                k_range: interval,
                step,
                noise_level: delta,
                seed,
                point,
                peak_ratio,
                phase_sign,
            };
            let samples = lsm_scan(&medium.sphere()?, &FarFieldGrid::standard(), &params)
                .map_err(|e| Fail::Run(e.into()))?;
            let records = samples
                .into_iter()
                .map(|s| Record::LsmPoint { k: s.k, gnorm: s.gnorm, is_peak: s.is_peak })
                .collect();
            Ok(("lsm", Schema::Lsm, records))
        }
        Command::Eoc { medium, range, step, pmax, eta_start, levels, indices } => {
            let medium = Medium::resolve(medium, file, 1.0)?;
            let interval = resolve_range(range, file, (2.5, 5.0))?;
            let step = resolve(step, file, "step", 1e-3)?;
            let pmax = resolve(pmax, file, "pmax", 12)?;
            let eta_start = resolve(eta_start, file, "eta-start", 1.0)?;
            let levels = resolve(levels, file, "levels", 9)?;
            if !(eta_start > 0.0) || levels < 2 {
                return Err(Fail::Config(ConfigError(
                    "eoc needs eta-start > 0 and levels >= 2".into(),
                )));
            }
            let indices_raw = resolve(indices, file, "indices", "2,4,6".to_string())?;
            let indices: Vec<usize> = parse_list(&indices_raw, "indices")?;
            if indices.iter().any(|&i| i == 0) {
                return Err(Fail::Config(ConfigError(
                    "indices are 1-based; 0 is not valid".into(),
                )));
            }
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("step".into(), sig17(step));
            echo.insert("pmax".into(), pmax.to_string());
            echo.insert("eta-start".into(), sig17(eta_start));
            echo.insert("levels".into(), levels.to_string());
            echo.insert("indices".into(), indices_raw);
            let etas: Vec<f64> = (0..levels)
                .map(|i| eta_start / f64::powi(2.0, i as i32))
                .collect();
            let sphere = medium.sphere()?;
            let params = ScanParams { k_interval: interval, p_max: pmax, grid_step: step };
            // Reference spectrum: the classic (eta = 0) eigenvalues.
            let reference: Vec<f64> = scan_real_eigenvalues(&sphere.with_eta(0.0), &params)
                .map_err(|e| Fail::Run(e.into()))?
                .iter()
                .map(|r| r.k)
                .collect();
            let rows = eoc_table(&sphere, &etas, &indices, &reference, &params)
                .map_err(|e| Fail::Run(e.into()))?;
            let records = rows
                .into_iter()
                .flat_map(|row| {
                    row.entries.into_iter().map(move |e| Record::Eoc {
                        eta: row.eta,
                        index: e.index,
                        abs_error: e.abs_error,
                        eoc: e.eoc,
                    })
                })
                .collect();
            Ok(("eoc", Schema::Eoc, records))
        }
        Command::Monotonicity { medium, range, step, pmax, eta_list } => {
            let medium = Medium::resolve(medium, file, 1.0)?;
            let interval = resolve_range(range, file, (0.1, 5.0))?;
            let step = resolve(step, file, "step", 1e-3)?;
            let pmax = resolve(pmax, file, "pmax", 25)?;
            let eta_raw = resolve(
                eta_list,
                file,
                "eta-list",
                "0.01,0.1,0.25,0.5,1,2,3,10,100".to_string(),
            )?;
            let etas: Vec<f64> = parse_list(&eta_raw, "eta-list")?;
            if etas.iter().any(|&e| e < 0.0) {
                return Err(Fail::Config(ConfigError("eta-list values must be >= 0".into())));
            }
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("step".into(), sig17(step));
            echo.insert("pmax".into(), pmax.to_string());
            echo.insert("eta-list".into(), eta_raw);
            let params = ScanParams { k_interval: interval, p_max: pmax, grid_step: step };
            let firsts = monotonicity_sweep(&medium.sphere()?, &etas, &params)
                .map_err(|e| Fail::Run(e.into()))?;
            let records = etas
                .iter()
                .zip(firsts)
                .map(|(&eta, k)| Record::Curve { eta, k })
                .collect();
            Ok(("monotonicity", Schema::Curve, records))
        }
        Command::Dirichlet { medium, range, step, pmax } => {
            let medium = Medium::resolve(medium, file, 0.0)?;
            let interval = resolve_range(range, file, (0.1, 5.0))?;
            let step = resolve(step, file, "step", 1e-3)?;
            let pmax = resolve(pmax, file, "pmax", 25)?;
            medium.echo(echo);
            echo.insert("kmin".into(), sig17(interval.0));
            echo.insert("kmax".into(), sig17(interval.1));
            echo.insert("step".into(), sig17(step));
            echo.insert("pmax".into(), pmax.to_string());
            let roots = dirichlet_limit_eigenvalues(&medium.sphere()?, interval, pmax, step)
                .map_err(|e| Fail::Run(e.into()))?;
            let records = roots
                .into_iter()
                .map(|r| Record::Dirichlet {
                    k: r.k,
                    p: r.order,
                    ball: match r.ball {
                        DirichletBall::RadiusR => "radius_r".into(),
                        DirichletBall::RadiusRootNR => "radius_root_n_r".into(),
                    },
                })
                .collect();
            Ok(("dirichlet", Schema::Dirichlet, records))
        }
    }
}

fn emit(
    envelope: &ResultEnvelope,
    schema: Schema,
    format: Format,
    path: Option<&std::path::Path>,
) -> Result<(), String> {
    let text = render(envelope, schema, format == Format::Json);
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
