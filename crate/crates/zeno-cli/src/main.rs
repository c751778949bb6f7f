//! Command-line front end: decay rates, full time evolution, phase
//! diagrams, form-factor curves, and brute-force validation, all emitting
//! plot-ready CSV/JSON.
//!
//! Exit codes: 0 success, 1 validation/physics failure, 2 usage error.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use zeno_core::dynamics::{self, PConvention, TimeGrid};
use zeno_core::model::LorentzianModel;
use zeno_core::oracle::{self, CompareOptions};
use zeno_core::phasemap;
use zeno_core::spectral;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "zeno",
    version,
    about = "Decay of an unstable two-level emitter under continuous indirect measurement"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Free and measured decay rates with the QZE/AZE classification.
    Rate(RateArgs),
    /// Sample survival, error, and response probabilities over time.
    Evolve(EvolveArgs),
    /// Sweep the (|detuning|/delta, eta/delta) plane and classify each cell.
    PhaseDiagram(PhaseDiagramArgs),
    /// Tabulate the renormalized form factor and check its sum rule.
    Formfactor(FormfactorArgs),
    /// Cross-check the analytic evolution against the discretized model.
    Validate(ValidateArgs),
}

#[derive(Args, Serialize)]
struct ModelArgs {
    /// Coupling strength (the base rate unit).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Form-factor half-width, in units of gamma.
    #[arg(long)]
    delta: f64,
    /// Detuning omega0 - k0 (use either this or --omega0).
    #[arg(long, conflicts_with = "omega0", allow_hyphen_values = true)]
    detuning: Option<f64>,
    /// Atomic transition energy (use either this or --detuning).
    #[arg(long)]
    omega0: Option<f64>,
    /// Form-factor center energy; defaults to 100 * delta.
    #[arg(long)]
    k0: Option<f64>,
    /// Detector coupling density; the response time is 1/(2 pi eta).
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Asymptotic error probability (detection efficiency 1 - eps_inf).
    #[arg(long = "eps-inf", default_value_t = 0.0)]
    eps_inf: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted); file runs also write a
    /// `<out>.config.json` sidecar with the resolved configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Final time, in units of 1/gamma.
    #[arg(long = "t-max")]
    t_max: f64,
    /// Number of samples (uniform grid including t = 0 and t = t_max).
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Append a t^-1 ln s(t) column.
    #[arg(long = "log-s", default_value_t = false)]
    log_s: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PhaseDiagramArgs {
    /// Largest |detuning|/delta.
    #[arg(long = "detuning-max", default_value_t = 3.0)]
    detuning_max: f64,
    /// Largest eta/delta.
    #[arg(long = "eta-max", default_value_t = 3.0)]
    eta_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    /// Asymptotic error probability (the classification is invariant).
    #[arg(long = "eps-inf", default_value_t = 0.0)]
    eps_inf: f64,
    /// Grid file; `<stem>_boundary.csv` and `<stem>_maxeffect.csv` overlay
    /// curves are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct FormfactorArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Lower end of the energy grid; defaults to k0 - 10 delta_tilde.
    #[arg(long = "mu-min", allow_hyphen_values = true)]
    mu_min: Option<f64>,
    /// Upper end of the energy grid; defaults to k0 + 10 delta_tilde.
    #[arg(long = "mu-max", allow_hyphen_values = true)]
    mu_max: Option<f64>,
    /// Number of grid points.
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Photon-amplitude budget for the discretization.
    #[arg(long = "n-modes", default_value_t = 2000)]
    n_modes: usize,
    /// Comparison horizon, in units of 1/gamma; defaults to 10 over the
    /// free rate.
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Width-mixing convention on the analytic side; `eps_inf` is the
    /// deliberately wrong choice (test hook).
    #[arg(long = "p-convention", value_enum, default_value_t = PConventionArg::OneMinusEpsInf)]
    p_convention: PConventionArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum PConventionArg {
    /// Physical convention: the detected fraction carries the broadened width.
    #[value(name = "one_minus_eps_inf", alias = "one-minus-eps-inf")]
    #[serde(rename = "one_minus_eps_inf")]
    OneMinusEpsInf,
    /// Swapped channels (wrong by construction; must fail validation).
    #[value(name = "eps_inf", alias = "eps-inf")]
    #[serde(rename = "eps_inf")]
    EpsInf,
}

impl From<PConventionArg> for PConvention {
    fn from(a: PConventionArg) -> Self {
        match a {
            PConventionArg::OneMinusEpsInf => PConvention::OneMinusEpsInf,
            PConventionArg::EpsInf => PConvention::EpsInf,
        }
    }
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

impl ModelArgs {
    fn build(&self) -> Result<LorentzianModel, CliError> {
        let k0 = self.k0.unwrap_or(100.0 * self.delta);
        let omega0 = match (self.detuning, self.omega0) {
            (Some(d), None) => k0 + d,
            (None, Some(w)) => w,
            (None, None) => {
                return Err(CliError::Usage(
                    "exactly one of --detuning or --omega0 is required".into(),
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        };
        LorentzianModel::new(self.gamma, self.delta, k0, omega0, self.eta, self.eps_inf)
            .map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))
    }
}

/// Resolved configuration recorded in the metadata line and the sidecar.
#[derive(Serialize)]
struct Resolved<T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(flatten)]
    details: T,
}

fn metadata_line<T: Serialize>(r: &Resolved<T>) -> String {
    let v = serde_json::to_value(r).expect("resolved config serializes");
    let obj = v.as_object().expect("resolved config is an object");
    let mut line = format!("# {} v{} {}", r.tool, r.version, r.command);
    let mut keys: Vec<_> = obj
        .keys()
        .filter(|k| !matches!(k.as_str(), "tool" | "version" | "command"))
        .collect();
    keys.sort();
    for k in keys {
        match &obj[k] {
            serde_json::Value::Object(inner) => {
                let mut inner_keys: Vec<_> = inner.keys().collect();
                inner_keys.sort();
                for ik in inner_keys {
                    if !inner[ik].is_null() {
                        line.push_str(&format!(" {ik}={}", inner[ik]));
                    }
                }
            }
            serde_json::Value::Null => {}
            val => line.push_str(&format!(" {k}={val}")),
        }
    }
    line
}

/// Write atomically (temp file + rename), plus a sidecar JSON of the
/// resolved configuration for file outputs.
fn emit<T: Serialize>(
    out: Option<&Path>,
    content: &str,
    resolved: &Resolved<T>,
) -> Result<(), CliError> {
    match out {
        None => {
            io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            write_atomic(path, content.as_bytes())?;
            let json = serde_json::to_string_pretty(resolved).expect("config serializes");
            write_atomic(&sidecar_path(path), format!("{json}\n").as_bytes())?;
            Ok(())
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".config.json");
    PathBuf::from(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct RateDetails {
    model: LorentzianModel,
    format: Option<Format>,
}

fn run_rate(args: &RateArgs) -> Result<(), CliError> {
    let m = args.model.build()?;
    let result = spectral::measured_rate_lorentzian(&m);
    let resolved = Resolved {
        tool: "zeno",
        version: VERSION,
        command: "rate",
        details: RateDetails {
            model: m,
            format: args.output.format,
        },
    };
    let content = match args.output.format {
        Some(Format::Json) => format!(
            "{}\n",
            serde_json::to_string_pretty(&result).expect("result serializes")
        ),
        Some(Format::Csv) => format!(
            "{}\nfree_rate,measured_rate,ratio,class\n{:.12e},{:.12e},{:.12e},{}\n",
            metadata_line(&resolved),
            result.free_rate,
            result.measured_rate,
            result.ratio,
            result.classification
        ),
        None => format!(
            "Gamma_0 = {:.12e}\nGamma   = {:.12e}\nratio   = {:.12e}\nclass   = {}\n",
            result.free_rate, result.measured_rate, result.ratio, result.classification
        ),
    };
    emit(args.output.out.as_deref(), &content, &resolved)
}

#[derive(Serialize)]
struct EvolveDetails {
    model: LorentzianModel,
    t_max: f64,
    n: usize,
    log_s: bool,
    format: Option<Format>,
}

fn run_evolve(args: &EvolveArgs) -> Result<(), CliError> {
    let m = args.model.build()?;
    let grid = TimeGrid::Uniform {
        t_max: args.t_max,
        n: args.n,
    };
    let traj = dynamics::evolve_grid(&m, &grid).map_err(|e| match e {
        dynamics::DynamicsError::InvalidGrid(msg) => {
            CliError::Usage(format!("invalid grid: {msg}"))
        }
        other => CliError::Failure(other.to_string()),
    })?;
    let resolved = Resolved {
        tool: "zeno",
        version: VERSION,
        command: "evolve",
        details: EvolveDetails {
            model: m,
            t_max: args.t_max,
            n: args.n,
            log_s: args.log_s,
            format: args.output.format,
        },
    };
    let content = match args.output.format {
        Some(Format::Json) => format!(
            "{}\n",
            serde_json::to_string_pretty(&traj).expect("trajectory serializes")
        ),
        _ => {
            let mut buf = Vec::new();
            writeln!(buf, "{}", metadata_line(&resolved))?;
            traj.write_csv(&mut buf, args.log_s)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(args.output.out.as_deref(), &content, &resolved)
}

#[derive(Serialize)]
struct PhaseDiagramDetails {
    detuning_max: f64,
    eta_max: f64,
    grid: usize,
    eps_inf: f64,
    format: Option<Format>,
}

fn run_phase_diagram(args: &PhaseDiagramArgs) -> Result<(), CliError> {
    let pm = phasemap::sweep(
        args.detuning_max,
        args.eta_max,
        args.grid,
        args.grid,
        args.eps_inf,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let resolved = Resolved {
        tool: "zeno",
        version: VERSION,
        command: "phase-diagram",
        details: PhaseDiagramDetails {
            detuning_max: args.detuning_max,
            eta_max: args.eta_max,
            grid: args.grid,
            eps_inf: args.eps_inf,
            format: args.format,
        },
    };
    let content = match args.format {
        Some(Format::Json) => format!("{}\n", pm.to_json()),
        _ => {
            let mut buf = Vec::new();
            writeln!(buf, "{}", metadata_line(&resolved))?;
            pm.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(Some(args.out.as_path()), &content, &resolved)?;

    // Overlay curves on a finer detuning grid, same dimensionless units.
    let stem_path = |suffix: &str| -> PathBuf {
        let stem = args
            .out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "phase_diagram".into());
        let name = match args.out.extension() {
            Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
            None => format!("{stem}{suffix}"),
        };
        args.out.with_file_name(name)
    };
    let n_curve = 4 * args.grid.max(2);
    let mut boundary = String::from("detuning_over_delta,eta_over_delta\n");
    let mut maxeffect = String::from("detuning_over_delta,eta_over_delta\n");
    for i in 0..n_curve {
        let x = args.detuning_max * i as f64 / (n_curve - 1) as f64;
        if let Some(eta) = phasemap::phase_boundary(x, 1.0) {
            if eta <= args.eta_max {
                boundary.push_str(&format!("{x:.12e},{eta:.12e}\n"));
            }
        }
        if let Some(eta) = phasemap::max_effect_eta(x, 1.0) {
            if eta <= args.eta_max {
                maxeffect.push_str(&format!("{x:.12e},{eta:.12e}\n"));
            }
        }
    }
    write_atomic(&stem_path("_boundary"), boundary.as_bytes())?;
    write_atomic(&stem_path("_maxeffect"), maxeffect.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct FormfactorDetails {
    model: LorentzianModel,
    mu_min: f64,
    mu_max: f64,
    points: usize,
    format: Option<Format>,
}

fn run_formfactor(args: &FormfactorArgs) -> Result<(), CliError> {
    let m = args.model.build()?;
    let mu_min = args.mu_min.unwrap_or(m.k0 - 10.0 * m.delta_tilde());
    let mu_max = args.mu_max.unwrap_or(m.k0 + 10.0 * m.delta_tilde());
    if !(mu_min < mu_max) || args.points < 2 {
        return Err(CliError::Usage(format!(
            "need mu_min < mu_max and at least 2 points (got [{mu_min}, {mu_max}], {})",
            args.points
        )));
    }
    let s = m.to_spectral();
    let grid: Vec<f64> = (0..args.points)
        .map(|i| mu_min + (mu_max - mu_min) * i as f64 / (args.points - 1) as f64)
        .collect();
    let curve =
        spectral::form_factor_curve(&s, &grid).map_err(|e| CliError::Failure(e.to_string()))?;
    let check = spectral::sum_rule_check(&s).map_err(|e| CliError::Failure(e.to_string()))?;

    let resolved = Resolved {
        tool: "zeno",
        version: VERSION,
        command: "formfactor",
        details: FormfactorDetails {
            model: m,
            mu_min,
            mu_max,
            points: args.points,
            format: args.output.format,
        },
    };
    let content = match args.output.format {
        Some(Format::Json) => format!(
            "{}\n",
            serde_json::json!({
                "mu": curve.mu,
                "g2": curve.g2,
                "sum_rule": check,
            })
        ),
        _ => {
            let mut buf = Vec::new();
            writeln!(buf, "{}", metadata_line(&resolved))?;
            curve.write_csv(&mut buf)?;
            writeln!(
                buf,
                "# sum_rule lhs={:.12e} rhs={:.12e} rel_err={:.3e}",
                check.lhs, check.rhs, check.rel_err
            )?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(args.output.out.as_deref(), &content, &resolved)
}

#[derive(Serialize)]
struct ValidateDetails {
    model: LorentzianModel,
    n_modes: usize,
    t_max: Option<f64>,
    p_convention: PConventionArg,
}

fn run_validate(args: &ValidateArgs) -> Result<(), CliError> {
    if args.output.format == Some(Format::Csv) {
        return Err(CliError::Usage("validate emits JSON only".into()));
    }
    let m = args.model.build()?;
    let opts = CompareOptions {
        n_modes: args.n_modes,
        t_max: args.t_max,
        convention: args.p_convention.into(),
        ..Default::default()
    };
    let report = oracle::compare(&m, &opts).map_err(|e| CliError::Failure(e.to_string()))?;
    let resolved = Resolved {
        tool: "zeno",
        version: VERSION,
        command: "validate",
        details: ValidateDetails {
            model: m,
            n_modes: args.n_modes,
            t_max: args.t_max,
            p_convention: args.p_convention,
        },
    };
    let content = format!(
        "{}\n",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    emit(args.output.out.as_deref(), &content, &resolved)?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "validation failed: max deviations s/eps/r = {:.2e}/{:.2e}/{:.2e} (tolerance 1e-3)",
            report.max_dev_s, report.max_dev_eps, report.max_dev_r
        )))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Rate(a) => run_rate(a),
        Cmd::Evolve(a) => run_evolve(a),
        Cmd::PhaseDiagram(a) => run_phase_diagram(a),
        Cmd::Formfactor(a) => run_formfactor(a),
        Cmd::Validate(a) => run_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
