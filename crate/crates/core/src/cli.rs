//! The `twinbeam` command-line front end.
//!
//! [`run`] takes the full argv (program name first) and returns the exit code
//! with whatever would go to stdout and stderr, so the binary is a thin
//! wrapper and tests can drive every subcommand in-process.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{fit_noise_vs_power, slope_ratio_db, squeezing_spectrum, Background, PowerSweep, SweepKind, TraceSet};
use crate::calibration::{correct_for_detection, invert_observables};
use crate::error::Error;
use crate::fock::{default_validation_grid, validate};
use crate::medium::{
    simulate_with_order, squeezing_surface, AxisSpec, DetectionParams, MediumParams, StageOrder, SurfaceSpec,
    DEFAULT_EFFICIENCY, DEFAULT_SEED_PHOTONS, DEFAULT_STAGES,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;

/// Contour levels of the surface sidecar, dB.
pub const DEFAULT_CONTOUR_LEVELS: [f64; 7] = [4.0, 2.0, 0.0, -2.0, -4.0, -6.0, -8.0];

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  2  usage error: unknown flag or invalid parameter value
  3  infeasible request: no (G, T) reproduces the observables, unphysical
     measurement, negative corrected power, too little or mismatched data
  4  file error: unreadable input, malformed CSV, unwritable output
  5  validation failure: oracle and Gaussian engine disagree

On failure a JSON error object is written to stderr.";

#[derive(Debug, Parser)]
#[command(name = "twinbeam", version, about = "Twin-beam four-wave-mixing amplifier toolkit", after_help = EXIT_CODES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct MediumArgs {
    /// Number of interleaved gain/loss stages.
    #[arg(long, default_value_t = DEFAULT_STAGES)]
    n_stages: usize,
    /// Coherent seed photon number on the probe.
    #[arg(long, default_value_t = DEFAULT_SEED_PHOTONS)]
    seed_photons: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    GainFirst,
    LossFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackgroundArg {
    None,
    Electronic,
    ElectronicAndPump,
}

#[derive(Debug, Subcommand)]
#[command(after_help = EXIT_CODES_HELP)]
enum Command {
    /// Detected twin-beam observables for one medium.
    Simulate {
        /// Intrinsic gain G ≥ 1.
        #[arg(long)]
        gain: f64,
        /// Probe transmission T in (0, 1].
        #[arg(long)]
        transmission: f64,
        /// Total detection efficiency.
        #[arg(long, default_value_t = DEFAULT_EFFICIENCY)]
        eta: f64,
        #[arg(long, value_enum, default_value = "gain-first")]
        order: OrderArg,
        #[command(flatten)]
        medium: MediumArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Squeezing over a transmission × gain grid.
    Surface {
        #[arg(long, default_value_t = 0.5)]
        t_min: f64,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 51)]
        t_steps: usize,
        #[arg(long, default_value_t = 1.0)]
        g_min: f64,
        #[arg(long, default_value_t = 20.0)]
        g_max: f64,
        #[arg(long, default_value_t = 39)]
        g_steps: usize,
        #[arg(long, default_value_t = DEFAULT_EFFICIENCY)]
        eta: f64,
        /// Contour levels for the JSON sidecar, dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_CONTOUR_LEVELS)]
        levels: Vec<f64>,
        #[command(flatten)]
        medium: MediumArgs,
        /// Long-form CSV; with `--format csv` a JSON sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Intrinsic (G, T) from effective gain and conjugate/probe ratio.
    Invert {
        #[arg(long)]
        geff: f64,
        #[arg(long)]
        ratio: f64,
        #[command(flatten)]
        medium: MediumArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Source squeezing from a measured value and the detection efficiency.
    Correct {
        /// Measured squeezing in dB.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "measured", required_unless_present = "measured")]
        measured_db: Option<f64>,
        /// Measured squeezing as a linear noise ratio.
        #[arg(long)]
        measured: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EFFICIENCY)]
        eta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Straight-line fits of a noise-versus-power sweep.
    Fit {
        /// CSV with columns total_power_uw,noise_dbm,kind.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Squeezing spectrum from analyzer traces.
    Spectrum {
        /// CSV with columns freq_hz,noise_dbm,role.
        #[arg(long)]
        input: PathBuf,
        /// Backgrounds to remove; no default, the choice changes the result.
        #[arg(long, value_enum)]
        background: BackgroundArg,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the Gaussian engine with the Fock-space oracle.
    Validate {
        #[command(flatten)]
        output: Output,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Surface { .. } => "surface",
            Command::Invert { .. } => "invert",
            Command::Correct { .. } => "correct",
            Command::Fit { .. } => "fit",
            Command::Spectrum { .. } => "spectrum",
            Command::Validate { .. } => "validate",
        }
    }
}

/// Exit code and captured output streams of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse(_) => EXIT_IO,
        Error::InfeasibleObservables { .. }
        | Error::NoConvergence { .. }
        | Error::NoInteriorOptimum(_)
        | Error::UnphysicalMeasurement(_)
        | Error::NegativeCorrectedPower(_)
        | Error::NonPositivePower(_)
        | Error::InsufficientData(_)
        | Error::RankDeficient(_)
        | Error::GridMismatch(_) => EXIT_INFEASIBLE,
        Error::Truncation { .. } => EXIT_VALIDATION,
        _ => EXIT_USAGE,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_IO => "io",
        EXIT_INFEASIBLE => "infeasible",
        EXIT_VALIDATION => "validation",
        _ => "usage",
    }
}

fn error_outcome(command: &str, kind: &str, message: String, code: i32) -> Outcome {
    let body = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "error": { "kind": kind, "message": message, "exit_code": code },
    });
    Outcome {
        code,
        stdout: String::new(),
        stderr: format!("{}\n", serde_json::to_string_pretty(&body).expect("json value")),
    }
}

/// A rendered result plus any extra files to write.
struct Rendered {
    body: String,
    sidecars: Vec<(PathBuf, String)>,
    code: i32,
}

fn envelope(command: &str, result: Value) -> String {
    let v = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "result": result,
    });
    format!("{}\n", serde_json::to_string_pretty(&v).expect("json value"))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable result")
}

/// CSV with a header row from serializable flat records.
fn csv_of<T: Serialize>(rows: &[T]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn render<T: Serialize>(command: &str, format: Format, result: &T, rows: impl FnOnce() -> Result<String, Error>) -> Result<Rendered, Error> {
    let body = match format {
        Format::Json => envelope(command, to_value(result)),
        Format::Csv => rows()?,
    };
    Ok(Rendered {
        body,
        sidecars: Vec::new(),
        code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct SimulateReport {
    gain: f64,
    transmission: f64,
    stages: usize,
    efficiency: f64,
    seed_photons: f64,
    order: &'static str,
    effective_gain: f64,
    conjugate_ratio: f64,
    mean_probe: f64,
    mean_conjugate: f64,
    var_diff: f64,
    squeezing: f64,
    squeezing_db: f64,
}

#[derive(Serialize)]
struct InvertReport {
    geff: f64,
    ratio: f64,
    stages: usize,
    seed_photons: f64,
    gain: f64,
    transmission: f64,
    residual: f64,
    iterations: usize,
    method: crate::calibration::InversionMethod,
}

#[derive(Serialize)]
struct FitRow {
    kind: SweepKind,
    slope_mw_per_uw: f64,
    intercept_mw: f64,
    intercept_dbm: Option<f64>,
    residual_rms_mw: f64,
    slope_stderr: f64,
    points: usize,
}

#[derive(Serialize)]
struct SurfaceRow {
    transmission: f64,
    gain: f64,
    squeezing_db: f64,
}

fn execute(command: &Command) -> Result<Rendered, Error> {
    let name = command.name();
    match command {
        Command::Simulate {
            gain,
            transmission,
            eta,
            order,
            medium,
            output,
        } => {
            let p = MediumParams::new(*gain, *transmission, medium.n_stages)?;
            let d = DetectionParams::new(*eta)?;
            let (order, order_name) = match order {
                OrderArg::GainFirst => (StageOrder::GainFirst, "gain-first"),
                OrderArg::LossFirst => (StageOrder::LossFirst, "loss-first"),
            };
            let o = simulate_with_order(&p, &d, medium.seed_photons, order)?;
            let report = SimulateReport {
                gain: p.gain,
                transmission: p.transmission,
                stages: p.stages,
                efficiency: d.efficiency,
                seed_photons: medium.seed_photons,
                order: order_name,
                effective_gain: o.effective_gain,
                conjugate_ratio: o.conjugate_ratio,
                mean_probe: o.mean_probe,
                mean_conjugate: o.mean_conjugate,
                var_diff: o.var_diff,
                squeezing: o.squeezing,
                squeezing_db: o.squeezing_db,
            };
            render(name, output.format, &report, || csv_of(&[&report]))
        }
        Command::Surface {
            t_min,
            t_max,
            t_steps,
            g_min,
            g_max,
            g_steps,
            eta,
            levels,
            medium,
            out,
            format,
        } => {
            let spec = SurfaceSpec {
                transmission: AxisSpec::new(*t_min, *t_max, *t_steps),
                gain: AxisSpec::new(*g_min, *g_max, *g_steps),
                stages: medium.n_stages,
            };
            let d = DetectionParams::new(*eta)?;
            if levels.iter().any(|l| !l.is_finite()) {
                return Err(Error::InvalidParameter("contour levels must be finite".into()));
            }
            let grid = squeezing_surface(&spec, &d, medium.seed_photons)?;
            let (t_best, g_best, s_best) = grid.minimum();
            let summary = json!({
                "transmission": spec.transmission,
                "gain": spec.gain,
                "stages": spec.stages,
                "efficiency": d.efficiency,
                "seed_photons": medium.seed_photons,
                "layout": "rows ordered by transmission, then gain",
                "contour_levels_db": levels,
                "minimum": { "transmission": t_best, "gain": g_best, "squeezing_db": s_best },
            });
            let rows: Vec<SurfaceRow> = grid
                .rows()
                .map(|(transmission, gain, squeezing_db)| SurfaceRow {
                    transmission,
                    gain,
                    squeezing_db,
                })
                .collect();
            match format {
                Format::Csv => {
                    let mut sidecars = Vec::new();
                    if let Some(path) = out {
                        let side = path.with_extension("json");
                        if &side == path {
                            return Err(Error::InvalidParameter(
                                "surface CSV output must not end in .json (the sidecar takes that name)".into(),
                            ));
                        }
                        sidecars.push((side, envelope(name, summary)));
                    }
                    Ok(Rendered {
                        body: csv_of(&rows)?,
                        sidecars,
                        code: EXIT_OK,
                    })
                }
                Format::Json => {
                    let mut result = summary;
                    result["squeezing_db"] = to_value(&grid.squeezing_db);
                    Ok(Rendered {
                        body: envelope(name, result),
                        sidecars: Vec::new(),
                        code: EXIT_OK,
                    })
                }
            }
        }
        Command::Invert {
            geff,
            ratio,
            medium,
            output,
        } => {
            let r = invert_observables(*geff, *ratio, medium.n_stages, medium.seed_photons)?;
            let report = InvertReport {
                geff: *geff,
                ratio: *ratio,
                stages: medium.n_stages,
                seed_photons: medium.seed_photons,
                gain: r.gain,
                transmission: r.transmission,
                residual: r.residual,
                iterations: r.iterations,
                method: r.method,
            };
            render(name, output.format, &report, || csv_of(&[&report]))
        }
        Command::Correct {
            measured_db,
            measured,
            eta,
            output,
        } => {
            let s = match (measured, measured_db) {
                (Some(s), _) => *s,
                (None, Some(db)) => 10f64.powf(db / 10.0),
                (None, None) => return Err(Error::InvalidParameter("give --measured or --measured-db".into())),
            };
            let c = correct_for_detection(s, *eta)?;
            render(name, output.format, &c, || csv_of(&[&c]))
        }
        Command::Fit { input, output } => {
            let sweep = PowerSweep::read_csv(input)?;
            let mut rows = Vec::new();
            let mut fits = serde_json::Map::new();
            for kind in [SweepKind::Sql, SweepKind::Fwm] {
                if sweep.records.iter().any(|r| r.kind == kind) {
                    let f = fit_noise_vs_power(&sweep, kind)?;
                    let row = FitRow {
                        kind,
                        slope_mw_per_uw: f.slope,
                        intercept_mw: f.intercept,
                        intercept_dbm: f.intercept_dbm(),
                        residual_rms_mw: f.residual_rms,
                        slope_stderr: f.slope_stderr,
                        points: f.points,
                    };
                    fits.insert(to_value(&kind).as_str().unwrap_or_default().to_owned(), to_value(&row));
                    rows.push((kind, f, row));
                }
            }
            if rows.is_empty() {
                return Err(Error::InsufficientData("sweep has no records".into()));
            }
            let find = |k| rows.iter().find(|r| r.0 == k).map(|r| r.1);
            let ratio_db = match (find(SweepKind::Fwm), find(SweepKind::Sql)) {
                (Some(fwm), Some(sql)) => Some(slope_ratio_db(&fwm, &sql)?),
                _ => None,
            };
            let result = json!({
                "metadata": sweep.metadata,
                "fits": fits,
                "slope_ratio_db": ratio_db,
            });
            let table: Vec<&FitRow> = rows.iter().map(|r| &r.2).collect();
            render(name, output.format, &result, || csv_of(&table))
        }
        Command::Spectrum {
            input,
            background,
            output,
        } => {
            let traces = TraceSet::read_csv(input)?;
            let background = match background {
                BackgroundArg::None => Background::None,
                BackgroundArg::Electronic => Background::Electronic,
                BackgroundArg::ElectronicAndPump => Background::ElectronicAndPump,
            };
            let bins = squeezing_spectrum(&traces, background)?;
            let result = json!({
                "metadata": traces.metadata,
                "background": background,
                "bins": bins,
                "infeasible_bins": bins.iter().filter(|b| !b.feasible).count(),
            });
            render(name, output.format, &result, || csv_of(&bins))
        }
        Command::Validate { output } => {
            let report = validate(&default_validation_grid())?;
            let mut rendered = render(name, output.format, &report, || {
                let rows: Vec<Value> = report
                    .cases
                    .iter()
                    .map(|c| {
                        json!({
                            "gain": c.chain.gain,
                            "transmission": c.chain.transmission,
                            "stages": c.chain.stages,
                            "seed_photons": c.chain.seed_photons,
                            "n_max": c.oracle.n_max,
                            "leakage": c.oracle.leakage,
                            "max_rel_error": c.max_rel_error,
                            "pass": c.pass,
                        })
                    })
                    .collect();
                validation_csv(&rows)
            })?;
            if !report.pass {
                rendered.code = EXIT_VALIDATION;
            }
            Ok(rendered)
        }
    }
}

fn validation_csv(rows: &[Value]) -> Result<String, Error> {
    const COLUMNS: [&str; 8] = ["gain", "transmission", "stages", "seed_photons", "n_max", "leakage", "max_rel_error", "pass"];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(COLUMNS.iter().map(|c| r[*c].to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn out_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Surface { out, .. } => out.as_ref(),
        Command::Simulate { output, .. }
        | Command::Invert { output, .. }
        | Command::Correct { output, .. }
        | Command::Fit { output, .. }
        | Command::Spectrum { output, .. }
        | Command::Validate { output, .. } => output.out.as_ref(),
    }
}

/// Parses `argv`, dispatches, and writes output files. Never panics on bad
/// input; every failure becomes an exit code and a JSON error on stderr.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Outcome {
                        code: if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_USAGE } else { EXIT_OK },
                        stdout: e.render().to_string(),
                        stderr: String::new(),
                    }
                }
                _ => error_outcome("", "usage", e.render().to_string().trim_end().to_owned(), EXIT_USAGE),
            };
        }
    };
    let name = cli.command.name();
    let rendered = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => return error_outcome(name, error_kind(&e), e.to_string(), exit_code(&e)),
    };
    let mut outcome = Outcome {
        code: rendered.code,
        ..Outcome::default()
    };
    match out_path(&cli.command) {
        Some(path) => {
            let written = write_file(path, &rendered.body)
                .and_then(|_| rendered.sidecars.iter().try_for_each(|(p, text)| write_file(p, text)));
            if let Err(e) = written {
                return error_outcome(name, error_kind(&e), e.to_string(), exit_code(&e));
            }
        }
        None => outcome.stdout = rendered.body,
    }
    if outcome.code == EXIT_VALIDATION {
        outcome.stderr = error_outcome(name, "validation", "oracle comparison exceeded tolerance".into(), EXIT_VALIDATION).stderr;
    }
    outcome
}
