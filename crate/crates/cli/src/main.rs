use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optoblock::sweep::{
    apply_pump, convergence_study, figure_preset, rerun, run_sweep, Axis, PumpMode, RunManifest,
    SweepOutput, SweepSpec,
};
use optoblock::{observables, Error, Params, Source, Truncation};

#[derive(Parser)]
#[command(name = "optoblock", version, about = "Photon blockade in an optomechanical cavity with a parametric amplifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file with parameter values; missing fields keep their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Photon cutoff.
    #[arg(long)]
    na: Option<usize>,
    /// Phonon cutoff.
    #[arg(long)]
    nb: Option<usize>,
    /// analytic, amplitude or lindblad.
    #[arg(long)]
    source: Option<String>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one or two parameters.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Full sweep description as JSON.
        #[arg(long, conflicts_with_all = ["manifest", "axis1"])]
        spec: Option<PathBuf>,
        /// Rerun a previous sweep from its manifest.
        #[arg(long, conflicts_with = "axis1")]
        manifest: Option<PathBuf>,
        /// name:min:max:points
        #[arg(long)]
        axis1: Option<String>,
        #[arg(long)]
        axis2: Option<String>,
        /// Comma separated observable names.
        #[arg(long, value_delimiter = ',', default_value = "g2")]
        outputs: Vec<String>,
        /// fixed, optimal_1pb or optimal_2pb.
        #[arg(long, default_value = "fixed")]
        pump: String,
        /// Detuning at which an optimal pump is computed.
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<f64>,
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// Regenerate the data behind one figure.
    Figure {
        /// fig2a, fig2b, fig2c, fig2d, fig3a, fig3b, fig4ab, fig4cd or fig4e.
        preset: String,
        #[command(flatten)]
        common: Common,
        /// Replace the first axis, name:min:max:points.
        #[arg(long)]
        axis1: Option<String>,
        /// Replace the second axis.
        #[arg(long)]
        axis2: Option<String>,
    },
    /// Track one observable over growing truncations.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "g2")]
        observable: String,
        /// Comma separated NAxNB pairs, e.g. 5x6,6x6,8x6.
        #[arg(long, value_delimiter = ',', default_value = "5x6,6x6,8x6,10x6")]
        ladder: Vec<String>,
        #[arg(long, default_value = "converge")]
        name: String,
    },
    /// Every observable at one parameter point, as JSON.
    Report {
        #[command(flatten)]
        common: Common,
        /// fixed, optimal_1pb or optimal_2pb.
        #[arg(long, default_value = "fixed")]
        pump: String,
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<f64>,
        /// Also write `<name>.json` under --out.
        #[arg(long)]
        name: Option<String>,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| input_error(path, e))
}

/// Overlays the fields of a JSON object on `base`.
fn load_params(path: Option<&Path>, base: Params) -> Result<Params, Failure> {
    let Some(path) = path else {
        return Ok(base);
    };
    let patch = read_json(path)?;
    let serde_json::Value::Object(patch) = patch else {
        return Err(input_error(path, "expected a JSON object"));
    };
    let mut merged = serde_json::to_value(base).map_err(Error::from)?;
    let obj = merged.as_object_mut().expect("params serialize to an object");
    for (k, v) in patch {
        obj.insert(k, v);
    }
    let params: Params = serde_json::from_value(merged).map_err(|e| input_error(path, e))?;
    Ok(params.with_pump(params.gain, params.theta))
}

fn truncation(common: &Common, fallback: Truncation) -> Result<Truncation, Failure> {
    if common.na.is_none() && common.nb.is_none() {
        return Ok(fallback);
    }
    Ok(Truncation::new(
        common.na.unwrap_or(fallback.n_photon_max()),
        common.nb.unwrap_or(fallback.n_phonon_max()),
    )?)
}

fn source(common: &Common, fallback: Source) -> Result<Source, Failure> {
    Ok(match &common.source {
        Some(s) => s.parse()?,
        None => fallback,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_sweep(out: &Path, output: &SweepOutput) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", out.display()),
    })?;
    let name = &output.manifest.spec.name;
    let csv = out.join(format!("{name}.csv"));
    let manifest = out.join(format!("{name}.manifest.json"));
    write_file(&csv, &output.table.to_csv())?;
    let json = serde_json::to_string_pretty(&output.manifest).map_err(Error::from)?;
    write_file(&manifest, &(json + "\n"))?;
    for w in &output.manifest.warnings {
        eprintln!("warning: {w:?} regime, perturbative results may be inaccurate");
    }
    println!("{} rows -> {}", output.table.rows.len(), csv.display());
    println!("manifest -> {}", manifest.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep {
            common,
            spec,
            manifest,
            axis1,
            axis2,
            outputs,
            pump,
            anchor,
            name,
        } => {
            let (mut s, base) = if let Some(path) = &manifest {
                let m: RunManifest =
                    serde_json::from_value(read_json(path)?).map_err(|e| input_error(path, e))?;
                if common.params.is_none() && common.na.is_none() && common.nb.is_none() && common.source.is_none() {
                    return write_sweep(&common.out, &rerun(&m, common.jobs)?);
                }
                (m.spec, m.params)
            } else if let Some(path) = &spec {
                let s: SweepSpec =
                    serde_json::from_value(read_json(path)?).map_err(|e| input_error(path, e))?;
                (s, Params::default_1pb())
            } else {
                let Some(axis1) = axis1 else {
                    return Err(Failure {
                        code: 2,
                        message: "sweep needs --axis1, --spec or --manifest".into(),
                    });
                };
                let outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
                let mut s = SweepSpec::new(&name, axis1.parse::<Axis>()?, &outputs);
                s.axis2 = axis2.map(|a| a.parse::<Axis>()).transpose()?;
                s.pump_mode = pump.parse::<PumpMode>()?;
                s.pump_anchor = anchor;
                (s, Params::default_1pb())
            };
            let params = load_params(common.params.as_deref(), base)?;
            s.truncation = truncation(&common, s.truncation)?;
            s.source = source(&common, s.source)?;
            write_sweep(&common.out, &run_sweep(&s, &params, common.jobs)?)
        }
        Command::Figure {
            preset,
            common,
            axis1,
            axis2,
        } => {
            let (mut s, base) = figure_preset(&preset)?;
            if let Some(a) = axis1 {
                s.axis1 = a.parse()?;
            }
            if let Some(a) = axis2 {
                s.axis2 = Some(a.parse()?);
            }
            let params = load_params(common.params.as_deref(), base)?;
            s.truncation = truncation(&common, s.truncation)?;
            s.source = source(&common, s.source)?;
            write_sweep(&common.out, &run_sweep(&s, &params, common.jobs)?)
        }
        Command::Converge {
            common,
            observable,
            ladder,
            name,
        } => {
            let ladder = ladder
                .iter()
                .map(|step| {
                    let bad = || Failure {
                        code: 2,
                        message: format!("ladder step `{step}` is not NAxNB"),
                    };
                    let (a, b) = step.split_once('x').ok_or_else(bad)?;
                    let a = a.parse().map_err(|_| bad())?;
                    let b = b.parse().map_err(|_| bad())?;
                    Ok(Truncation::new(a, b)?)
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let params = load_params(common.params.as_deref(), Params::default_1pb())?;
            let src = source(&common, Source::Lindblad)?;
            let report = convergence_study(&params, &observable, &ladder, src, common.jobs)?;
            let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
            fs::create_dir_all(&common.out).map_err(|e| input_error(&common.out, e))?;
            write_file(&common.out.join(format!("{name}.json")), &json)?;
            print!("{json}");
            Ok(())
        }
        Command::Report {
            common,
            pump,
            anchor,
            name,
        } => {
            let params = load_params(common.params.as_deref(), Params::default_1pb())?;
            let params = apply_pump(&params, pump.parse()?, anchor)?;
            let params = optoblock::params::validate(params)?.params;
            let trunc = truncation(&common, Truncation::default())?;
            let src = source(&common, Source::Lindblad)?;
            let report = observables::report(&params, &trunc, src)?;
            let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
            if let Some(name) = name {
                fs::create_dir_all(&common.out).map_err(|e| input_error(&common.out, e))?;
                write_file(&common.out.join(format!("{name}.json")), &json)?;
            }
            print!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
