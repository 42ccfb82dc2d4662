mod config;
mod error;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use eddi::basis::parse_terms;
use eddi::csvio::{read_table_bytes, write_rows, write_table, Table};
use eddi::diagnostics::{cwt_morlet, fft_magnitude, linspace, write_scalogram_csv, write_spectrum_csv};
use eddi::dynamics::{gen_duffing, gen_pendulum, simulate, ForceSignal, IdentifiedSystem, SolverSpec};
use eddi::modelfile::{Method, ModelFile, Provenance};
use eddi::phase1::{energy_trace, find_zero_crossings, DampingOptions, EnergyTrace, DEFAULT_MIN_T_FRACTION};
use eddi::phase2::{Weighting, DEFAULT_EPS_DQ, DEFAULT_SMOOTH_WINDOW};
use eddi::pipeline::{identify_eddi, EddiOptions};
use eddi::preprocess::{accel_to_state, highpass_measured, HighpassSpec};
use eddi::response::Response;
use eddi::score::{relative_l2, render_report, score_models};
use eddi::sindy::{sindy_identify, StlsqSpec};
use eddi::signal::TimeSeries;

use crate::config::{RunConfig, DEFAULT_DAMPING_TERMS, DEFAULT_STIFFNESS_TERMS};
use crate::error::{CliError, Stage};

const DEFAULT_PREPROCESS_TRIM: f64 = 0.25;

#[derive(Parser)]
#[command(name = "eddi", version, about = "Identify nonlinear damping and stiffness from free-response data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark oscillator and write its response and true model.
    Generate(GenerateArgs),
    /// Integrate a measured acceleration into displacement and velocity.
    Preprocess(PreprocessArgs),
    /// Identify damping and stiffness models from a response.
    Identify(IdentifyArgs),
    /// Integrate a model file from initial conditions or under a force record.
    Simulate(SimulateArgs),
    /// Compare a model file against a reference model.
    Score(ScoreArgs),
    /// Write the Fourier spectrum and Morlet scalogram of one column.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Benchmark {
    Duffing,
    Pendulum,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Eddi,
    Sindy,
}

#[derive(Args)]
struct GenerateArgs {
    benchmark: Benchmark,
    /// Output directory; receives response.csv and truth.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    /// CSV with a `t` column and an acceleration column.
    input: PathBuf,
    #[arg(long, default_value = "qdd")]
    column: String,
    #[arg(long)]
    cutoff_hz: Option<f64>,
    /// Seconds removed from each end after filtering [default: 0.25].
    #[arg(long)]
    trim: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output response CSV (t,q,qd,qdd).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    method: MethodArg,
    /// Response CSV with columns t,q,qd and optionally qdd.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; receives model.json, energy.csv, restoring_force.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    inertia: Option<f64>,
    #[arg(long)]
    damping_terms: Option<String>,
    #[arg(long)]
    stiffness_terms: Option<String>,
    /// Seconds removed from each end of the record [default: 0].
    #[arg(long)]
    trim: Option<f64>,
    /// Moving-average window over the conservative force; 1 disables.
    #[arg(long)]
    smooth_window: Option<usize>,
    #[arg(long)]
    eps_dq: Option<f64>,
    #[arg(long)]
    min_t_fraction: Option<f64>,
    /// Use only the first N zero crossings after the reference one.
    #[arg(long)]
    crossings: Option<usize>,
    /// `uniform` or `abs-dq`.
    #[arg(long)]
    weighting: Option<String>,
    /// Threshold of the sparse regression.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    normalize: Option<bool>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Initial state `q,qd` [default: 0,0].
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    ic: Option<(f64, f64)>,
    /// Force CSV; zero outside its time range.
    #[arg(long)]
    force: Option<PathBuf>,
    #[arg(long, default_value = "force")]
    force_column: String,
    /// Output sample rate; defaults to the force record's.
    #[arg(long)]
    fs: Option<f64>,
    /// Simulated duration; defaults to the force record's.
    #[arg(long)]
    t_span: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Initial state for the re-simulation comparison; skipped when absent.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    ic: Option<(f64, f64)>,
    #[arg(long, default_value_t = 1e4)]
    fs: f64,
    #[arg(long, default_value_t = 1.0)]
    t_span: f64,
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "q")]
    column: String,
    /// Linear frequency grid `lo:hi:n` in Hz.
    #[arg(long, value_parser = parse_freqs)]
    freqs: FreqGrid,
    #[arg(long, default_value_t = eddi::diagnostics::DEFAULT_OMEGA0)]
    omega0: f64,
    /// Output directory; receives spectrum.csv and scalogram.csv.
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `q,qd`")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

#[derive(Clone, Debug)]
struct FreqGrid(Vec<f64>);

fn parse_freqs(s: &str) -> Result<FreqGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected `lo:hi:n`".into());
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
    if n == 0 || !(lo > 0.0) || !(hi >= lo) {
        return Err("need 0 < lo <= hi and n >= 1".into());
    }
    Ok(FreqGrid(linspace(lo, hi, n)))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> eddi::Result<()>) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    f(&mut w).stage("write")?;
    w.flush().map_err(io_err)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    ModelFile::from_json_bytes(&read_bytes(path)?).stage("model")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn response_table(r: &Response) -> eddi::Result<Table> {
    let mut cols = vec![("q", r.q()), ("qd", r.qd())];
    if let Some(a) = r.qdd() {
        cols.push(("qdd", a));
    }
    Table::from_series(cols)
}

/// Drops `trim` seconds from each end.
fn trim_ends(r: &Response, trim: f64) -> Result<Response, CliError> {
    if !(trim >= 0.0 && trim.is_finite()) {
        return Err(CliError::Usage(format!("trim must be non-negative, got {trim}")));
    }
    let n_trim = (trim * r.q().sample_rate()).round() as usize;
    if n_trim == 0 {
        return Ok(r.clone());
    }
    if 2 * n_trim >= r.len() {
        return Err(CliError::Usage(format!("trim of {trim} s leaves no samples")));
    }
    r.slice(n_trim, r.len() - 2 * n_trim).stage("trim")
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let (r, truth) = match args.benchmark {
        Benchmark::Duffing => gen_duffing(),
        Benchmark::Pendulum => gen_pendulum(),
    }
    .stage("generate")?;
    create_dir(&args.out)?;
    let table = response_table(&r).stage("generate")?;
    write_file(&args.out.join("response.csv"), |w| write_table(&table, w))?;
    write_text(&args.out.join("truth.json"), &ModelFile::from_system(&truth, None).to_json())
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    let flags = RunConfig {
        cutoff_hz: args.cutoff_hz,
        trim: args.trim,
        ..RunConfig::default()
    };
    let cfg = RunConfig::resolve(args.config.as_deref(), flags)?;
    let cutoff = cfg
        .cutoff_hz
        .ok_or_else(|| CliError::Usage("--cutoff-hz is required (flag or config)".into()))?;
    let table = read_bytes(&args.input).and_then(|b| read_table_bytes(&b).stage("csv"))?;
    let a = table.column(&args.column).stage("csv")?;
    let spec = HighpassSpec::new(cutoff, a.sample_rate()).stage("preprocess")?;
    let (q, qd) = accel_to_state(&a, &spec).stage("preprocess")?;
    let qdd = highpass_measured(&a, &spec).stage("preprocess")?;
    let r = Response::new(q, qd, Some(qdd), 1.0).stage("preprocess")?;
    let r = trim_ends(&r, cfg.trim.unwrap_or(DEFAULT_PREPROCESS_TRIM))?;
    let out = response_table(&r).stage("preprocess")?;
    write_file(&args.out, |w| write_table(&out, w))
}

/// Configuration after defaults are applied; echoed into the model file.
#[derive(Serialize)]
struct Effective {
    method: MethodArg,
    input: String,
    inertia: f64,
    damping_terms: String,
    stiffness_terms: String,
    trim: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    smooth_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_dq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_t_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crossings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weighting: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
}

fn parse_weighting(s: &str) -> Result<Weighting, CliError> {
    match s {
        "uniform" => Ok(Weighting::Uniform),
        "abs-dq" => Ok(Weighting::AbsDq),
        other => Err(CliError::Usage(format!("unknown weighting `{other}` (uniform, abs-dq)"))),
    }
}

fn cmd_identify(args: IdentifyArgs) -> Result<(), CliError> {
    let flags = RunConfig {
        input: args.input,
        inertia: args.inertia,
        damping_terms: args.damping_terms,
        stiffness_terms: args.stiffness_terms,
        trim: args.trim,
        smooth_window: args.smooth_window,
        eps_dq: args.eps_dq,
        min_t_fraction: args.min_t_fraction,
        crossings: args.crossings,
        weighting: args.weighting,
        lambda: args.lambda,
        normalize: args.normalize,
        max_iters: args.max_iters,
        ..RunConfig::default()
    };
    let cfg = RunConfig::resolve(args.config.as_deref(), flags)?;
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("--input is required (flag or config)".into()))?;
    let inertia = cfg
        .inertia
        .ok_or_else(|| CliError::Usage("--inertia is required (flag or config)".into()))?;
    let damping_terms = cfg.damping_terms.clone().unwrap_or_else(|| DEFAULT_DAMPING_TERMS.into());
    let stiffness_terms = cfg.stiffness_terms.clone().unwrap_or_else(|| DEFAULT_STIFFNESS_TERMS.into());
    let terms = |name: &str, expr: &str| parse_terms(expr).map_err(|e| CliError::Usage(format!("{name}: {e}")));
    let damping_lib = terms("damping_terms", &damping_terms)?;
    let stiffness_lib = terms("stiffness_terms", &stiffness_terms)?;

    let bytes = read_bytes(&input)?;
    let table = read_table_bytes(&bytes).stage("csv")?;
    let qdd = if table.has_column("qdd") {
        Some(table.column("qdd").stage("csv")?)
    } else {
        None
    };
    let r = Response::new(
        table.column("q").stage("csv")?,
        table.column("qd").stage("csv")?,
        qdd,
        inertia,
    )
    .stage("response")?;
    let trim = cfg.trim.unwrap_or(0.0);
    let r = trim_ends(&r, trim)?;

    let mut eff = Effective {
        method: args.method,
        input: input.display().to_string(),
        inertia,
        damping_terms: damping_lib.render(),
        stiffness_terms: stiffness_lib.render(),
        trim,
        smooth_window: None,
        eps_dq: None,
        min_t_fraction: None,
        crossings: None,
        weighting: None,
        lambda: None,
        normalize: None,
        max_iters: None,
    };
    let mut residuals = BTreeMap::new();
    let (system, energy, force_rows, method) = match args.method {
        MethodArg::Eddi => {
            let weighting_name = cfg.weighting.clone().unwrap_or_else(|| "uniform".into());
            let opts = EddiOptions {
                damping: DampingOptions {
                    min_t_fraction: cfg.min_t_fraction.unwrap_or(DEFAULT_MIN_T_FRACTION),
                    max_crossings: cfg.crossings,
                    prune: false,
                },
                eps_dq: cfg.eps_dq.unwrap_or(DEFAULT_EPS_DQ),
                smooth_window: cfg.smooth_window.unwrap_or(DEFAULT_SMOOTH_WINDOW),
                weighting: parse_weighting(&weighting_name)?,
            };
            eff.smooth_window = Some(opts.smooth_window);
            eff.eps_dq = Some(opts.eps_dq);
            eff.min_t_fraction = Some(opts.damping.min_t_fraction);
            eff.crossings = opts.damping.max_crossings;
            eff.weighting = Some(weighting_name);
            let res = identify_eddi(&r, &damping_lib, &stiffness_lib, &opts).stage("eddi")?;
            residuals.insert("damping".to_string(), res.damping.residual_rms);
            residuals.insert("stiffness".to_string(), res.stiffness.residual_rms);
            let k = &res.system.stiffness;
            let rows: Vec<Vec<f64>> = res.force.retained().map(|(q, f, _)| vec![q, f, -k.eval(q)]).collect();
            (res.system, res.energy, rows, Method::Eddi)
        }
        MethodArg::Sindy => {
            let mut spec = StlsqSpec::new(cfg.lambda.unwrap_or(0.05)).stage("sindy")?;
            spec.normalize_columns = cfg.normalize.unwrap_or(true);
            spec.max_iters = cfg.max_iters.unwrap_or(StlsqSpec::DEFAULT_MAX_ITERS);
            eff.lambda = Some(spec.threshold);
            eff.normalize = Some(spec.normalize_columns);
            eff.max_iters = Some(spec.max_iters);
            eff.min_t_fraction = Some(cfg.min_t_fraction.unwrap_or(DEFAULT_MIN_T_FRACTION));
            let fit = sindy_identify(&r, &damping_lib, &stiffness_lib, &spec).stage("sindy")?;
            residuals.insert("stlsq".to_string(), fit.residual_rms);
            let zc = find_zero_crossings(&r, eff.min_t_fraction.unwrap_or(DEFAULT_MIN_T_FRACTION)).stage("energy")?;
            let energy = energy_trace(&r, &fit.system.damping, &zc).stage("energy")?;
            // dL/dq = -K = inertia * qdd + B(q, qd) on a free response.
            let qdd = r.qdd_or_diff().stage("sindy")?;
            let sys = &fit.system;
            let rows: Vec<Vec<f64>> = (0..r.len())
                .map(|i| {
                    let (q, qd) = (r.q().values()[i], r.qd().values()[i]);
                    let f = inertia * qdd.values()[i] + sys.damping.eval(q, qd);
                    vec![q, f, -sys.stiffness.eval(q)]
                })
                .collect();
            (fit.system, energy, rows, Method::Sindy)
        }
    };

    let provenance = Provenance {
        method,
        input_digest: sha256_hex(&bytes),
        config: serde_json::to_value(&eff).expect("config serializes"),
        residual_rms: residuals.clone(),
    };
    create_dir(&args.out)?;
    write_text(&args.out.join("model.json"), &ModelFile::from_system(&system, Some(provenance)).to_json())?;
    write_energy(&args.out.join("energy.csv"), &energy)?;
    write_file(&args.out.join("restoring_force.csv"), |w| {
        write_rows(&["q", "force", "fitted_force"], force_rows, w)
    })?;
    for (name, v) in &residuals {
        println!("residual_rms {name} {v:e}");
    }
    Ok(())
}

fn write_energy(path: &Path, e: &EnergyTrace) -> Result<(), CliError> {
    let k = &e.kinetic;
    let rows = (0..k.len()).map(|i| vec![k.time(i), k.values()[i], e.dissipated.values()[i], e.mechanical.values()[i]]);
    write_file(path, |w| write_rows(&["t", "T", "D", "E"], rows, w))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let flags = RunConfig {
        rtol: args.rtol,
        atol: args.atol,
        ..RunConfig::default()
    };
    let cfg = RunConfig::resolve(args.config.as_deref(), flags)?;
    let system = read_model(&args.model)?.to_system().stage("model")?;
    let force = match &args.force {
        Some(p) => {
            let table = read_table_bytes(&read_bytes(p)?).stage("csv")?;
            Some(ForceSignal::new(table.column(&args.force_column).stage("csv")?))
        }
        None => None,
    };
    let fs = args
        .fs
        .or(force.as_ref().map(|f| f.samples().sample_rate()))
        .ok_or_else(|| CliError::Usage("--fs is required without --force".into()))?;
    let t_span = args
        .t_span
        .or(force.as_ref().map(|f| f.samples().t_end()))
        .ok_or_else(|| CliError::Usage("--t-span is required without --force".into()))?;
    let spec = SolverSpec::new(fs, t_span).with_tolerances(
        cfg.rtol.unwrap_or(SolverSpec::DEFAULT_RTOL),
        cfg.atol.unwrap_or(SolverSpec::DEFAULT_ATOL),
    );
    let r = simulate(&system, args.ic.unwrap_or((0.0, 0.0)), &spec, force.as_ref()).stage("simulate")?;
    let table = response_table(&r).stage("simulate")?;
    write_file(&args.out, |w| write_table(&table, w))
}

fn resimulate(sys: &IdentifiedSystem, ic: (f64, f64), spec: &SolverSpec) -> Result<TimeSeries, CliError> {
    Ok(simulate(sys, ic, spec, None).stage("simulate")?.q().clone())
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let model = read_model(&args.model)?.to_system().stage("model")?;
    let truth = read_model(&args.truth)?.to_system().stage("truth")?;
    let scores = score_models(&model, &truth);
    let l2 = match args.ic {
        Some(ic) => {
            let spec = SolverSpec::new(args.fs, args.t_span);
            let a = resimulate(&model, ic, &spec)?;
            let b = resimulate(&truth, ic, &spec)?;
            Some(relative_l2(a.values(), b.values()))
        }
        None => None,
    };
    let report = render_report(&scores, l2);
    match &args.out {
        Some(p) => write_text(p, &report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), CliError> {
    let table = read_table_bytes(&read_bytes(&args.input)?).stage("csv")?;
    let s = table.column(&args.column).stage("csv")?;
    let spectrum = fft_magnitude(&s).stage("diagnostics")?;
    let scalogram = cwt_morlet(&s, &args.freqs.0, args.omega0).stage("diagnostics")?;
    create_dir(&args.out)?;
    write_file(&args.out.join("spectrum.csv"), |w| write_spectrum_csv(&spectrum, w))?;
    write_file(&args.out.join("scalogram.csv"), |w| write_scalogram_csv(&scalogram, w))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Score(a) => cmd_score(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eddi: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
