//! Command-line frontend: pairwise direction inference, synthetic pair
//! generation, experiment suites, PSD estimation, whitening and decimation.
//!
//! Exit codes: 0 success, 1 usage or I/O problems, 2 numerical degeneracy
//! (all-zero spectra, grid mismatches, series too short to process).

mod io;
mod parse;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sdr_causal::{
    decimate_pipeline, estimate_psd_welch, generate_pair, report_from_spectra, CauseSpec,
    FirFilter, Spectrum, TimeSeries, WelchConfig, Whitener, DEFAULT_FLOOR_REL,
    DEFAULT_TIE_TOLERANCE, DEFAULT_TRIM_FRACTION,
};

use io::{pair_csv, read_numeric_csv, read_spectrum_csv, series_csv, spectrum_csv, write_atomic};
use parse::{
    build_experiment_config, parse_cause, parse_sampler, parse_window, read_config_file,
    ExperimentOverrides,
};

/// CLI failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, malformed input: exit 1.
    Usage(String),
    /// Numerically degenerate input: exit 2.
    Degenerate(String),
}

impl CliError {
    fn usage(msg: String) -> Self {
        CliError::Usage(msg)
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Degenerate(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Degenerate(m) => m,
        }
    }
}

impl From<sdr_causal::Error> for CliError {
    fn from(e: sdr_causal::Error) -> Self {
        use sdr_causal::Error::*;
        match e {
            InvalidParameter(_) | UnstableProcess | EmptyCollection => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Degenerate(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sdr-causal",
    version,
    about = "Causal direction inference between stationary time series via spectral \
             dependency ratios",
    after_help = "Parallelism of experiment suites is capped by the SDR_CAUSAL_THREADS \
                  environment variable (0 or unset = auto)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer the causal direction between two series.
    Infer(InferArgs),
    /// Generate a synthetic cause/effect pair with known ground truth.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment suite.
    Experiment(ExperimentArgs),
    /// Estimate the power spectral density of a series.
    Psd(PsdArgs),
    /// Fit or apply a spectral whitener.
    Whiten(WhitenArgs),
    /// Anti-alias filter and downsample a series.
    Decimate(DecimateArgs),
}

/// Welch flags shared by several subcommands.
#[derive(Args, Clone)]
struct WelchFlags {
    /// Segment length (power of two); also the output grid size.
    #[arg(long, default_value_t = 1024)]
    segment_length: usize,
    /// Overlap fraction in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    /// Window: hann or rectangular.
    #[arg(long, default_value = "hann")]
    window: String,
}

impl WelchFlags {
    fn build(&self) -> Result<WelchConfig, CliError> {
        Ok(WelchConfig::new(
            self.segment_length,
            self.overlap,
            parse_window(&self.window)?,
        )?)
    }
}

#[derive(Args)]
struct InferArgs {
    /// One two-column CSV (x,y) or two single-column CSVs.
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    welch: WelchFlags,
    /// Relative denominator floor for spectral ratios.
    #[arg(long, default_value_t = DEFAULT_FLOOR_REL)]
    floor_rel: f64,
    /// Relative tolerance under which the two ratios tie.
    #[arg(long, default_value_t = DEFAULT_TIE_TOLERANCE)]
    tie_tol: f64,
    /// 'fit' to whiten with a gain fitted on this pair's spectra, or a path
    /// to a whitener JSON.
    #[arg(long)]
    whiten: Option<String>,
    /// Write the full report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Cause process: white[:power], ar1:a[:power], ar2:a1:a2[:power],
    /// powerlaw:e[:floor[:power]].
    #[arg(long, default_value = "ar1:0.9")]
    cause: String,
    /// Filter length.
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Coefficient sampler: spherical, spherical-chi, gaussian, rademacher,
    /// uniform.
    #[arg(long, default_value = "spherical")]
    sampler: String,
    /// Series length.
    #[arg(long, default_value_t = 65536)]
    n: usize,
    /// Seed (required: no wall-clock entropy).
    #[arg(long)]
    seed: u64,
    /// Output pair CSV (header x,y).
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth JSON (filter, analytic ratios).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FLOOR_REL)]
    floor_rel: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// key = value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    /// Comma-separated filter lengths.
    #[arg(long)]
    m_values: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    cause: Option<String>,
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated decimation factors (decimation suite).
    #[arg(long)]
    d_values: Option<String>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    segment_length: Option<usize>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    floor_rel: Option<f64>,
    #[arg(long)]
    trim_fraction: Option<f64>,
    /// Directory for rows.csv and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PsdArgs {
    input: PathBuf,
    /// Zero-based column to read.
    #[arg(long, default_value_t = 0)]
    column: usize,
    #[command(flatten)]
    welch: WelchFlags,
    /// Output spectrum CSV (header nu,value).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WhitenArgs {
    #[command(subcommand)]
    mode: WhitenMode,
}

#[derive(Subcommand)]
enum WhitenMode {
    /// Fit a whitener to the average PSD of one or more series files.
    Fit {
        /// Series CSVs (first column of each).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        welch: WelchFlags,
        #[arg(long, default_value_t = DEFAULT_FLOOR_REL)]
        floor_rel: f64,
        /// Output whitener JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a fitted whitener to a spectrum CSV or a series CSV.
    Apply {
        /// Whitener JSON produced by `whiten fit`.
        #[arg(long)]
        whitener: PathBuf,
        /// Spectrum CSV (nu,value) to whiten.
        #[arg(long, conflicts_with = "series")]
        spectrum: Option<PathBuf>,
        /// Series CSV to whiten in the time domain.
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DecimateArgs {
    input: PathBuf,
    /// Downsampling factor (1 = pass through).
    #[arg(long)]
    factor: usize,
    /// Fraction trimmed at each end after the anti-aliasing filter.
    #[arg(long, default_value_t = DEFAULT_TRIM_FRACTION)]
    trim: f64,
    #[arg(long, default_value_t = 0)]
    column: usize,
    /// Output series CSV.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Infer(args) => cmd_infer(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Psd(args) => cmd_psd(args),
        Command::Whiten(args) => cmd_whiten(args),
        Command::Decimate(args) => cmd_decimate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_series_column(path: &Path, column: usize) -> Result<TimeSeries, CliError> {
    let csv = read_numeric_csv(path)?;
    let col = csv.columns.get(column).ok_or_else(|| {
        CliError::usage(format!(
            "{}: column {column} out of range ({} columns)",
            path.display(),
            csv.columns.len()
        ))
    })?;
    Ok(TimeSeries::new(col.clone())?)
}

fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    let (x, y) = if args.inputs.len() == 2 {
        (
            load_series_column(&args.inputs[0], 0)?,
            load_series_column(&args.inputs[1], 0)?,
        )
    } else {
        let csv = read_numeric_csv(&args.inputs[0])?;
        if csv.columns.len() < 2 {
            return Err(CliError::usage(format!(
                "{}: need two columns (x,y) or pass two files",
                args.inputs[0].display()
            )));
        }
        (
            TimeSeries::new(csv.columns[0].clone())?,
            TimeSeries::new(csv.columns[1].clone())?,
        )
    };
    let welch = args.welch.build()?;
    let mut s_xx = estimate_psd_welch(&x, &welch)?;
    let mut s_yy = estimate_psd_welch(&y, &welch)?;
    if let Some(spec) = &args.whiten {
        let whitener = if spec == "fit" {
            Whitener::fit(&[s_xx.clone(), s_yy.clone()], args.floor_rel)?
        } else {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| CliError::usage(format!("cannot read {spec}: {e}")))?;
            serde_json::from_str::<Whitener>(&text)
                .map_err(|e| CliError::usage(format!("{spec}: {e}")))?
        };
        s_xx = whitener.apply(&s_xx)?;
        s_yy = whitener.apply(&s_yy)?;
    }
    let report = report_from_spectra(&s_xx, &s_yy, args.floor_rel, args.tie_tol)?;
    println!("decision: {}", report.decision);
    println!("rho_forward: {}", report.rho_forward);
    println!("rho_backward: {}", report.rho_backward);
    if let Some(out) = args.out {
        let json = serde_json::to_string_pretty(&report)
            .expect("report serialization cannot fail")
            + "\n";
        write_atomic(&out, &json)?;
    }
    Ok(())
}

/// Ground truth attached to a simulated pair.
#[derive(Serialize)]
struct TruthDoc<'a> {
    cause: &'a CauseSpec,
    m: usize,
    n: usize,
    seed: u64,
    filter: &'a FirFilter,
    grid: usize,
    rho_forward_analytic: f64,
    rho_backward_analytic: f64,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cause = parse_cause(&args.cause)?;
    let sampler = parse_sampler(&args.sampler)?;
    let pair = generate_pair(&cause, args.m, &sampler, args.n, args.seed)?;
    write_atomic(&args.out, &pair_csv(pair.x.samples(), pair.y.samples()))?;
    if let Some(truth_path) = args.truth {
        let (rho_f, rho_b) =
            sdr_causal::analytic_sdr_pair(&pair.true_sxx, &pair.true_filter, args.floor_rel)?;
        let doc = TruthDoc {
            cause: &cause,
            m: args.m,
            n: args.n,
            seed: args.seed,
            filter: &pair.true_filter,
            grid: pair.true_sxx.len(),
            rho_forward_analytic: rho_f,
            rho_backward_analytic: rho_b,
        };
        let json = serde_json::to_string_pretty(&doc).expect("truth serialization") + "\n";
        write_atomic(&truth_path, &json)?;
    }
    println!(
        "wrote {} samples per column to {}",
        pair.x.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Default::default(),
    };
    let overrides = ExperimentOverrides {
        experiment: args.experiment,
        m_values: args.m_values,
        trials: args.trials,
        cause: args.cause,
        sampler: args.sampler,
        n: args.n,
        d_values: args.d_values,
        base_seed: args.base_seed,
        segment_length: args.segment_length,
        overlap_fraction: args.overlap,
        window: args.window,
        floor_rel: args.floor_rel,
        trim_fraction: args.trim_fraction,
    };
    let cfg = build_experiment_config(&overrides, &file)?;
    let result = sdr_causal::run(&cfg)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    write_atomic(&args.out_dir.join("rows.csv"), &result.rows_csv())?;
    write_atomic(&args.out_dir.join("summary.json"), &result.summary_json())?;
    for g in &result.summary {
        let d = g.d.map(|d| format!(" D={d}")).unwrap_or_default();
        println!(
            "{} m={}{d} mode={}: accuracy={:.3} median_rho_fwd={:.4} median|rho-1|={:.4} \
             iqr={:.4} median_product={:.4}",
            cfg.experiment, g.m, g.mode, g.accuracy, g.median_rho_fwd, g.median_abs_dev,
            g.iqr_rho_fwd, g.median_product
        );
    }
    Ok(())
}

fn cmd_psd(args: PsdArgs) -> Result<(), CliError> {
    let ts = load_series_column(&args.input, args.column)?;
    let spectrum = estimate_psd_welch(&ts, &args.welch.build()?)?;
    write_atomic(&args.out, &spectrum_csv(&spectrum))?;
    println!(
        "wrote {}-bin spectrum to {} (mean power {})",
        spectrum.len(),
        args.out.display(),
        spectrum.mean()
    );
    Ok(())
}

fn cmd_whiten(args: WhitenArgs) -> Result<(), CliError> {
    match args.mode {
        WhitenMode::Fit {
            inputs,
            welch,
            floor_rel,
            out,
        } => {
            let cfg = welch.build()?;
            let mut spectra = Vec::with_capacity(inputs.len());
            for path in &inputs {
                let ts = load_series_column(path, 0)?;
                spectra.push(estimate_psd_welch(&ts, &cfg)?);
            }
            let whitener = Whitener::fit(&spectra, floor_rel)?;
            let json = serde_json::to_string_pretty(&whitener)
                .expect("whitener serialization")
                + "\n";
            write_atomic(&out, &json)?;
            println!(
                "fitted whitener on {} spectra ({} bins) -> {}",
                spectra.len(),
                whitener.grid().len(),
                out.display()
            );
            Ok(())
        }
        WhitenMode::Apply {
            whitener,
            spectrum,
            series,
            out,
        } => {
            let text = std::fs::read_to_string(&whitener)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", whitener.display())))?;
            let w: Whitener = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", whitener.display())))?;
            match (spectrum, series) {
                (Some(path), None) => {
                    let s: Spectrum = read_spectrum_csv(&path)?;
                    let whitened = w.apply(&s)?;
                    write_atomic(&out, &spectrum_csv(&whitened))?;
                }
                (None, Some(path)) => {
                    let ts = load_series_column(&path, 0)?;
                    let whitened = w.apply_to_series(&ts)?;
                    write_atomic(&out, &series_csv(whitened.samples()))?;
                }
                _ => {
                    return Err(CliError::usage(
                        "pass exactly one of --spectrum or --series".into(),
                    ))
                }
            }
            println!("whitened -> {}", out.display());
            Ok(())
        }
    }
}

fn cmd_decimate(args: DecimateArgs) -> Result<(), CliError> {
    let ts = load_series_column(&args.input, args.column)?;
    let out_series = decimate_pipeline(&ts, args.factor, args.trim)?;
    write_atomic(&args.out, &series_csv(out_series.samples()))?;
    println!(
        "decimated {} -> {} samples (factor {})",
        ts.len(),
        out_series.len(),
        args.factor
    );
    Ok(())
}
