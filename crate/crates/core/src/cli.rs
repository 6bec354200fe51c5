//! The `llrer` command-line tool.
//!
//! Exit codes: 0 success, 2 input data error, 3 configuration error,
//! 4 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bandwidth::{BandwidthGrid, CvOptions, LeaveOneOut};
use crate::error::{Error, Result};
use crate::kernel::KernelKind;
use crate::loclin::{parse_grid, Estimator, EstimatorConfig, SmootherInput};
use crate::simulate::{
    calibrate_censoring_with, monte_carlo_run, CalibrationOptions, SimulationConfig,
    SimulationReport,
};
use crate::survival::{CensoredSample, SurvivalStep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "resolved.cfg";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Data(_) => EXIT_DATA,
        Error::Config(_) | Error::Calibration(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "llrer", version, about = "Relative-error regression for right-censored data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit an estimator over a grid of covariate values.
    Estimate(EstimateArgs),
    /// Leave-one-out cross-validation trace over a bandwidth grid.
    Cv(CvArgs),
    /// Run a Monte Carlo campaign from a config file.
    Simulate(SimulateArgs),
    /// Find the censoring shift c that gives a target censoring proportion.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct HGridArgs {
    #[arg(long = "h-lo", default_value_t = 0.01)]
    h_lo: f64,
    #[arg(long = "h-hi", default_value_t = 2.0)]
    h_hi: f64,
    #[arg(long = "h-step", default_value_t = 0.01)]
    h_step: f64,
}

impl HGridArgs {
    fn grid(&self) -> Result<BandwidthGrid> {
        BandwidthGrid::new(self.h_lo, self.h_hi, self.h_step)
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CSV with header `y,delta,x`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "llrer")]
    estimator: Estimator,
    #[arg(long, default_value = "gaussian")]
    kernel: KernelKind,
    /// Fixed bandwidth.
    #[arg(long, conflicts_with = "cv", required_unless_present = "cv", allow_negative_numbers = true)]
    h: Option<f64>,
    /// Select the bandwidth by cross-validation.
    #[arg(long)]
    cv: bool,
    #[command(flatten)]
    hgrid: HGridArgs,
    /// Evaluation grid `lo:hi:n`.
    #[arg(long, default_value = "1:4:61", allow_hyphen_values = true)]
    grid: String,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "llrer")]
    estimator: Estimator,
    #[arg(long, default_value = "gaussian")]
    kernel: KernelKind,
    #[command(flatten)]
    hgrid: HGridArgs,
    /// Trace CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (all cores when omitted). Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Target censoring proportion in (0, 1).
    #[arg(long, allow_negative_numbers = true)]
    target: f64,
    #[arg(long, default_value_t = 0.005)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    draws: usize,
    /// Calibrate under the positive-lifetime variant of the design.
    #[arg(long)]
    positive_only: bool,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

/// Informational lines go to stdout when data goes to a file, else stderr.
fn report(to_file: bool, line: &str) {
    if to_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn warn_nonpositive(count: usize) {
    if count > 0 {
        eprintln!(
            "warning: {count} uncensored response(s) are <= 0; relative-error regression assumes positive lifetimes"
        );
    }
}

fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    let hgrid = a.hgrid.grid()?;
    if let Some(h) = a.h {
        EstimatorConfig::new(a.kernel, h)?;
    }
    let sample = CensoredSample::read_csv(&a.input)?;
    let h = match a.h {
        Some(h) => h,
        None => {
            let loo = LeaveOneOut::new(a.estimator, &sample, a.kernel, CvOptions::default())?;
            let sel = loo.select(&hgrid)?;
            report(a.out.is_some(), &format!("h_opt = {}", sel.h_opt));
            sel.h_opt
        }
    };
    let config = EstimatorConfig::new(a.kernel, h)?;
    let step = SurvivalStep::kaplan_meier(&sample);
    let input = SmootherInput::new(&sample, &step, &[a.estimator])?;
    warn_nonpositive(input.nonpositive_uncensored());
    let curve = input.fit_curve(a.estimator, &config, &grid)?;
    with_output(a.out.as_deref(), |w| curve.write_csv(w))
}

fn cmd_cv(a: &CvArgs) -> Result<()> {
    let hgrid = a.hgrid.grid()?;
    let sample = CensoredSample::read_csv(&a.input)?;
    let loo = LeaveOneOut::new(a.estimator, &sample, a.kernel, CvOptions::default())?;
    let sel = loo.select(&hgrid)?;
    with_output(a.out.as_deref(), |w| sel.write_csv(w))?;
    report(a.out.is_some(), &format!("h_opt = {}", sel.h_opt));
    Ok(())
}

fn cmd_calibrate(a: &CalibrateArgs) -> Result<()> {
    let opts = CalibrationOptions {
        draws: a.draws,
        positive_only: a.positive_only,
        ..CalibrationOptions::default()
    };
    let cal = calibrate_censoring_with(a.target, a.tol, a.seed, &opts)?;
    println!("c = {}", cal.c);
    println!("estimated_cp = {}", cal.estimated_cp);
    println!("iterations = {}", cal.iterations);
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let text = fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let mut config = SimulationConfig::parse(&text)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.threads == Some(0) {
        return Err(Error::config("--threads must be at least 1"));
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;

    let report = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::config(format!("cannot start {t} threads: {e}")))?
            .install(|| monte_carlo_run(&config))?,
        None => monte_carlo_run(&config)?,
    };

    let write = |name: &str, f: &dyn Fn(&mut dyn Write) -> Result<()>| -> Result<PathBuf> {
        let path = a.out.join(name);
        with_output(Some(&path), f)?;
        Ok(path)
    };
    write(CURVES_FILE, &|w| report.write_curves_csv(w))?;
    write(SUMMARY_FILE, &|w| report.write_summary_csv(w))?;
    write(CONFIG_FILE, &|w| {
        w.write_all(config.to_text().as_bytes()).map_err(|e| Error::io(CONFIG_FILE, e))
    })?;

    let manifest = RunManifest {
        command: "simulate".into(),
        config: config.clone(),
        files: vec![CURVES_FILE.into(), SUMMARY_FILE.into(), CONFIG_FILE.into()],
        tool_version: env!("CARGO_PKG_VERSION").into(),
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let text = manifest.render(&report);
    write(MANIFEST_FILE, &|w| w.write_all(text.as_bytes()).map_err(|e| Error::io(MANIFEST_FILE, e)))?;

    let failed = report.failed_count();
    println!(
        "{} replications ({} failed), c = {}, output in {}",
        report.replications.len(),
        failed,
        report.shift,
        a.out.display()
    );
    Ok(())
}

/// Record of a `simulate` run. Everything except the duration is a
/// deterministic function of the config and seed.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config: SimulationConfig,
    pub files: Vec<String>,
    pub tool_version: String,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn render(&self, report: &SimulationReport) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "tool_version = {}", self.tool_version);
        let _ = writeln!(s, "master_seed = {}", self.config.seed);
        let _ = writeln!(s, "shift_c = {}", report.shift);
        if let Some(cal) = report.calibration {
            let _ = writeln!(s, "calibration_cp = {}", cal.estimated_cp);
            let _ = writeln!(s, "calibration_iterations = {}", cal.iterations);
        }
        let _ = writeln!(s, "files = {}", self.files.join(","));
        let _ = writeln!(s, "duration_seconds = {:.3}", self.duration_seconds);
        let _ = writeln!(s, "failed_replications = {}", report.failed_count());
        let _ = writeln!(s, "\n[config]");
        s.push_str(&self.config.to_text());
        let _ = writeln!(s, "\n[replications]");
        for r in &report.replications {
            match &r.result {
                Ok(rep) => {
                    let hs: Vec<String> = rep
                        .fits
                        .iter()
                        .map(|f| format!("{}:{}", f.estimator, f.bandwidth))
                        .collect();
                    let _ = writeln!(
                        s,
                        "rep={} seed={} realized_cp={} nonpositive_uncensored={} outliers={} h={} status=ok",
                        r.index,
                        r.seed,
                        rep.realized_cp,
                        rep.nonpositive_uncensored,
                        rep.outlier_indices.len(),
                        hs.join(",")
                    );
                }
                Err(msg) => {
                    let _ = writeln!(s, "rep={} seed={} status=failed error={msg}", r.index, r.seed);
                }
            }
        }
        s
    }
}
