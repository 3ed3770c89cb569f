//! Command-line orchestration: simulation runs, correlation, fitting,
//! filter scans, analytic curves, and the oracle cross-check.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis;
use crate::config::{rad_ns_to_khz, rad_ns_to_mhz, ExperimentConfig};
use crate::correlator::{self, CorrelationHistogram};
use crate::error::{Error, Result};
use crate::fock;
use crate::model::{self, BeatModel, Channel, GridSpec, Polarization, Wavepacket};
use crate::montecarlo;
use crate::records;

#[derive(Debug, Parser)]
#[command(
    name = "photon-beat",
    about = "Two-photon interference simulator and analysis toolkit",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a time-tagged detection record stream.
    Simulate(SimulateArgs),
    /// Build a coincidence histogram from a record stream.
    Correlate(CorrelateArgs),
    /// Fit the beat model to a parallel histogram against a reference.
    Fit(FitArgs),
    /// Scan temporal-filter windows over parallel and reference records.
    FilterScan(FilterScanArgs),
    /// Emit analytic model curves for the reference and parallel signals.
    Analytic(AnalyticArgs),
    /// Cross-check the closed-form densities against the exact verifier.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run configuration file (key=value lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Output record file.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackgroundMode {
    /// Expected dark+accidental model from the config's gate/dark values.
    Model,
    /// Flat level from far-from-peak bins of the data itself.
    Data,
    /// No background subtraction.
    None,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Input record file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output histogram file.
    #[arg(long)]
    pub out: PathBuf,
    /// Config used for the background model and period metadata.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "bin-width-ns")]
    pub bin_width_ns: Option<f64>,
    #[arg(long = "max-tau-ns")]
    pub max_tau_ns: Option<f64>,
    #[arg(long, value_enum, default_value_t = BackgroundMode::Model)]
    pub background: BackgroundMode,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Parallel-polarization histogram.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Perpendicular reference histogram on the same grid.
    #[arg(long)]
    pub reference: PathBuf,
    /// Output report (key: value lines plus residual table).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterScanArgs {
    /// Parallel-polarization record file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Perpendicular reference record file.
    #[arg(long)]
    pub reference: PathBuf,
    /// Comma-separated acceptance windows in ns, ascending.
    #[arg(long = "windows-ns", default_value = "48,200,460,920")]
    pub windows_ns: String,
    /// Central-region pair scope.
    #[arg(long = "max-tau-ns", default_value_t = 2650.0)]
    pub max_tau_ns: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Curve extent, ns.
    #[arg(long = "max-tau-ns", default_value_t = 1500.0)]
    pub max_tau_ns: f64,
    /// Curve sample step, ns.
    #[arg(long = "step-ns", default_value_t = 4.0)]
    pub step_ns: f64,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Time bins for the discretized comparison.
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    /// Maximum tolerated absolute probability deviation.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

/// Execute a parsed command. Errors map to exit codes in `main`.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::FilterScan(args) => cmd_filter_scan(args),
        Command::Analytic(args) => cmd_analytic(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = montecarlo::run(&cfg)?;
    records::write_records_file(&args.out, &out.records)?;
    println!("trains: {}", out.trains);
    println!("records: {}", out.records.len());
    println!("sub_period_pairs: {}", out.central_pairs);
    println!("side_peak_pairs: {}", out.side_peak_pairs);
    Ok(())
}

fn cmd_correlate(args: CorrelateArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => Some(ExperimentConfig::from_file(path)?),
        None => None,
    };
    let defaults = ExperimentConfig::default();
    let period = cfg.as_ref().map_or(defaults.period, |c| c.period);
    let bin_width = args
        .bin_width_ns
        .unwrap_or_else(|| cfg.as_ref().map_or(defaults.bin_width, |c| c.bin_width));
    let max_tau = args.max_tau_ns.unwrap_or(2.5 * period);

    let recs = records::read_records_file(&args.input)?;
    let hist = correlator::correlate(&recs, bin_width, max_tau, period)?;
    let hist = match args.background {
        BackgroundMode::None => hist,
        BackgroundMode::Data => {
            let bg = correlator::background_from_data(&hist);
            hist.with_background(bg)?
        }
        BackgroundMode::Model => match &cfg {
            Some(cfg) => {
                let n_trains = recs.iter().map(|r| r.train_id + 1).max().unwrap_or(0);
                let bg = correlator::background_estimate(cfg, n_trains, bin_width, max_tau)?;
                hist.with_background(bg)?
            }
            None => {
                return Err(Error::InvalidConfig(
                    "--background model needs --config; use --background data or none".into(),
                ))
            }
        },
    };
    correlator::write_histogram_file(&args.out, &hist)?;
    println!("bins: {}", hist.n_bins());
    println!("coincidences: {}", hist.total_counts());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let parallel = correlator::read_histogram_file(&args.input)?;
    let reference = correlator::read_histogram_file(&args.reference)?;
    let fit = analysis::fit_beat(&parallel, &reference)?;
    write_fit_report(&args.out, &fit, &parallel)?;
    println!("converged: {}", fit.converged);
    println!("chi2_per_dof: {:.4}", fit.chi2 / fit.dof as f64);
    println!("delta_mhz: {:.4}", rad_ns_to_mhz(fit.params.delta));
    println!(
        "delta_omega_khz: {:.2}",
        rad_ns_to_khz(fit.params.delta_omega)
    );
    println!("v0: {:.4}", fit.params.v0);
    Ok(())
}

fn write_fit_report(
    path: &Path,
    fit: &analysis::FitResult,
    parallel: &CorrelationHistogram,
) -> Result<()> {
    let f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating report {}", path.display()), e))?;
    let mut w = std::io::BufWriter::new(f);
    let io = |e| Error::io("writing report", e);
    let p = &fit.params;
    writeln!(w, "converged: {}", fit.converged).map_err(io)?;
    writeln!(w, "chi2: {}", fit.chi2).map_err(io)?;
    writeln!(w, "dof: {}", fit.dof).map_err(io)?;
    writeln!(w, "evaluations: {}", fit.evaluations).map_err(io)?;
    writeln!(w, "amplitude: {}", p.amplitude).map_err(io)?;
    writeln!(w, "amplitude_err: {}", fit.param_errors[0]).map_err(io)?;
    writeln!(w, "tau_p_ns: {}", p.tau_p).map_err(io)?;
    writeln!(w, "tau_p_ns_err: {}", fit.param_errors[1]).map_err(io)?;
    writeln!(w, "delta_mhz: {}", rad_ns_to_mhz(p.delta)).map_err(io)?;
    writeln!(w, "delta_mhz_err: {}", rad_ns_to_mhz(fit.param_errors[2])).map_err(io)?;
    writeln!(w, "delta_omega_khz: {}", rad_ns_to_khz(p.delta_omega)).map_err(io)?;
    writeln!(
        w,
        "delta_omega_khz_err: {}",
        rad_ns_to_khz(fit.param_errors[3])
    )
    .map_err(io)?;
    writeln!(w, "v0: {}", p.v0).map_err(io)?;
    writeln!(w, "v0_err: {}", fit.param_errors[4]).map_err(io)?;
    writeln!(w).map_err(io)?;
    writeln!(w, "# tau_ns\tcounts\tmodel\tresidual").map_err(io)?;
    let centers = parallel.centers();
    let model = analysis::beat_model_bins(p, &centers, parallel.bin_width);
    for (i, &tau) in centers.iter().enumerate() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            tau,
            parallel.corrected[i],
            model[i],
            parallel.corrected[i] - model[i]
        )
        .map_err(io)?;
    }
    Ok(())
}

fn cmd_filter_scan(args: FilterScanArgs) -> Result<()> {
    let windows: Vec<f64> = args
        .windows_ns
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad window `{s}`")))
        })
        .collect::<Result<_>>()?;
    let par = records::read_records_file(&args.input)?;
    let reference = records::read_records_file(&args.reference)?;
    let rows = analysis::filter_scan(&par, &reference, &windows, args.max_tau_ns)?;
    let f = std::fs::File::create(&args.out)
        .map_err(|e| Error::io(format!("creating table {}", args.out.display()), e))?;
    let mut w = std::io::BufWriter::new(f);
    let io = |e| Error::io("writing table", e);
    writeln!(
        w,
        "# window_ns\tvisibility\tacceptance_fraction\tretained_parallel\tretained_reference"
    )
    .map_err(io)?;
    for row in &rows {
        let vis = row
            .visibility
            .map_or("undefined".to_string(), |v| v.to_string());
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            row.window, vis, row.acceptance, row.retained_parallel, row.retained_reference
        )
        .map_err(io)?;
        println!(
            "window {} ns: visibility {} acceptance {:.4}",
            row.window, vis, row.acceptance
        );
    }
    Ok(())
}

fn cmd_analytic(args: AnalyticArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_file(&args.config)?;
    if !(args.step_ns > 0.0) || !(args.max_tau_ns > 0.0) {
        return Err(Error::InvalidParameter(
            "step and extent must be positive".into(),
        ));
    }
    let model = BeatModel::new(1.0, cfg.tau_p, cfg.delta, cfg.delta_omega, cfg.v0)?;
    let f = std::fs::File::create(&args.out)
        .map_err(|e| Error::io(format!("creating curves {}", args.out.display()), e))?;
    let mut w = std::io::BufWriter::new(f);
    let io = |e| Error::io("writing curves", e);
    writeln!(w, "# tau_ns\treference\tparallel_model").map_err(io)?;
    let steps = (args.max_tau_ns / args.step_ns).round() as i64;
    for k in -steps..=steps {
        let tau = k as f64 * args.step_ns;
        writeln!(
            w,
            "{}\t{}\t{}",
            tau,
            model::cross_correlation(&model, Polarization::Perpendicular, tau),
            model::cross_correlation(&model, Polarization::Parallel, tau)
        )
        .map_err(io)?;
    }
    Ok(())
}

fn cmd_oracle_check(args: OracleCheckArgs) -> Result<()> {
    let max_dev = oracle_deviation(args.bins)?;
    println!("bins: {}", args.bins);
    println!("max_abs_deviation: {max_dev:.3e}");
    if max_dev > args.tolerance {
        return Err(Error::NumericalFailure(format!(
            "oracle deviation {max_dev:.3e} exceeds {:.1e}",
            args.tolerance
        )));
    }
    println!("oracle check passed");
    Ok(())
}

/// Maximum absolute per-cell probability deviation between the closed-form
/// densities and the exact verifier, over identical, detuned, and
/// perpendicular photon pairs.
pub fn oracle_deviation(bins: usize) -> Result<f64> {
    let tau_p = 450.0;
    let span = 4.0 * tau_p;
    let wp_a = Wavepacket::new(0.0, tau_p, 0.0)?;
    let mut max_dev: f64 = 0.0;
    for detuning in [0.0, 2.0 * std::f64::consts::PI * 3e-3] {
        let wp_b = Wavepacket::new(0.0, tau_p, detuning)?;
        let state = fock::build_state(&wp_a, &wp_b, bins, -span, span)?;
        let grid = GridSpec::new(-span, span, bins)?;
        for pol in [Polarization::Parallel, Polarization::Perpendicular] {
            let dist = match pol {
                Polarization::Parallel => fock::detection_distribution(&state),
                Polarization::Perpendicular => {
                    fock::detection_distribution_distinguishable(&state)
                }
            };
            let jd = model::joint_density(&wp_a, &wp_b, pol, grid)?;
            for ch in Channel::ALL {
                for i in 0..bins {
                    for j in 0..bins {
                        let dev = (dist.prob(ch, i, j) - jd.cell_probability(ch, i, j)).abs();
                        max_dev = max_dev.max(dev);
                    }
                }
            }
        }
    }
    Ok(max_dev)
}
