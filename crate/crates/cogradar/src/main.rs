//! Command-line front end: run closed-loop simulations, sweep operating
//! points, benchmark the beam synthesizer, and tabulate the disturbance
//! spectrum, writing CSV reports into an output directory.

use clap::{Args, Parser, Subcommand};
use cogradar::array::{ArrayConfig, BeamWeights};
use cogradar::beamformer::{synthesize, BeamProblem, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use cogradar::detector::DetectorConfig;
use cogradar::error::{Error, Result};
use cogradar::report;
use cogradar::scenario::{parse, preset, Policy, Scenario};
use cogradar::simulator::{run_monte_carlo, McSummary};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "cogradar",
    version,
    about = "Cognitive MIMO radar simulator: adaptive detection and beamforming in heavy-tailed clutter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop Monte Carlo simulation and write reports.
    Simulate(ScenarioArgs),
    /// Sweep the false-alarm rate and record target detection frequency.
    Roc(ScenarioArgs),
    /// Sweep matched transmit/receive antenna counts.
    SweepN(ScenarioArgs),
    /// Benchmark max-min beam synthesis across transmit sizes.
    BeamBench(ScenarioArgs),
    /// Tabulate the disturbance power spectral density.
    Psd(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Bundled preset name (scenario1 … scenario6).
    #[arg(long, default_value = "scenario1")]
    preset: String,

    /// Scenario file; takes precedence over --preset.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Override the scenario's random seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the Monte Carlo run count.
    #[arg(long)]
    mc_runs: Option<usize>,

    /// Override the control policy: rl, omni, or adaptive.
    #[arg(long)]
    policy: Option<String>,

    /// Override the transmit antenna count.
    #[arg(long)]
    ntx: Option<usize>,

    /// Override the receive antenna count.
    #[arg(long)]
    nrx: Option<usize>,

    /// Override the detector false-alarm rate.
    #[arg(long)]
    pfa: Option<f64>,

    /// Directory receiving the CSV reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario> {
    let mut s = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse(&text)?
        }
        None => preset(&args.preset)?,
    };
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(mc) = args.mc_runs {
        s.mc_runs = mc;
    }
    if let Some(policy) = &args.policy {
        s.policy = Policy::parse(policy)?;
    }
    if args.ntx.is_some() || args.nrx.is_some() {
        let n_tx = args.ntx.unwrap_or(s.cfg.n_tx);
        let n_rx = args.nrx.unwrap_or(s.cfg.n_rx);
        s.cfg = ArrayConfig::new(n_tx, n_rx, s.cfg.grid.clone())?;
    }
    if let Some(pfa) = args.pfa {
        s.detector = DetectorConfig {
            pfa: DetectorConfig::new(pfa)?.pfa,
            ..s.detector
        };
    }
    s.validate()?;
    Ok(s)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Steady-state averaging window: the last two fifths of the episode.
fn steady_window(pulses: usize) -> (usize, usize) {
    (pulses * 3 / 5, pulses.saturating_sub(1))
}

/// Distinct target bins of the scenario, ascending; the whole grid when no
/// target is defined.
fn target_bins(s: &Scenario) -> Vec<usize> {
    let mut bins: Vec<usize> = s
        .events
        .iter()
        .map(|ev| s.bin_of(ev.nu).expect("validated"))
        .collect();
    bins.sort_unstable();
    bins.dedup();
    if bins.is_empty() {
        bins = (0..s.cfg.bins()).collect();
    }
    bins
}

fn steady_points(s: &Scenario, summary: &McSummary) -> Vec<(usize, f64, f64)> {
    let (from, to) = steady_window(summary.pulses);
    target_bins(s)
        .into_iter()
        .map(|bin| {
            (
                bin,
                summary.grid[bin],
                summary.mean_detect_over(from, to, bin),
            )
        })
        .collect()
}

fn cmd_simulate(args: &ScenarioArgs) -> Result<()> {
    let s = load_scenario(args)?;
    ensure_out_dir(&args.out)?;
    let summary = run_monte_carlo(&s)?;
    report::write_text(&args.out.join("report.csv"), &report::render_summary_csv(&summary))?;
    report::write_text(
        &args.out.join("qtable.csv"),
        &report::render_qtable_csv(&summary.final_qtable),
    )?;
    report::write_text(
        &args.out.join("actions.csv"),
        &report::render_actions_csv(&summary),
    )?;
    println!(
        "wrote {}: {} pulses x {} bins over {} runs (policy {})",
        args.out.join("report.csv").display(),
        summary.pulses,
        summary.grid.len(),
        summary.mc_runs,
        s.policy.as_str()
    );
    Ok(())
}

fn cmd_roc(args: &ScenarioArgs) -> Result<()> {
    let s = load_scenario(args)?;
    ensure_out_dir(&args.out)?;
    // A single --pfa collapses the sweep to that operating point.
    let pfas: Vec<f64> = match args.pfa {
        Some(p) => vec![p],
        None => vec![1e-5, 1e-4, 1e-3, 1e-2, 1.0],
    };
    let mut points = Vec::new();
    for &pfa in &pfas {
        let mut run = s.clone();
        run.detector = DetectorConfig {
            pfa: DetectorConfig::new(pfa)?.pfa,
            ..run.detector
        };
        let summary = run_monte_carlo(&run)?;
        for (bin, nu, detect_freq) in steady_points(&run, &summary) {
            points.push(report::RocPoint {
                pfa,
                bin,
                nu,
                detect_freq,
            });
        }
    }
    report::write_text(&args.out.join("roc.csv"), &report::render_roc_csv(&points))?;
    println!(
        "wrote {}: {} operating points x {} target bins",
        args.out.join("roc.csv").display(),
        pfas.len(),
        points.len() / pfas.len()
    );
    Ok(())
}

fn cmd_sweep_n(args: &ScenarioArgs) -> Result<()> {
    let s = load_scenario(args)?;
    ensure_out_dir(&args.out)?;
    let ns: Vec<usize> = match args.ntx {
        Some(n) => vec![n],
        None => vec![10, 12, 16, 21, 27, 35, 46, 59, 77, 100],
    };
    let mut points = Vec::new();
    for &n in &ns {
        let mut run = s.clone();
        run.cfg = ArrayConfig::new(n, n, run.cfg.grid.clone())?;
        let summary = run_monte_carlo(&run)?;
        for (bin, nu, detect_freq) in steady_points(&run, &summary) {
            points.push(report::SweepPoint {
                n,
                bin,
                nu,
                detect_freq,
            });
        }
    }
    report::write_text(
        &args.out.join("sweep.csv"),
        &report::render_sweep_csv(&points),
    )?;
    println!(
        "wrote {}: {} antenna counts",
        args.out.join("sweep.csv").display(),
        ns.len()
    );
    Ok(())
}

fn cmd_beam_bench(args: &ScenarioArgs) -> Result<()> {
    let s = load_scenario(args)?;
    ensure_out_dir(&args.out)?;
    let sizes: Vec<usize> = match args.ntx {
        Some(n) => vec![n],
        None => vec![4, 16, 64],
    };
    let mut nus: Vec<f64> = s.events.iter().map(|ev| ev.nu).collect();
    nus.sort_by(f64::total_cmp);
    nus.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if nus.is_empty() {
        nus.push(0.0);
    }
    let mut runs = Vec::new();
    for &n in &sizes {
        let cfg = ArrayConfig::new(n, s.cfg.n_rx, s.cfg.grid.clone())?;
        let problem = BeamProblem::new(nus.clone(), s.total_power, cfg)?;
        let w0 = BeamWeights::omni(n, s.total_power);
        let state = synthesize(&problem, &w0, DEFAULT_MAX_ITERS, DEFAULT_TOL)?;
        println!(
            "ntx {n}: min pattern {:.6} after {} iterations (converged: {})",
            state.zeta, state.iteration, state.converged
        );
        runs.push((n, state));
    }
    report::write_text(
        &args.out.join("beam_bench.csv"),
        &report::render_beam_bench_csv(&runs),
    )?;
    println!("wrote {}", args.out.join("beam_bench.csv").display());
    Ok(())
}

fn cmd_psd(args: &ScenarioArgs) -> Result<()> {
    let s = load_scenario(args)?;
    ensure_out_dir(&args.out)?;
    report::write_text(
        &args.out.join("psd.csv"),
        &report::render_psd_csv(&s.disturbance, 512),
    )?;
    println!(
        "wrote {}: 512 rows, disturbance power {:.6}",
        args.out.join("psd.csv").display(),
        s.disturbance.variance()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Roc(args) => cmd_roc(args),
        Command::SweepN(args) => cmd_sweep_n(args),
        Command::BeamBench(args) => cmd_beam_bench(args),
        Command::Psd(args) => cmd_psd(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
