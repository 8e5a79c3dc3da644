//! `homw`: simulate, analyze and sweep joint homodyne records of two
//! interfering photons.

mod config;
mod error;
mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hom_witness::analysis::{apd_probabilities, exact_conditional_second_moment, exact_window_stats, optimize_window, visibility};
use hom_witness::homodyne::{QuadratureSample, QuadratureSampler};
use hom_witness::optics::interfere;

use config::{ExperimentConfig, WindowSpec};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "homw", version, about = "Phase-sensitive Hong-Ou-Mandel simulator and witness analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample joint quadrature records from the configured source.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Replace the configured windows with `lo < |x2| < hi`.
        #[arg(long, value_parser = parse_window)]
        window: Vec<[f64; 2]>,
        /// Directory for plot-ready CSV files.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Evaluate the witness on a sample file and write a JSON report.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_window)]
        window: Vec<[f64; 2]>,
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Coincidence probabilities and visibility over the configured overlaps.
    Hom {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Post-selection window sweep over widths and centers.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sample file; the configured source is simulated when omitted.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep a single width instead of the configured grid.
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([num(lo)?, num(hi)?])
}

fn load(common: &Common, windows: &[[f64; 2]]) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if !windows.is_empty() {
        cfg.windows = windows.iter().map(|&b| WindowSpec::Bounds(b)).collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_samples(cfg: &ExperimentConfig) -> CliResult<Vec<QuadratureSample>> {
    let sampler = QuadratureSampler::new(&cfg.measured_state()?, &cfg.homodyne_setting()?)?;
    Ok(sampler.sample(cfg.n_samples, cfg.seed)?)
}

fn emit_table(out: Option<&Path>, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    match out {
        Some(path) => io::write_table(path, header, rows),
        None => {
            println!("{}", header.join(","));
            for r in rows {
                println!("{}", r.join(","));
            }
            Ok(())
        }
    }
}

fn plot_path(dir: &Path, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn cmd_simulate(common: &Common, out: &Path, windows: &[[f64; 2]], plot_dir: Option<&Path>) -> CliResult<()> {
    let cfg = load(common, windows)?;
    let state = cfg.measured_state()?;
    let dtheta = cfg.delta_theta()?;
    let samples = simulate_samples(&cfg)?;
    io::write_samples(out, &samples)?;

    let cutoff = state.cutoff();
    println!("measured state: cutoff {}, Δθ = {dtheta}", cutoff.n_max());
    println!("photon-number populations (n1, n2):");
    for (idx, p) in state.populations().iter().enumerate() {
        if *p > 1e-12 {
            let occ = cutoff.occupations(idx, 2);
            println!("  ({}, {}): {p:.12}", occ[0], occ[1]);
        }
    }
    for w in cfg.windows()? {
        let s = exact_window_stats(&state, dtheta, w)?;
        println!(
            "window {:.6} < |x2| < {:.6}: probability {:.6}, E[x1²] = {:.6}, E[x1] = {:.6}",
            w.lower(),
            w.upper(),
            s.probability,
            s.second_moment,
            s.first_moment
        );
    }
    println!("wrote {} samples to {}", samples.len(), out.display());

    if let Some(dir) = plot_dir {
        let mut rows = Vec::new();
        for i in 0..=300 {
            let x2 = i as f64 * 0.01;
            match exact_conditional_second_moment(&state, dtheta, x2) {
                Ok(m) => rows.push(vec![x2.to_string(), m.to_string()]),
                Err(hom_witness::Error::NullCondition(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        io::write_table(&plot_path(dir, "conditional_moment.csv")?, &["x2", "second_moment"], rows)?;
    }
    Ok(())
}

fn cmd_analyze(
    common: &Common,
    input: &Path,
    out: Option<&Path>,
    windows: &[[f64; 2]],
    plot_dir: Option<&Path>,
) -> CliResult<()> {
    let cfg = load(common, windows)?;
    let samples = io::read_samples(input)?;
    let rep = report::analyze(&samples, &cfg.windows()?, &cfg.band, cfg.seed, cfg.hash())?;
    let json = report::to_json(&rep);
    match out {
        Some(path) => io::write_atomic(path, json.as_bytes())?,
        None => print!("{json}"),
    }
    if let Some(dir) = plot_dir {
        for (i, w) in rep.windows.iter().enumerate() {
            let rows = w.histogram.bins().map(|(lo, hi, c)| vec![lo.to_string(), hi.to_string(), c.to_string()]).collect::<Vec<_>>();
            io::write_table(&plot_path(dir, &format!("histogram_{i}.csv"))?, &["bin_lo", "bin_hi", "count"], rows)?;
        }
    }
    for w in &rep.windows {
        eprintln!(
            "{:.6} < |x2| < {:.6}: n = {}, E[x1²] = {:.6}, band [{:.6}, {:.6}]",
            w.lower, w.upper, w.report.n_in_window, w.report.estimate, w.report.band_lo, w.report.band_hi
        );
    }
    eprintln!("{}", rep.verdict);
    Ok(())
}

fn cmd_hom(common: &Common, out: Option<&Path>) -> CliResult<()> {
    let cfg = load(common, &[])?;
    if cfg.hom.overlaps.is_empty() {
        return Err(CliError::Config("hom.overlaps must be nonempty".into()));
    }
    let cutoff = cfg.fock_cutoff()?;
    let mut rows = Vec::new();
    let mut p11 = Vec::new();
    for &xi in &cfg.hom.overlaps {
        let t = apd_probabilities(&interfere(&cfg.source_with_overlap(xi)?, cutoff)?);
        p11.push(t.p11);
        rows.push([xi, t.p00, t.p01, t.p10, t.p11].iter().map(|v| v.to_string()).collect());
    }
    emit_table(out, &["xi", "P00", "P01", "P10", "P11"], rows)?;
    let v = visibility(&p11)?;
    if out.is_some() {
        println!("V = {v}");
    } else {
        eprintln!("V = {v}");
    }
    Ok(())
}

fn cmd_sweep(common: &Common, input: Option<&Path>, out: Option<&Path>, delta: Option<f64>) -> CliResult<()> {
    let cfg = load(common, &[])?;
    let samples = match input {
        Some(p) => io::read_samples(p)?,
        None => simulate_samples(&cfg)?,
    };
    let deltas = match delta {
        Some(d) if d > 0.0 && d.is_finite() => vec![d],
        Some(d) => return Err(CliError::Config(format!("--delta {d} must be positive"))),
        None => cfg.sweep.deltas.clone(),
    };
    let res = optimize_window(&samples, &deltas, &cfg.sweep.centers, &cfg.band, cfg.seed)?;
    let rows = res
        .rows
        .iter()
        .map(|r| {
            vec![
                r.delta.to_string(),
                r.best_center.to_string(),
                r.e_min.to_string(),
                r.n_in_window.to_string(),
                r.band_lo.to_string(),
                r.band_hi.to_string(),
            ]
        })
        .collect();
    emit_table(out, &["delta", "best_x2", "e_min", "n_in_window", "band_lo", "band_hi"], rows)?;
    let best = res.best_row();
    let msg = format!(
        "best delta: {} (x2 = {}, E = {:.6}, band_hi = {:.6}); {} windows skipped",
        best.delta,
        best.best_center,
        best.e_min,
        best.band_hi,
        res.skipped.len()
    );
    if out.is_some() {
        println!("{msg}");
    } else {
        eprintln!("{msg}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, out, window, plot_dir } => cmd_simulate(common, out, window, plot_dir.as_deref()),
        Command::Analyze { common, input, out, window, plot_dir } => {
            cmd_analyze(common, input, out.as_deref(), window, plot_dir.as_deref())
        }
        Command::Hom { common, out } => cmd_hom(common, out.as_deref()),
        Command::Sweep { common, input, out, delta } => cmd_sweep(common, input.as_deref(), out.as_deref(), *delta),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homw: {e}");
            e.exit_code()
        }
    }
}
