use std::path::PathBuf;
use std::process::ExitCode;

use cascade_lab::commands::{
    self, cmd_bifurcate, cmd_simulate, cmd_spectrum, cmd_sweep, cmd_threshold,
};
use cascade_lab::config::BifurcationMode;
use cascade_lab::graph_file::read_graph;
use cascade_lab::{LabError, LabResult, RunConfig};
use clap::{Parser, Subcommand};

/// Opinion cascades on networks: spectra, simulations, bifurcation
/// diagrams, cascade thresholds and Monte Carlo sweeps.
#[derive(Debug, Parser)]
#[command(name = "cascade-lab", version)]
struct Cli {
    /// Graph file (`N <n> <directed|undirected>` then `i j` lines).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    /// Run configuration (`key = value` lines in sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Integration horizon; overrides `[integrator] t_end`.
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Sweep workers (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues, centralities and critical attention values.
    Spectrum,
    /// Integrate the coupled system; writes a trajectory and a verdict.
    Simulate,
    /// Continuation branches with stability and special points.
    Bifurcate {
        /// `fixed_u` or `coupled_input`; overrides `[bifurcate] mode`.
        #[arg(long)]
        mode: Option<BifurcationMode>,
    },
    /// Heatmap of no-cascade fractions over magnitude and alignment.
    Sweep,
    /// Cascade threshold along a direction by bisection.
    Threshold,
}

fn load(cli: &Cli) -> LabResult<(cascade_lab::cascade_core::Graph, RunConfig)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.seed = cli.seed;
    cfg.output_dir = cli.out_dir.clone();
    if let Some(t) = cli.t_end {
        cfg = cfg.with_t_end(t)?;
    }
    let path = cli
        .graph
        .clone()
        .or_else(|| cfg.graph_path.clone())
        .ok_or_else(|| LabError::Config("no graph: pass --graph or set [model] graph".into()))?;
    Ok((read_graph(&path)?, cfg))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(cli: &Cli) -> LabResult<()> {
    let (g, cfg) = load(cli)?;
    let out = cfg.output_dir.display();
    match &cli.command {
        Command::Spectrum => {
            let r = cmd_spectrum(&g, &cfg)?;
            println!(
                "vertices: {} ({})",
                r.num_vertices,
                if r.directed { "directed" } else { "undirected" }
            );
            for [re, im] in &r.eigenvalues {
                if *im == 0.0 {
                    println!("  lambda = {re:.12}");
                } else {
                    println!("  lambda = {re:.12} {im:+.12}i");
                }
            }
            for (name, e, u) in [
                ("agreement", &r.agreement, "u_a"),
                ("disagreement", &r.disagreement, "u_d"),
            ] {
                println!(
                    "{name}: lambda = {:.12} (multiplicity {})",
                    e.eigenvalue, e.multiplicity
                );
                if let Some(c) = &e.centrality {
                    println!("  centrality = {}", fmt_vec(c));
                }
                if let Some(u) = e.critical_attention.map(|v| format!("{u} = {v:.12}")) {
                    println!("  {u}");
                }
            }
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {out}/{}", commands::SPECTRUM_JSON);
        }
        Command::Simulate => {
            let r = cmd_simulate(&g, &cfg)?;
            let v = &r.verdict;
            println!(
                "{} regime, u_c = {:.12}, attention in [{:.6}, {:.6}]",
                r.regime, r.u_critical, r.u_low, r.u_high
            );
            println!(
                "cascaded: {} ({}) at t = {}; x = {}",
                v.cascaded,
                v.classification,
                v.final_time,
                fmt_vec(&v.final_state.x)
            );
            println!(
                "wrote {out}/{} and {out}/{}",
                commands::TRAJECTORY_CSV,
                commands::VERDICT_JSON
            );
        }
        Command::Bifurcate { mode } => {
            let mode = mode
                .or(cfg.bifurcate.mode)
                .unwrap_or(BifurcationMode::FixedU);
            let r = cmd_bifurcate(&g, &cfg, mode)?;
            println!("{} continuation, u_c = {:.12}", r.mode, r.u_critical);
            for b in &r.branches {
                println!(
                    "  {}: {} points over [{:.6}, {:.6}], {} -> {out}/{}",
                    b.name,
                    b.points,
                    b.parameter_range[0],
                    b.parameter_range[1],
                    b.termination,
                    b.file
                );
                for s in &b.special {
                    println!(
                        "    {} at {:.12} (proj {:.6})",
                        s.kind, s.parameter, s.projection
                    );
                }
            }
            for n in &r.notes {
                eprintln!("note: {n}");
            }
        }
        Command::Sweep => {
            let total = cfg.sweep_config()?.magnitudes.len();
            let (r, _) = cmd_sweep(&g, &cfg, cli.threads, |level, grid| {
                eprintln!(
                    "magnitude {}/{} done ({} runs)",
                    level + 1,
                    total,
                    grid.total_count()
                );
            })?;
            println!(
                "{} runs, {} cascaded; alignment inversions: {}",
                r.total_runs, r.cascaded_runs, r.alignment_inversions
            );
            println!(
                "wrote {out}/{}, {out}/{} and {out}/{}",
                commands::HEATMAP_CSV,
                commands::RUNS_CSV,
                commands::SWEEP_JSON
            );
        }
        Command::Threshold => {
            let r = cmd_threshold(&g, &cfg)?;
            println!(
                "threshold {:.9} along alignment {:.6}; bracket [{:.9}, {:.9}] after {} trials",
                r.threshold, r.alignment, r.bracket[0], r.bracket[1], r.trials
            );
            if let Some(f) = r.fold {
                println!("fold of the weak branch at {f:.9}");
            }
            println!("wrote {out}/{}", commands::THRESHOLD_JSON);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
