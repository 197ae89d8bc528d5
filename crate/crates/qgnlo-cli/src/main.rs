use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qgnlo_cli::bench::{run_benchmark, write_bench_csv};
use qgnlo_cli::config::{Method, RunConfig};
use qgnlo_cli::mc::{run_monte_carlo, summarize, write_mc_csv, McConfig, Topology};
use qgnlo_cli::output::write_run_json;
use qgnlo_cli::runner::run_single;
use qgnlo_cli::sweep::{run_sweep, write_sweep_csv};
use qgnlo_core::QuantumGraph;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "qgnlo",
    about = "Hyperpolarizability tensors of planar quantum graphs, by perturbation sums and by ground-state quadratures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one graph and write a JSON report.
    Run {
        /// Graph spec file (JSON).
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        /// Excited states kept in the perturbation sums.
        #[arg(long, default_value_t = 30)]
        modes: usize,
        /// Samples per edge for all quadratures (odd).
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-edge CSV dumps of the DL fields.
        #[arg(long)]
        dump_fields: Option<PathBuf>,
    },
    /// Rotate one edge through a full turn and tabulate the tensors.
    Sweep {
        #[arg(long)]
        graph: PathBuf,
        /// Edge to rotate, 1-based in file order.
        #[arg(long)]
        rotate_edge: usize,
        /// Number of angles, spanning 0..360 degrees inclusive.
        #[arg(long, default_value_t = 73)]
        steps: usize,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        #[arg(long, default_value_t = 30)]
        modes: usize,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded Monte Carlo over random geometries of a fixed topology.
    Mc {
        /// Topology: 3star, 4star, 3wire, or 3loop.
        #[arg(long)]
        topology: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "dl")]
        method: Method,
        #[arg(long, default_value_t = 20)]
        modes: usize,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        /// Uniform edge-length range.
        #[arg(long, default_value_t = 0.2)]
        len_min: f64,
        #[arg(long, default_value_t = 1.0)]
        len_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time both pipelines across basis sizes and report the speedup curve.
    Bench {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated list of excited-state counts.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
        modes: Vec<usize>,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_graph(path: &PathBuf) -> Result<QuantumGraph> {
    QuantumGraph::from_json_file(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            graph,
            method,
            modes,
            grid,
            out,
            dump_fields,
        } => {
            let g = load_graph(&graph)?;
            let config = RunConfig::new(method, modes, grid)?;
            let result = run_single(&g, &config, dump_fields.as_deref())?;
            write_run_json(&result, &out)?;
            if let Some(c) = &result.comparison {
                println!(
                    "beta dev {:.3e} (rel {:.3e}), gamma dev {:.3e} (rel {:.3e})",
                    c.beta_max_abs_dev, c.beta_rel_dev, c.gamma_max_abs_dev, c.gamma_rel_dev
                );
            }
            for m in [&result.sos, &result.dl].into_iter().flatten() {
                for f in &m.flags {
                    eprintln!("flag: {f}");
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep {
            graph,
            rotate_edge,
            steps,
            method,
            modes,
            grid,
            out,
        } => {
            let g = load_graph(&graph)?;
            let config = RunConfig::new(method, modes, grid)?;
            let rows = run_sweep(&g, rotate_edge, steps, &config)?;
            write_sweep_csv(&rows, &out)?;
            println!("wrote {} ({} angles)", out.display(), rows.len());
        }
        Command::Mc {
            topology,
            samples,
            seed,
            method,
            modes,
            grid,
            len_min,
            len_max,
            out,
        } => {
            let topo: Topology = topology.parse()?;
            if len_min.is_nan() || len_max.is_nan() || len_min <= 0.0 || len_min > len_max {
                anyhow::bail!("need 0 < --len-min <= --len-max, got {len_min}..{len_max}");
            }
            let mc = McConfig {
                topology,
                samples,
                seed,
                len_min,
                len_max,
                run: RunConfig::new(method, modes, grid)?,
            };
            let results = run_monte_carlo(topo, &mc)?;
            write_mc_csv(&results, mc.seed, &out)?;
            let summary = summarize(&results, &mc);
            let summary_path = out.with_extension("summary.json");
            std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
            println!("{}", serde_json::to_string(&summary)?);
            println!("wrote {} and {}", out.display(), summary_path.display());
        }
        Command::Bench {
            graph,
            modes,
            grid,
            out,
        } => {
            let g = load_graph(&graph)?;
            let rows = run_benchmark(&g, &modes, grid)?;
            write_bench_csv(&rows, &out)?;
            for r in &rows {
                println!(
                    "modes {:>3}: sos {:>9.3} ms, dl {:>8.3} ms, speedup {:.2}x",
                    r.modes, r.t_sos_ms, r.t_dl_ms, r.speedup
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
