use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use mecsim::batch::{
    export_batch, export_sweep, parse_sweep, run_batch, run_sweep, sinr_map_csv, write_atomic,
};
use mecsim::mobility::MobilityModel;
use mecsim::{Algorithm, RunOptions, Scenario};

/// Simulate computation-aware handoff in a MEC-enabled cellular network.
#[derive(Debug, Parser)]
#[command(name = "mecsim", version)]
struct Args {
    /// Scenario file (flat TOML); defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// comp-ho, a2a4, a3, noho, or all.
    #[arg(long)]
    algo: Option<String>,
    /// Number of seeds to run.
    #[arg(long)]
    seeds: Option<u64>,
    /// First seed.
    #[arg(long, default_value_t = 1)]
    seed_base: u64,
    /// UE speed in m/s.
    #[arg(long)]
    speed: Option<f64>,
    /// Frames per second per UE.
    #[arg(long)]
    fps: Option<f64>,
    /// rwp or gauss-markov.
    #[arg(long)]
    mobility: Option<String>,
    /// Sweep one axis, e.g. `delta=0,0.5,1,2`.
    #[arg(long)]
    sweep: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the event dispatch log of every run.
    #[arg(long)]
    trace: bool,
    /// Write UE trajectories of every run.
    #[arg(long)]
    trajectories: bool,
    /// Write the best-server SINR map (10 m grid) and exit.
    #[arg(long)]
    sinr_map: bool,
}

fn resolve(args: &Args) -> Result<Scenario> {
    let mut s = match &args.config {
        Some(p) => Scenario::from_file(p)?,
        None => Scenario::default(),
    };
    if let Some(a) = &args.algo {
        s.algorithms = if a == "all" {
            Algorithm::ALL.to_vec()
        } else {
            let Some(alg) = Algorithm::parse(a) else {
                bail!("unknown algorithm `{a}` (expected comp-ho, a2a4, a3, noho or all)");
            };
            vec![alg]
        };
    }
    if let Some(n) = args.seeds {
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        s.seeds = (args.seed_base..args.seed_base + n).collect();
    } else if args.seed_base != 1 {
        let n = s.seeds.len() as u64;
        s.seeds = (args.seed_base..args.seed_base + n).collect();
    }
    if let Some(v) = args.speed {
        s.speed_mps = v;
    }
    if let Some(v) = args.fps {
        s.fps = v;
    }
    if let Some(m) = &args.mobility {
        s.mobility = match MobilityModel::parse(m) {
            Some(m @ (MobilityModel::Rwp | MobilityModel::GaussMarkov)) => m,
            _ => bail!("unknown mobility model `{m}` (expected rwp or gauss-markov)"),
        };
    }
    if let Some(o) = &args.out {
        s.output_dir = o.display().to_string();
    }
    s.validate()?;
    Ok(s)
}

fn run(args: Args) -> Result<()> {
    let scenario = resolve(&args)?;
    let out = PathBuf::from(&scenario.output_dir);
    let options = RunOptions {
        trace: args.trace,
        trajectories: args.trajectories,
    };

    if args.sinr_map {
        let layout = scenario.layout()?;
        let path = out.join("sinr_map.csv");
        write_atomic(&path, &sinr_map_csv(&layout, &scenario, 10.0))?;
        println!("wrote {}", path.display());
        return Ok(());
    }

    if let Some(sweep) = &args.sweep {
        let (axis, values) = parse_sweep(sweep)?;
        let points = run_sweep(&scenario, &axis, &values, options)?;
        export_sweep(&scenario, &axis, &points, &out)?;
        for p in &points {
            for s in p.batch.comparison() {
                println!("{axis}={:<8} {}", p.value, s.digest());
            }
        }
        println!("wrote {}", out.join(format!("sweep_{axis}.csv")).display());
        return Ok(());
    }

    let batch = run_batch(&scenario, options)?;
    export_batch(&batch, &out, options).with_context(|| format!("exporting to {}", out.display()))?;
    for r in &batch.runs {
        println!("{}", r.summary.digest());
    }
    println!("--- pooled over {} seed(s)", scenario.seeds.len());
    for s in batch.comparison() {
        println!("{}", s.digest());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
