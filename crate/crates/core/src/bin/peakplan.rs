use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use peakplan::config::ScenarioConfig;
use peakplan::output::{file_stem, write_run, write_sweep_csv};
use peakplan::sweep::run_sweep;
use peakplan::{evaluate_plan, Error};

/// Evaluate customer engagement plans for residential peak-load reduction.
#[derive(Parser)]
#[command(name = "peakplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every selected plan of a scenario.
    Run(CommonArgs),
    /// Evaluate the Cartesian product of the scenario's sweep axes.
    Sweep(CommonArgs),
    /// Check a scenario and report every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `[output].dir` or `out` next to the scenario.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ScenarioConfig, Vec<Error>> {
    let mut cfg = ScenarioConfig::from_path(path).map_err(|e| vec![e])?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

fn run(args: &CommonArgs) -> Result<(), Vec<Error>> {
    let cfg = load(&args.config, args.seed)?;
    let out = args.out_dir.clone().unwrap_or_else(|| cfg.output_dir());
    let community = cfg.build_community().map_err(|e| vec![e])?;
    let classes = community.classes();
    let options = cfg.run.options();
    for (i, spec) in cfg.run_plans().map_err(|e| vec![e])? {
        let plan = spec.build(&classes, &format!("plans[{i}]")).map_err(|e| vec![e])?;
        let eval = evaluate_plan(&community, &plan, &options).map_err(|e| vec![e])?;
        write_run(&out, &spec.name, cfg.seed, &plan, &eval).map_err(|e| vec![e])?;
        let r = &eval.report;
        println!(
            "{}: peak {:.3} kW -> {:.3} kW ({:.2}% reduction)",
            spec.name, r.peak_before_kw, r.final_peak_kw, r.percent_peak_reduction
        );
    }
    Ok(())
}

fn sweep(args: &CommonArgs) -> Result<(), Vec<Error>> {
    let cfg = load(&args.config, args.seed)?;
    if cfg.sweep.is_none() {
        return Err(vec![Error::config("sweep", "the sweep command needs a [sweep] table")]);
    }
    let out = args.out_dir.clone().unwrap_or_else(|| cfg.output_dir());
    let outcome = run_sweep(&cfg, args.workers).map_err(|e| vec![e])?;
    std::fs::create_dir_all(&out).map_err(|e| vec![e.into()])?;
    let path = out.join(format!("sweep_{}.csv", file_stem(&outcome.plan)));
    write_sweep_csv(&path, &outcome).map_err(|e| vec![e])?;
    println!("{} points -> {}", outcome.rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate { config, seed } => load(config, *seed).map(|_| println!("ok")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(errs) => {
            for e in &errs {
                eprintln!("error: {e}");
            }
            ExitCode::FAILURE
        }
    }
}
