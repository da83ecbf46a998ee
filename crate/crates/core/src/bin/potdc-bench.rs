#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Command-line runner for the simulation examples and the self-test.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use potdc::bench::suites::{convexity, run_selftest, SelftestLevel};
use potdc::bench::{
    exit_code, format_summary, run_experiment, summarize, summary_chart, write_csv,
    ExperimentConfig, Scenario,
};
use potdc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "potdc-bench",
    version,
    about = "Robust beamforming experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian scattered source, SINR and objective against SNR.
    Example1(RunArgs),
    /// Fluctuating truncated Laplacian source.
    Example2(RunArgs),
    /// Iteration counts against array size.
    Example3(RunArgs),
    /// Numerical convexity check of the optimal value function.
    Convexity {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory for counterexample JSON files.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Oracle suites of every module.
    Selftest {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        /// Shrink every tolerance so the suites must fail.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Experiment described entirely by a config file.
    Custom(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file; its keys override the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Record wall times (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Directory for counterexample JSON files of failed convexity checks.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

fn config_for(scenario: Scenario, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, scenario) {
        (Some(path), Scenario::Custom) => ExperimentConfig::from_file(path, None)?,
        (Some(path), s) => ExperimentConfig::from_file(path, Some(s))?,
        (None, Scenario::Custom) => {
            return Err(Error::InvalidInput(
                "config: custom runs need --config <path>".into(),
            ));
        }
        (None, s) => ExperimentConfig::for_scenario(s),
    };
    if let Some(t) = args.trials {
        cfg.num_trials = t;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    cfg.timing |= args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", path.display())))
}

fn dump(dir: &Path, name: String, cx: &potdc::potdc::Counterexample) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", dir.display())))?;
    let path = dir.join(name);
    cx.write_json(&path)
        .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", path.display())))?;
    eprintln!("counterexample written to {}", path.display());
    Ok(())
}

fn run(scenario: Scenario, args: &RunArgs) -> Result<u8> {
    let cfg = config_for(scenario, args)?;
    let out = run_experiment(&cfg)?;
    match &args.out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", path.display())))?;
            write_csv(&out.records, BufWriter::new(f))?;
        }
        None => write_csv(&out.records, io::stdout().lock())?,
    }
    let rows = summarize(&out.records);
    eprint!("{}", format_summary(&rows));
    if let Some(path) = &args.svg {
        write_file(path, summary_chart(&cfg, &rows).as_bytes())?;
    }
    for (i, cx) in out.counterexamples.iter().enumerate() {
        if let Some(dir) = &args.dump_dir {
            dump(dir, format!("counterexample_{i}.json"), cx)?;
        }
    }
    if !out.counterexamples.is_empty() {
        eprintln!(
            "{} instance(s) failed the convexity check",
            out.counterexamples.len()
        );
        return Ok(2);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Example1(a) => run(Scenario::Example1, a),
        Command::Example2(a) => run(Scenario::Example2, a),
        Command::Example3(a) => run(Scenario::Example3, a),
        Command::Custom(a) => run(Scenario::Custom, a),
        Command::Convexity {
            instances,
            grid,
            seed,
            dump_dir,
        } => {
            let (res, found) = convexity(*instances, *grid, *seed, 1.0);
            println!("{}", res.line());
            let mut r = Ok(if res.passed() { 0 } else { 2 });
            if let Some(dir) = dump_dir {
                for (i, cx) in found.iter().enumerate() {
                    if let Err(e) = dump(dir, format!("counterexample_{i}.json"), cx) {
                        r = Err(e);
                    }
                }
            }
            r
        }
        Command::Selftest {
            level,
            inject_fault,
        } => {
            let level = match level {
                Level::Quick => SelftestLevel::Quick,
                Level::Full => SelftestLevel::Full,
            };
            run_selftest(level, *inject_fault).map(|rep| {
                let mut out = io::stdout().lock();
                for s in &rep.suites {
                    let _ = writeln!(out, "{}", s.line());
                }
                if rep.passed() {
                    0
                } else {
                    2
                }
            })
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
