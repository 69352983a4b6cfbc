use std::path::PathBuf;
use std::process::ExitCode;

use cellsleep::harness::{self, parse_mode, ExperimentConfig, PolicyKind};
use cellsleep::Error;
use clap::{Parser, Subcommand};

/// Cell on/off switching experiments for base-station energy saving.
#[derive(Parser, Debug)]
#[command(name = "cellsleep", version)]
struct Cli {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// 2cell or 4cell; both when omitted.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// noes, rule, random, adp or adp-fixed; all when omitted.
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Random-policy runs per scenario for data collection.
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the scenario file.
    GenerateScenarios {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Collect random-action traces.
    CollectData,
    /// Train the power, QoS and handover estimators.
    Train,
    /// Build the cost-to-go tables.
    BuildTable,
    /// Evaluate policies on every scenario.
    Run {
        #[arg(long)]
        eval_seeds: Option<usize>,
        #[arg(long)]
        stations: Option<usize>,
    },
    /// Write the summary and hourly CSVs.
    Report,
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(m) = &cli.mode {
        cfg.mode = Some(parse_mode(m)?);
    }
    if let Some(p) = &cli.policy {
        cfg.policy = Some(PolicyKind::parse(p)?);
    }
    if let Some(r) = cli.runs {
        cfg.runs = r;
    }
    match cli.command {
        Command::GenerateScenarios { count: Some(c) } => cfg.scenario_count = c,
        Command::Run {
            eval_seeds,
            stations,
        } => {
            cfg.eval_seeds = eval_seeds.unwrap_or(cfg.eval_seeds);
            cfg.stations = stations.unwrap_or(cfg.stations);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let cfg = configure(cli)?;
    match cli.command {
        Command::GenerateScenarios { .. } => {
            let path = harness::generate_scenarios(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::CollectData => {
            let m = harness::collect_data(&cfg)?;
            println!(
                "wrote {} traces to {}",
                m.files.len(),
                cfg.corpus_dir().display()
            );
        }
        Command::Train => {
            let r = harness::train(&cfg)?;
            println!(
                "heldout: power relative MAE {:.4}, QoS MAE {:.3}, handover MAE {:.3}",
                r.heldout.power_rel_mae, r.heldout.qos_mae, r.heldout.handover_mae
            );
        }
        Command::BuildTable => {
            for p in harness::build_table(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Run { .. } => {
            for p in harness::run(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Report => {
            for p in harness::report(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
