use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use robust_bc::bc;
use robust_bc::checks;
use robust_bc::experiment::{
    self, emit_tables, run_line, ExperimentConfig, Manifest, RunKey, RunResult, OUTPUT_DIR_ENV, RUNS_HEADER,
};
use robust_bc::{Error, Result};

/// Robust behavioral cloning experiments with t-momentum optimizers.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record expert, amateur and validation demonstrations for one seed.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (default: the config's output_dir).
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate a single arm for one seed and amateur count.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        arm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Amateur trajectory count (default: the first in the config's list).
        #[arg(long)]
        amateur: Option<usize>,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run the full seed × arm × amateur-count sweep and write tables.
    Sweep {
        /// Experiment config (TOML).
        #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Re-run exactly the experiment recorded in a manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant and oracle checks.
    Check {
        /// Only run these checks (repeatable).
        #[arg(long = "only", value_name = "NAME")]
        only: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// List check names and exit.
        #[arg(long)]
        list: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path)?.resolve()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { config, seed, out } => {
            let cfg = load_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            create_dir(&dir)?;
            let data = experiment::seed_data(&cfg, seed)?;
            for (name, trajs) in [
                ("expert.csv", &data.expert),
                ("amateur.csv", &data.amateur),
                ("validation.csv", &data.validation),
            ] {
                let path = dir.join(name);
                bc::save_demos(&path, trajs)?;
                let ok = trajs.iter().filter(|t| t.success).count();
                println!("{}: {} trajectories, {ok} successful", path.display(), trajs.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            config,
            arm,
            seed,
            amateur,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            let arm_spec = cfg.arm(&arm)?.clone();
            let amateur = amateur.unwrap_or(cfg.demos.amateur[0]);
            cfg.seeds = vec![seed];
            cfg.arms = vec![arm_spec];
            cfg.demos.amateur = vec![amateur];
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let data = experiment::seed_data(&cfg, seed)?;
            let key = RunKey {
                seed,
                arm: 0,
                amateur_count: amateur,
            };
            let (net, record) = experiment::train_cell(&cfg, &data, key)?;
            println!("{RUNS_HEADER}\n{}", run_line(&record));
            let result = RunResult {
                config: Some(cfg.clone()),
                runs: vec![record],
                failures: Vec::new(),
            };
            emit_tables(&cfg, &result, &dir)?;
            net.save(&dir.join("model.json"))?;
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, manifest, out } => {
            let cfg = match (config, manifest) {
                (Some(c), _) => load_config(&c)?,
                (None, Some(m)) => Manifest::load(&m)?.config.resolve()?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            create_dir(&dir)?;
            let runs_path = dir.join("runs.csv");
            let file = std::fs::File::create(&runs_path).map_err(|e| Error::Io {
                path: runs_path.clone(),
                source: e,
            })?;
            let runs = Mutex::new(std::io::LineWriter::new(file));
            let _ = writeln!(runs.lock().expect("runs writer"), "{RUNS_HEADER}");
            eprintln!("{}: {} runs", cfg.name, cfg.run_count());
            let result = experiment::run_experiment_with(&cfg, |r| {
                let line = run_line(r);
                eprintln!("{line}");
                let _ = writeln!(runs.lock().expect("runs writer"), "{line}");
            })?;
            let files = emit_tables(&cfg, &result, &dir)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            for f in &result.failures {
                eprintln!("failed: seed {} arm {} amateur {}: {}", f.seed, f.arm, f.amateur_count, f.error);
            }
            Ok(if result.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Check { only, seed, list } => {
            if list {
                for name in checks::names() {
                    println!("{name}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let unknown: Vec<&String> = only.iter().filter(|o| !checks::names().contains(&o.as_str())).collect();
            if !unknown.is_empty() {
                return Err(Error::Config {
                    field: "only".into(),
                    reason: format!("unknown checks {unknown:?}"),
                });
            }
            let outcomes = checks::run(&only, seed);
            for o in &outcomes {
                println!("{} {:<22} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            Ok(if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
