use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use flp::miner::{mine_closed, read_patterns, write_patterns};
use flp::pipeline::run::{split_sequences, write_reference};
use flp::pipeline::{
    extract_training, fit_classifier, generate_synthetic, run_crossval, run_evaluate,
    select_patterns, train_on, write_eval, Grid, PipelineConfig, SynthSpec, Timings,
    TrainArtifacts, TrainedModel,
};
use flp::selection::{read_selected, write_selected};
use flp::skeleton::load_manifest;
use flp::transactions::{read_dump, write_dump};
use flp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "flp",
    version,
    about = "Skeleton action recognition with frequent local parts"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline config (TOML). Defaults to the chosen preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in config used when --config is absent.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Synthetic)]
    preset: Preset,
    /// Dataset manifest (CSV: path,label,subject,instance).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed; for `synth`, the generator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    DailyActivity,
    ActionPairs,
    Synthetic,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its manifest.
    Synth {
        #[arg(long, default_value_t = 4)]
        classes: u32,
        #[arg(long, default_value_t = 6)]
        subjects: u32,
        #[arg(long, default_value_t = 2)]
        instances: u32,
        #[arg(long, default_value_t = 40)]
        frames: usize,
        #[arg(long, default_value_t = 0.004)]
        noise: f64,
    },
    /// Reference lengths and transaction dump of the training split.
    Extract,
    /// Closed frequent patterns from a transaction dump.
    Mine {
        #[arg(long)]
        transactions: PathBuf,
    },
    /// Top-K relevant patterns from transaction and pattern dumps.
    Select {
        #[arg(long)]
        transactions: PathBuf,
        #[arg(long)]
        patterns: PathBuf,
    },
    /// Full training run; writes model and stage dumps.
    Train {
        /// Use this selection instead of mining and selecting.
        #[arg(long)]
        selected: Option<PathBuf>,
    },
    /// Classify the test split with a trained model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Grid search on a subject holdout inside the training split.
    Crossval {
        #[arg(long)]
        grid: PathBuf,
    },
}

impl Global {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => match self.preset {
                Preset::DailyActivity => PipelineConfig::daily_activity(),
                Preset::ActionPairs => PipelineConfig::action_pairs(),
                Preset::Synthetic => PipelineConfig::synthetic(),
            },
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    fn manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::Config("--manifest is required for this command".into()))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth {
            classes,
            subjects,
            instances,
            frames,
            noise,
        } => {
            let spec = SynthSpec {
                classes,
                subjects,
                instances,
                frames,
                seed: g.seed.unwrap_or(0),
                noise,
            };
            let m = generate_synthetic(&spec, &g.out)?;
            println!("wrote {}", m.display());
        }
        Command::Extract => {
            let cfg = g.config()?;
            let (train, _) = split_sequences(load_manifest(g.manifest()?)?, &cfg.split);
            let (reference, db) = extract_training(&cfg, &train)?;
            std::fs::create_dir_all(&g.out).map_err(|e| Error::io(&g.out, e))?;
            write_reference(&g.out.join("reference.json"), &reference)?;
            write(&g.out.join("transactions.txt"), &write_dump(&db))?;
            println!("{} actions, {} transactions", db.actions.len(), db.len());
        }
        Command::Mine { transactions } => {
            let cfg = g.config()?;
            let db = read_dump(&transactions, &read(&transactions)?, cfg.features.ndf)?;
            let patterns = mine_closed(&db, &cfg.mining).map_err(|e| e.in_stage("mine"))?;
            write(&g.out.join("patterns.txt"), &write_patterns(&patterns))?;
            println!("{} closed patterns", patterns.len());
        }
        Command::Select {
            transactions,
            patterns,
        } => {
            let cfg = g.config()?;
            let db = read_dump(&transactions, &read(&transactions)?, cfg.features.ndf)?;
            let pats = read_patterns(&patterns, &read(&patterns)?, &db)?;
            let selected = select_patterns(&cfg, &db, &pats).map_err(|e| e.in_stage("select"))?;
            write(&g.out.join("selected.txt"), &write_selected(&selected))?;
            println!("{} selected patterns", selected.len());
        }
        Command::Train { selected } => {
            let cfg = g.config()?;
            cfg.validate()?;
            let (train, _) = split_sequences(load_manifest(g.manifest()?)?, &cfg.split);
            let artifacts = match selected {
                None => train_on(&cfg, &train)?,
                Some(path) => {
                    let (reference, db) =
                        extract_training(&cfg, &train).map_err(|e| e.in_stage("extract"))?;
                    let sel = read_selected(&path, &read(&path)?, &db)?;
                    let fitted = fit_classifier(&cfg, &reference, &db, &sel)
                        .map_err(|e| e.in_stage("classify"))?;
                    TrainArtifacts {
                        reference,
                        db,
                        patterns: None,
                        selected: sel,
                        features: fitted.features,
                        model: fitted.model,
                        report: fitted.report,
                        timings: Timings::default(),
                    }
                }
            };
            artifacts.write_to(&g.out)?;
            println!(
                "trained on {} actions with {} patterns",
                artifacts.db.actions.len(),
                artifacts.selected.len()
            );
        }
        Command::Evaluate { model } => {
            let model = TrainedModel::load(&model)?;
            let (report, timings) = run_evaluate(&model, load_manifest(g.manifest()?)?)?;
            write_eval(&g.out, &report, &timings)?;
            println!(
                "accuracy {:.2}% on {} actions",
                report.accuracy, report.num_test
            );
        }
        Command::Crossval { grid } => {
            let cfg = g.config()?;
            let grid = Grid::load(&grid)?;
            let (best, report) = run_crossval(&cfg, load_manifest(g.manifest()?)?, &grid)?;
            write(&g.out.join("best_config.toml"), &best.to_toml())?;
            write(&g.out.join("crossval.json"), &report.to_json())?;
            println!(
                "best validation accuracy {:.2}%",
                report.results[report.best].accuracy.unwrap_or(0.0)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs)
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
