use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shearwater::cli::{self, Options, RunConfig};
use shearwater::Error;

/// Seabird sex classification from GPS foraging trips.
#[derive(Parser)]
#[command(name = "shearwater", version)]
struct Args {
    /// JSON run config; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's replicate count.
    #[arg(long, global = true)]
    n_seeds: Option<usize>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labeled training corpus and test corpus.
    Synth,
    /// Build the feature matrices of every enabled dataset mode.
    Extract,
    /// Write the shared stratified fold assignment.
    Folds,
    /// Cross-validate every setting and seed.
    Cv,
    /// Fit every setting and seed on the full training set.
    Train,
    /// Predict the test birds with every stored model.
    Predict,
    /// Majority-vote the prediction sets into the final labels.
    Ensemble,
    /// Print accuracy and F1 of a predictions file against a truth file.
    Evaluate {
        /// Defaults to the ensemble output.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Defaults to the config's test labels.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// extract, folds, cv, train, predict, ensemble and evaluate.
    Run,
}

fn config(args: &Args) -> shearwater::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(n) = args.n_seeds {
        cfg.n_seeds = n;
    }
    if let Some(d) = &args.output_dir {
        cfg.paths.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_cv(report: &cli::CvReport) {
    println!("setting,mean_f1,threshold");
    for s in &report.settings {
        println!("{},{:.6},{:.6}", s.setting.name(), s.mean_f1, s.threshold);
    }
    println!("ensemble,{:.6},", report.ensemble_mean_f1);
}

fn execute(args: &Args) -> shearwater::Result<()> {
    let cfg = config(args)?;
    let opts = match args.jobs {
        Some(0) => return Err(Error::Config("--jobs must be at least 1".into())),
        Some(jobs) => Options { jobs },
        None => Options::default(),
    };
    match &args.command {
        Command::Synth => {
            let s = cli::cmd_synth(&cfg)?;
            println!(
                "train birds {} ({} male), test birds {}",
                s.n_train, s.n_train_male, s.n_test
            );
        }
        Command::Extract => {
            for p in cli::cmd_extract(&cfg, opts)? {
                println!("{}", p.display());
            }
        }
        Command::Folds => {
            let f = cli::cmd_folds(&cfg)?;
            println!("fold sizes {:?}", f.fold_sizes());
        }
        Command::Cv => print_cv(&cli::cmd_cv(&cfg, opts)?),
        Command::Train => println!("{} models", cli::cmd_train(&cfg, opts)?.len()),
        Command::Predict => println!("{} prediction sets", cli::cmd_predict(&cfg, opts)?.len()),
        Command::Ensemble => {
            let v = cli::cmd_ensemble(&cfg)?;
            println!("{} birds -> {}", v.bird_ids.len(), cfg.ensemble_path().display());
        }
        Command::Evaluate { predictions, truth } => {
            let predictions = predictions.clone().unwrap_or_else(|| cfg.ensemble_path());
            let truth = truth
                .clone()
                .or_else(|| cfg.paths.test_labels.clone())
                .ok_or_else(|| Error::Config("no truth file given".into()))?;
            let e = cli::cmd_evaluate(&predictions, &truth)?;
            println!("n {} accuracy {:.6} f1 {:.6}", e.n, e.accuracy, e.f1);
        }
        Command::Run => {
            let s = cli::cmd_run(&cfg, opts)?;
            print_cv(&s.cv);
            if let Some(e) = s.evaluation {
                println!("test n {} accuracy {:.6} f1 {:.6}", e.n, e.accuracy, e.f1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                ExitCode::from(1)
            } else if e.is_data_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
