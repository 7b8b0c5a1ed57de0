use std::path::PathBuf;
use std::process::ExitCode;

use calibforge::pipeline::{self, CalibrateOptions, CompareOptions, EvalOptions, GenOptions, TrainOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "calibforge", version, about = "Train, calibrate and evaluate win-probability models")]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with command options; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic train.csv / test.csv.
    Gen(GenOptions),
    /// Train a network with the CE or DU loss.
    Train(TrainOptions),
    /// Fit a temperature, vector or matrix scaler.
    Calibrate(CalibrateOptions),
    /// Score a model (and optional scaler) on test data.
    Eval(EvalOptions),
    /// Tabulate all five evaluated methods.
    Compare(CompareOptions),
}

fn run(cli: Cli) -> Result<(), pipeline::PipelineError> {
    let config = cli.config.as_deref();
    macro_rules! globals {
        ($opts:ident) => {{
            let mut o = $opts;
            o.seed = cli.seed;
            o.out = cli.out.clone();
            o
        }};
    }
    match cli.command {
        Command::Gen(o) => {
            let s = pipeline::run_gen(&globals!(o).resolve(config)?)?;
            println!("wrote {} training and {} test rows", s.train_rows, s.test_rows);
        }
        Command::Train(o) => {
            let s = pipeline::run_train(&globals!(o).resolve(config)?)?;
            if let Some(last) = s.log.last() {
                println!(
                    "trained on {} rows: loss {:.4}, train accuracy {:.4}",
                    s.train_rows, last.loss, last.train_acc
                );
            }
            println!("wrote {}", s.model_path.display());
        }
        Command::Calibrate(o) => {
            let f = pipeline::run_calibrate(&globals!(o).resolve(config)?)?;
            println!(
                "{:?}: validation NLL {:.5} -> {:.5} ({:?})",
                f.scaler, f.initial_nll, f.validation_nll, f.status
            );
        }
        Command::Eval(o) => {
            let r = pipeline::run_eval(&globals!(o).resolve(config)?)?;
            println!(
                "{}: accuracy {:.4}, ECE {:.4}, MCE {:.4}, NLL {:.4}",
                r.method, r.report.accuracy, r.report.ece, r.report.mce, r.report.nll_mean
            );
        }
        Command::Compare(o) => {
            print!("{}", pipeline::run_compare(&globals!(o).resolve(config)?)?.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
