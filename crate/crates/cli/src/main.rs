use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deepsurrogate_cli::{run, RunConfig, Verb};

#[derive(Parser)]
#[command(name = "deepsurrogate", version, about = "Neural surrogates and surrogate-based inference")]
struct Cli {
    #[command(subcommand)]
    verb: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a surrogate and write its checkpoints and loss log
    Train(Common),
    /// Run a quadrature or finite-difference reference solver
    SolveRef(Common),
    /// Generate noisy synthetic observations from a reference solution
    GenData(Common),
    /// Sample the posterior with Metropolis-Hastings
    Infer(Common),
    /// Fit the Biot coefficients by simultaneous minimisation and compare with the posterior
    CompareAugmented(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write zero wall-clock times so reruns are byte-identical
    #[arg(long)]
    deterministic: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match cli.verb {
        Command::Train(a) => (Verb::Train, a),
        Command::SolveRef(a) => (Verb::SolveRef, a),
        Command::GenData(a) => (Verb::GenData, a),
        Command::Infer(a) => (Verb::Infer, a),
        Command::CompareAugmented(a) => (Verb::CompareAugmented, a),
    };
    let result = RunConfig::load(&args.config).and_then(|cfg| {
        let mut cfg = cfg.with_seed(args.seed);
        cfg.deterministic |= args.deterministic;
        run(verb, &cfg, &args.out)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("deepsurrogate {}: {e}", verb.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
