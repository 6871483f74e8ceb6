use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riesz_cli::{BooleanOp, CliError, Env, FuzzArgs, EXIT_PARSE};

/// Band projections on spaces of regular operators over R^n.
///
/// Exit status: 0 success, 1 property failure, 2 parse error, 3 shape error.
/// RIESZ_SCALAR_MODE=exact|float overrides the scalar mode of input files.
#[derive(Parser)]
#[command(name = "riesz", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the inner projection of a relation to a matrix.
    Project {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        relation: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Meet, join or complement of relations.
    Boolean {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        op: BooleanOp,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: Option<PathBuf>,
        /// Dimension; defaults to the extent of the family.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Decide whether a superoperator is a band projection.
    Detect {
        #[arg(long)]
        superop: PathBuf,
    },
    /// Classify the multiplication operator T -> ATB.
    ClassifyMult {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Dyadic refinement table and membership example.
    Dyadic {
        #[arg(long, default_value_t = 10)]
        max_level: u32,
    },
    /// Run the seeded property suite.
    Fuzz {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
        /// Comma-separated subset of lattice,inner,boolean,orthogonality,detect,mult.
        #[arg(long, value_delimiter = ',')]
        modules: Option<Vec<String>>,
        /// Deliberate defect to check the suite against (stray-half).
        #[arg(long)]
        inject_mutant: Option<String>,
        /// Write one file per failing property into this directory.
        #[arg(long)]
        counterexample_dir: Option<PathBuf>,
        /// Re-check a counterexample file instead of running the suite.
        #[arg(long, conflicts_with_all = ["modules", "inject_mutant", "counterexample_dir"])]
        replay: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let env = Env::from_process();
    match cli.command {
        Command::Project {
            family,
            relation,
            matrix,
        } => riesz_cli::cmd_project(&env, &family, &relation, &matrix),
        Command::Boolean {
            family,
            op,
            left,
            right,
            n,
        } => riesz_cli::cmd_boolean(&family, op, &left, right.as_deref(), n),
        Command::Detect { superop } => riesz_cli::cmd_detect(&env, &superop),
        Command::ClassifyMult { a, b } => riesz_cli::cmd_classify_mult(&env, &a, &b),
        Command::Dyadic { max_level } => riesz_cli::cmd_dyadic(max_level),
        Command::Fuzz { replay: Some(path), .. } => riesz_cli::cmd_replay(&path),
        Command::Fuzz {
            seed,
            trials,
            max_dim,
            modules,
            inject_mutant,
            counterexample_dir,
            replay: None,
        } => riesz_cli::cmd_fuzz(&FuzzArgs {
            seed,
            trials,
            max_dim,
            modules,
            mutant: inject_mutant,
            counterexample_dir,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(cli) {
        Ok(out) => {
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(err) => {
            if let CliError::Property { output, .. } = &err {
                let _ = stdout.write_all(output.as_bytes());
            }
            eprintln!("riesz: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
