use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bosonic_ldp::experiment::{
    run_compare_in, run_fluctuation_in, run_hartree_in, run_oracle_in, self_test, Corruption, ExperimentConfig,
    ExperimentRecord, Recorder, RunStatus, SelfTestOptions,
};
use bosonic_ldp::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(version, about = "Hartree, Bogoliubov and large-deviation experiments with an exact many-body oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment config
    config: PathBuf,
    /// Output directory (overrides `output.directory`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the Hartree equation and export conservation diagnostics
    HartreeRun(RunArgs),
    /// Solve the backward fluctuation equation at every configured time
    FluctuationRun(RunArgs),
    /// Exact many-body counting statistics for every configured N
    OracleRun(RunArgs),
    /// Full comparison of Bogoliubov predictions with the oracle
    Compare(RunArgs),
    /// Reduced-size invariant suite
    SelfTest {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        corrupt: Option<CorruptArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CorruptArg {
    K2Symmetry,
}

type Runner = fn(&ExperimentConfig, &Path, &Path) -> Result<ExperimentRecord>;

fn run(name: &str, args: RunArgs, runner: Runner) -> ExitCode {
    let config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            if let Some(dir) = &args.out {
                let mut rec = ExperimentRecord::new(name, None);
                rec.fail(&e);
                let _ = rec.write(dir);
            }
            return report_error(&e);
        }
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let base = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    match runner(&config, &out, &base) {
        Ok(rec) => {
            for f in &rec.outputs {
                println!("wrote {} ({} rows)", out.join(&f.file).display(), f.rows);
            }
            if let Ok(h) = serde_json::to_string_pretty(&rec.headline) {
                println!("{h}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> ExitCode {
    let status = RunStatus::of_error(e);
    eprintln!("error: {e}");
    ExitCode::from(status.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::HartreeRun(a) => run("hartree-run", a, run_hartree_in),
        Command::FluctuationRun(a) => run("fluctuation-run", a, run_fluctuation_in),
        Command::OracleRun(a) => run("oracle-run", a, run_oracle_in),
        Command::Compare(a) => run("compare", a, run_compare_in),
        Command::SelfTest { out, seed, corrupt } => {
            let options = SelfTestOptions {
                corrupt: corrupt.map(|CorruptArg::K2Symmetry| Corruption::K2Symmetry),
                seed,
            };
            let report = self_test(&options);
            for c in &report.checks {
                println!("{} {:<26} {:>7.3}s  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
            }
            if let Some(dir) = out {
                let mut rec = Recorder::new("self-test", None, &dir);
                rec.headline("checks", &report.checks);
                let outcome = match report.failures().as_slice() {
                    [] => Ok(()),
                    names => Err(Error::Invariant {
                        name: names.join(","),
                        detail: "self-test failure".into(),
                    }),
                };
                let _ = rec.finish(outcome);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed: {}", report.failures().join(", "));
                ExitCode::from(1)
            }
        }
    }
}
