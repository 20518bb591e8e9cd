//! `mqbc`: compile, certify, simulate, and verify dissipative qudit-boson
//! simulation mappings.
//!
//! Exit codes: 0 success, 2 infeasible mapping, 3 certification or
//! verification failure, 4 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mqb_core::error::Error;
use mqb_core::experiment::{self, CompiledExperiment, Frame};
use mqb_core::lindblad;
use mqb_core::report;
use mqb_core::scaling::ScalePolicy;
use mqb_core::units::Quantity;

#[derive(Parser)]
#[command(name = "mqbc", version, about = "Map open-system molecular dynamics onto a trapped-ion qudit-boson simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// Smallest feasible scale factor (maximal native dissipation use).
    MinimalInjection,
    /// Largest feasible scale factor (maximal simulated duration).
    MaxDuration,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Molecular,
    Simulator,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a configuration into an experiment file plus reports.
    Compile {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::MinimalInjection)]
        policy: PolicyArg,
    },
    /// Propagate both frames of a compiled experiment and compare them.
    Certify {
        experiment: PathBuf,
        /// Molecular-frame horizon, e.g. "200 fs". Defaults to the full
        /// requested duration.
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Propagate one frame and write an observable time series.
    Simulate {
        experiment: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameArg::Molecular)]
        frame: FrameArg,
        /// Comma-separated observable names (default: populations,
        /// occupations, purity, trace, leakage).
        #[arg(long)]
        observables: Option<String>,
        #[arg(long, default_value = "out/series.csv")]
        out: PathBuf,
        /// Dump the Hamiltonian and Lindblad operators in the portable
        /// `row col re im` format to this directory.
        #[arg(long)]
        dump_operators: Option<PathBuf>,
        /// Dump every stored density matrix to this directory.
        #[arg(long)]
        dump_states: Option<PathBuf>,
    },
    /// Check noise-driven dephasing plans against trajectory ensembles.
    VerifyNoise {
        experiment: PathBuf,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Re-emit the human-readable report and CSV tables of an experiment.
    Report {
        experiment: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Invalid { .. } | Error::Io(_) => 4,
        Error::Infeasible { .. } => 2,
        Error::CertificationFailed { .. } | Error::VerificationFailed { .. } => 3,
        Error::Numerics { .. } => 4,
    }
}

fn load_experiment(path: &Path) -> Result<CompiledExperiment, Error> {
    let text = std::fs::read_to_string(path)?;
    CompiledExperiment::from_toml(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Compile { config, out_dir, policy } => {
            let text = std::fs::read_to_string(&config)?;
            let policy = match policy {
                PolicyArg::MinimalInjection => ScalePolicy::MinimalInjection,
                PolicyArg::MaxDuration => ScalePolicy::MaxDuration,
            };
            let exp = experiment::compile(&text, policy)?;
            write_file(&out_dir.join("experiment.toml"), &exp.to_toml()?)?;
            let report_text = report::compile_report_text(&exp);
            write_file(&out_dir.join("report.txt"), &report_text)?;
            write_file(&out_dir.join("budget.csv"), &report::budget_csv(&exp))?;
            write_file(&out_dir.join("controls.csv"), &report::controls_csv(&exp))?;
            print!("{report_text}");
            println!("wrote {}", out_dir.join("experiment.toml").display());
            Ok(())
        }
        Command::Certify { experiment, horizon, tolerance, out_dir } => {
            let exp = load_experiment(&experiment)?;
            let horizon = horizon
                .map(|h| Quantity::parse(&h).and_then(|q| q.expect_time("--horizon")))
                .transpose()?;
            let rep = experiment::certify(&exp, horizon, tolerance)?;
            write_file(&out_dir.join("certify.csv"), &report::equivalence_csv(&rep))?;
            println!(
                "max trace distance {:.3e} over {} samples (tolerance {:.1e})",
                rep.max_distance,
                rep.times.len(),
                rep.tolerance
            );
            for note in &rep.audit {
                println!("audit: {note}");
            }
            if rep.pass {
                println!("certification PASS");
                Ok(())
            } else {
                Err(Error::CertificationFailed {
                    message: format!(
                        "max trace distance {:.3e} exceeds tolerance {:.1e}{}",
                        rep.max_distance,
                        rep.tolerance,
                        if rep.audit.is_empty() { "" } else { "; budget audit failed" }
                    ),
                })
            }
        }
        Command::Simulate { experiment, frame, observables, out, dump_operators, dump_states } => {
            let exp = load_experiment(&experiment)?;
            let frame = match frame {
                FrameArg::Molecular => Frame::Molecular,
                FrameArg::Simulator => Frame::Simulator,
            };
            if let Some(dir) = &dump_operators {
                experiment::dump_operators(&exp, frame, dir)?;
                println!("dumped operators to {}", dir.display());
            }
            let series = experiment::simulate(&exp, frame)?;
            let columns = match observables {
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
                None => lindblad::default_observables(&series.space),
            };
            write_file(&out, &report::series_csv(&series, &columns)?)?;
            if let Some(dir) = &dump_states {
                experiment::dump_states(&series, dir)?;
                println!("dumped {} states to {}", series.times.len(), dir.display());
            }
            println!("wrote {} ({} samples)", out.display(), series.times.len());
            Ok(())
        }
        Command::VerifyNoise { experiment, trajectories, seed, out_dir } => {
            let exp = load_experiment(&experiment)?;
            let rep = experiment::verify_noise(&exp, trajectories, seed)?;
            write_file(&out_dir.join("noise_verification.csv"), &report::verification_csv(&rep))?;
            for row in &rep.rows {
                println!(
                    "{}: target {:.4e} fitted {:.4e} +- {:.2e} 1/s [{}]{}",
                    row.label,
                    row.target_rate,
                    row.fitted_rate,
                    row.std_error,
                    if row.pass { "PASS" } else { "FAIL" },
                    if row.note.is_empty() { String::new() } else { format!(" ({})", row.note) }
                );
            }
            if rep.pass {
                println!("noise verification PASS ({} trajectories, seed {})", rep.trajectories, rep.seed);
                Ok(())
            } else {
                Err(Error::VerificationFailed {
                    message: "one or more noise plans failed their trajectory check".into(),
                })
            }
        }
        Command::Report { experiment, out_dir } => {
            let exp = load_experiment(&experiment)?;
            let report_text = report::compile_report_text(&exp);
            write_file(&out_dir.join("report.txt"), &report_text)?;
            write_file(&out_dir.join("budget.csv"), &report::budget_csv(&exp))?;
            write_file(&out_dir.join("controls.csv"), &report::controls_csv(&exp))?;
            print!("{report_text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
