use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chil_rig::testbench::{
    apply_overrides, demo_case, emit_report, load_testcase, run_case, Formats, RunOptions, Scenario, ENDPOINT_ENV,
};

#[derive(Parser)]
#[command(name = "chil-rig", version, about = "Controller-in-the-loop test rig")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a test case and write its report.
    Run {
        case: PathBuf,
        /// Output directory for report.json, report.txt and CSV evidence.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Pace the simulation against the wall clock.
        #[arg(long)]
        realtime: bool,
        /// Serve an external controller at tcp:HOST:PORT.
        #[arg(long)]
        controller: Option<String>,
        /// Single measurement delay in seconds, replacing the case's list.
        #[arg(long)]
        delay: Option<f64>,
        /// Comma-separated report formats.
        #[arg(long, default_value = "json,csv,txt")]
        format: String,
    },
    /// Check a test case without running it.
    Validate { case: PathBuf },
    /// Print the shipped demonstration case of a scenario.
    Demo { scenario: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            case,
            out,
            realtime,
            controller,
            delay,
            format,
        } => {
            let result = (|| {
                let formats = Formats::parse(&format)?;
                let mut case = load_testcase(&case)?;
                let env = std::env::var(ENDPOINT_ENV).ok();
                apply_overrides(&mut case, controller.as_deref(), env.as_deref(), delay)?;
                let outcome = run_case(&case, RunOptions { realtime })?;
                emit_report(&outcome, formats, &out)?;
                Ok::<_, chil_rig::testbench::TestbenchError>(outcome.report)
            })();
            match result {
                Ok(report) => {
                    print!("{}", report.to_text());
                    if let Some(err) = &report.error {
                        eprintln!("error: {err}");
                    }
                    report.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Command::Validate { case } => match load_testcase(&case) {
            Ok(c) => {
                println!(
                    "{}: valid {} case, config hash {}",
                    c.name,
                    c.scenario.as_str(),
                    c.config_hash()
                );
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::Demo { scenario } => match Scenario::parse(&scenario) {
            Some(s) => {
                print!("{}", demo_case(s));
                0
            }
            None => {
                eprintln!("error: unknown scenario `{scenario}` (expected lvrt, cvcu or rlctune)");
                2
            }
        },
    };
    ExitCode::from(code as u8)
}
