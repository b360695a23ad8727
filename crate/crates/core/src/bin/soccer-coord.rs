use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use soccer_coord::checker::check_trace;
use soccer_coord::replay::{render_svg, render_text, snapshot_at};
use soccer_coord::runner::Simulation;
use soccer_coord::scenario::Scenario;
use soccer_coord::trace::{JsonlWriter, NullSink, Trace};

#[derive(Parser)]
#[command(name = "soccer-coord", version, about = "Robot soccer team coordination simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, write its trace and print the summary.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace output file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Override the bus loss probability.
        #[arg(long)]
        loss: Option<f64>,
        #[arg(long)]
        disable_teamplay: bool,
    },
    /// Re-check every invariant on a trace file.
    Check { trace: PathBuf },
    /// Print the field state at a time, optionally exporting an SVG diagram.
    Replay {
        trace: PathBuf,
        #[arg(long)]
        at: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

const USAGE_ERROR: u8 = 2;

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE_ERROR)
}

fn read_trace(path: &PathBuf) -> Result<Trace, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Trace::read(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            duration,
            loss,
            disable_teamplay,
        } => {
            let mut sc = match Scenario::load(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(format!("{}: {e}", scenario.display())),
            };
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            if let Some(d) = duration {
                sc.duration = d;
            }
            if let Some(l) = loss {
                sc.bus.loss_probability = l;
            }
            if disable_teamplay {
                sc.teamplay.enabled = false;
            }
            if let Err(e) = sc.validate() {
                return fail(e);
            }
            let sim = Simulation::new(&sc);
            let metrics = match out {
                Some(path) => {
                    let file = match File::create(&path) {
                        Ok(f) => f,
                        Err(e) => return fail(format!("{}: {e}", path.display())),
                    };
                    let result = JsonlWriter::new(BufWriter::new(file), sim.header())
                        .map_err(|e| e.to_string())
                        .and_then(|mut w| {
                            let m = sim.run(&mut w).map_err(|e| e.to_string())?;
                            w.into_inner().map_err(|e| e.to_string())?;
                            Ok(m)
                        });
                    match result {
                        Ok(m) => m,
                        Err(e) => return fail(e),
                    }
                }
                None => match sim.run(&mut NullSink) {
                    Ok(m) => m,
                    Err(e) => return fail(e),
                },
            };
            println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialize"));
            if metrics.violation_count() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Check { trace } => {
            let trace = match read_trace(&trace) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let violations = check_trace(&trace);
            for v in &violations {
                let robot = v.robot.map_or(String::new(), |r| format!(" robot {r}"));
                println!("{:.2} s {:?}{robot}: {}", v.t, v.invariant, v.detail);
            }
            println!("{} records, {} violations", trace.records.len(), violations.len());
            if violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Replay { trace, at, svg } => {
            let trace = match read_trace(&trace) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let snap = match snapshot_at(&trace, at) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            print!("{}", render_text(&snap));
            if let Some(path) = svg {
                let written = File::create(&path)
                    .and_then(|mut f| f.write_all(render_svg(&snap, &trace.header.field).as_bytes()));
                if let Err(e) = written {
                    return fail(format!("{}: {e}", path.display()));
                }
            }
            ExitCode::SUCCESS
        }
    }
}
