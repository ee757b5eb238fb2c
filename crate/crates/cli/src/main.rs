use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use emachine::adversary::run_adversary;
use emachine::experiments::{
    mental_set_config, random_probes, run_mental_set, run_theorem3, run_theorem4, t_decay, tau_min, theorem3_span,
    GramSpec, MentalSetSpec, Table2x3,
};
use emachine::report::ExperimentReport;
use emachine::rng::SessionRng;
use emachine::script::{self, ScriptError, TeacherScript};
use emachine::server;
use emachine::trace::{self, ReplayOutcome};

/// Exit status for a run whose assertions or probes failed.
const EXIT_FAIL: u8 = 1;
/// Exit status for usage, parse and I/O errors.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "emachine", version, about = "Deterministic E-machine simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a teacher script and check its assertions
    Run {
        script: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the cycle trace here
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Re-execute a trace and compare every record
    Replay { trace: PathBuf },
    /// Run one of the built-in protocols
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
    /// Serve interactive sessions over TCP (newline-delimited JSON)
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Take the session configuration from this script's header
        #[arg(long)]
        script: Option<PathBuf>,
        /// Visual width of the default mental-set session
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// AS learns to simulate a GRAM from a covering sample
    Theorem3 {
        #[command(flatten)]
        common: Common,
        /// Decay constant; defaults to the minimum for the exam span
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        probes: usize,
    },
    /// AM learns random 2-input/3-output tables from one presentation
    Theorem4 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        tables: usize,
    },
    /// Context-dependent mental set
    Mentalset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1000.0)]
        tau: f64,
        /// Function index (bit v = output on screen row v); all functions if omitted
        #[arg(long)]
        function: Option<u64>,
        /// Keep the set alive with proprioceptive refresh
        #[arg(long)]
        refresh: bool,
        /// Examination length as a multiple of the decay time
        #[arg(long)]
        exam_decays: Option<f64>,
    },
    /// Falsification matrix for sequence learners
    Adversary {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        max_m: usize,
        #[arg(long, default_value_t = 60)]
        budget: usize,
    },
}

fn write_report(report: &ExperimentReport, path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", report.summary())?;
    for p in report.records.iter().filter(|p| !p.ok).take(10) {
        writeln!(out, "  mismatch {}: expected {}, got {}", p.input, p.expected, p.actual)?;
    }
    Ok(())
}

fn verdict(report: &ExperimentReport) -> ExitCode {
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn run_cmd(script_path: &Path, common: &Common, trace_out: Option<&Path>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(script_path).with_context(|| format!("reading {}", script_path.display()))?;
    let run = match script::run_script(&text, common.seed, trace_out.is_some()) {
        Ok(run) => run,
        Err(e @ ScriptError::Parse { .. }) | Err(e @ ScriptError::Run { .. }) => {
            eprintln!("{}: {e}", script_path.display());
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    if let (Some(path), Some(trace)) = (trace_out, &run.trace) {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        trace.write_to(BufWriter::new(file))?;
    }
    write_report(&run.report, common.report_out.as_deref())?;
    Ok(verdict(&run.report))
}

fn replay_cmd(path: &Path) -> Result<ExitCode> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    match trace::replay(BufReader::new(file))? {
        ReplayOutcome::Match { cycles } => {
            println!("match: {cycles} cycles");
            Ok(ExitCode::SUCCESS)
        }
        ReplayOutcome::Diverges { nu, detail } => {
            println!("diverges at ν={nu}: {detail}");
            Ok(ExitCode::from(EXIT_FAIL))
        }
    }
}

fn experiment_cmd(which: Experiment) -> Result<ExitCode> {
    let (report, out) = match which {
        Experiment::Theorem3 {
            common,
            tau,
            n,
            m,
            probes,
        } => {
            let seed = common.seed.unwrap_or(0);
            let spec = GramSpec::small(n, m);
            let schedule = spec.fixed_rules();
            let probes = random_probes(&spec, probes, &mut SessionRng::new(seed).fork());
            let tau = match tau {
                Some(t) => t,
                None => tau_min(theorem3_span(schedule.len(), probes.len()))?.max(2.0),
            };
            (run_theorem3(&spec, tau, &schedule, &probes, seed)?, common.report_out)
        }
        Experiment::Theorem4 { common, tables } => {
            let seed = common.seed.unwrap_or(0);
            let mut rng = SessionRng::new(seed);
            let mut report = ExperimentReport::new("theorem4", Some(seed));
            for _ in 0..tables {
                let table = Table2x3::random(&mut rng);
                let one = run_theorem4(&table, seed)?;
                report.training_len += one.training_len;
                report.absorb(one);
            }
            report.param("tables", tables);
            (report, common.report_out)
        }
        Experiment::Mentalset {
            common,
            k,
            tau,
            function,
            refresh,
            exam_decays,
        } => {
            let seed = common.seed.unwrap_or(0);
            let functions: Vec<u64> = match function {
                Some(f) => vec![f],
                None if k <= 3 => (0..1u64 << (1 << k)).collect(),
                None => bail!("k={k}: pass --function, there are too many functions to enumerate"),
            };
            let mut report = ExperimentReport::new("mentalset", Some(seed));
            for f in functions {
                let mut spec = MentalSetSpec::new(k, MentalSetSpec::function(k, f));
                spec.tau = tau;
                spec.refresh_on = refresh;
                if let Some(mult) = exam_decays {
                    let td = t_decay(spec.emax(), spec.eloss(), tau)?;
                    spec.exam_len = Some((mult * td).ceil() as usize);
                }
                let one = run_mental_set(&spec, seed)?;
                report.training_len = one.training_len;
                report.params = one.params.clone();
                report.absorb(one);
            }
            report.params.remove("pretuned");
            (report, common.report_out)
        }
        Experiment::Adversary { common, max_m, budget } => {
            (run_adversary(max_m, budget, common.seed.unwrap_or(0)), common.report_out)
        }
    };
    write_report(&report, out.as_deref())?;
    Ok(verdict(&report))
}

fn serve_cmd(port: u16, script_path: Option<&Path>, k: usize, seed: u64) -> Result<ExitCode> {
    let config = match script_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            TeacherScript::parse(&text)?.config
        }
        None => mental_set_config(&MentalSetSpec::new(k, MentalSetSpec::function(k, 0))),
    };
    let listener = TcpListener::bind(("127.0.0.1", port)).with_context(|| format!("binding port {port}"))?;
    println!("serving on {}", listener.local_addr()?);
    std::io::stdout().flush()?;
    server::serve(listener, config, seed)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            script,
            common,
            trace_out,
        } => run_cmd(&script, &common, trace_out.as_deref()),
        Command::Replay { trace } => replay_cmd(&trace),
        Command::Experiment { which } => experiment_cmd(which),
        Command::Serve { port, script, k, seed } => serve_cmd(port, script.as_deref(), k, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<std::io::Error>().map(|io| io.kind()) == Some(std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
