//! Command-line front end: one binary for worker mode, farm pipelines, the
//! pipe bridge and batch jobs.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{ArgAction, Parser, Subcommand};
use log::LevelFilter;

use crate::batch::{parse_script, run_script, submit_detached, JobRecord, RunStatus};
use crate::bridge::{reference_matmul, Bridge, ExecSpec};
use crate::farm::{LaunchConfig, Registry, Transport, WORKER_CMD_ENV};
use crate::protocol::Worker;
use crate::value::{chop, Env, Rng, Value, DEFAULT_CHOP_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kfarm", version, about = "Master/worker kernel farm, pipe bridge and batch runner")]
pub struct CliConfig {
    /// Seed for the random generator (default: from system entropy).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Timeout in seconds for external programs and remote evaluations.
    #[arg(long, global = true, default_value_t = 60)]
    pub timeout: u64,

    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    /// Command run on remote hosts after `ssh -e none <host>`.
    #[arg(long, global = true, env = WORKER_CMD_ENV)]
    pub worker_cmd: Option<String>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Serve the worker protocol on stdin/stdout.
    Worker {
        /// Keep exported files in a private temporary directory.
        #[arg(long)]
        scratch: bool,
        /// Other flags are accepted and ignored.
        #[arg(hide = true, num_args = 0.., allow_hyphen_values = true, trailing_var_arg = true)]
        ignored: Vec<String>,
    },
    /// Parallel pipeline over worker kernels.
    #[command(subcommand)]
    Farm(FarmCmd),
    /// Matrix product through an external program.
    #[command(subcommand)]
    Pipe(PipeCmd),
    /// Background script jobs.
    #[command(subcommand)]
    Batch(BatchCmd),
}

#[derive(Debug, Subcommand)]
pub enum FarmCmd {
    /// Run the three-program pipeline and print its chopped spectrum.
    Run {
        #[arg(long)]
        ns: i64,
        /// Comma-separated slave specs: `local` or `ssh:<host>`.
        #[arg(long, value_delimiter = ',', required = true)]
        slaves: Vec<String>,
    },
    /// Print the identity table of the launched slaves.
    Info {
        #[arg(long, value_delimiter = ',', required = true)]
        slaves: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PipeCmd {
    /// Multiply two fill matrices in PATH and print the product's spectrum.
    Run {
        #[arg(long)]
        ns: i64,
        #[arg(long, value_name = "PATH")]
        exec: PathBuf,
        /// Arguments passed to the external program.
        #[arg(num_args = 0.., allow_hyphen_values = true, trailing_var_arg = true)]
        args: Vec<String>,
    },
    /// Act as the reference external program: bridge input on stdin,
    /// product on stdout.
    Worker,
}

#[derive(Debug, Subcommand)]
pub enum BatchCmd {
    /// Start SCRIPT in the background with its output in OUT.
    Submit {
        script: PathBuf,
        #[arg(short = 'o', long = "output", value_name = "OUT")]
        output: PathBuf,
    },
    /// Report running, done or failed for the job writing OUT.
    Status {
        #[arg(value_name = "OUT")]
        output: PathBuf,
    },
    /// Run SCRIPT in the foreground, output on stdout.
    Run { script: PathBuf },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => LevelFilter::Error,
        1 => LevelFilter::Warn,
        2 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
}

/// Parse `argv` (program name first) and run the command. Returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cfg.verbose);
    match run(&cfg) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("kfarm: error: {msg}");
            EXIT_ERROR
        }
    }
}

fn rng(cfg: &CliConfig) -> Rng {
    cfg.seed.map_or_else(Rng::from_entropy, Rng::seeded)
}

fn print(v: &Value) -> Result<i32, String> {
    let mut out = io::stdout().lock();
    writeln!(out, "{v}")
        .and_then(|_| out.flush())
        .map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

fn registry(cfg: &CliConfig, specs: &[String]) -> Result<Registry, String> {
    let transports = specs
        .iter()
        .map(|s| Transport::parse(s).ok_or_else(|| format!("bad slave spec {s:?} (want local or ssh:<host>)")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = LaunchConfig::from_current_exe().map_err(|e| e.to_string())?;
    if let Some(cmd) = &cfg.worker_cmd {
        config.remote_command = cmd.clone();
    }
    config.eval_timeout = Duration::from_secs(cfg.timeout);
    let mut reg = Registry::new(config, rng(cfg));
    for t in transports {
        reg.launch_slave(t).map_err(|e| e.to_string())?;
    }
    Ok(reg)
}

fn finish(mut reg: Registry) {
    let report = reg.close_slaves();
    for (id, why) in &report.crashed {
        eprintln!("kfarm: slave {id} had crashed: {why}");
    }
    for id in &report.killed {
        eprintln!("kfarm: slave {id} was killed after ignoring CLOSE");
    }
}

fn run(cfg: &CliConfig) -> Result<i32, String> {
    match &cfg.command {
        Cmd::Worker { scratch, .. } => {
            let dir = if *scratch {
                Some(
                    tempfile::Builder::new()
                        .prefix("kfarm-worker-")
                        .tempdir()
                        .map_err(|e| e.to_string())?,
                )
            } else {
                None
            };
            let path = dir.as_ref().map_or_else(|| PathBuf::from("."), |d| d.path().to_path_buf());
            Worker::new(path, rng(cfg))
                .serve(io::stdin().lock(), io::stdout().lock())
                .map_err(|e| e.to_string())?;
            Ok(EXIT_OK)
        }
        Cmd::Farm(FarmCmd::Run { ns, slaves }) => {
            let mut reg = registry(cfg, slaves)?;
            let result = reg.pipeline_parallel(*ns);
            finish(reg);
            print(&result.map_err(|e| e.to_string())?)
        }
        Cmd::Farm(FarmCmd::Info { slaves }) => {
            let mut reg = registry(cfg, slaves)?;
            let table = reg.info_table();
            finish(reg);
            for row in table.as_list().unwrap_or_default() {
                print(row)?;
            }
            Ok(EXIT_OK)
        }
        Cmd::Pipe(PipeCmd::Run { ns, exec, args }) => {
            let bridge = Bridge::new()
                .map_err(|e| e.to_string())?
                .with_timeout(Duration::from_secs(cfg.timeout));
            let spec = ExecSpec::new(exec).with_args(args.iter().cloned());
            let spectrum = bridge
                .mathlink_pipeline(*ns, &spec)
                .map_err(|e| e.to_string())?;
            print(&chop(&spectrum.to_value(), DEFAULT_CHOP_TOLERANCE).map_err(|e| e.to_string())?)
        }
        Cmd::Pipe(PipeCmd::Worker) => {
            reference_matmul(io::stdin().lock(), io::stdout().lock())
                .map_err(|e| e.to_string())?;
            Ok(EXIT_OK)
        }
        Cmd::Batch(BatchCmd::Submit { script, output }) => {
            let exe = std::env::current_exe().map_err(|e| e.to_string())?;
            let rec = submit_detached(&exe, script, output, cfg.seed).map_err(|e| e.to_string())?;
            println!("{} {} {}", rec.job_id, rec.pid, rec.state.as_str());
            Ok(EXIT_OK)
        }
        Cmd::Batch(BatchCmd::Status { output }) => {
            let rec = JobRecord::load(output).map_err(|e| e.to_string())?;
            match rec.elapsed {
                Some(secs) => println!("{} {secs:.3}", rec.state.as_str()),
                None => println!("{}", rec.state.as_str()),
            }
            Ok(EXIT_OK)
        }
        Cmd::Batch(BatchCmd::Run { script }) => {
            let text = std::fs::read_to_string(script)
                .map_err(|e| format!("{}: {e}", script.display()))?;
            let parsed = parse_script(&text).map_err(|e| format!("{}: {e}", script.display()))?;
            let status = run_script(
                &parsed,
                io::stdout().lock(),
                &mut Env::new(),
                &mut rng(cfg),
            )
            .map_err(|e| e.to_string())?;
            Ok(match status {
                RunStatus::Completed => EXIT_OK,
                RunStatus::Failed => EXIT_ERROR,
            })
        }
    }
}
