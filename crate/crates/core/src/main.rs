use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rapnet::experiment::config::{ConfigError, ConfigFile};
use rapnet::experiment::sweep::{write_rows_csv, write_summary_csv};
use rapnet::experiment::{
    generate_map, generate_scenario, run_scenario_traced, run_sweep, scenario_rng, Execution,
    GenerationError, MapSource, Method, ParamPoint, ScenarioParams,
};
use rapnet::protocol::Trace;

#[derive(Parser)]
#[command(name = "rapnet", version, about = "Compare flooding, history-based incentive routing and optimal allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print a per-request table.
    Run {
        #[command(flatten)]
        common: Common,
        /// Write the DD and HFI message traces here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a parameter sweep and emit per-scenario and summary CSVs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scenarios per parameter point.
        #[arg(long, default_value_t = 20)]
        repetitions: usize,
        /// Total assistant counts to sweep, split 3:2 between humans and robots.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40")]
        agents: Vec<usize>,
        /// Summary CSV path; defaults to `<out>.summary.csv`, or stderr without `--out`.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Run scenarios on a single thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Write the configured map in text form.
    GenMap {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Key-value (TOML) file with scenario parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error("{0}")]
    Run(String),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Generation(GenerationError::NotEnoughFreeCells { .. }) => 2,
            CliError::Run(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn params(common: &Common) -> Result<ScenarioParams, CliError> {
    let mut p = ScenarioParams::default();
    if let Some(path) = &common.config {
        let dir = path.parent().unwrap_or(Path::new("."));
        p = ConfigFile::load(path)?.apply(p, dir)?;
    }
    if let Some(seed) = common.seed {
        p.seed = seed;
    }
    p.validate().map_err(|e| CliError::Params(e.to_string()))?;
    Ok(p)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { common, trace } => cmd_run(&common, trace.as_deref()),
        Command::Sweep {
            common,
            repetitions,
            agents,
            summary,
            sequential,
        } => {
            let base = params(&common)?;
            let points: Vec<ParamPoint> = agents
                .iter()
                .map(|&n| ParamPoint::with_total_agents(&base, n))
                .collect();
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let sweep = run_sweep(&points, repetitions, exec).map_err(|e| match e {
                rapnet::experiment::sweep::SweepError::Generation { source, .. } => {
                    CliError::Generation(source)
                }
                other => CliError::Run(other.to_string()),
            })?;
            write_rows_csv(&sweep, output(common.out.as_deref())?)?;
            let summary_path = summary.or_else(|| {
                common
                    .out
                    .as_ref()
                    .map(|o| o.with_extension("summary.csv"))
            });
            match summary_path {
                Some(p) => write_summary_csv(&sweep, output(Some(&p))?)?,
                None => write_summary_csv(&sweep, io::stderr().lock())?,
            }
            Ok(())
        }
        Command::GenMap { common } => {
            let p = params(&common)?;
            let grid = match p.map {
                MapSource::Fixed(g) => g,
                MapSource::Generated {
                    width,
                    height,
                    aisle_spacing,
                } => generate_map(width, height, aisle_spacing, &mut scenario_rng(p.seed)),
            };
            let mut out = output(common.out.as_deref())?;
            out.write_all(grid.to_map_string().as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_run(common: &Common, trace_path: Option<&Path>) -> Result<(), CliError> {
    let p = params(common)?;
    let scenario = generate_scenario(&p)?;
    let (result, traces) =
        run_scenario_traced(&scenario).map_err(|e| CliError::Run(e.to_string()))?;
    let mut out = output(common.out.as_deref())?;

    if common.format == Some(Format::Csv) {
        writeln!(out, "request,issued_at,method,fulfilled,messages,movement,reward,total,rounds")?;
        for r in &result.requests {
            for m in Method::ALL {
                let c = r.get(m);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.index, r.issued_at, m, c.fulfilled, c.messages, c.movement, c.reward, c.total, c.escalation_rounds
                )?;
            }
        }
    } else {
        writeln!(
            out,
            "seed {}  humans {}  robots {}  map {}x{}",
            scenario.seed,
            scenario.roster.humans.len(),
            scenario.roster.robots.len(),
            scenario.world.grid.width(),
            scenario.world.grid.height()
        )?;
        writeln!(
            out,
            "{:>3} {:>6} {:>6} {:>5} {:>8} {:>8} {:>8} {:>9} {:>6}",
            "req", "time", "method", "ok", "messages", "movement", "reward", "total", "rounds"
        )?;
        for r in &result.requests {
            for m in Method::ALL {
                let c = r.get(m);
                writeln!(
                    out,
                    "{:>3} {:>6.2} {:>6} {:>5} {:>8} {:>8} {:>8.2} {:>9.2} {:>6}",
                    r.index, r.issued_at, m, c.fulfilled, c.messages, c.movement, c.reward, c.total, c.escalation_rounds
                )?;
            }
        }
        for m in Method::ALL {
            let t = result.totals(m);
            writeln!(
                out,
                "total {:>4}: fulfilled {}/{}  messages {}  movement {}  reward {:.2}  cost {:.2}",
                m, t.fulfilled, t.requests, t.messages, t.movement, t.reward, t.total
            )?;
        }
    }
    out.flush()?;

    if let Some(path) = trace_path {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{}", Trace::HEADER)?;
        for (method, list) in [(Method::Dd, &traces.dd), (Method::Hfi, &traces.hfi)] {
            for (k, t) in list.iter().enumerate() {
                writeln!(w, "# method={method} request={k}")?;
                t.write_csv(&mut w)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
