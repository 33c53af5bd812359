use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dct_recover::mask::FillPolicy;
use dct_recover::model::Formulation;
use dct_recover_cli::commands::{compare_csv, sweep_csv};
use dct_recover_cli::{
    cmd_compare, cmd_crop, cmd_dump_lp, cmd_erase, cmd_inspect, cmd_recover, cmd_sweep, exit_code, MaskSpec, Method,
    RecoverRequest, RunConfig, SweepRange,
};

/// Recover missing block-DCT coefficients of grayscale images.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drop coefficients from an image: writes a viewable damaged image and
    /// a sidecar holding only the known coefficients
    Erase {
        input: PathBuf,
        #[command(flatten)]
        mask: MaskArgs,
        #[arg(long)]
        block_size: Option<usize>,
        /// Value shown for the missing coefficients in the damaged image
        #[arg(long, value_enum)]
        fill: Option<Fill>,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Recover an image from a sidecar
    Recover {
        sidecar: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        method: Method,
        /// JSON report path (default: output with a .json extension)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Score the result (and the midpoint reference) against this image
        #[arg(long)]
        original: Option<PathBuf>,
        /// Print the report as JSON instead of text
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Erase the top U coefficients for each U in a range, recover, and
    /// tabulate mean quality and time
    Sweep {
        images: Vec<PathBuf>,
        /// Inclusive range such as 1..15
        #[arg(long)]
        range: Option<SweepRange>,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (0 = one per core)
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        block_size: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Score candidates against an original; deltas are the first candidate
    /// minus each one
    Compare {
        original: PathBuf,
        #[arg(required = true)]
        candidates: Vec<PathBuf>,
        /// Write the table here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Centred crop to block-multiple dimensions
    Crop {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        block_size: Option<usize>,
        /// Target size WxH (default: largest multiple of the block size)
        #[arg(long, value_parser = parse_size)]
        size: Option<(usize, usize)>,
    },
    /// Describe a sidecar, optionally dumping its coefficients as CSV
    Inspect {
        sidecar: PathBuf,
        #[arg(long)]
        coeffs: Option<PathBuf>,
    },
    /// Write the recovery problem of a sidecar in CPLEX LP format
    DumpLp {
        sidecar: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        formulation: Option<Form>,
    },
    /// Print the effective configuration as TOML
    Config,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct MaskArgs {
    /// Erase the DC coefficient only
    #[arg(long)]
    dc_only: bool,
    /// Erase the U most significant coefficients in zigzag order
    #[arg(long, value_name = "U")]
    top: Option<usize>,
    /// Erase an explicit list such as 0:0,0:1,1:0
    #[arg(long, value_name = "LIST")]
    mask: Option<String>,
}

impl MaskArgs {
    fn spec(&self) -> Option<MaskSpec> {
        if self.dc_only {
            Some(MaskSpec::DcOnly)
        } else if let Some(u) = self.top {
            Some(MaskSpec::Top(u))
        } else {
            self.mask.clone().map(MaskSpec::List)
        }
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, value_enum)]
    formulation: Option<Form>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Threads used inside one solve
    #[arg(long)]
    threads: Option<usize>,
}

impl SolverArgs {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(f) = self.formulation {
            config.formulation = f.into();
        }
        if let Some(t) = self.tolerance {
            config.solver.tolerance = t;
        }
        if let Some(m) = self.max_iterations {
            config.solver.max_iterations = m;
        }
        if let Some(t) = self.threads {
            config.solver.threads = t;
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Form {
    Full,
    Reduced,
}

impl From<Form> for Formulation {
    fn from(f: Form) -> Self {
        match f {
            Form::Full => Formulation::Full,
            Form::Reduced => Formulation::Reduced,
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Fill {
    Midpoint,
    Zero,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(w)?, parse(h)?))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Erase {
            input,
            mask,
            block_size,
            fill,
            output_dir,
        } => {
            if let Some(spec) = mask.spec() {
                config.mask = spec;
            }
            if let Some(n) = block_size {
                config.block_size = n;
            }
            if let Some(f) = fill {
                config.fill = match f {
                    Fill::Midpoint => FillPolicy::Midpoint,
                    Fill::Zero => FillPolicy::Zero,
                };
            }
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            config.validate()?;
            let out = cmd_erase(&input, &config.mask, config.block_size, config.fill, &config.output_dir)?;
            println!("{}", out.damaged.display());
            println!("{}", out.sidecar.display());
        }
        Command::Recover {
            sidecar,
            output,
            method,
            report,
            original,
            json,
            solver,
        } => {
            solver.apply(&mut config);
            config.validate()?;
            let (_, rep) = cmd_recover(&RecoverRequest {
                sidecar: &sidecar,
                output: &output,
                report: report.as_deref(),
                method,
                formulation: config.formulation,
                solver: config.solver.clone(),
                original: original.as_deref(),
            })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rep)?);
            } else {
                print!("{}", rep.to_text());
            }
        }
        Command::Sweep {
            images,
            range,
            output_dir,
            workers,
            block_size,
            solver,
        } => {
            if !images.is_empty() {
                config.images = images;
            }
            if let Some(r) = range {
                config.sweep = r;
            }
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            if let Some(w) = workers {
                config.workers = w;
            }
            if let Some(n) = block_size {
                config.block_size = n;
            }
            solver.apply(&mut config);
            let outcome = cmd_sweep(&config)?;
            print!("{}", sweep_csv(&outcome.rows));
            eprintln!("failures: {}", outcome.failure_count());
            eprintln!("table: {}", outcome.table.display());
        }
        Command::Compare {
            original,
            candidates,
            output,
        } => {
            let csv = compare_csv(&cmd_compare(&original, &candidates)?);
            match output {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::Crop {
            input,
            output,
            block_size,
            size,
        } => {
            let n = block_size.unwrap_or(config.block_size);
            let img = cmd_crop(&input, &output, n, size)?;
            println!("{}x{}", img.width(), img.height());
        }
        Command::Inspect { sidecar, coeffs } => print!("{}", cmd_inspect(&sidecar, coeffs.as_deref())?),
        Command::DumpLp {
            sidecar,
            output,
            formulation,
        } => {
            let f = formulation.map_or(config.formulation, Formulation::from);
            cmd_dump_lp(&sidecar, &output, f)?;
        }
        Command::Config => print!("{}", config.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
