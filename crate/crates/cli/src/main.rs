use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfdim_core::alphabet::{parse_alphabet, parse_ceiling, AlphabetSpec, CeilingMode};
use cfdim_core::enumeration::EnumOptions;
use cfdim_core::render::render_svg;
use cfdim_core::report::{
    run_table, run_verify, table_csv, RunRecord, Suite, SweepRecord, VerifyOptions, CSV_HEADER,
};
use cfdim_core::{dimension_bounds, sweep, Error, SolverOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_NO_ROOT: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cfdim",
    version,
    about = "Hausdorff dimension bounds for continued-fraction sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds T_k^- <= dim <= T_k^+ at one level k
    Bounds {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Bounds for k = 1..k_max with monotonicity and width diagnostics
    Sweep {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long)]
        k_max: u32,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Recompute a published table and compare
    Table {
        /// 1: complex digits, 2: finite real alphabets, 3: infinite real alphabets
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        /// Total time budget in seconds; rows use a smaller k when needed
        #[arg(long)]
        budget: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run exact-identity, distortion and sandwich property checks
    Verify {
        #[arg(long, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample points of the disk per word (distortion suite)
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Random words for the identity suite
        #[arg(long, default_value_t = 1000)]
        words: usize,
        /// Restrict distortion and sandwich checks to this alphabet
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        out: Format,
    },
    /// Draw the images of the disk at depth 1 or 2 as SVG
    Render {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AlphabetArgs {
    /// Alphabet expression: {1,2}, {1..5}, 2N, F3, {2..5}x{-8..8}i, {1+i,2-i}
    #[arg(
        long,
        required_unless_present = "alphabet_file",
        conflicts_with = "alphabet_file"
    )]
    alphabet: Option<String>,
    /// File with one digit per line
    #[arg(long)]
    alphabet_file: Option<PathBuf>,
    /// Truncation of an infinite alphabet, e.g. 1000000 or 1e6
    #[arg(long)]
    ceiling: Option<String>,
    #[arg(long, value_enum, default_value = "value")]
    ceiling_mode: CeilingArg,
}

impl AlphabetArgs {
    fn spec(&self) -> Result<AlphabetSpec, Error> {
        let mut spec = match (&self.alphabet, &self.alphabet_file) {
            (Some(a), _) => parse_alphabet(a)?,
            (None, Some(path)) => AlphabetSpec::from_file(path)?,
            (None, None) => return Err(Error::EmptyAlphabet),
        };
        spec = spec.with_ceiling_mode(self.ceiling_mode.into());
        if let Some(c) = &self.ceiling {
            spec = spec.with_ceiling(parse_ceiling(c)?);
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Root tolerance in t (default 1e-10 stored, 1e-6 streamed)
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    out: Option<Format>,
    /// Report min(T_k^+, 1) for real alphabets
    #[arg(long)]
    clamp_one: bool,
    /// Leave wall time out of the output
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn threads(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    fn solver_options(&self) -> SolverOptions {
        let mut opts = SolverOptions {
            tol: self.tol,
            clamp_one: self.clamp_one,
            enumeration: EnumOptions::from_env(),
            ..Default::default()
        };
        opts.enumeration.threads = self.threads();
        opts
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum CeilingArg {
    Value,
    Index,
}

impl From<CeilingArg> for CeilingMode {
    fn from(c: CeilingArg) -> Self {
        match c {
            CeilingArg::Value => CeilingMode::Value,
            CeilingArg::Index => CeilingMode::Index,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Lemmas,
    Distortion,
    Sandwich,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Distortion => Suite::Distortion,
            SuiteArg::Sandwich => Suite::Sandwich,
            SuiteArg::All => Suite::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Bounds { alphabet, k, run } => {
            let spec = alphabet.spec()?;
            let a = spec.materialize()?;
            let bounds = dimension_bounds(&a, k, &run.solver_options())?;
            let record = RunRecord::new(&spec, &a, &bounds, run.threads(), !run.no_timing);
            match run.out.unwrap_or(Format::Text) {
                Format::Json => println!("{}", record.to_json()),
                Format::Csv => print!("{CSV_HEADER}\n{}", record.csv_row()),
                Format::Text => print!("{}", record.to_text()),
            }
            Ok(if record.has_no_root() {
                EXIT_NO_ROOT
            } else {
                0
            })
        }
        Command::Sweep {
            alphabet,
            k_max,
            run,
        } => {
            let spec = alphabet.spec()?;
            let a = spec.materialize()?;
            let result = sweep(&a, k_max, &run.solver_options())?;
            let record = SweepRecord::new(&spec, &a, &result, run.threads(), !run.no_timing);
            match run.out.unwrap_or(Format::Text) {
                Format::Json => println!("{}", record.to_json()),
                Format::Csv => print!("{}", record.to_csv()),
                Format::Text => print!("{}", record.to_text()),
            }
            let any_no_root = record.records.iter().any(RunRecord::has_no_root);
            Ok(if any_no_root { EXIT_NO_ROOT } else { 0 })
        }
        Command::Table { id, budget, run } => {
            let budget = budget.map(Duration::from_secs_f64);
            let results = run_table(id, budget, &run.solver_options())?;
            match run.out.unwrap_or(Format::Csv) {
                Format::Json => println!("{}", serde_json::to_string_pretty(&results)?),
                Format::Csv | Format::Text => print!("{}", table_csv(&results)),
            }
            Ok(0)
        }
        Command::Verify {
            suite,
            seed,
            samples,
            words,
            alphabet,
            k,
            out,
        } => {
            let alphabet = alphabet
                .map(|s| parse_alphabet(&s)?.materialize())
                .transpose()?;
            let opts = VerifyOptions {
                seed,
                words,
                samples,
                alphabet,
                k,
            };
            let report = run_verify(suite.into(), &opts)?;
            match out {
                Format::Json => println!("{}", report.to_json()),
                Format::Csv | Format::Text => print!("{}", report.to_text()),
            }
            Ok(if report.passed() {
                0
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::Render {
            alphabet,
            depth,
            out,
        } => {
            let a = alphabet.spec()?.materialize()?;
            let circles = render_svg(&a, depth, &out)?;
            eprintln!("wrote {circles} circles to {}", out.display());
            Ok(0)
        }
    }
}
