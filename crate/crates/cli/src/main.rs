use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use probbits::fuzz::{differential, random_program};
use probbits::lang::Encoding;
use probbits::oracle::DEFAULT_CAP;
use probbits_cli::bench::{self, Suite};
use probbits_cli::report::{self, RunOptions};
use probbits_cli::{corpus, exit, with_timeout, CliError};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "probbits",
    version,
    about = "Exact inference for discrete probabilistic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a program and answer its queries.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "bitwise")]
        encoding: Encoding,
        /// Report the decision-node count of outputs and evidence.
        #[arg(long)]
        stats: bool,
        /// Also enumerate every path and report the deviation.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        timeout_sec: Option<u64>,
        /// Human-readable output instead of JSON.
        #[arg(long)]
        pretty: bool,
    },
    /// Time arithmetic and Luhn programs over growing sizes.
    Bench {
        /// lt, eq, plus-expectation, luhn or categ-vs-bitwise
        suite: Suite,
        /// Sweep bit widths 1..=N.
        #[arg(long, default_value_t = 14)]
        max_bits: u32,
        /// A single bit width instead of a sweep.
        #[arg(long)]
        bits: Option<u32>,
        /// Sweep Luhn digit counts 2..=N.
        #[arg(long, default_value_t = 10)]
        digits: u32,
        /// Per-cell deadline.
        #[arg(long, default_value_t = 60)]
        timeout_sec: u64,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        /// Seed for the random operand distributions.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measure only this encoding.
        #[arg(long)]
        encoding: Option<Encoding>,
        /// Also write the rows as comma-separated values.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Run the example corpus against both encodings and the oracle.
    Corpus {
        /// Only programs whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Read `*.pb` files from this directory instead of the built-in set.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = 120)]
        timeout_sec: u64,
        #[arg(long)]
        pretty: bool,
    },
    /// Compare engine and oracle on random programs.
    Fuzz {
        #[arg(long, default_value_t = 200)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_json(v: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("values serialize")
    );
}

fn fail(e: CliError) -> ExitCode {
    print_json(&report::error(&e));
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            file,
            encoding,
            stats,
            oracle,
            timeout_sec,
            pretty,
        } => {
            let source = match std::fs::read_to_string(&file) {
                Ok(s) => s,
                Err(source) => return fail(CliError::Io { path: file, source }),
            };
            let opts = RunOptions {
                encoding,
                stats,
                oracle,
            };
            let limit = timeout_sec.map(Duration::from_secs);
            let result = match with_timeout(limit, move || report::run(&source, opts)) {
                Some(r) => r,
                None => return fail(CliError::Timeout(timeout_sec.unwrap_or_default())),
            };
            match result {
                Ok(r) if pretty => print!("{}", r.to_table()),
                Ok(r) => print_json(&r.to_json()),
                Err(e) => return fail(e),
            }
            ExitCode::SUCCESS
        }
        Command::Bench {
            suite,
            max_bits,
            bits,
            digits,
            timeout_sec,
            repetitions,
            seed,
            encoding,
            csv,
            pretty,
        } => {
            let sizes = match (suite, bits) {
                (Suite::Luhn, _) => (2..=digits).collect(),
                (_, Some(b)) => vec![b],
                (_, None) => (1..=max_bits).collect(),
            };
            let config = bench::Config {
                suite,
                sizes,
                timeout: Duration::from_secs(timeout_sec),
                repetitions,
                seed,
                encodings: match encoding {
                    Some(e) => vec![e],
                    None => vec![Encoding::Bitwise, Encoding::Categ],
                },
            };
            let rows = bench::run(&config);
            if let Some(path) = csv {
                let written = std::fs::File::create(&path)
                    .map_err(|source| CliError::Io {
                        path: path.clone(),
                        source,
                    })
                    .and_then(|f| bench::write_csv(&rows, f).map_err(CliError::from));
                if let Err(e) = written {
                    return fail(e);
                }
            }
            if pretty {
                print!("{}", bench::table(suite, &rows));
            } else {
                print_json(&json!({"suite": suite.to_string(), "seed": seed, "rows": rows}));
            }
            ExitCode::SUCCESS
        }
        Command::Corpus {
            filter,
            dir,
            timeout_sec,
            pretty,
        } => {
            let entries = match dir {
                Some(d) => match corpus::from_dir(&d) {
                    Ok(e) => e,
                    Err(e) => return fail(e),
                },
                None => corpus::embedded(),
            };
            let limit = Some(Duration::from_secs(timeout_sec));
            let outcomes: Vec<corpus::Outcome> = entries
                .iter()
                .filter(|e| filter.as_ref().is_none_or(|f| e.name.contains(f.as_str())))
                .map(|e| corpus::check(e, DEFAULT_CAP, limit))
                .collect();
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if pretty {
                for o in &outcomes {
                    let verdict = if o.passed { "pass" } else { "FAIL" };
                    let oracle = if o.oracle_checked {
                        "oracle"
                    } else {
                        "no oracle"
                    };
                    let note = o.error.as_deref().unwrap_or("");
                    println!(
                        "{verdict}  {:<16} {oracle:<10} {:>10.1} ms  {note}",
                        o.name, o.elapsed_ms
                    );
                }
                println!("{} passed, {failed} failed", outcomes.len() - failed);
            } else {
                print_json(&json!({
                    "programs": outcomes,
                    "passed": outcomes.len() - failed,
                    "failed": failed,
                }));
            }
            if failed > 0 {
                ExitCode::from(exit::CORPUS_MISMATCH as u8)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Fuzz { cases, seed } => {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut failures = Vec::new();
            let mut worst = 0.0f64;
            for case in 0..cases {
                let source = random_program(&mut rng);
                for enc in [Encoding::Bitwise, Encoding::Categ] {
                    match differential(&source, enc) {
                        Ok(d) if d <= corpus::TOLERANCE => worst = worst.max(d),
                        Ok(d) => failures.push(json!({"case": case, "encoding": enc.to_string(), "deviation": d, "source": source})),
                        Err(m) => failures.push(json!({"case": case, "encoding": enc.to_string(), "error": m, "source": source})),
                    }
                }
            }
            let failed = failures.len();
            print_json(&json!({
                "cases": cases,
                "seed": seed,
                "max_abs_diff": worst,
                "failures": failures,
            }));
            if failed > 0 {
                ExitCode::from(exit::CORPUS_MISMATCH as u8)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
