//! Benchmark sweeps. Each cell builds one operation from scratch in a fresh
//! manager, five times, and reports the median wall time together with the
//! diagram size. Cells run on their own thread under a deadline; a cell that
//! misses it is recorded as a timeout and larger sizes of the same encoding
//! are skipped.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use probbits::arith::{add, eq, lt};
use probbits::encoding::{bitwise_int, categ_int, ProbInt, ProbVector};
use probbits::lang::{compile_in, parse, query, Encoding};
use probbits::oracle::enumerate;
use probbits::{expectation, prob, Evidence, Manager};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::spawn_worker;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Suite {
    Lt,
    Eq,
    PlusExpectation,
    Luhn,
    CategVsBitwise,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Lt,
        Suite::Eq,
        Suite::PlusExpectation,
        Suite::Luhn,
        Suite::CategVsBitwise,
    ];

    fn name(self) -> &'static str {
        match self {
            Suite::Lt => "lt",
            Suite::Eq => "eq",
            Suite::PlusExpectation => "plus-expectation",
            Suite::Luhn => "luhn",
            Suite::CategVsBitwise => "categ-vs-bitwise",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub suite: Suite,
    /// Bit widths, or digit counts for the Luhn suite.
    pub sizes: Vec<u32>,
    pub timeout: Duration,
    pub repetitions: usize,
    pub seed: u64,
    /// Encodings to measure; the other column is reported as skipped.
    pub encodings: Vec<Encoding>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Timeout,
    /// Not attempted because a smaller size already timed out.
    Skipped,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub status: Status,
    pub median_ms: Option<f64>,
    /// Decision nodes of the result.
    pub node_count: Option<usize>,
    /// Decision nodes of the operands, where the suite has operands.
    pub operand_nodes: Option<usize>,
    /// The computed probability or expectation.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Cell {
    fn empty(status: Status) -> Cell {
        Cell {
            status,
            median_ms: None,
            node_count: None,
            operand_nodes: None,
            value: None,
            error: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub size: u32,
    pub bitwise: Cell,
    pub categ: Cell,
    /// Closed-form node counts (categ-vs-bitwise only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bitwise_formula: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categ_formula: Option<u64>,
    /// Engine against enumeration, for Luhn sizes the oracle can afford.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_max_abs_diff: Option<f64>,
}

struct Measure {
    nodes: usize,
    operand_nodes: Option<usize>,
    value: Option<f64>,
}

type Job = Arc<dyn Fn(Manager) -> probbits::Result<Measure> + Send + Sync>;

/// Node count of `b·2^b − 2^b + 1` for the chain encoding of `2^b` values.
pub fn categ_formula(b: u32) -> u64 {
    let n = 1u64 << b;
    u64::from(b) * n - n + 1
}

/// Node count `2^(b+1) − b − 2` for the bitwise encoding of `2^b` values.
pub fn bitwise_formula(b: u32) -> u64 {
    (2u64 << b) - u64::from(b) - 2
}

/// Strictly positive random weights; no value is ever impossible.
pub fn random_vector(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.01..1.0)).collect()
}

fn encode(m: &mut Manager, v: &[f64], enc: Encoding) -> probbits::Result<ProbInt> {
    let v = ProbVector::new(v.to_vec())?;
    match enc {
        Encoding::Bitwise => bitwise_int(m, &v),
        Encoding::Categ => categ_int(m, &v),
    }
}

/// Scanner-style digit beliefs: one likely digit per position, the rest of
/// the mass spread at random.
pub fn luhn_priors(digits: u32, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..digits)
        .map(|_| {
            let top = rng.gen_range(0..10);
            let rest: Vec<f64> = (0..10).map(|_| rng.gen_range(0.01..1.0)).collect();
            let z: f64 = rest.iter().sum();
            (0..10)
                .map(|d| {
                    let p = 0.3 * rest[d] / z + if d == top { 0.7 } else { 0.0 };
                    (p * 1e6).round() / 1e6
                })
                .collect()
        })
        .collect()
}

/// Luhn validation over `priors.len()` digits; digit 0 is the check digit.
pub fn luhn_source(priors: &[Vec<f64>]) -> String {
    let ids: Vec<String> = priors
        .iter()
        .map(|p| {
            let items: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            format!("    discrete([{}])", items.join(", "))
        })
        .collect();
    format!(
        "let id = [\n{}\n]\n\
         let check_digit = id[0]\n\
         let sum = 0\n\
         for i in 1..{} {{\n\
         \x20   if i % 2 == 1 {{\n\
         \x20       if id[i] > 4 {{ sum = sum + 2 * id[i] - 9 }} else {{ sum = sum + 2 * id[i] }}\n\
         \x20   }} else {{\n\
         \x20       sum = sum + id[i]\n\
         \x20   }}\n\
         }}\n\
         observe((check_digit + sum) % 10 == 0)\n\
         return id\n",
        ids.join(",\n"),
        priors.len()
    )
}

/// Oracle runs are skipped above this many paths.
const ORACLE_PATHS: u64 = 100_000;

fn job(suite: Suite, size: u32, seed: u64, enc: Encoding) -> Job {
    let mut rng = StdRng::seed_from_u64(seed ^ u64::from(size).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    match suite {
        Suite::Lt | Suite::Eq | Suite::PlusExpectation => {
            let n = 1usize << size;
            let (a, b) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
            Arc::new(move |mut m| {
                let x = encode(&mut m, &a, enc)?;
                let y = encode(&mut m, &b, enc)?;
                let mut bits = x.bits().to_vec();
                bits.extend_from_slice(y.bits());
                let operand_nodes = Some(m.node_count(&bits)?);
                let none = Evidence::none();
                let (nodes, value) = match suite {
                    Suite::Lt => {
                        let f = lt(&mut m, &x, &y)?;
                        (m.node_count(&[f])?, prob(&mut m, f, &none)?)
                    }
                    Suite::Eq => {
                        let f = eq(&mut m, &x, &y)?;
                        (m.node_count(&[f])?, prob(&mut m, f, &none)?)
                    }
                    _ => {
                        let s = add(&mut m, &x, &y)?;
                        (m.node_count(s.bits())?, expectation(&mut m, &s, &none)?)
                    }
                };
                Ok(Measure {
                    nodes,
                    operand_nodes,
                    value: Some(value),
                })
            })
        }
        Suite::CategVsBitwise => {
            let v = random_vector(&mut rng, 1usize << size);
            Arc::new(move |mut m| {
                let x = encode(&mut m, &v, enc)?;
                Ok(Measure {
                    nodes: m.node_count(x.bits())?,
                    operand_nodes: None,
                    value: None,
                })
            })
        }
        Suite::Luhn => {
            let source = luhn_source(&luhn_priors(size, rng.gen()));
            Arc::new(move |m| {
                let program = parse(&source)?;
                let mut c = compile_in(m, &program, enc)?;
                query(&mut c)?;
                Ok(Measure {
                    nodes: c.node_count()?,
                    operand_nodes: None,
                    value: Some(c.evidence.probability(&c.manager)?),
                })
            })
        }
    }
}

fn run_cell(job: Job, timeout: Duration, repetitions: usize) -> Cell {
    let cancel = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let flag = cancel.clone();
    spawn_worker(move || {
        let mut times = Vec::new();
        let mut last = None;
        for _ in 0..repetitions.max(1) {
            let mut m = Manager::new();
            m.set_interrupt(flag.clone());
            let start = Instant::now();
            match job(m) {
                Ok(x) => {
                    times.push(start.elapsed().as_secs_f64() * 1e3);
                    last = Some(x);
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    return;
                }
            }
        }
        let _ = tx.send(Ok((times, last.expect("at least one repetition"))));
    });
    match rx.recv_timeout(timeout) {
        Ok(Ok((mut times, m))) => {
            times.sort_by(f64::total_cmp);
            Cell {
                status: Status::Ok,
                median_ms: Some(times[times.len() / 2]),
                node_count: Some(m.nodes),
                operand_nodes: m.operand_nodes,
                value: m.value,
                error: None,
            }
        }
        Ok(Err(e)) => Cell {
            error: Some(e.to_string()),
            ..Cell::empty(Status::Error)
        },
        Err(_) => {
            cancel.store(true, Ordering::Relaxed);
            Cell::empty(Status::Timeout)
        }
    }
}

fn luhn_oracle_diff(size: u32, seed: u64) -> Option<f64> {
    if 10u64.checked_pow(size)? > ORACLE_PATHS {
        return None;
    }
    let mut rng = StdRng::seed_from_u64(seed ^ u64::from(size).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let source = luhn_source(&luhn_priors(size, rng.gen()));
    let engine = probbits::run_program(&source, Encoding::Bitwise).ok()?;
    let oracle = enumerate(&parse(&source).ok()?).ok()?;
    engine
        .answers
        .iter()
        .zip(&oracle.answers)
        .try_fold(0.0f64, |m, (a, b)| Some(m.max(a.max_abs_diff(b)?)))
}

pub fn run(config: &Config) -> Vec<Row> {
    let mut given_up = [false, false];
    let mut rows = Vec::new();
    for &size in &config.sizes {
        let mut cells = Vec::new();
        for (i, enc) in [Encoding::Bitwise, Encoding::Categ].into_iter().enumerate() {
            if given_up[i] || !config.encodings.contains(&enc) {
                cells.push(Cell::empty(Status::Skipped));
                continue;
            }
            let cell = run_cell(
                job(config.suite, size, config.seed, enc),
                config.timeout,
                config.repetitions,
            );
            given_up[i] = cell.status == Status::Timeout;
            cells.push(cell);
        }
        let categ = cells.pop().unwrap();
        let bitwise = cells.pop().unwrap();
        let formulas = config.suite == Suite::CategVsBitwise;
        rows.push(Row {
            size,
            bitwise,
            categ,
            bitwise_formula: formulas.then(|| bitwise_formula(size)),
            categ_formula: formulas.then(|| categ_formula(size)),
            oracle_max_abs_diff: if config.suite == Suite::Luhn {
                luhn_oracle_diff(size, config.seed)
            } else {
                None
            },
        });
    }
    rows
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or(String::new(), T::to_string)
}

fn status(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Timeout => "timeout",
        Status::Skipped => "skipped",
        Status::Error => "error",
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "size",
    "bitwise_status",
    "bitwise_ms",
    "bitwise_nodes",
    "bitwise_operand_nodes",
    "bitwise_value",
    "categ_status",
    "categ_ms",
    "categ_nodes",
    "categ_operand_nodes",
    "categ_value",
    "bitwise_formula",
    "categ_formula",
    "oracle_max_abs_diff",
];

pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![r.size.to_string()];
        for c in [&r.bitwise, &r.categ] {
            rec.extend([
                status(c.status).to_string(),
                opt(&c.median_ms.map(|t| format!("{t:.3}"))),
                opt(&c.node_count),
                opt(&c.operand_nodes),
                opt(&c.value),
            ]);
        }
        rec.extend([
            opt(&r.bitwise_formula),
            opt(&r.categ_formula),
            opt(&r.oracle_max_abs_diff),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn table(suite: Suite, rows: &[Row]) -> String {
    let unit = if suite == Suite::Luhn {
        "digits"
    } else {
        "bits"
    };
    let mut s = format!(
        "{unit:>6} {:>12} {:>10} {:>12} {:>10}\n",
        "bitwise ms", "nodes", "categ ms", "nodes"
    );
    let cell = |c: &Cell| match c.status {
        Status::Ok => (
            format!("{:.3}", c.median_ms.unwrap_or(f64::NAN)),
            opt(&c.node_count),
        ),
        other => (status(other).to_string(), String::new()),
    };
    for r in rows {
        let (bt, bn) = cell(&r.bitwise);
        let (ct, cn) = cell(&r.categ);
        s.push_str(&format!(
            "{:>6} {bt:>12} {bn:>10} {ct:>12} {cn:>10}",
            r.size
        ));
        if let (Some(b), Some(c)) = (r.bitwise_formula, r.categ_formula) {
            s.push_str(&format!("   formula {b} / {c}"));
        }
        if let Some(d) = r.oracle_max_abs_diff {
            s.push_str(&format!("   oracle diff {d:.1e}"));
        }
        s.push('\n');
    }
    s
}
