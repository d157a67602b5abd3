//! Library half of the `probbits` command: structured reports, benchmark
//! sweeps and the corpus runner. `main.rs` only parses arguments.

pub mod bench;
pub mod corpus;
pub mod report;

use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 10;
    pub const COMPILE: i32 = 11;
    pub const UNSATISFIABLE: i32 = 12;
    pub const TIMEOUT: i32 = 13;
    pub const IO: i32 = 14;
    /// Inference failures other than unsatisfiable evidence.
    pub const INFERENCE: i32 = 15;
    pub const CORPUS_MISMATCH: i32 = 20;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] probbits::Error),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("timed out after {0} s")]
    Timeout(u64),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Engine(e) => e.kind(),
            CliError::Io { .. } | CliError::Csv(_) => "io_error",
            CliError::Timeout(_) => "timeout",
        }
    }

    pub fn exit_code(&self) -> i32 {
        use probbits::Error as E;
        match self {
            CliError::Engine(e) => match e {
                E::Syntax { .. } | E::UnknownIdentifier { .. } => exit::PARSE,
                E::Compile { .. }
                | E::Overflow { .. }
                | E::InvalidVector(_)
                | E::InvalidRange(_)
                | E::InvalidWeight(_) => exit::COMPILE,
                E::UnsatisfiableEvidence => exit::UNSATISFIABLE,
                E::Interrupted => exit::TIMEOUT,
                E::ManagerMismatch | E::EnumerationTooLarge { .. } => exit::INFERENCE,
            },
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Timeout(_) => exit::TIMEOUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Stack for worker threads. Diagram recursion is as deep as the variable
/// order, and a chain-encoded integer over 2^14 values has 2^14 levels.
pub const WORKER_STACK: usize = 1 << 30;

/// Runs `job` on a worker thread with [`WORKER_STACK`] and waits at most
/// `limit`. On timeout the thread is left to finish in the background.
pub fn with_timeout<T: Send + 'static>(
    limit: Option<Duration>,
    job: impl FnOnce() -> T + Send + 'static,
) -> Option<T> {
    let (tx, rx) = mpsc::channel();
    spawn_worker(move || {
        let _ = tx.send(job());
    });
    match limit {
        Some(limit) => rx.recv_timeout(limit).ok(),
        None => rx.recv().ok(),
    }
}

pub fn spawn_worker(job: impl FnOnce() + Send + 'static) {
    thread::Builder::new()
        .stack_size(WORKER_STACK)
        .spawn(job)
        .expect("cannot spawn worker thread");
}
