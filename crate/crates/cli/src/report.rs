//! JSON rendering of query results. Keys are emitted in sorted order, so the
//! output is stable across runs apart from timings.

use std::time::Instant;

use probbits::lang::{parse, run_program, Answer, Encoding, RunResult};
use probbits::oracle::{enumerate_with_cap, OracleResult, DEFAULT_CAP};
use serde_json::{json, Map, Value};

use crate::{CliError, Result};

/// Rounds to 12 significant digits: below every test tolerance, above float
/// noise.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn answer(a: &Answer) -> Value {
    match a {
        Answer::Distribution {
            distribution,
            expectation,
        } => {
            let d: Map<String, Value> = distribution
                .iter()
                .map(|(k, p)| (k.to_string(), json!(round12(p))))
                .collect();
            json!({"type": "distribution", "distribution": d, "expectation": round12(*expectation)})
        }
        Answer::Probability(p) => json!({"type": "probability", "probability": round12(*p)}),
        Answer::Array(items) => {
            json!({"type": "array", "items": items.iter().map(answer).collect::<Vec<_>>()})
        }
        Answer::BetaMixture(m) => {
            let components: Vec<Value> = m
                .iter()
                .map(|(&(a, b), &p)| json!({"alpha": a, "beta": b, "probability": round12(p)}))
                .collect();
            json!({"type": "beta_mixture", "components": components})
        }
    }
}

fn queries(labels: &[String], answers: &[Answer]) -> Vec<Value> {
    labels
        .iter()
        .zip(answers)
        .map(|(label, a)| {
            let mut v = answer(a);
            v["label"] = json!(label);
            v
        })
        .collect()
}

pub fn error(e: &CliError) -> Value {
    let mut body = json!({"kind": e.kind(), "message": e.to_string()});
    if let CliError::Engine(
        probbits::Error::Syntax { line, col, .. }
        | probbits::Error::UnknownIdentifier { line, col, .. }
        | probbits::Error::Compile { line, col, .. },
    ) = e
    {
        body["line"] = json!(line);
        body["col"] = json!(col);
    }
    json!({ "error": body })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub encoding: Encoding,
    pub stats: bool,
    pub oracle: bool,
}

/// Everything `probbits run` reports about one program.
#[derive(Debug)]
pub struct RunReport {
    pub encoding: Encoding,
    pub result: RunResult,
    pub elapsed_ms: f64,
    pub stats: bool,
    pub oracle: Option<std::result::Result<OracleResult, probbits::Error>>,
}

pub fn run(source: &str, opts: RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    let result = run_program(source, opts.encoding)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let oracle = opts
        .oracle
        .then(|| parse(source).and_then(|p| enumerate_with_cap(&p, DEFAULT_CAP)));
    Ok(RunReport {
        encoding: opts.encoding,
        result,
        elapsed_ms,
        stats: opts.stats,
        oracle,
    })
}

impl RunReport {
    /// Largest deviation between engine and oracle answers.
    pub fn oracle_deviation(&self) -> Option<f64> {
        let o = self.oracle.as_ref()?.as_ref().ok()?;
        let mut worst = (self.result.evidence_probability - o.evidence_probability).abs();
        for (a, b) in self.result.answers.iter().zip(&o.answers) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Some(worst)
    }

    pub fn to_json(&self) -> Value {
        let r = &self.result;
        let mut out = json!({
            "encoding": self.encoding.to_string(),
            "queries": queries(&r.labels, &r.answers),
            "evidence_probability": round12(r.evidence_probability),
            "flip_count": r.flip_count,
            "elapsed_ms": (self.elapsed_ms * 1e3).round() / 1e3,
        });
        if self.stats {
            out["node_count"] = json!(r.node_count);
        }
        match &self.oracle {
            None => {}
            Some(Ok(o)) => {
                out["oracle"] = json!({
                    "queries": queries(&o.labels, &o.answers),
                    "evidence_probability": round12(o.evidence_probability),
                    "paths": o.paths,
                    "max_abs_diff": self.oracle_deviation(),
                });
            }
            Some(Err(e)) => {
                out["oracle"] = error(&CliError::Engine(e.clone()))["error"].clone();
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let r = &self.result;
        let mut s = format!("encoding {}\n", self.encoding);
        for (label, a) in r.labels.iter().zip(&r.answers) {
            s.push_str(&format!("\n{label}\n"));
            table_answer(&mut s, a, 1);
        }
        s.push_str(&format!(
            "\nevidence probability {:.12}\nflips {}",
            r.evidence_probability, r.flip_count
        ));
        if self.stats {
            s.push_str(&format!("\nnodes {}", r.node_count));
        }
        s.push_str(&format!("\ntime {:.3} ms\n", self.elapsed_ms));
        match &self.oracle {
            None => {}
            Some(Ok(o)) => s.push_str(&format!(
                "oracle {} paths, max deviation {:.3e}\n",
                o.paths,
                self.oracle_deviation().unwrap_or(f64::NAN)
            )),
            Some(Err(e)) => s.push_str(&format!("oracle unavailable: {e}\n")),
        }
        s
    }
}

fn table_answer(s: &mut String, a: &Answer, depth: usize) {
    let pad = "  ".repeat(depth);
    match a {
        Answer::Distribution {
            distribution,
            expectation,
        } => {
            for (k, p) in distribution.iter() {
                s.push_str(&format!("{pad}{k:>6}  {p:.12}\n"));
            }
            s.push_str(&format!("{pad}  mean  {expectation:.12}\n"));
        }
        Answer::Probability(p) => s.push_str(&format!("{pad}P(true)  {p:.12}\n")),
        Answer::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                s.push_str(&format!("{pad}[{i}]\n"));
                table_answer(s, item, depth + 1);
            }
        }
        Answer::BetaMixture(m) => {
            for (&(a, b), p) in m {
                s.push_str(&format!("{pad}Beta({a}, {b})  {p:.12}\n"));
            }
        }
    }
}
