use std::collections::BTreeMap;

use crate::bdd::Manager;
use crate::error::Result;
use crate::inference::{expectation, marginal_distribution, prob, Distribution, Evidence};
use crate::lang::compile::{compile, Compiled, Encoding, Output};
use crate::lang::parser::parse;

/// Posterior answer for one returned expression.
#[derive(Clone, PartialEq, Debug)]
pub enum Answer {
    Distribution {
        distribution: Distribution,
        expectation: f64,
    },
    /// Probability that a Boolean result is true.
    Probability(f64),
    Array(Vec<Answer>),
    /// Mixture weights keyed by Beta parameters `(alpha, beta)`.
    BetaMixture(BTreeMap<(u64, u64), f64>),
}

impl Answer {
    /// Largest pointwise difference, or `None` when the shapes differ.
    pub fn max_abs_diff(&self, other: &Answer) -> Option<f64> {
        match (self, other) {
            (
                Answer::Distribution {
                    distribution: a,
                    expectation: ea,
                },
                Answer::Distribution {
                    distribution: b,
                    expectation: eb,
                },
            ) => {
                // expectations scale with the support, so compare them relatively
                let rel = (ea - eb).abs() / ea.abs().max(eb.abs()).max(1.0);
                Some(a.max_abs_diff(b).max(rel))
            }
            (Answer::Probability(a), Answer::Probability(b)) => Some((a - b).abs()),
            (Answer::Array(a), Answer::Array(b)) if a.len() == b.len() => a
                .iter()
                .zip(b)
                .try_fold(0.0f64, |m, (x, y)| Some(m.max(x.max_abs_diff(y)?))),
            (Answer::BetaMixture(a), Answer::BetaMixture(b)) => Some(
                a.keys()
                    .chain(b.keys())
                    .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
                    .fold(0.0, f64::max),
            ),
            _ => None,
        }
    }
}

/// Everything a run reports besides timing.
#[derive(Clone, PartialEq, Debug)]
pub struct RunResult {
    pub labels: Vec<String>,
    pub answers: Vec<Answer>,
    /// Prior probability of the accumulated evidence.
    pub evidence_probability: f64,
    pub node_count: usize,
    pub flip_count: usize,
}

fn answer(mgr: &mut Manager, e: &Evidence, out: &Output) -> Result<Answer> {
    Ok(match out {
        Output::Int(x) => Answer::Distribution {
            distribution: marginal_distribution(mgr, x, e)?,
            expectation: expectation(mgr, x, e)?,
        },
        Output::Bool(b) => Answer::Probability(prob(mgr, *b, e)?),
        Output::Array(items) => Answer::Array(
            items
                .iter()
                .map(|o| answer(mgr, e, o))
                .collect::<Result<Vec<_>>>()?,
        ),
        Output::Beta { a, total } => {
            let d = marginal_distribution(mgr, a, e)?;
            Answer::BetaMixture(d.iter().map(|(k, p)| ((k, total - k), p)).collect())
        }
    })
}

/// Answers every returned expression of a compiled program.
pub fn query(compiled: &mut Compiled) -> Result<Vec<Answer>> {
    let e = compiled.evidence;
    let mgr = &mut compiled.manager;
    compiled
        .outputs
        .iter()
        .map(|o| answer(mgr, &e, o))
        .collect()
}

/// Parse, compile and query in one step.
pub fn run_program(source: &str, encoding: Encoding) -> Result<RunResult> {
    let program = parse(source)?;
    let mut compiled = compile(&program, encoding)?;
    let answers = query(&mut compiled)?;
    Ok(RunResult {
        labels: compiled.labels.clone(),
        answers,
        evidence_probability: compiled.evidence.probability(&compiled.manager)?,
        node_count: compiled.node_count()?,
        flip_count: compiled.manager.var_count(),
    })
}
