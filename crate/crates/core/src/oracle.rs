//! Ground truth by exhaustive path enumeration.
//!
//! Programs are interpreted natively: `discrete` and `uniform` pick concrete
//! integers, arithmetic is done on machine words masked to the language's bit
//! widths. Nothing here touches the BDD engine.
//!
//! Conditionals run both arms, as the compiler does. The arm that is not taken
//! runs in shadow mode: it still tracks integer widths (the merged variable is
//! as wide as the wider arm) and still draws from Beta urns (urn updates are
//! unconditional), but its other random choices and its observations are
//! ignored.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::inference::Distribution;
use crate::lang::ast::{BinOp, Expr, ExprKind, Pos, Program, Stmt, StmtKind};
use crate::lang::compile::MAX_WIDTH;
use crate::lang::query::Answer;
use crate::lang::unroll::unroll;

/// Default bound on the number of enumerated paths.
pub const DEFAULT_CAP: u64 = 1 << 24;

#[derive(Clone, PartialEq, Debug)]
pub struct OracleResult {
    pub labels: Vec<String>,
    pub answers: Vec<Answer>,
    /// Total weight of the paths that satisfy every observation.
    pub evidence_probability: f64,
    /// Total weight of the paths that fail an observation.
    pub rejected_mass: f64,
    /// Number of complete or rejected paths visited.
    pub paths: u64,
}

pub fn enumerate(program: &Program) -> Result<OracleResult> {
    enumerate_with_cap(program, DEFAULT_CAP)
}

/// Walks every joint assignment of the program's random choices, refusing
/// when the static path bound exceeds `cap`.
pub fn enumerate_with_cap(program: &Program, cap: u64) -> Result<OracleResult> {
    let program = unroll(program);
    let bound = path_bound(&program);
    if bound > cap as f64 {
        return Err(Error::EnumerationTooLarge { paths: bound, cap });
    }

    let mut trail: Vec<Choice> = Vec::new();
    let mut acc: Option<Vec<Acc>> = None;
    let (mut accepted, mut rejected, mut paths) = (0.0, 0.0, 0u64);
    loop {
        let mut run = Run {
            trail: &mut trail,
            depth: 0,
            weight: 1.0,
            scopes: vec![HashMap::new()],
            urns: HashMap::new(),
        };
        let outcome = run.program(&program);
        let (depth, weight) = (run.depth, run.weight);
        paths += 1;
        match outcome {
            Ok(values) => {
                accepted += weight;
                let slots = acc.get_or_insert_with(|| values.iter().map(Acc::empty_like).collect());
                for (slot, v) in slots.iter_mut().zip(&values) {
                    slot.add(v, weight);
                }
            }
            Err(Stop::Rejected) => rejected += weight,
            Err(Stop::Error(e)) => return Err(e),
        }
        trail.truncate(depth);
        while trail.last().is_some_and(|c| c.index + 1 == c.count) {
            trail.pop();
        }
        match trail.last_mut() {
            Some(c) => c.index += 1,
            None => break,
        }
    }

    if accepted <= 0.0 {
        return Err(Error::UnsatisfiableEvidence);
    }
    let answers = acc
        .expect("at least one path was accepted")
        .into_iter()
        .map(|a| a.finish(accepted))
        .collect();
    Ok(OracleResult {
        labels: program.returns.iter().map(|e| e.to_string()).collect(),
        answers,
        evidence_probability: accepted,
        rejected_mass: rejected,
        paths,
    })
}

/// Product of the branching factors of every choice point, both arms of
/// every conditional included.
pub fn path_bound(program: &Program) -> f64 {
    fn expr(e: &Expr) -> f64 {
        match &e.kind {
            ExprKind::Flip(p) => {
                if *p > 0.0 && *p < 1.0 {
                    2.0
                } else {
                    1.0
                }
            }
            ExprKind::Discrete(v) => v.iter().filter(|&&p| p > 0.0).count().max(1) as f64,
            ExprKind::Uniform(lo, hi) => hi.saturating_sub(*lo).max(1) as f64,
            ExprKind::BetaFlip(_) => 2.0,
            ExprKind::If(c, t, f) => expr(c) * expr(t) * expr(f),
            ExprKind::Array(items) => items.iter().map(expr).product(),
            ExprKind::Index(_, i) => expr(i),
            ExprKind::Cast(x, _) | ExprKind::Not(x) => expr(x),
            ExprKind::Binary(_, a, b) => expr(a) * expr(b),
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => 1.0,
        }
    }
    fn stmts(v: &[Stmt]) -> f64 {
        v.iter()
            .map(|s| match &s.kind {
                StmtKind::Let(_, e) | StmtKind::Assign(_, e) | StmtKind::Observe(e) => expr(e),
                StmtKind::LetBeta(..) => 1.0,
                StmtKind::If(c, t, f) => expr(c) * stmts(t) * stmts(f),
                StmtKind::For(_, lo, hi, body) => stmts(body).powf(hi.saturating_sub(*lo) as f64),
                StmtKind::Block(body) => stmts(body),
            })
            .product()
    }
    stmts(&program.stmts) * program.returns.iter().map(expr).product::<f64>()
}

struct Choice {
    index: usize,
    count: usize,
}

enum Stop {
    Rejected,
    Error(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Error(e)
    }
}

type Step<T> = std::result::Result<T, Stop>;

#[derive(Clone, PartialEq, Debug)]
enum Val {
    Int { v: u64, w: usize },
    Bool(bool),
    Array(Vec<Val>),
}

enum Out {
    Val(Val),
    Beta { alpha: u64, beta: u64 },
}

fn fail(pos: Pos, message: impl Into<String>) -> Stop {
    Stop::Error(Error::Compile {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    })
}

fn mask(v: u64, w: usize) -> u64 {
    if w >= 64 {
        v
    } else {
        v & ((1u64 << w) - 1)
    }
}

/// Smallest width holding `k`, at least one bit.
fn value_width(k: u64) -> usize {
    let mut w = 1;
    while w < 64 && k >> w != 0 {
        w += 1;
    }
    w
}

/// Smallest width holding every value below `n`, at least one bit.
fn range_width(n: u64) -> usize {
    value_width(n.max(2) - 1)
}

fn int_width(w: usize, pos: Pos) -> Step<usize> {
    if w > MAX_WIDTH {
        return Err(fail(
            pos,
            format!("integer width {w} exceeds the {MAX_WIDTH}-bit limit"),
        ));
    }
    Ok(w)
}

fn same_shape(a: &Val, b: &Val) -> bool {
    match (a, b) {
        (Val::Int { .. }, Val::Int { .. }) | (Val::Bool(_), Val::Bool(_)) => true,
        (Val::Array(x), Val::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_shape(p, q))
        }
        _ => false,
    }
}

/// The taken arm's value with the width of the wider arm.
fn join(taken: Val, other: &Val, pos: Pos) -> Step<Val> {
    match (taken, other) {
        (Val::Int { v, w }, Val::Int { w: w2, .. }) => Ok(Val::Int { v, w: w.max(*w2) }),
        (Val::Bool(b), Val::Bool(_)) => Ok(Val::Bool(b)),
        (Val::Array(a), Val::Array(b)) if a.len() == b.len() => Ok(Val::Array(
            a.into_iter()
                .zip(b)
                .map(|(x, y)| join(x, y, pos))
                .collect::<Step<Vec<_>>>()?,
        )),
        _ => Err(fail(pos, "branches produce values of different shapes")),
    }
}

fn int_of(v: Val, pos: Pos) -> Step<(u64, usize)> {
    match v {
        Val::Int { v, w } => Ok((v, w)),
        Val::Bool(b) => Ok((u64::from(b), 1)),
        Val::Array(_) => Err(fail(pos, "expected an integer, found an array")),
    }
}

fn bool_of(v: Val, pos: Pos) -> Step<bool> {
    match v {
        Val::Bool(b) => Ok(b),
        Val::Int { .. } => Err(fail(pos, "expected a boolean, found an integer")),
        Val::Array(_) => Err(fail(pos, "expected a boolean, found an array")),
    }
}

struct Run<'t> {
    trail: &'t mut Vec<Choice>,
    depth: usize,
    weight: f64,
    scopes: Vec<HashMap<String, Val>>,
    urns: HashMap<String, (u64, u64)>,
}

impl Run<'_> {
    /// Picks the next option at this choice point; zero-weight options are
    /// never offered.
    fn choose<T: Copy>(&mut self, options: &[(T, f64)]) -> T {
        let live: Vec<(T, f64)> = options.iter().copied().filter(|&(_, p)| p > 0.0).collect();
        let index = if self.depth < self.trail.len() {
            self.trail[self.depth].index
        } else {
            self.trail.push(Choice {
                index: 0,
                count: live.len(),
            });
            0
        };
        self.depth += 1;
        let (value, p) = live[index];
        self.weight *= p;
        value
    }

    fn program(&mut self, program: &Program) -> Step<Vec<Out>> {
        for s in &program.stmts {
            self.stmt(s, true)?;
        }
        let mut out = Vec::new();
        for e in &program.returns {
            if let ExprKind::Var(name) = &e.kind {
                if let Some(&(a, t)) = self.urns.get(name) {
                    out.push(Out::Beta {
                        alpha: a,
                        beta: t - a,
                    });
                    continue;
                }
            }
            out.push(Out::Val(self.expr(e, true)?));
        }
        Ok(out)
    }

    fn lookup(&self, name: &str, pos: Pos) -> Step<Val> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .cloned()
            .ok_or_else(|| {
                Stop::Error(Error::UnknownIdentifier {
                    name: name.to_string(),
                    line: pos.line,
                    col: pos.col,
                })
            })
    }

    fn block(&mut self, stmts: &[Stmt], live: bool) -> Step<()> {
        self.scopes.push(HashMap::new());
        for s in stmts {
            self.stmt(s, live)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, live: bool) -> Step<()> {
        match &s.kind {
            StmtKind::Let(name, e) => {
                let v = self.expr(e, live)?;
                self.scopes
                    .last_mut()
                    .expect("scope stack is never empty")
                    .insert(name.clone(), v);
            }
            StmtKind::LetBeta(name, alpha, beta) => {
                self.urns.insert(name.clone(), (*alpha, alpha + beta));
            }
            StmtKind::Assign(name, e) => {
                let v = self.expr(e, live)?;
                let slot = self
                    .scopes
                    .iter_mut()
                    .rev()
                    .find_map(|sc| sc.get_mut(name))
                    .ok_or_else(|| {
                        Stop::Error(Error::UnknownIdentifier {
                            name: name.clone(),
                            line: s.pos.line,
                            col: s.pos.col,
                        })
                    })?;
                if !same_shape(slot, &v) {
                    return Err(fail(
                        s.pos,
                        format!("assignment changes the type of `{name}`"),
                    ));
                }
                *slot = v;
            }
            StmtKind::Observe(e) => {
                let v = self.expr(e, live)?;
                let c = bool_of(v, e.pos)?;
                if live && !c {
                    return Err(Stop::Rejected);
                }
            }
            StmtKind::If(cond, then, otherwise) => {
                let v = self.expr(cond, live)?;
                let c = bool_of(v, cond.pos)?;
                let before = self.scopes.clone();
                self.block(then, live && c)?;
                let after_then = std::mem::replace(&mut self.scopes, before);
                self.block(otherwise, live && !c)?;
                let after_else = std::mem::take(&mut self.scopes);
                let (taken, other) = if c {
                    (after_then, after_else)
                } else {
                    (after_else, after_then)
                };
                let mut merged = Vec::with_capacity(taken.len());
                for (mut t_scope, o_scope) in taken.into_iter().zip(other) {
                    for (name, ov) in o_scope {
                        let tv = t_scope.remove(&name).expect("arms share the outer scopes");
                        t_scope.insert(name, join(tv, &ov, s.pos)?);
                    }
                    merged.push(t_scope);
                }
                self.scopes = merged;
            }
            StmtKind::For(..) => unreachable!("loops are unrolled before interpretation"),
            StmtKind::Block(body) => self.block(body, live)?,
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr, live: bool) -> Step<Val> {
        let pos = e.pos;
        Ok(match &e.kind {
            ExprKind::Int(k) => Val::Int {
                v: *k,
                w: value_width(*k),
            },
            ExprKind::Bool(b) => Val::Bool(*b),
            ExprKind::Var(name) => self.lookup(name, pos)?,
            ExprKind::Flip(p) => {
                if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                    return Err(fail(
                        pos,
                        format!("invalid weight {p}: must be a finite probability in [0, 1]"),
                    ));
                }
                if live {
                    Val::Bool(self.choose(&[(true, *p), (false, 1.0 - *p)]))
                } else {
                    Val::Bool(false)
                }
            }
            ExprKind::Discrete(probs) => {
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0)
                    || total <= 0.0
                    || !total.is_finite()
                {
                    return Err(fail(pos, "invalid probability vector"));
                }
                let w = int_width(range_width(probs.len() as u64), pos)?;
                let v = if live {
                    let options: Vec<(u64, f64)> = probs
                        .iter()
                        .enumerate()
                        .map(|(i, p)| (i as u64, p / total))
                        .collect();
                    self.choose(&options)
                } else {
                    0
                };
                Val::Int { v, w }
            }
            ExprKind::Uniform(lo, hi) => {
                if hi <= lo {
                    return Err(fail(pos, format!("uniform({lo}, {hi}) has an empty range")));
                }
                let n = hi - lo;
                let wu = range_width(n);
                let w = if *lo == 0 {
                    wu
                } else {
                    int_width(wu.max(value_width(*lo)) + 1, pos)?
                };
                let v = if live {
                    let options: Vec<(u64, f64)> =
                        (0..n).map(|i| (lo + i, 1.0 / n as f64)).collect();
                    self.choose(&options)
                } else {
                    0
                };
                Val::Int { v, w }
            }
            ExprKind::BetaFlip(name) => {
                let (a, t) = *self
                    .urns
                    .get(name)
                    .ok_or_else(|| fail(pos, format!("`{name}` is not a Beta variable")))?;
                let p = a as f64 / t as f64;
                let bit = self.choose(&[(true, p), (false, 1.0 - p)]);
                self.urns.insert(name.clone(), (a + u64::from(bit), t + 1));
                Val::Bool(bit)
            }
            ExprKind::If(c, t, f) => {
                let v = self.expr(c, live)?;
                let cv = bool_of(v, c.pos)?;
                let tv = self.expr(t, live && cv)?;
                let fv = self.expr(f, live && !cv)?;
                if cv {
                    join(tv, &fv, pos)?
                } else {
                    join(fv, &tv, pos)?
                }
            }
            ExprKind::Array(items) => Val::Array(
                items
                    .iter()
                    .map(|x| self.expr(x, live))
                    .collect::<Step<Vec<_>>>()?,
            ),
            ExprKind::Index(name, idx) => {
                if !idx.is_static() {
                    return Err(fail(idx.pos, "array index must be a compile-time constant"));
                }
                let iv = self.expr(idx, live)?;
                let (i, _) = int_of(iv, idx.pos)?;
                match self.lookup(name, pos)? {
                    Val::Array(items) => items.get(i as usize).cloned().ok_or_else(|| {
                        fail(
                            pos,
                            format!(
                                "index {i} is out of bounds for `{name}` of length {}",
                                items.len()
                            ),
                        )
                    })?,
                    _ => return Err(fail(pos, format!("`{name}` is not an array"))),
                }
            }
            ExprKind::Cast(x, w) => {
                let xv = self.expr(x, live)?;
                let (v, vw) = int_of(xv, x.pos)?;
                if *w == 0 || *w > MAX_WIDTH {
                    return Err(fail(
                        pos,
                        format!("cast width {w} is outside 1..={MAX_WIDTH}"),
                    ));
                }
                if vw > *w {
                    return Err(fail(
                        pos,
                        format!("cast to {w} bits would truncate a {vw}-bit value"),
                    ));
                }
                Val::Int { v, w: *w }
            }
            ExprKind::Not(x) => {
                let v = self.expr(x, live)?;
                let b = bool_of(v, x.pos)?;
                Val::Bool(!b)
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.expr(l, live)?;
                let rv = self.expr(r, live)?;
                Self::binary(*op, lv, rv, l.pos, r.pos, pos)?
            }
        })
    }

    fn binary(op: BinOp, lv: Val, rv: Val, lpos: Pos, rpos: Pos, pos: Pos) -> Step<Val> {
        let both_bool = matches!((&lv, &rv), (Val::Bool(_), Val::Bool(_)));
        if matches!(op, BinOp::And | BinOp::Or)
            || (both_bool && matches!(op, BinOp::Eq | BinOp::Ne))
        {
            let a = bool_of(lv, lpos)?;
            let b = bool_of(rv, rpos)?;
            return Ok(Val::Bool(match op {
                BinOp::And => a && b,
                BinOp::Or => a || b,
                BinOp::Eq => a == b,
                _ => a != b,
            }));
        }
        let (a, wa) = int_of(lv, lpos)?;
        let (b, wb) = int_of(rv, rpos)?;
        let w = wa.max(wb);
        Ok(match op {
            BinOp::Add => Val::Int {
                v: a + b,
                w: int_width(w + 1, pos)?,
            },
            BinOp::Sub => Val::Int {
                v: mask(a.wrapping_sub(b), w),
                w: int_width(w, pos)?,
            },
            BinOp::Mul => {
                let w = int_width(wa + wb, pos)?;
                Val::Int { v: a * b, w }
            }
            BinOp::Div => Val::Int {
                v: a.checked_div(b).unwrap_or(0),
                w: wa,
            },
            BinOp::Mod => Val::Int {
                v: if b == 0 { a } else { a % b },
                w: wa,
            },
            BinOp::Eq => Val::Bool(a == b),
            BinOp::Ne => Val::Bool(a != b),
            BinOp::Lt => Val::Bool(a < b),
            BinOp::Le => Val::Bool(a <= b),
            BinOp::Gt => Val::Bool(a > b),
            BinOp::Ge => Val::Bool(a >= b),
            BinOp::And | BinOp::Or => unreachable!("handled above"),
        })
    }
}

/// Weighted sums for one output, shaped like its values.
enum Acc {
    Int(Distribution),
    Bool(f64),
    Array(Vec<Acc>),
    Beta(BTreeMap<(u64, u64), f64>),
}

impl Acc {
    fn empty_like(out: &Out) -> Acc {
        match out {
            Out::Val(v) => Acc::empty_val(v),
            Out::Beta { .. } => Acc::Beta(BTreeMap::new()),
        }
    }

    fn empty_val(v: &Val) -> Acc {
        match v {
            Val::Int { .. } => Acc::Int(Distribution::new()),
            Val::Bool(_) => Acc::Bool(0.0),
            Val::Array(items) => Acc::Array(items.iter().map(Acc::empty_val).collect()),
        }
    }

    fn add(&mut self, out: &Out, w: f64) {
        match out {
            Out::Val(v) => self.add_val(v, w),
            Out::Beta { alpha, beta } => {
                if let Acc::Beta(m) = self {
                    *m.entry((*alpha, *beta)).or_insert(0.0) += w;
                }
            }
        }
    }

    fn add_val(&mut self, v: &Val, w: f64) {
        match (self, v) {
            (Acc::Int(d), Val::Int { v, .. }) => d.add(*v, w),
            (Acc::Bool(p), Val::Bool(b)) => {
                if *b {
                    *p += w;
                }
            }
            (Acc::Array(slots), Val::Array(items)) => {
                for (s, x) in slots.iter_mut().zip(items) {
                    s.add_val(x, w);
                }
            }
            _ => unreachable!("output shapes are fixed by the program text"),
        }
    }

    fn finish(self, z: f64) -> Answer {
        match self {
            Acc::Int(d) => {
                let distribution = d.scaled(z);
                let expectation = distribution.mean();
                Answer::Distribution {
                    distribution,
                    expectation,
                }
            }
            Acc::Bool(p) => Answer::Probability(p / z),
            Acc::Array(slots) => Answer::Array(slots.into_iter().map(|s| s.finish(z)).collect()),
            Acc::Beta(m) => Answer::BetaMixture(
                m.into_iter()
                    .filter(|&(_, p)| p != 0.0)
                    .map(|(k, p)| (k, p / z))
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn run(src: &str) -> Result<OracleResult> {
        enumerate(&parse(src).unwrap())
    }

    #[test]
    fn conjunction_of_fair_coins() {
        let r = run("return flip(0.5) && flip(0.5)").unwrap();
        assert_eq!(r.answers, vec![Answer::Probability(0.25)]);
        assert_eq!(r.paths, 4);
    }

    #[test]
    fn categorical_chain() {
        let r = run("return if flip(0.1) then 0 else if flip(0.2/0.9) then 1 else if flip(0.3/0.7) then 2 else 3")
            .unwrap();
        let Answer::Distribution { distribution, .. } = &r.answers[0] else {
            panic!()
        };
        for (k, p) in [0.1, 0.2, 0.3, 0.4].into_iter().enumerate() {
            assert!((distribution.get(k as u64) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn rejected_mass_is_tracked() {
        let r = run("let x = uniform(0, 4) observe(x < 1) return x").unwrap();
        assert_eq!(r.evidence_probability, 0.25);
        assert_eq!(r.rejected_mass, 0.75);
    }

    #[test]
    fn zero_weight_choices_are_skipped() {
        let r = run("return discrete([0.5, 0, 0.5])").unwrap();
        assert_eq!(r.paths, 2);
    }

    #[test]
    fn cap_is_enforced_before_enumerating() {
        let p = parse("let x = uniform(0, 64) let y = uniform(0, 64) return x + y").unwrap();
        assert_eq!(path_bound(&p), 4096.0);
        assert!(matches!(
            enumerate_with_cap(&p, 1000),
            Err(Error::EnumerationTooLarge { cap: 1000, .. })
        ));
        assert!(enumerate_with_cap(&p, 4096).is_ok());
    }

    #[test]
    fn both_arms_count_toward_the_bound() {
        let p = parse("let x = if flip(0.5) then uniform(0, 3) else flip(0.2) return x").unwrap();
        assert_eq!(path_bound(&p), 12.0);
    }

    #[test]
    fn impossible_evidence() {
        assert!(matches!(
            run("observe(flip(0.5) && false) return 1"),
            Err(Error::UnsatisfiableEvidence)
        ));
    }

    #[test]
    fn urn_draws_in_untaken_arms_still_count() {
        let r = run(
            "let t ~ Beta(1, 1) let x = if flip(0.5) then beta_flip(t) else beta_flip(t) return t",
        )
        .unwrap();
        let Answer::BetaMixture(m) = &r.answers[0] else {
            panic!()
        };
        // one draw lands in each arm; both count, so T grows by two
        assert!(m.keys().all(|&(a, b)| a + b == 4));
        assert!((m.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
