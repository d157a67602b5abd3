//! Random small programs for differential testing of the compiler against
//! the enumeration oracle.
//!
//! Generated programs are always well formed. Every random choice point is
//! charged against a path budget, counting both arms of each conditional and
//! every loop iteration, so the oracle stays cheap.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{compile, parse, query, Encoding};
use crate::oracle::enumerate;

/// Upper bound on the oracle's path count for generated programs.
pub const PATH_BUDGET: f64 = 4096.0;

const PROBS: &[&str] = &["0.1", "0.25", "0.5", "0.7", "0.9", "1/3", "2/3"];
const CMP: &[&str] = &["<", "<=", ">", ">=", "==", "!="];
const ARITH: &[&str] = &["+", "+", "-", "*", "/", "%"];

pub fn random_program<R: Rng>(rng: &mut R) -> String {
    let mut g = Gen {
        rng,
        ints: Vec::new(),
        bools: Vec::new(),
        arrays: Vec::new(),
        loops: Vec::new(),
        betas: Vec::new(),
        budget: PATH_BUDGET.log2(),
        multiplier: 1.0,
        fresh: 0,
        out: String::new(),
    };
    g.program();
    g.out
}

struct Gen<'a, R> {
    rng: &'a mut R,
    ints: Vec<String>,
    bools: Vec<String>,
    arrays: Vec<(String, u64)>,
    loops: Vec<(String, u64)>,
    betas: Vec<String>,
    /// Remaining log2 path budget.
    budget: f64,
    /// Product of the trip counts of the enclosing loops.
    multiplier: f64,
    fresh: usize,
    out: String,
}

impl<R: Rng> Gen<'_, R> {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// Reserves a choice with `factor` outcomes; false when it would exceed
    /// the budget.
    fn afford(&mut self, factor: u64) -> bool {
        let cost = self.multiplier * (factor as f64).log2();
        if cost <= self.budget {
            self.budget -= cost;
            true
        } else {
            false
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        self.out.push_str(&"    ".repeat(depth));
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn program(&mut self) {
        if self.rng.gen_bool(0.3) {
            let t = self.name("t");
            let (a, b) = (self.rng.gen_range(1..4), self.rng.gen_range(1..4));
            self.line(0, &format!("let {t} ~ Beta({a}, {b})"));
            self.betas.push(t);
        }
        for _ in 0..self.rng.gen_range(1..6) {
            self.stmt(0);
        }
        let n = self.rng.gen_range(1..4);
        let returns: Vec<String> = (0..n).map(|_| self.ret()).collect();
        self.line(0, &format!("return {}", returns.join(", ")));
    }

    fn ret(&mut self) -> String {
        let mut pool: Vec<String> = self.ints.clone();
        pool.extend(self.bools.iter().cloned());
        pool.extend(self.arrays.iter().map(|a| a.0.clone()));
        pool.extend(self.betas.iter().cloned());
        match pool.choose(self.rng) {
            Some(v) if self.rng.gen_bool(0.8) => v.clone(),
            _ if self.rng.gen_bool(0.5) => self.int_expr(1),
            _ => self.bool_expr(1),
        }
    }

    fn block(&mut self, depth: usize) {
        let saved = (self.ints.len(), self.bools.len(), self.arrays.len());
        for _ in 0..self.rng.gen_range(1..3) {
            self.stmt(depth);
        }
        self.ints.truncate(saved.0);
        self.bools.truncate(saved.1);
        self.arrays.truncate(saved.2);
    }

    fn stmt(&mut self, depth: usize) {
        match self.rng.gen_range(0..9) {
            0 | 1 => {
                let x = self.name("x");
                let e = self.int_expr(2);
                self.line(depth, &format!("let {x} = {e}"));
                self.ints.push(x);
            }
            2 => {
                let b = self.name("b");
                let e = self.bool_expr(2);
                self.line(depth, &format!("let {b} = {e}"));
                self.bools.push(b);
            }
            3 if !self.ints.is_empty() => {
                let x = self.ints.choose(self.rng).unwrap().clone();
                let e = self.int_expr(1);
                let op = ["+", "-", "+"].choose(self.rng).unwrap();
                self.line(depth, &format!("{x} = {x} {op} {e}"));
            }
            4 if !self.bools.is_empty() => {
                let b = self.bools.choose(self.rng).unwrap().clone();
                let e = self.bool_expr(1);
                self.line(depth, &format!("{b} = {e}"));
            }
            5 => {
                let e = self.bool_expr(1);
                self.line(depth, &format!("observe({e})"));
            }
            6 if depth < 2 => {
                let c = self.bool_expr(1);
                self.line(depth, &format!("if {c} {{"));
                self.block(depth + 1);
                if self.rng.gen_bool(0.6) {
                    self.line(depth, "} else {");
                    self.block(depth + 1);
                }
                self.line(depth, "}");
            }
            7 if depth < 2 => {
                let k = self.name("k");
                let hi = self.rng.gen_range(1..4);
                self.line(depth, &format!("for {k} in 0..{hi} {{"));
                self.loops.push((k, hi));
                self.multiplier *= hi as f64;
                self.block(depth + 1);
                self.multiplier /= hi as f64;
                self.loops.pop();
                self.line(depth, "}");
            }
            8 => {
                let a = self.name("a");
                let len = self.rng.gen_range(2..4);
                let items: Vec<String> = (0..len).map(|_| self.int_expr(1)).collect();
                self.line(depth, &format!("let {a} = [{}]", items.join(", ")));
                self.arrays.push((a, len));
            }
            _ => {
                let e = self.int_expr(1);
                let x = self.name("x");
                self.line(depth, &format!("let {x} = {e}"));
                self.ints.push(x);
            }
        }
    }

    fn int_atom(&mut self) -> String {
        loop {
            match self.rng.gen_range(0..7) {
                0 => return self.rng.gen_range(0..10u64).to_string(),
                1 if !self.ints.is_empty() => return self.ints.choose(self.rng).unwrap().clone(),
                2 if !self.loops.is_empty() => {
                    return self.loops.choose(self.rng).unwrap().0.clone()
                }
                3 => {
                    let lo = self.rng.gen_range(0..3u64);
                    let hi = lo + self.rng.gen_range(1..6u64);
                    if self.afford(hi - lo) {
                        return format!("uniform({lo}, {hi})");
                    }
                }
                4 => {
                    let n = self.rng.gen_range(2..5);
                    let mut w: Vec<u32> = (0..n).map(|_| self.rng.gen_range(0..10)).collect();
                    if w.iter().all(|&x| x == 0) {
                        w[0] = 1;
                    }
                    let positive = w.iter().filter(|&&x| x > 0).count() as u64;
                    if self.afford(positive) {
                        let items: Vec<String> = w.iter().map(|x| format!("0.{x}")).collect();
                        return format!("discrete([{}])", items.join(", "));
                    }
                }
                5 => {
                    if let Some((a, len)) = self.arrays.choose(self.rng).cloned() {
                        let fitting: Vec<String> = self
                            .loops
                            .iter()
                            .filter(|l| l.1 <= len)
                            .map(|l| l.0.clone())
                            .collect();
                        let index = match fitting.choose(self.rng) {
                            Some(k) if self.rng.gen_bool(0.5) => k.clone(),
                            _ => self.rng.gen_range(0..len).to_string(),
                        };
                        return format!("{a}[{index}]");
                    }
                }
                _ => return self.rng.gen_range(0..4u64).to_string(),
            }
        }
    }

    fn int_expr(&mut self, depth: usize) -> String {
        if depth == 0 {
            return self.int_atom();
        }
        match self.rng.gen_range(0..6) {
            0 | 1 => {
                let op = *ARITH.choose(self.rng).unwrap();
                let (l, r) = (self.int_expr(depth - 1), self.int_expr(depth - 1));
                format!("({l} {op} {r})")
            }
            2 => {
                let c = self.bool_expr(depth - 1);
                let (t, e) = (self.int_expr(depth - 1), self.int_expr(depth - 1));
                format!("(if {c} then {t} else {e})")
            }
            3 if self.rng.gen_bool(0.3) => {
                let e = self.int_expr(depth - 1);
                format!("int({e}, 12)")
            }
            3 => {
                let b = self.bool_expr(0);
                let e = self.int_expr(depth - 1);
                format!("({e} + {b})")
            }
            _ => self.int_atom(),
        }
    }

    fn bool_atom(&mut self) -> String {
        loop {
            match self.rng.gen_range(0..6) {
                0 | 1 => {
                    if self.afford(2) {
                        return format!("flip({})", PROBS.choose(self.rng).unwrap());
                    }
                }
                2 if !self.bools.is_empty() => return self.bools.choose(self.rng).unwrap().clone(),
                3 if !self.betas.is_empty() => {
                    if self.afford(2) {
                        let t = self.betas.choose(self.rng).unwrap().clone();
                        return format!("beta_flip({t})");
                    }
                }
                4 => {
                    let op = *CMP.choose(self.rng).unwrap();
                    let (l, r) = (self.int_atom(), self.int_atom());
                    return format!("({l} {op} {r})");
                }
                5 if self.rng.gen_bool(0.2) => {
                    return ["true", "false"].choose(self.rng).unwrap().to_string()
                }
                _ => {}
            }
            // the budget can run dry; a comparison of literals always fits
            if self.budget < self.multiplier {
                let op = *CMP.choose(self.rng).unwrap();
                let (l, r) = (self.rng.gen_range(0..4), self.rng.gen_range(0..4));
                return format!("({l} {op} {r})");
            }
        }
    }

    fn bool_expr(&mut self, depth: usize) -> String {
        if depth == 0 {
            return self.bool_atom();
        }
        match self.rng.gen_range(0..6) {
            0 => {
                let op = ["&&", "||"].choose(self.rng).unwrap();
                let (l, r) = (self.bool_expr(depth - 1), self.bool_expr(depth - 1));
                format!("({l} {op} {r})")
            }
            1 => format!("!{}", self.bool_expr(depth - 1)),
            2 => {
                let op = *CMP.choose(self.rng).unwrap();
                let (l, r) = (self.int_expr(depth - 1), self.int_expr(depth - 1));
                format!("({l} {op} {r})")
            }
            3 => {
                let c = self.bool_expr(depth - 1);
                let (t, e) = (self.bool_expr(depth - 1), self.bool_expr(depth - 1));
                format!("(if {c} then {t} else {e})")
            }
            _ => self.bool_atom(),
        }
    }
}

/// Runs `source` through the compiler under `encoding` and through the
/// oracle. Returns the largest deviation between the two, or a description
/// of the disagreement. Programs that both sides reject with the same error
/// kind agree with deviation zero.
pub fn differential(source: &str, encoding: Encoding) -> Result<f64, String> {
    let program = parse(source).map_err(|e| format!("generated program does not parse: {e}"))?;
    let engine = compile(&program, encoding).and_then(|mut c| {
        let answers = query(&mut c)?;
        let z = c.evidence.probability(&c.manager)?;
        Ok((c.labels, answers, z))
    });
    let oracle = enumerate(&program);
    match (engine, oracle) {
        (Ok((labels, answers, z)), Ok(o)) => {
            if labels != o.labels {
                return Err(format!("labels differ: {labels:?} vs {:?}", o.labels));
            }
            let mut worst = (z - o.evidence_probability).abs();
            for (a, b) in answers.iter().zip(&o.answers) {
                let d = a
                    .max_abs_diff(b)
                    .ok_or_else(|| format!("answer shapes differ: {a:?} vs {b:?}"))?;
                worst = worst.max(d);
            }
            Ok(worst)
        }
        (Err(a), Err(b)) if a.kind() == b.kind() => Ok(0.0),
        (Err(a), Err(b)) => Err(format!("engine failed with `{a}`, oracle with `{b}`")),
        (Err(a), Ok(_)) => Err(format!("engine failed with `{a}`, oracle succeeded")),
        (Ok(_), Err(b)) => Err(format!("oracle failed with `{b}`, engine succeeded")),
    }
}
