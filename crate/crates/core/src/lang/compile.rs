//! Lowering of unrolled programs to BDD circuits.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::arith::{add, add_wrap, divmod, eq, ge, gt, le, lt, mul, mux_int, ne, sub_wrap};
use crate::bdd::{Manager, NodeRef};
use crate::encoding::{
    bits_for_value, bitwise_int, categ_int, const_int, const_min, uniform_int, ProbInt, ProbVector,
};
use crate::error::{Error, Result};
use crate::inference::Evidence;
use crate::lang::ast::{BinOp, Expr, ExprKind, Pos, Program, Stmt, StmtKind};
use crate::lang::unroll::{count_beta_draws, unroll};

/// Widest integer the language accepts.
pub const MAX_WIDTH: usize = 63;

/// Lowering used for `discrete` literals.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Encoding {
    #[default]
    Bitwise,
    Categ,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Bitwise => "bitwise",
            Encoding::Categ => "categ",
        })
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bitwise" => Ok(Encoding::Bitwise),
            "categ" => Ok(Encoding::Categ),
            other => Err(format!(
                "unknown encoding `{other}` (expected bitwise or categ)"
            )),
        }
    }
}

/// A compiled return expression.
#[derive(Clone, PartialEq, Debug)]
pub enum Output {
    Int(ProbInt),
    Bool(NodeRef),
    Array(Vec<Output>),
    /// Pseudocount `A` and the deterministic total `T`.
    Beta {
        a: ProbInt,
        total: u64,
    },
}

impl Output {
    /// Every BDD root the output depends on.
    pub fn roots(&self, out: &mut Vec<NodeRef>) {
        match self {
            Output::Int(x) | Output::Beta { a: x, .. } => out.extend_from_slice(x.bits()),
            Output::Bool(b) => out.push(*b),
            Output::Array(items) => items.iter().for_each(|o| o.roots(out)),
        }
    }
}

pub struct Compiled {
    pub manager: Manager,
    pub outputs: Vec<Output>,
    pub labels: Vec<String>,
    pub evidence: Evidence,
}

impl Compiled {
    /// Decision nodes reachable from the outputs and the evidence.
    pub fn node_count(&self) -> Result<usize> {
        let mut roots = vec![self.evidence.formula()];
        self.outputs.iter().for_each(|o| o.roots(&mut roots));
        self.manager.node_count(&roots)
    }
}

#[derive(Clone, PartialEq, Debug)]
enum Value {
    Int(ProbInt),
    Bool(NodeRef),
    Array(Vec<Value>),
}

impl Value {
    fn same_shape(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(_), Value::Int(_)) | (Value::Bool(_), Value::Bool(_)) => true,
            (Value::Array(a), Value::Array(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_shape(y))
            }
            _ => false,
        }
    }

    fn into_output(self) -> Output {
        match self {
            Value::Int(x) => Output::Int(x),
            Value::Bool(b) => Output::Bool(b),
            Value::Array(items) => {
                Output::Array(items.into_iter().map(Value::into_output).collect())
            }
        }
    }
}

struct BetaState {
    a: ProbInt,
    total: u64,
}

struct Compiler {
    mgr: Manager,
    encoding: Encoding,
    scopes: Vec<HashMap<String, Value>>,
    path: NodeRef,
    evidence: NodeRef,
    betas: HashMap<String, BetaState>,
    draws: HashMap<String, u64>,
}

fn err_at(pos: Pos, message: impl Into<String>) -> Error {
    Error::Compile {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

/// Compiles a parsed program. Loops are unrolled first; flips are allocated in
/// textual order, both arms of every conditional included.
pub fn compile(program: &Program, encoding: Encoding) -> Result<Compiled> {
    compile_in(Manager::new(), program, encoding)
}

/// Like [`compile`], but builds into `mgr`, which must not hold variables
/// yet. Lets the caller install an interrupt flag first.
pub fn compile_in(mgr: Manager, program: &Program, encoding: Encoding) -> Result<Compiled> {
    debug_assert_eq!(mgr.var_count(), 0, "flip indices must start at zero");
    let program = unroll(program);
    let mut c = Compiler {
        mgr,
        encoding,
        scopes: vec![HashMap::new()],
        path: NodeRef::TRUE,
        evidence: NodeRef::TRUE,
        betas: HashMap::new(),
        draws: HashMap::new(),
    };
    let mut names = Vec::new();
    collect_beta_names(&program.stmts, &mut names);
    for n in names {
        let k = count_beta_draws(&program, &n);
        c.draws.insert(n, k);
    }
    for s in &program.stmts {
        c.stmt(s)?;
    }
    let mut outputs = Vec::new();
    for e in &program.returns {
        if let ExprKind::Var(name) = &e.kind {
            if let Some(b) = c.betas.get(name) {
                outputs.push(Output::Beta {
                    a: b.a.clone(),
                    total: b.total,
                });
                continue;
            }
        }
        outputs.push(c.expr(e)?.into_output());
    }
    Ok(Compiled {
        manager: c.mgr,
        outputs,
        labels: program.returns.iter().map(|e| e.to_string()).collect(),
        evidence: Evidence::from_formula(c.evidence),
    })
}

fn collect_beta_names(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::LetBeta(n, ..) => out.push(n.clone()),
            StmtKind::If(_, t, e) => {
                collect_beta_names(t, out);
                collect_beta_names(e, out);
            }
            StmtKind::For(_, _, _, b) | StmtKind::Block(b) => collect_beta_names(b, out),
            _ => {}
        }
    }
}

fn check_width(x: ProbInt, pos: Pos) -> Result<Value> {
    if x.width() > MAX_WIDTH {
        return Err(err_at(
            pos,
            format!(
                "integer width {} exceeds the {MAX_WIDTH}-bit limit",
                x.width()
            ),
        ));
    }
    Ok(Value::Int(x))
}

impl Compiler {
    fn lookup(&self, name: &str, pos: Pos) -> Result<Value> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .cloned()
            .ok_or_else(|| Error::UnknownIdentifier {
                name: name.to_string(),
                line: pos.line,
                col: pos.col,
            })
    }

    fn as_int(&self, v: Value, pos: Pos) -> Result<ProbInt> {
        match v {
            Value::Int(x) => Ok(x),
            Value::Bool(b) => Ok(ProbInt::from_bits(vec![b])),
            Value::Array(_) => Err(err_at(pos, "expected an integer, found an array")),
        }
    }

    fn as_bool(&self, v: Value, pos: Pos) -> Result<NodeRef> {
        match v {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(err_at(pos, "expected a boolean, found an integer")),
            Value::Array(_) => Err(err_at(pos, "expected a boolean, found an array")),
        }
    }

    fn merge(&mut self, cond: NodeRef, t: Value, e: Value, pos: Pos) -> Result<Value> {
        match (t, e) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(mux_int(&mut self.mgr, cond, &a, &b)?)),
            (Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(self.mgr.ite(cond, a, b)?)),
            (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
                let items = a
                    .into_iter()
                    .zip(b)
                    .map(|(x, y)| self.merge(cond, x, y, pos))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Value::Array(items))
            }
            _ => Err(err_at(pos, "branches produce values of different shapes")),
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<()> {
        self.scopes.push(HashMap::new());
        for s in stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match &s.kind {
            StmtKind::Let(name, e) => {
                let v = self.expr(e)?;
                self.scopes
                    .last_mut()
                    .expect("scope stack is never empty")
                    .insert(name.clone(), v);
            }
            StmtKind::LetBeta(name, alpha, beta) => {
                let draws = self.draws.get(name).copied().unwrap_or(0);
                let width = bits_for_value(alpha + draws);
                self.betas.insert(
                    name.clone(),
                    BetaState {
                        a: const_int(*alpha, width)?,
                        total: alpha + beta,
                    },
                );
            }
            StmtKind::Assign(name, e) => {
                let v = self.expr(e)?;
                let slot = self
                    .scopes
                    .iter_mut()
                    .rev()
                    .find_map(|sc| sc.get_mut(name))
                    .ok_or_else(|| Error::UnknownIdentifier {
                        name: name.clone(),
                        line: s.pos.line,
                        col: s.pos.col,
                    })?;
                if !slot.same_shape(&v) {
                    return Err(err_at(
                        s.pos,
                        format!("assignment changes the type of `{name}`"),
                    ));
                }
                *slot = v;
            }
            StmtKind::Observe(e) => {
                let c = self.expr(e)?;
                let c = self.as_bool(c, e.pos)?;
                let reached = self.mgr.implies(self.path, c)?;
                self.evidence = self.mgr.and(self.evidence, reached)?;
            }
            StmtKind::If(cond, then, otherwise) => {
                let c = self.expr(cond)?;
                let c = self.as_bool(c, cond.pos)?;
                let saved_path = self.path;
                let before = self.scopes.clone();

                self.path = self.mgr.and(saved_path, c)?;
                self.block(then)?;
                let after_then = std::mem::replace(&mut self.scopes, before);

                let nc = self.mgr.not(c)?;
                self.path = self.mgr.and(saved_path, nc)?;
                self.block(otherwise)?;
                self.path = saved_path;

                let after_else = std::mem::take(&mut self.scopes);
                let mut merged = Vec::with_capacity(after_else.len());
                for (t_scope, mut e_scope) in after_then.into_iter().zip(after_else) {
                    for (name, tv) in t_scope {
                        let ev = e_scope
                            .remove(&name)
                            .expect("branches share the outer scopes");
                        let v = if tv == ev {
                            tv
                        } else {
                            self.merge(c, tv, ev, s.pos)?
                        };
                        e_scope.insert(name, v);
                    }
                    merged.push(e_scope);
                }
                self.scopes = merged;
            }
            StmtKind::For(..) => unreachable!("loops are unrolled before lowering"),
            StmtKind::Block(body) => self.block(body)?,
        }
        Ok(())
    }

    fn beta_flip(&mut self, name: &str, pos: Pos) -> Result<NodeRef> {
        let state = self
            .betas
            .get(name)
            .ok_or_else(|| err_at(pos, format!("`{name}` is not a Beta variable")))?;
        let (a, total) = (state.a.clone(), state.total);
        let u = uniform_int(&mut self.mgr, total)?;
        let bit = lt(&mut self.mgr, &u, &a)?;
        let one = const_int(1, a.width())?;
        let inc = add_wrap(&mut self.mgr, &a, &one)?;
        let a = mux_int(&mut self.mgr, bit, &inc, &a)?;
        let state = self.betas.get_mut(name).expect("looked up above");
        state.a = a;
        state.total = total + 1;
        Ok(bit)
    }

    fn expr(&mut self, e: &Expr) -> Result<Value> {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Int(k) => Ok(Value::Int(const_min(*k))),
            ExprKind::Bool(b) => Ok(Value::Bool(NodeRef::constant(*b))),
            ExprKind::Var(name) => self.lookup(name, pos),
            ExprKind::Flip(p) => {
                let v = self
                    .mgr
                    .fresh_var(*p)
                    .map_err(|err| err_at(pos, err.to_string()))?;
                Ok(Value::Bool(v))
            }
            ExprKind::Discrete(probs) => {
                let v =
                    ProbVector::new(probs.clone()).map_err(|err| err_at(pos, err.to_string()))?;
                let x = match self.encoding {
                    Encoding::Bitwise => bitwise_int(&mut self.mgr, &v)?,
                    Encoding::Categ => categ_int(&mut self.mgr, &v)?,
                };
                check_width(x, pos)
            }
            ExprKind::Uniform(lo, hi) => {
                if hi <= lo {
                    return Err(err_at(
                        pos,
                        format!("uniform({lo}, {hi}) has an empty range"),
                    ));
                }
                let u = uniform_int(&mut self.mgr, hi - lo)?;
                let x = if *lo == 0 {
                    u
                } else {
                    add(&mut self.mgr, &u, &const_min(*lo))?
                };
                check_width(x, pos)
            }
            ExprKind::BetaFlip(name) => Ok(Value::Bool(self.beta_flip(name, pos)?)),
            ExprKind::If(c, t, f) => {
                let cv = self.expr(c)?;
                let cond = self.as_bool(cv, c.pos)?;
                let tv = self.expr(t)?;
                let fv = self.expr(f)?;
                self.merge(cond, tv, fv, pos)
            }
            ExprKind::Array(items) => Ok(Value::Array(
                items
                    .iter()
                    .map(|x| self.expr(x))
                    .collect::<Result<Vec<_>>>()?,
            )),
            ExprKind::Index(name, idx) => {
                if !idx.is_static() {
                    return Err(err_at(
                        idx.pos,
                        "array index must be a compile-time constant",
                    ));
                }
                let iv = self.expr(idx)?;
                let i = self
                    .as_int(iv, idx.pos)?
                    .as_constant()
                    .expect("static expressions fold to constants");
                match self.lookup(name, pos)? {
                    Value::Array(items) => items.get(i as usize).cloned().ok_or_else(|| {
                        err_at(
                            pos,
                            format!(
                                "index {i} is out of bounds for `{name}` of length {}",
                                items.len()
                            ),
                        )
                    }),
                    _ => Err(err_at(pos, format!("`{name}` is not an array"))),
                }
            }
            ExprKind::Cast(x, w) => {
                let v = self.expr(x)?;
                let v = self.as_int(v, x.pos)?;
                if *w == 0 || *w > MAX_WIDTH {
                    return Err(err_at(
                        pos,
                        format!("cast width {w} is outside 1..={MAX_WIDTH}"),
                    ));
                }
                if v.width() > *w {
                    return Err(err_at(
                        pos,
                        format!("cast to {w} bits would truncate a {}-bit value", v.width()),
                    ));
                }
                Ok(Value::Int(v.zero_extend(*w)))
            }
            ExprKind::Not(x) => {
                let v = self.expr(x)?;
                let b = self.as_bool(v, x.pos)?;
                Ok(Value::Bool(self.mgr.not(b)?))
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.expr(l)?;
                let rv = self.expr(r)?;
                self.binary(*op, lv, rv, l.pos, r.pos, pos)
            }
        }
    }

    fn binary(
        &mut self,
        op: BinOp,
        lv: Value,
        rv: Value,
        lpos: Pos,
        rpos: Pos,
        pos: Pos,
    ) -> Result<Value> {
        if let (BinOp::And | BinOp::Or, ..)
        | (BinOp::Eq | BinOp::Ne, Value::Bool(_), Value::Bool(_)) = (op, &lv, &rv)
        {
            let a = self.as_bool(lv, lpos)?;
            let b = self.as_bool(rv, rpos)?;
            let m = &mut self.mgr;
            let f = match op {
                BinOp::And => m.and(a, b)?,
                BinOp::Or => m.or(a, b)?,
                BinOp::Eq => m.xnor(a, b)?,
                _ => m.xor(a, b)?,
            };
            return Ok(Value::Bool(f));
        }
        let a = self.as_int(lv, lpos)?;
        let b = self.as_int(rv, rpos)?;
        let m = &mut self.mgr;
        let v = match op {
            BinOp::Add => return check_width(add(m, &a, &b)?, pos),
            BinOp::Sub => return check_width(sub_wrap(m, &a, &b)?, pos),
            BinOp::Mul => {
                if a.width() + b.width() > MAX_WIDTH {
                    return Err(err_at(
                        pos,
                        format!(
                            "integer width {} exceeds the {MAX_WIDTH}-bit limit",
                            a.width() + b.width()
                        ),
                    ));
                }
                return Ok(Value::Int(mul(m, &a, &b)?));
            }
            BinOp::Div => return Ok(Value::Int(divmod(m, &a, &b)?.0)),
            BinOp::Mod => return Ok(Value::Int(divmod(m, &a, &b)?.1)),
            BinOp::Eq => eq(m, &a, &b)?,
            BinOp::Ne => ne(m, &a, &b)?,
            BinOp::Lt => lt(m, &a, &b)?,
            BinOp::Le => le(m, &a, &b)?,
            BinOp::Gt => gt(m, &a, &b)?,
            BinOp::Ge => ge(m, &a, &b)?,
            BinOp::And | BinOp::Or => unreachable!("handled above"),
        };
        Ok(Value::Bool(v))
    }
}
