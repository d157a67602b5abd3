use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lang::ast::{BinOp, Expr, ExprKind, Pos, Program, Stmt, StmtKind};
use crate::lang::lexer::{tokenize, Tok, Token};

const RESERVED: &[&str] = &[
    "let",
    "return",
    "observe",
    "if",
    "then",
    "else",
    "for",
    "in",
    "flip",
    "discrete",
    "uniform",
    "beta_flip",
    "Beta",
    "int",
    "true",
    "false",
];

/// Parses and name-checks a program.
pub fn parse(source: &str) -> Result<Program> {
    let tokens = tokenize(source)?;
    let program = Parser { tokens, at: 0 }.program()?;
    resolve(&program)?;
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.at + k).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let p = self.peek().pos;
        Err(Error::Syntax {
            line: p.line,
            col: p.col,
            message: message.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Int(k) => format!("`{k}`"),
            Tok::Real(r) => format!("`{r}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(t) if t == kw)
    }

    fn expect_sym(&mut self, s: &str) -> Result<Pos> {
        if self.is_sym(s) {
            Ok(self.bump().pos)
        } else {
            self.error(format!(
                "expected `{s}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Pos> {
        if self.is_kw(kw) {
            Ok(self.bump().pos)
        } else {
            self.error(format!(
                "expected `{kw}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos)> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            other => self.error(format!(
                "expected an identifier, found {}",
                Self::describe(other)
            )),
        }
    }

    fn int(&mut self) -> Result<u64> {
        match self.peek().tok {
            Tok::Int(k) => {
                self.bump();
                Ok(k)
            }
            ref other => self.error(format!(
                "expected an integer, found {}",
                Self::describe(other)
            )),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek().tok {
            Tok::Int(k) => {
                self.bump();
                Ok(k as f64)
            }
            Tok::Real(r) => {
                self.bump();
                Ok(r)
            }
            ref other => self.error(format!(
                "expected a probability, found {}",
                Self::describe(other)
            )),
        }
    }

    /// `num ("/" num)*`, evaluated left to right.
    fn probability(&mut self) -> Result<f64> {
        let mut p = self.number()?;
        while self.is_sym("/") {
            self.bump();
            let pos = self.peek().pos;
            let d = self.number()?;
            if d == 0.0 {
                return Err(Error::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: "division by zero in probability literal".into(),
                });
            }
            p /= d;
        }
        Ok(p)
    }

    fn program(mut self) -> Result<Program> {
        let mut stmts = Vec::new();
        while !self.is_kw("return") {
            if self.peek().tok == Tok::Eof {
                return self.error("expected `return` before end of input");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        let mut returns = vec![self.expr()?];
        while self.is_sym(",") {
            self.bump();
            returns.push(self.expr()?);
        }
        if self.peek().tok != Tok::Eof {
            return self.error(format!(
                "expected end of input after return, found {}",
                Self::describe(&self.peek().tok)
            ));
        }
        Ok(Program { stmts, returns })
    }

    fn block(&mut self) -> Result<Vec<Stmt>> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.is_sym("}") {
            if self.peek().tok == Tok::Eof {
                return self.error("unclosed block");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let pos = self.peek().pos;
        let kind = if self.is_kw("let") {
            self.bump();
            let (name, _) = self.ident()?;
            if self.is_sym("~") {
                self.bump();
                self.expect_kw("Beta")?;
                self.expect_sym("(")?;
                let a = self.int()?;
                self.expect_sym(",")?;
                let b = self.int()?;
                self.expect_sym(")")?;
                StmtKind::LetBeta(name, a, b)
            } else {
                self.expect_sym("=")?;
                StmtKind::Let(name, self.expr()?)
            }
        } else if self.is_kw("observe") {
            self.bump();
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            StmtKind::Observe(e)
        } else if self.is_kw("if") {
            return self.if_stmt();
        } else if self.is_kw("for") {
            self.bump();
            let (var, _) = self.ident()?;
            self.expect_kw("in")?;
            let lo = self.int()?;
            self.expect_sym("..")?;
            let hi = self.int()?;
            StmtKind::For(var, lo, hi, self.block()?)
        } else if matches!(self.peek_at(1), Tok::Sym("=")) {
            let (name, _) = self.ident()?;
            self.bump();
            StmtKind::Assign(name, self.expr()?)
        } else {
            return self.error(format!(
                "expected a statement, found {}",
                Self::describe(&self.peek().tok)
            ));
        };
        Ok(Stmt { kind, pos })
    }

    fn if_stmt(&mut self) -> Result<Stmt> {
        let pos = self.expect_kw("if")?;
        let cond = self.expr()?;
        let then = self.block()?;
        let otherwise = if self.is_kw("else") {
            self.bump();
            if self.is_kw("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If(cond, then, otherwise),
            pos,
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let op = match &self.peek().tok {
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("%") => BinOp::Mod,
            _ => return None,
        };
        Some(op)
    }

    /// Precedence climbing; comparisons do not chain.
    fn binary(&mut self, min: u8) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min {
                break;
            }
            let pos = self.bump().pos;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
            if prec == 3 && self.binop().is_some_and(|o| o.precedence() == 3) {
                return self.error("comparison operators do not chain; add parentheses");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.is_sym("!") {
            let pos = self.bump().pos;
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(e)), pos));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let Token { tok, pos } = self.peek().clone();
        let kind = match tok {
            Tok::Int(k) => {
                self.bump();
                ExprKind::Int(k)
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            Tok::Sym("[") => {
                self.bump();
                let mut items = vec![self.expr()?];
                while self.is_sym(",") {
                    self.bump();
                    items.push(self.expr()?);
                }
                self.expect_sym("]")?;
                ExprKind::Array(items)
            }
            Tok::Ident(ref s) => match s.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Bool(s == "true")
                }
                "flip" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let p = self.probability()?;
                    self.expect_sym(")")?;
                    ExprKind::Flip(p)
                }
                "discrete" => {
                    self.bump();
                    self.expect_sym("(")?;
                    self.expect_sym("[")?;
                    let mut v = vec![self.probability()?];
                    while self.is_sym(",") {
                        self.bump();
                        v.push(self.probability()?);
                    }
                    self.expect_sym("]")?;
                    self.expect_sym(")")?;
                    ExprKind::Discrete(v)
                }
                "uniform" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let lo = self.int()?;
                    self.expect_sym(",")?;
                    let hi = self.int()?;
                    self.expect_sym(")")?;
                    ExprKind::Uniform(lo, hi)
                }
                "beta_flip" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let (name, _) = self.ident()?;
                    self.expect_sym(")")?;
                    ExprKind::BetaFlip(name)
                }
                "int" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(",")?;
                    let w = self.int()?;
                    self.expect_sym(")")?;
                    ExprKind::Cast(Box::new(e), w as usize)
                }
                "if" => {
                    self.bump();
                    let c = self.expr()?;
                    self.expect_kw("then")?;
                    let t = self.expr()?;
                    self.expect_kw("else")?;
                    let e = self.expr()?;
                    ExprKind::If(Box::new(c), Box::new(t), Box::new(e))
                }
                _ => {
                    let (name, _) = self.ident()?;
                    if self.is_sym("[") {
                        self.bump();
                        let i = self.expr()?;
                        self.expect_sym("]")?;
                        ExprKind::Index(name, Box::new(i))
                    } else {
                        ExprKind::Var(name)
                    }
                }
            },
            ref other => {
                return self.error(format!(
                    "expected an expression, found {}",
                    Self::describe(other)
                ))
            }
        };
        Ok(Expr::new(kind, pos))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Binding {
    Value,
    Beta,
    LoopVar,
}

struct Resolver {
    scopes: Vec<HashMap<String, Binding>>,
}

fn compile_error(pos: Pos, message: impl Into<String>) -> Error {
    Error::Compile {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn unknown(name: &str, pos: Pos) -> Error {
    Error::UnknownIdentifier {
        name: name.to_string(),
        line: pos.line,
        col: pos.col,
    }
}

impl Resolver {
    fn lookup(&self, name: &str) -> Option<Binding> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn define(&mut self, name: &str, b: Binding, pos: Pos) -> Result<()> {
        match self.lookup(name) {
            Some(Binding::Beta) => {
                return Err(compile_error(
                    pos,
                    format!("`{name}` is already a Beta variable"),
                ))
            }
            Some(Binding::LoopVar) => {
                return Err(compile_error(
                    pos,
                    format!("`{name}` shadows a loop variable"),
                ))
            }
            Some(Binding::Value) if b == Binding::Beta => {
                return Err(compile_error(pos, format!("`{name}` is already defined")))
            }
            _ => {}
        }
        self.scopes
            .last_mut()
            .expect("scope stack is never empty")
            .insert(name.to_string(), b);
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt], extra: Option<(&str, Pos)>) -> Result<()> {
        self.scopes.push(HashMap::new());
        if let Some((var, pos)) = extra {
            self.define(var, Binding::LoopVar, pos)?;
        }
        for s in stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match &s.kind {
            StmtKind::Let(name, e) => {
                self.expr(e)?;
                self.define(name, Binding::Value, s.pos)
            }
            StmtKind::LetBeta(name, a, b) => {
                if self.scopes.len() > 1 {
                    return Err(compile_error(
                        s.pos,
                        "Beta variables must be declared at top level",
                    ));
                }
                if *a == 0 || *b == 0 {
                    return Err(compile_error(
                        s.pos,
                        "Beta parameters must be positive integers",
                    ));
                }
                self.define(name, Binding::Beta, s.pos)
            }
            StmtKind::Assign(name, e) => {
                self.expr(e)?;
                match self.lookup(name) {
                    None => Err(unknown(name, s.pos)),
                    Some(Binding::Value) => Ok(()),
                    Some(Binding::Beta) => Err(compile_error(
                        s.pos,
                        format!("cannot assign to Beta variable `{name}`"),
                    )),
                    Some(Binding::LoopVar) => Err(compile_error(
                        s.pos,
                        format!("cannot assign to loop variable `{name}`"),
                    )),
                }
            }
            StmtKind::Observe(e) => self.expr(e),
            StmtKind::If(c, t, e) => {
                self.expr(c)?;
                self.block(t, None)?;
                self.block(e, None)
            }
            StmtKind::For(var, lo, hi, body) => {
                if lo > hi {
                    return Err(compile_error(
                        s.pos,
                        format!("empty range {lo}..{hi} is reversed"),
                    ));
                }
                self.block(body, Some((var, s.pos)))
            }
            StmtKind::Block(body) => self.block(body, None),
        }
    }

    fn expr(&self, e: &Expr) -> Result<()> {
        match &e.kind {
            ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Flip(_)
            | ExprKind::Discrete(_)
            | ExprKind::Uniform(..) => Ok(()),
            ExprKind::Var(name) => match self.lookup(name) {
                None => Err(unknown(name, e.pos)),
                Some(Binding::Beta) => Err(compile_error(
                    e.pos,
                    format!(
                        "Beta variable `{name}` can only be used through beta_flip or returned"
                    ),
                )),
                Some(_) => Ok(()),
            },
            ExprKind::BetaFlip(name) => match self.lookup(name) {
                None => Err(unknown(name, e.pos)),
                Some(Binding::Beta) => Ok(()),
                Some(_) => Err(compile_error(
                    e.pos,
                    format!("`{name}` is not a Beta variable"),
                )),
            },
            ExprKind::Index(name, i) => {
                match self.lookup(name) {
                    None => return Err(unknown(name, e.pos)),
                    Some(Binding::Value) => {}
                    Some(_) => {
                        return Err(compile_error(e.pos, format!("`{name}` is not an array")))
                    }
                }
                self.expr(i)?;
                if !self.is_static_index(i) {
                    return Err(compile_error(
                        i.pos,
                        "array index must be a compile-time constant",
                    ));
                }
                Ok(())
            }
            ExprKind::If(c, t, f) => {
                self.expr(c)?;
                self.expr(t)?;
                self.expr(f)
            }
            ExprKind::Array(items) => items.iter().try_for_each(|x| self.expr(x)),
            ExprKind::Cast(x, _) | ExprKind::Not(x) => self.expr(x),
            ExprKind::Binary(_, a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
        }
    }

    /// Literals, loop variables and operators over them.
    fn is_static_index(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Int(_) => true,
            ExprKind::Var(name) => self.lookup(name) == Some(Binding::LoopVar),
            ExprKind::Binary(_, a, b) => self.is_static_index(a) && self.is_static_index(b),
            ExprKind::Cast(a, _) => self.is_static_index(a),
            _ => false,
        }
    }
}

fn resolve(program: &Program) -> Result<()> {
    let mut r = Resolver {
        scopes: vec![HashMap::new()],
    };
    for s in &program.stmts {
        r.stmt(s)?;
    }
    for e in &program.returns {
        // a bare Beta variable is a valid query
        if let ExprKind::Var(name) = &e.kind {
            if r.lookup(name) == Some(Binding::Beta) {
                continue;
            }
        }
        r.expr(e)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_program() {
        let p = parse("return 0").unwrap();
        assert!(p.stmts.is_empty());
        assert_eq!(p.returns[0].kind, ExprKind::Int(0));
    }

    #[test]
    fn if_else_chain_has_four_branches() {
        let p = parse(
            "return if flip(0.1) then 0 else if flip(0.2/0.9) then 1 else if flip(0.3/0.7) then 2 else 3",
        )
        .unwrap();
        let mut e = &p.returns[0];
        let mut leaves = Vec::new();
        let mut flips = Vec::new();
        while let ExprKind::If(c, t, f) = &e.kind {
            if let ExprKind::Flip(p) = c.kind {
                flips.push(p);
            }
            leaves.push(t.kind.clone());
            e = f;
        }
        leaves.push(e.kind.clone());
        assert_eq!(
            leaves,
            vec![
                ExprKind::Int(0),
                ExprKind::Int(1),
                ExprKind::Int(2),
                ExprKind::Int(3)
            ]
        );
        assert_eq!(flips.len(), 3);
        assert!((flips[1] - 0.2 / 0.9).abs() < 1e-15);
        assert!((flips[2] - 0.3 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn precedence() {
        let p = parse("let a = 1 return a + 2 * 3 < 7 && !true || false").unwrap();
        assert_eq!(p.returns[0].to_string(), "a + 2 * 3 < 7 && !true || false");
        let ExprKind::Binary(BinOp::Or, lhs, _) = &p.returns[0].kind else {
            panic!("top operator should be ||");
        };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::And, _, _)));
        let p = parse("return 7 - 2 - 1").unwrap();
        assert_eq!(p.returns[0].to_string(), "7 - 2 - 1");
        let p = parse("return 7 - (2 - 1)").unwrap();
        assert_eq!(p.returns[0].to_string(), "7 - (2 - 1)");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(
            parse("observe("),
            Err(Error::Syntax {
                line: 1,
                col: 9,
                ..
            })
        ));
        assert!(matches!(parse("let x = 1"), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("return 1 < 2 < 3"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse("let let = 1 return 0"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse("return flip(1/0)"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn name_resolution() {
        assert_eq!(
            parse("let x = 1\nreturn y"),
            Err(Error::UnknownIdentifier {
                name: "y".into(),
                line: 2,
                col: 8
            })
        );
        assert!(matches!(
            parse("if true { let z = 1 } return z"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("x = 1 return 0"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(parse("let x = 0 if flip(0.5) { x = 1 } return x").is_ok());
    }

    #[test]
    fn beta_rules() {
        assert!(parse("let t ~ Beta(1, 2) let x = beta_flip(t) observe(x) return t").is_ok());
        assert!(matches!(
            parse("let t ~ Beta(0, 2) return t"),
            Err(Error::Compile { .. })
        ));
        assert!(matches!(
            parse("let t ~ Beta(1, 2) return t + 1"),
            Err(Error::Compile { .. })
        ));
        assert!(matches!(
            parse("let t = 1 return beta_flip(t)"),
            Err(Error::Compile { .. })
        ));
        assert!(matches!(
            parse("if true { let t ~ Beta(1, 1) } return 0"),
            Err(Error::Compile { .. })
        ));
    }

    #[test]
    fn indices_must_be_static() {
        assert!(parse("let a = [1, 2] for i in 0..2 { let b = a[i] } return a[1]").is_ok());
        assert!(matches!(
            parse("let a = [1, 2] let k = 1 return a[k]"),
            Err(Error::Compile { .. })
        ));
        assert!(matches!(
            parse("for i in 0..2 { i = 1 } return 0"),
            Err(Error::Compile { .. })
        ));
        assert!(matches!(
            parse("for i in 0..2 { let i = 1 } return 0"),
            Err(Error::Compile { .. })
        ));
    }

    #[test]
    fn statements() {
        let src = "
            // comment
            let t ~ Beta(1, 1)
            let x = discrete([0.25, 0.25, 1/2])
            for i in 0..3 { if x == i { x = x + 1 } else if flip(0.5) { observe(x < 4) } }
            let xs = [x, 1]
            return x, int(x, 8), xs[0]
        ";
        let p = parse(src).unwrap();
        assert_eq!(p.stmts.len(), 4);
        assert_eq!(p.returns.len(), 3);
        assert_eq!(p.returns[1].to_string(), "int(x, 8)");
        assert!(matches!(p.stmts[2].kind, StmtKind::For(_, 0, 3, _)));
    }
}
