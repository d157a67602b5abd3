//! Static loop unrolling. Every `for` becomes one scoped block per iteration
//! with the loop variable replaced by its literal value.

use crate::lang::ast::{Expr, ExprKind, Program, Stmt, StmtKind};

pub fn unroll(program: &Program) -> Program {
    Program {
        stmts: unroll_stmts(&program.stmts),
        returns: program.returns.clone(),
    }
}

fn unroll_stmts(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts.iter().map(unroll_stmt).collect()
}

fn unroll_stmt(s: &Stmt) -> Stmt {
    let kind = match &s.kind {
        StmtKind::If(c, t, e) => StmtKind::If(c.clone(), unroll_stmts(t), unroll_stmts(e)),
        StmtKind::Block(body) => StmtKind::Block(unroll_stmts(body)),
        StmtKind::For(var, lo, hi, body) => {
            let body = unroll_stmts(body);
            let iterations = (*lo..*hi)
                .map(|k| Stmt {
                    kind: StmtKind::Block(body.iter().map(|b| subst_stmt(b, var, k)).collect()),
                    pos: s.pos,
                })
                .collect();
            StmtKind::Block(iterations)
        }
        other => other.clone(),
    };
    Stmt { kind, pos: s.pos }
}

// Name resolution rejects rebinding a loop variable inside its body, so every
// occurrence of `var` below refers to the loop.
fn subst_stmt(s: &Stmt, var: &str, k: u64) -> Stmt {
    let e = |x: &Expr| subst_expr(x, var, k);
    let all = |v: &[Stmt]| v.iter().map(|x| subst_stmt(x, var, k)).collect();
    let kind = match &s.kind {
        StmtKind::Let(n, x) => StmtKind::Let(n.clone(), e(x)),
        StmtKind::LetBeta(..) => s.kind.clone(),
        StmtKind::Assign(n, x) => StmtKind::Assign(n.clone(), e(x)),
        StmtKind::Observe(x) => StmtKind::Observe(e(x)),
        StmtKind::If(c, t, f) => StmtKind::If(e(c), all(t), all(f)),
        StmtKind::For(v, lo, hi, body) => StmtKind::For(v.clone(), *lo, *hi, all(body)),
        StmtKind::Block(body) => StmtKind::Block(all(body)),
    };
    Stmt { kind, pos: s.pos }
}

fn subst_expr(x: &Expr, var: &str, k: u64) -> Expr {
    let b = |e: &Expr| Box::new(subst_expr(e, var, k));
    let kind = match &x.kind {
        ExprKind::Var(n) if n == var => ExprKind::Int(k),
        ExprKind::If(c, t, e) => ExprKind::If(b(c), b(t), b(e)),
        ExprKind::Array(items) => {
            ExprKind::Array(items.iter().map(|e| subst_expr(e, var, k)).collect())
        }
        ExprKind::Index(n, i) => ExprKind::Index(n.clone(), b(i)),
        ExprKind::Cast(e, w) => ExprKind::Cast(b(e), *w),
        ExprKind::Binary(op, l, r) => ExprKind::Binary(*op, b(l), b(r)),
        ExprKind::Not(e) => ExprKind::Not(b(e)),
        other => other.clone(),
    };
    Expr { kind, pos: x.pos }
}

/// Number of `beta_flip(name)` occurrences in an unrolled program, counting
/// both arms of every conditional.
pub fn count_beta_draws(program: &Program, name: &str) -> u64 {
    fn expr(e: &Expr, name: &str) -> u64 {
        match &e.kind {
            ExprKind::BetaFlip(n) => u64::from(n == name),
            ExprKind::If(c, t, f) => expr(c, name) + expr(t, name) + expr(f, name),
            ExprKind::Array(items) => items.iter().map(|x| expr(x, name)).sum(),
            ExprKind::Index(_, i) => expr(i, name),
            ExprKind::Cast(x, _) | ExprKind::Not(x) => expr(x, name),
            ExprKind::Binary(_, a, b) => expr(a, name) + expr(b, name),
            _ => 0,
        }
    }
    fn stmts(v: &[Stmt], name: &str) -> u64 {
        v.iter()
            .map(|s| match &s.kind {
                StmtKind::Let(_, e) | StmtKind::Assign(_, e) | StmtKind::Observe(e) => {
                    expr(e, name)
                }
                StmtKind::LetBeta(..) => 0,
                StmtKind::If(c, t, f) => expr(c, name) + stmts(t, name) + stmts(f, name),
                StmtKind::For(_, lo, hi, body) => hi.saturating_sub(*lo) * stmts(body, name),
                StmtKind::Block(body) => stmts(body, name),
            })
            .sum()
    }
    stmts(&program.stmts, name) + program.returns.iter().map(|e| expr(e, name)).sum::<u64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse;

    fn contains_for(stmts: &[Stmt]) -> bool {
        stmts.iter().any(|s| match &s.kind {
            StmtKind::For(..) => true,
            StmtKind::If(_, t, e) => contains_for(t) || contains_for(e),
            StmtKind::Block(b) => contains_for(b),
            _ => false,
        })
    }

    #[test]
    fn loops_disappear_and_indices_become_literals() {
        let p = parse("let s = 0 let a = [1, 2, 3] for i in 0..3 { for j in 1..3 { s = s + a[i] * j } } return s")
            .unwrap();
        let u = unroll(&p);
        assert!(!contains_for(&u.stmts));
        let StmtKind::Block(outer) = &u.stmts[2].kind else {
            panic!("loop should become a block");
        };
        assert_eq!(outer.len(), 3);
        let StmtKind::Block(iter2) = &outer[2].kind else {
            panic!()
        };
        let StmtKind::Block(inner) = &iter2[0].kind else {
            panic!()
        };
        let StmtKind::Block(last) = &inner[1].kind else {
            panic!()
        };
        let StmtKind::Assign(_, e) = &last[0].kind else {
            panic!()
        };
        assert_eq!(e.to_string(), "s + a[2] * 2");
    }

    #[test]
    fn empty_range_unrolls_to_nothing() {
        let p = parse("let s = 0 for i in 3..3 { s = s + i } return s").unwrap();
        let StmtKind::Block(b) = &unroll(&p).stmts[1].kind else {
            panic!()
        };
        assert!(b.is_empty());
    }

    #[test]
    fn draw_counts_include_both_arms_and_iterations() {
        let p = parse(
            "let t ~ Beta(1, 1) let u ~ Beta(2, 2)
             for i in 0..4 { let x = if flip(0.5) then beta_flip(t) else beta_flip(t) }
             observe(beta_flip(u))
             return t, u",
        )
        .unwrap();
        assert_eq!(count_beta_draws(&p, "t"), 8);
        assert_eq!(count_beta_draws(&unroll(&p), "t"), 8);
        assert_eq!(count_beta_draws(&p, "u"), 1);
    }
}
