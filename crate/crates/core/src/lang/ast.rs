use std::fmt;

/// 1-based source position.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum ExprKind {
    Int(u64),
    Bool(bool),
    Var(String),
    Flip(f64),
    Discrete(Vec<f64>),
    /// Uniform over `lo..hi`, upper bound excluded.
    Uniform(u64, u64),
    BetaFlip(String),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Array(Vec<Expr>),
    Index(String, Box<Expr>),
    /// Zero-extension to a fixed width.
    Cast(Box<Expr>, usize),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Clone, PartialEq, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// True when the expression is built from literals and operators only,
    /// so it has the same value on every path.
    pub fn is_static(&self) -> bool {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) => true,
            ExprKind::Binary(_, a, b) => a.is_static() && b.is_static(),
            ExprKind::Not(a) => a.is_static(),
            ExprKind::Cast(a, _) => a.is_static(),
            _ => false,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum StmtKind {
    Let(String, Expr),
    LetBeta(String, u64, u64),
    Assign(String, Expr),
    Observe(Expr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    For(String, u64, u64, Vec<Stmt>),
    /// Scoped statement list; produced by loop unrolling.
    Block(Vec<Stmt>),
}

#[derive(Clone, PartialEq, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Program {
    pub stmts: Vec<Stmt>,
    pub returns: Vec<Expr>,
}

fn write_prob(f: &mut fmt::Formatter<'_>, p: f64) -> fmt::Result {
    write!(f, "{p}")
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parent: BinOp, right: bool) -> fmt::Result {
    let wrap = match &e.kind {
        ExprKind::Binary(op, _, _) => {
            op.precedence() < parent.precedence()
                || (right && op.precedence() == parent.precedence())
        }
        ExprKind::If(..) => true,
        _ => false,
    };
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Int(k) => write!(f, "{k}"),
            ExprKind::Bool(b) => write!(f, "{b}"),
            ExprKind::Var(x) => write!(f, "{x}"),
            ExprKind::Flip(p) => {
                write!(f, "flip(")?;
                write_prob(f, *p)?;
                write!(f, ")")
            }
            ExprKind::Discrete(v) => {
                write!(f, "discrete([")?;
                for (i, p) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write_prob(f, *p)?;
                }
                write!(f, "])")
            }
            ExprKind::Uniform(lo, hi) => write!(f, "uniform({lo}, {hi})"),
            ExprKind::BetaFlip(x) => write!(f, "beta_flip({x})"),
            ExprKind::If(c, t, e) => write!(f, "if {c} then {t} else {e}"),
            ExprKind::Array(items) => {
                write!(f, "[")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "]")
            }
            ExprKind::Index(x, i) => write!(f, "{x}[{i}]"),
            ExprKind::Cast(e, w) => write!(f, "int({e}, {w})"),
            ExprKind::Binary(op, a, b) => {
                write_operand(f, a, *op, false)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b, *op, true)
            }
            ExprKind::Not(a) => match a.kind {
                ExprKind::Binary(..) | ExprKind::If(..) => write!(f, "!({a})"),
                _ => write!(f, "!{a}"),
            },
        }
    }
}
