//! Reduced ordered binary decision diagrams over weighted variables.
//!
//! A [`Manager`] owns every node. Nodes are hash-consed through a unique
//! table keyed on `(var, lo, hi)`, so two handles are equal exactly when they
//! denote the same Boolean function. Variables are ordered by allocation: the
//! first variable handed out by [`Manager::fresh_var`] sits at the top of
//! every diagram. Each variable carries the probability of its positive
//! literal, and [`Manager::wmc`] computes weighted model counts in one
//! bottom-up pass.
//!
//! There are no complement edges, so [`Manager::node_count`] reports the
//! textbook node count of a diagram.

use std::collections::hash_map::Entry;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(1);

const FALSE_ID: u32 = 0;
const TRUE_ID: u32 = 1;
/// Level used for the terminals; below every real variable.
const TERMINAL_LEVEL: u32 = u32::MAX;
/// The interrupt flag is polled once per this many new nodes.
const POLL_MASK: usize = 0x3ff;

/// Handle to a node of a [`Manager`], or to one of the two terminals.
///
/// Terminals are shared by all managers. Decision nodes remember the manager
/// that created them and are rejected by any other manager.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct NodeRef {
    manager: u32,
    id: u32,
}

impl NodeRef {
    pub const FALSE: NodeRef = NodeRef {
        manager: 0,
        id: FALSE_ID,
    };
    pub const TRUE: NodeRef = NodeRef {
        manager: 0,
        id: TRUE_ID,
    };

    pub fn constant(value: bool) -> NodeRef {
        if value {
            NodeRef::TRUE
        } else {
            NodeRef::FALSE
        }
    }

    pub fn is_terminal(self) -> bool {
        self.id <= TRUE_ID
    }

    pub fn is_true(self) -> bool {
        self.id == TRUE_ID
    }

    pub fn is_false(self) -> bool {
        self.id == FALSE_ID
    }

    /// The terminal value, or `None` for a decision node.
    pub fn as_constant(self) -> Option<bool> {
        match self.id {
            FALSE_ID => Some(false),
            TRUE_ID => Some(true),
            _ => None,
        }
    }

    /// Stable per-manager node number (0 and 1 are the terminals).
    pub fn id(self) -> u32 {
        self.id
    }
}

/// A Boolean variable together with the probability of its positive literal.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct WeightedVar {
    pub index: u32,
    pub weight: f64,
}

/// Decision node as stored in the manager.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Node {
    pub var: u32,
    pub lo: u32,
    pub hi: u32,
}

/// Owner of a family of BDD nodes. Single-threaded; distinct managers are
/// independent.
#[derive(Debug)]
pub struct Manager {
    id: u32,
    nodes: Vec<Node>,
    unique: FxHashMap<Node, u32>,
    ite_cache: FxHashMap<(u32, u32, u32), u32>,
    weights: Vec<f64>,
    interrupt: Option<Arc<AtomicBool>>,
    /// Set once the interrupt fires. The tables may then hold partial
    /// results, so every later operation fails.
    interrupted: bool,
}

impl Default for Manager {
    fn default() -> Self {
        Self::new()
    }
}

impl Manager {
    pub fn new() -> Self {
        let terminal = Node {
            var: TERMINAL_LEVEL,
            lo: 0,
            hi: 0,
        };
        Manager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            nodes: vec![terminal, terminal],
            unique: FxHashMap::default(),
            ite_cache: FxHashMap::default(),
            weights: Vec::new(),
            interrupt: None,
            interrupted: false,
        }
    }

    /// Registers a flag that another thread may raise to abandon the
    /// current and all later operations with [`Error::Interrupted`].
    pub fn set_interrupt(&mut self, flag: Arc<AtomicBool>) {
        self.interrupt = Some(flag);
    }

    /// Number of variables allocated so far.
    pub fn var_count(&self) -> usize {
        self.weights.len()
    }

    /// Positive-literal weights, indexed by variable (allocation order).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vars(&self) -> impl Iterator<Item = WeightedVar> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(|(index, &weight)| WeightedVar {
                index: index as u32,
                weight,
            })
    }

    /// Total number of decision nodes ever created in this manager.
    pub fn allocated_nodes(&self) -> usize {
        self.nodes.len() - 2
    }

    fn wrap(&self, id: u32) -> NodeRef {
        if id <= TRUE_ID {
            NodeRef { manager: 0, id }
        } else {
            NodeRef {
                manager: self.id,
                id,
            }
        }
    }

    fn check(&self, f: NodeRef) -> Result<u32> {
        if f.is_terminal() || f.manager == self.id {
            Ok(f.id)
        } else {
            Err(Error::ManagerMismatch)
        }
    }

    /// The decision node behind `f`, or `None` for terminals.
    pub fn node(&self, f: NodeRef) -> Result<Option<Node>> {
        let id = self.check(f)?;
        Ok((id > TRUE_ID).then(|| self.nodes[id as usize]))
    }

    /// Variable tested at the root of `f`, `None` for terminals.
    pub fn top_var(&self, f: NodeRef) -> Result<Option<u32>> {
        Ok(self.node(f)?.map(|n| n.var))
    }

    /// Allocates a new variable with positive-literal probability `weight`
    /// and returns its positive literal. Weights of exactly 0 or 1 fold to a
    /// terminal and allocate nothing.
    pub fn fresh_var(&mut self, weight: f64) -> Result<NodeRef> {
        if !weight.is_finite() || !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidWeight(weight));
        }
        if weight == 0.0 {
            return Ok(NodeRef::FALSE);
        }
        if weight == 1.0 {
            return Ok(NodeRef::TRUE);
        }
        let var = self.weights.len() as u32;
        self.weights.push(weight);
        let id = self.mk(var, FALSE_ID, TRUE_ID);
        Ok(self.wrap(id))
    }

    #[inline]
    fn level(&self, id: u32) -> u32 {
        self.nodes[id as usize].var
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        match self.unique.entry(node) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = self.nodes.len() as u32;
                self.nodes.push(node);
                let id = *e.insert(id);
                if self.nodes.len() & POLL_MASK == 0 {
                    if let Some(flag) = &self.interrupt {
                        self.interrupted |= flag.load(Ordering::Relaxed);
                    }
                }
                id
            }
        }
    }

    #[inline]
    fn cofactors(&self, id: u32, var: u32) -> (u32, u32) {
        let n = self.nodes[id as usize];
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (id, id)
        }
    }

    fn ite_rec(&mut self, f: u32, g: u32, h: u32) -> u32 {
        if self.interrupted {
            return FALSE_ID;
        }
        if f == TRUE_ID {
            return g;
        }
        if f == FALSE_ID {
            return h;
        }
        let g = if g == f { TRUE_ID } else { g };
        let h = if h == f { FALSE_ID } else { h };
        if g == h {
            return g;
        }
        if g == TRUE_ID && h == FALSE_ID {
            return f;
        }
        // and/or are symmetric; order the operands so both spellings share
        // a cache entry
        let (f, g, h) = if h == FALSE_ID && g < f {
            (g, f, h)
        } else if g == TRUE_ID && h < f {
            (h, g, f)
        } else {
            (f, g, h)
        };

        let key = (f, g, h);
        if let Some(&r) = self.ite_cache.get(&key) {
            return r;
        }
        let var = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let (h0, h1) = self.cofactors(h, var);
        let hi = self.ite_rec(f1, g1, h1);
        let lo = self.ite_rec(f0, g0, h0);
        let r = self.mk(var, lo, hi);
        self.ite_cache.insert(key, r);
        r
    }

    /// If-then-else: `(cond ∧ then) ∨ (¬cond ∧ otherwise)`.
    pub fn ite(&mut self, cond: NodeRef, then: NodeRef, otherwise: NodeRef) -> Result<NodeRef> {
        let f = self.check(cond)?;
        let g = self.check(then)?;
        let h = self.check(otherwise)?;
        if self.interrupted {
            return Err(Error::Interrupted);
        }
        let r = self.ite_rec(f, g, h);
        if self.interrupted {
            return Err(Error::Interrupted);
        }
        Ok(self.wrap(r))
    }

    pub fn not(&mut self, f: NodeRef) -> Result<NodeRef> {
        self.ite(f, NodeRef::FALSE, NodeRef::TRUE)
    }

    pub fn and(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.ite(f, g, NodeRef::FALSE)
    }

    pub fn or(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.ite(f, NodeRef::TRUE, g)
    }

    pub fn xor(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        let ng = self.not(g)?;
        self.ite(f, ng, g)
    }

    pub fn xnor(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        let ng = self.not(g)?;
        self.ite(f, g, ng)
    }

    pub fn implies(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.ite(f, g, NodeRef::TRUE)
    }

    pub fn and_all(&mut self, fs: impl IntoIterator<Item = NodeRef>) -> Result<NodeRef> {
        let mut acc = NodeRef::TRUE;
        for f in fs {
            acc = self.and(acc, f)?;
        }
        Ok(acc)
    }

    /// Weighted model count of `root`: the probability that the function is
    /// true when every variable is an independent Bernoulli of its weight.
    pub fn wmc(&self, root: NodeRef) -> Result<f64> {
        let root = self.check(root)?;
        let mut memo: FxHashMap<u32, f64> = FxHashMap::default();
        memo.insert(FALSE_ID, 0.0);
        memo.insert(TRUE_ID, 1.0);
        let mut stack = vec![root];
        while let Some(&id) = stack.last() {
            if memo.contains_key(&id) {
                stack.pop();
                continue;
            }
            let n = self.nodes[id as usize];
            match (memo.get(&n.lo), memo.get(&n.hi)) {
                (Some(&lo), Some(&hi)) => {
                    let w = self.weights[n.var as usize];
                    memo.insert(id, (1.0 - w) * lo + w * hi);
                    stack.pop();
                }
                (lo, hi) => {
                    if lo.is_none() {
                        stack.push(n.lo);
                    }
                    if hi.is_none() {
                        stack.push(n.hi);
                    }
                }
            }
        }
        Ok(memo[&root])
    }

    fn reachable(&self, roots: &[NodeRef]) -> Result<Vec<u32>> {
        let mut seen = FxHashSet::default();
        let mut stack = Vec::new();
        for &r in roots {
            stack.push(self.check(r)?);
        }
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            if id <= TRUE_ID || !seen.insert(id) {
                continue;
            }
            out.push(id);
            let n = self.nodes[id as usize];
            stack.push(n.lo);
            stack.push(n.hi);
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Number of distinct decision nodes reachable from any of `roots`.
    pub fn node_count(&self, roots: &[NodeRef]) -> Result<usize> {
        Ok(self.reachable(roots)?.len())
    }

    /// Evaluates `f` under a total assignment indexed by variable.
    pub fn eval(&self, f: NodeRef, assignment: &[bool]) -> Result<bool> {
        let mut id = self.check(f)?;
        while id > TRUE_ID {
            let n = self.nodes[id as usize];
            id = if assignment[n.var as usize] {
                n.hi
            } else {
                n.lo
            };
        }
        Ok(id == TRUE_ID)
    }

    /// Consistency walk over every stored node: ordering, reduction and
    /// uniqueness. Returns a description of the first violation.
    pub fn audit(&self) -> std::result::Result<(), String> {
        if self.unique.len() != self.nodes.len() - 2 {
            return Err(format!(
                "unique table holds {} entries for {} nodes",
                self.unique.len(),
                self.nodes.len() - 2
            ));
        }
        for (id, n) in self.nodes.iter().enumerate().skip(2) {
            if n.lo == n.hi {
                return Err(format!("node {id} has lo == hi"));
            }
            if n.var >= self.level(n.lo) || n.var >= self.level(n.hi) {
                return Err(format!("node {id} violates the variable order"));
            }
            if self.unique.get(n) != Some(&(id as u32)) {
                return Err(format!("node {id} is not canonical in the unique table"));
            }
        }
        Ok(())
    }

    /// DOT rendering of the sub-DAG below `roots`. Dashed edges are `lo`.
    pub fn to_dot(&self, roots: &[(String, NodeRef)]) -> Result<String> {
        let refs: Vec<NodeRef> = roots.iter().map(|(_, r)| *r).collect();
        let ids = self.reachable(&refs)?;
        let mut out = String::from("digraph bdd {\n");
        out.push_str("  n0 [shape=box,label=\"0\"];\n  n1 [shape=box,label=\"1\"];\n");
        for &id in &ids {
            let n = self.nodes[id as usize];
            let _ = writeln!(
                out,
                "  n{id} [label=\"x{} ({:.3})\"];",
                n.var, self.weights[n.var as usize]
            );
            let _ = writeln!(out, "  n{id} -> n{} [style=dashed];", n.lo);
            let _ = writeln!(out, "  n{id} -> n{};", n.hi);
        }
        for (name, r) in roots {
            let _ = writeln!(out, "  \"{name}\" [shape=plaintext];");
            let _ = writeln!(out, "  \"{name}\" -> n{};", r.id);
        }
        out.push_str("}\n");
        Ok(out)
    }
}
