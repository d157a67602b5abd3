use proptest::prelude::*;

use probbits::{Manager, NodeRef};

#[derive(Clone, Debug)]
enum F {
    Var(usize),
    Const(bool),
    Not(Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
    Xor(Box<F>, Box<F>),
    Ite(Box<F>, Box<F>, Box<F>),
}

impl F {
    fn eval(&self, x: &[bool]) -> bool {
        match self {
            F::Var(i) => x[*i],
            F::Const(b) => *b,
            F::Not(a) => !a.eval(x),
            F::And(a, b) => a.eval(x) && b.eval(x),
            F::Or(a, b) => a.eval(x) || b.eval(x),
            F::Xor(a, b) => a.eval(x) ^ b.eval(x),
            F::Ite(c, t, e) => {
                if c.eval(x) {
                    t.eval(x)
                } else {
                    e.eval(x)
                }
            }
        }
    }

    /// Builds the formula; `swap` flips operand order of every binary node.
    fn build(&self, m: &mut Manager, vars: &[NodeRef], swap: bool) -> NodeRef {
        let bin = |m: &mut Manager, a: &F, b: &F| {
            let (x, y) = (a.build(m, vars, swap), b.build(m, vars, swap));
            if swap {
                (y, x)
            } else {
                (x, y)
            }
        };
        match self {
            F::Var(i) => vars[*i],
            F::Const(b) => NodeRef::constant(*b),
            F::Not(a) => {
                let a = a.build(m, vars, swap);
                m.not(a).unwrap()
            }
            F::And(a, b) => {
                let (x, y) = bin(m, a, b);
                m.and(x, y).unwrap()
            }
            F::Or(a, b) => {
                let (x, y) = bin(m, a, b);
                m.or(x, y).unwrap()
            }
            F::Xor(a, b) => {
                let (x, y) = bin(m, a, b);
                m.xor(x, y).unwrap()
            }
            F::Ite(c, t, e) => {
                let c = c.build(m, vars, swap);
                let t = t.build(m, vars, swap);
                let e = e.build(m, vars, swap);
                m.ite(c, t, e).unwrap()
            }
        }
    }
}

fn formula(nvars: usize) -> impl Strategy<Value = F> {
    let leaf = prop_oneof![
        8 => (0..nvars).prop_map(F::Var),
        1 => any::<bool>().prop_map(F::Const),
    ];
    leaf.prop_recursive(6, 48, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| F::Not(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| F::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| F::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| F::Xor(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| F::Ite(
                Box::new(c),
                Box::new(t),
                Box::new(e)
            )),
        ]
    })
}

fn with_vars(max: usize) -> impl Strategy<Value = (Vec<f64>, F)> {
    (1..=max).prop_flat_map(|n| (prop::collection::vec(0.01f64..0.99, n), formula(n)))
}

fn assignment(bits: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| bits >> i & 1 == 1).collect()
}

/// Builds the function from its truth table by Shannon expansion, deepest
/// variable first.
fn from_truth_table(m: &mut Manager, vars: &[NodeRef], f: &F) -> NodeRef {
    fn go(m: &mut Manager, vars: &[NodeRef], f: &F, prefix: &mut Vec<bool>) -> NodeRef {
        if prefix.len() == vars.len() {
            return NodeRef::constant(f.eval(prefix));
        }
        prefix.push(false);
        let lo = go(m, vars, f, prefix);
        prefix.pop();
        prefix.push(true);
        let hi = go(m, vars, f, prefix);
        prefix.pop();
        let v = vars[prefix.len()];
        m.ite(v, hi, lo).unwrap()
    }
    go(m, vars, f, &mut Vec::new())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn same_function_same_handle((w, f) in with_vars(12)) {
        let mut m = Manager::new();
        let vars: Vec<NodeRef> = w.iter().map(|&p| m.fresh_var(p).unwrap()).collect();
        let a = f.build(&mut m, &vars, false);
        let b = f.build(&mut m, &vars, true);
        let c = from_truth_table(&mut m, &vars, &f);
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, c);
        prop_assert!(m.audit().is_ok(), "{:?}", m.audit());
    }

    #[test]
    fn wmc_matches_enumeration((w, f) in with_vars(16)) {
        let mut m = Manager::new();
        let vars: Vec<NodeRef> = w.iter().map(|&p| m.fresh_var(p).unwrap()).collect();
        let root = f.build(&mut m, &vars, false);
        let n = w.len();
        let mut expected = 0.0;
        for bits in 0..1u32 << n {
            let x = assignment(bits, n);
            if f.eval(&x) {
                expected += x.iter().zip(&w).map(|(&b, &p)| if b { p } else { 1.0 - p }).product::<f64>();
            }
        }
        prop_assert!((m.wmc(root).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn complement_sums_to_one((w, f) in with_vars(12)) {
        let mut m = Manager::new();
        let vars: Vec<NodeRef> = w.iter().map(|&p| m.fresh_var(p).unwrap()).collect();
        let root = f.build(&mut m, &vars, false);
        let neg = m.not(root).unwrap();
        prop_assert!((m.wmc(root).unwrap() + m.wmc(neg).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eval_agrees_with_formula((w, f) in with_vars(10), bits in any::<u32>()) {
        let mut m = Manager::new();
        let vars: Vec<NodeRef> = w.iter().map(|&p| m.fresh_var(p).unwrap()).collect();
        let root = f.build(&mut m, &vars, false);
        let x = assignment(bits, w.len());
        prop_assert_eq!(m.eval(root, &x).unwrap(), f.eval(&x));
    }
}
