use proptest::prelude::*;

use probbits::arith::lt;
use probbits::encoding::{bitwise_int, categ_int, ProbVector};
use probbits::{expectation, marginal_distribution, prob, Evidence, Manager};

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 2..=32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditioned_marginals_are_consistent(a in vector(), b in vector(), bit in 0usize..5) {
        let mut m = Manager::new();
        let x = bitwise_int(&mut m, &ProbVector::new(a).unwrap()).unwrap();
        let y = categ_int(&mut m, &ProbVector::new(b).unwrap()).unwrap();
        // evidence x < y is satisfiable whenever y can exceed 0, which it can
        let e = Evidence::from_formula(lt(&mut m, &x, &y).unwrap());
        prop_assume!(e.probability(&m).unwrap() > 0.0);

        let d = marginal_distribution(&mut m, &x, &e).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-9);
        let mean: f64 = d.iter().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((expectation(&mut m, &x, &e).unwrap() - mean).abs() < 1e-9);

        // prob(f | e) · wmc(e) = wmc(f ∧ e)
        let f = x.bit(bit.min(x.width() - 1));
        let fe = m.and(f, e.formula()).unwrap();
        let lhs = prob(&mut m, f, &e).unwrap() * m.wmc(e.formula()).unwrap();
        prop_assert!((lhs - m.wmc(fe).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn true_evidence_is_identity(a in vector()) {
        let mut m = Manager::new();
        let x = bitwise_int(&mut m, &ProbVector::new(a.clone()).unwrap()).unwrap();
        let none = marginal_distribution(&mut m, &x, &Evidence::none()).unwrap();
        let mut e = Evidence::none();
        e.observe(&mut m, probbits::NodeRef::constant(true)).unwrap();
        prop_assert_eq!(&none, &marginal_distribution(&mut m, &x, &e).unwrap());
        for i in 0..x.width() {
            prop_assert_eq!(m.wmc(x.bit(i)).unwrap(), prob(&mut m, x.bit(i), &e).unwrap());
        }
    }
}
