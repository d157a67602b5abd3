use std::collections::BTreeMap;

use probbits::lang::{compile, parse, run_program, Answer, Encoding};
use probbits::oracle::enumerate;
use probbits::Error;

const BOTH: [Encoding; 2] = [Encoding::Bitwise, Encoding::Categ];

fn probability(src: &str) -> f64 {
    match run_program(src, Encoding::Bitwise).unwrap().answers[0] {
        Answer::Probability(p) => p,
        ref other => panic!("expected a probability, got {other:?}"),
    }
}

fn distribution(src: &str, enc: Encoding) -> Vec<(u64, f64)> {
    match &run_program(src, enc).unwrap().answers[0] {
        Answer::Distribution { distribution, .. } => distribution.iter().collect(),
        other => panic!("expected a distribution, got {other:?}"),
    }
}

fn assert_matches_oracle(src: &str) {
    let expected = enumerate(&parse(src).unwrap()).unwrap();
    for enc in BOTH {
        let got = run_program(src, enc).unwrap();
        assert_eq!(got.labels, expected.labels);
        for (g, e) in got.answers.iter().zip(&expected.answers) {
            let d = g.max_abs_diff(e).expect("answer shapes differ");
            assert!(d < 1e-9, "{enc}: {g:?} vs {e:?}");
        }
        assert!((got.evidence_probability - expected.evidence_probability).abs() < 1e-9);
    }
}

#[test]
fn comparisons_of_uniform_bytes() {
    assert!((probability("return uniform(0, 8) < uniform(0, 8)") - 0.4375).abs() < 1e-12);
    assert!((probability("return uniform(0, 8) == uniform(0, 8)") - 0.125).abs() < 1e-12);
}

#[test]
fn constant_program() {
    assert_eq!(distribution("return 3", Encoding::Bitwise), vec![(3, 1.0)]);
}

#[test]
fn observed_flip_is_certain() {
    assert_eq!(probability("let x = flip(0.5) observe(x) return x"), 1.0);
}

#[test]
fn bitwise_listing_gives_categorical() {
    let src = "let num = 0
               if flip(0.7) {
                   num = num + 2
                   if flip(0.4/0.7) { num = num + 1 }
               } else {
                   if flip(0.2/0.3) { num = num + 1 }
               }
               return num";
    for enc in BOTH {
        let d = distribution(src, enc);
        let expected = [(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)];
        assert_eq!(d.len(), 4);
        for ((k, p), (ek, ep)) in d.into_iter().zip(expected) {
            assert_eq!(k, ek);
            assert!((p - ep).abs() < 1e-12);
        }
    }
}

#[test]
fn discrete_under_both_encodings() {
    let src = "return discrete([0.1, 0.1, 0.2, 0.3, 0.3])";
    for enc in BOTH {
        let d = distribution(src, enc);
        for (k, p) in [0.1, 0.1, 0.2, 0.3, 0.3].into_iter().enumerate() {
            assert!((d[k].1 - p).abs() < 1e-12);
        }
    }
}

#[test]
fn observe_inside_branch_only_constrains_that_branch() {
    // P(x | x -> y) with y independent: 0.25 / 0.75
    let p = probability("let x = flip(0.5) if x { observe(flip(0.5)) } return x");
    assert!((p - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn observe_placement_does_not_matter() {
    let early =
        "let a = uniform(0, 4) let b = uniform(0, 4) observe(a < b) let c = a + b return c, a";
    let late =
        "let a = uniform(0, 4) let b = uniform(0, 4) let c = a + b observe(a < b) return c, a";
    let x = run_program(early, Encoding::Bitwise).unwrap();
    let y = run_program(late, Encoding::Bitwise).unwrap();
    for (p, q) in x.answers.iter().zip(&y.answers) {
        assert!(p.max_abs_diff(q).unwrap() < 1e-12);
    }
}

#[test]
fn flips_take_variable_indices_in_textual_order() {
    let src = "let a = flip(0.11)
               let b = if flip(0.22) then flip(0.33) else flip(0.44)
               let c = uniform(0, 4)
               return flip(0.55), a, b, c";
    let c = compile(&parse(src).unwrap(), Encoding::Bitwise).unwrap();
    let w = c.manager.weights();
    assert_eq!(&w[..4], &[0.11, 0.22, 0.33, 0.44]);
    assert_eq!(&w[4..6], &[0.5, 0.5]);
    assert_eq!(w[6], 0.55);
    assert_eq!(w.len(), 7);
}

#[test]
fn uniform_with_offset() {
    let d = distribution("return uniform(3, 6)", Encoding::Bitwise);
    assert_eq!(d.iter().map(|x| x.0).collect::<Vec<_>>(), vec![3, 4, 5]);
    for (_, p) in d {
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn expectation_is_reported() {
    let r = run_program("return uniform(0, 8) + uniform(0, 8)", Encoding::Bitwise).unwrap();
    let Answer::Distribution { expectation, .. } = r.answers[0] else {
        panic!()
    };
    assert!((expectation - 7.0).abs() < 1e-12);
}

#[test]
fn beta_without_draws_keeps_prior() {
    let r = run_program("let t ~ Beta(1, 2) return t", Encoding::Bitwise).unwrap();
    assert_eq!(
        r.answers[0],
        Answer::BetaMixture(BTreeMap::from([((1, 2), 1.0)]))
    );
}

#[test]
fn beta_draw_counts_are_tracked_through_loops() {
    let src = "let t ~ Beta(2, 1)
               for i in 0..3 { observe(beta_flip(t)) }
               return t";
    let r = run_program(src, Encoding::Bitwise).unwrap();
    assert_eq!(
        r.answers[0],
        Answer::BetaMixture(BTreeMap::from([((5, 1), 1.0)]))
    );
    assert_matches_oracle(src);
}

#[test]
fn three_digit_luhn_with_uniform_priors() {
    let src = "let id = [discrete([0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]),
                         uniform(0, 10), uniform(0, 10)]
               let check_digit = id[0]
               let sum = 0
               for i in 1..3 {
                   if i % 2 == 1 {
                       if id[i] > 4 { sum = sum + 2 * id[i] - 9 } else { sum = sum + 2 * id[i] }
                   } else {
                       sum = sum + id[i]
                   }
               }
               observe((check_digit + sum) % 10 == 0)
               return id, sum";
    assert_matches_oracle(src);
    // every check digit is equally likely once the data digits are uniform
    let r = run_program(src, Encoding::Bitwise).unwrap();
    let Answer::Array(digits) = &r.answers[0] else {
        panic!()
    };
    let Answer::Distribution { distribution, .. } = &digits[0] else {
        panic!()
    };
    for k in 0..10 {
        assert!((distribution.get(k) - 0.1).abs() < 1e-12);
    }
    assert!((r.evidence_probability - 0.1).abs() < 1e-12);
}

#[test]
fn width_rules_agree_with_oracle() {
    for src in [
        "return 7 + 1",
        "return 3 - 5",
        "return uniform(0, 4) - uniform(0, 4)",
        "return uniform(0, 8) * uniform(0, 4)",
        "return uniform(0, 16) / uniform(0, 4), uniform(0, 16) % uniform(0, 4)",
        "return int(uniform(0, 4), 5) - 1",
        "let x = 0 for i in 0..5 { x = x + flip(0.3) } return x",
        "let x = if flip(0.5) then 1 else 12 return x + x",
        "let b = flip(0.4) return b + 1, !b, b == flip(0.5)",
    ] {
        assert_matches_oracle(src);
    }
}

#[test]
fn errors_have_the_right_kind() {
    assert!(matches!(parse("observe("), Err(Error::Syntax { .. })));
    assert!(matches!(
        parse("return y"),
        Err(Error::UnknownIdentifier { .. })
    ));
    assert!(matches!(
        parse("let a = [1, 2] let i = uniform(0, 2) return a[i]"),
        Err(Error::Compile { .. })
    ));
    let narrow = parse("return int(uniform(0, 8), 2)").unwrap();
    assert!(matches!(
        compile(&narrow, Encoding::Bitwise),
        Err(Error::Compile { .. })
    ));
    assert!(matches!(
        run_program("observe(false) return 1", Encoding::Bitwise),
        Err(Error::UnsatisfiableEvidence)
    ));
    assert!(matches!(
        run_program(
            "let x = uniform(0, 2) observe(x == 2) return x",
            Encoding::Bitwise
        ),
        Err(Error::UnsatisfiableEvidence)
    ));
}
