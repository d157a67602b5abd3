use std::collections::BTreeMap;
use std::time::Instant;

use probbits::corpus::{self, EXAMPLES};
use probbits::oracle::enumerate;
use probbits::{parse, run_program, Answer, Encoding};

fn run(name: &str, encoding: Encoding) -> probbits::lang::RunResult {
    run_program(corpus::get(name).unwrap().source, encoding).unwrap()
}

fn dist(a: &Answer) -> &probbits::Distribution {
    match a {
        Answer::Distribution { distribution, .. } => distribution,
        other => panic!("expected a distribution, got {other:?}"),
    }
}

#[test]
fn every_example_parses() {
    for e in EXAMPLES {
        parse(e.source).unwrap_or_else(|err| panic!("{}: {err}", e.name));
    }
}

#[test]
fn discrete4_weights() {
    for enc in [Encoding::Bitwise, Encoding::Categ] {
        let r = run("discrete4", enc);
        let d = dist(&r.answers[0]);
        for (k, w) in [0.1, 0.2, 0.3, 0.4].into_iter().enumerate() {
            assert!((d.get(k as u64) - w).abs() < 1e-12);
        }
    }
}

#[test]
fn beta_examples() {
    let r = run("beta-single", Encoding::Bitwise);
    assert_eq!(
        r.answers[0],
        Answer::BetaMixture(BTreeMap::from([((2, 2), 1.0)]))
    );
    let r = run("beta-missing", Encoding::Bitwise);
    let Answer::BetaMixture(m) = &r.answers[0] else {
        panic!()
    };
    assert_eq!(m.len(), 2);
    assert!((m[&(3, 1)] - 2.0 / 3.0).abs() < 1e-12);
    assert!((m[&(2, 2)] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn gcd_matches_direct_count() {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let coprime = (1..16u64)
        .flat_map(|a| (1..16u64).map(move |b| (a, b)))
        .filter(|&(a, b)| gcd(a, b) == 1)
        .count();
    let expected = coprime as f64 / 225.0;
    let Answer::Probability(p) = run("gcd-small", Encoding::Bitwise).answers[0] else {
        panic!()
    };
    assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
}

#[test]
fn triangle_matches_direct_count() {
    let mut counts = [0u32; 4];
    for a in 1..8u64 {
        for b in 1..8u64 {
            for c in 1..8u64 {
                if a + b <= c || a + c <= b || b + c <= a {
                    continue;
                }
                let right =
                    a * a + b * b == c * c || a * a + c * c == b * b || b * b + c * c == a * a;
                let kind = if a == b && b == c {
                    0
                } else if a == b || b == c || a == c {
                    1
                } else if right {
                    2
                } else {
                    3
                };
                counts[kind] += 1;
            }
        }
    }
    let total: u32 = counts.iter().sum();
    let r = run("triangle-small", Encoding::Bitwise);
    let d = dist(&r.answers[0]);
    for (k, &n) in counts.iter().enumerate() {
        assert!((d.get(k as u64) - f64::from(n) / f64::from(total)).abs() < 1e-12);
    }
}

#[test]
fn small_examples_agree_with_enumeration() {
    for name in [
        "discrete4",
        "luhn-2",
        "luhn-4",
        "gcd-small",
        "triangle-small",
        "beta-single",
        "beta-missing",
    ] {
        let program = parse(corpus::get(name).unwrap().source).unwrap();
        let expected = enumerate(&program).unwrap();
        for enc in [Encoding::Bitwise, Encoding::Categ] {
            let got = run(name, enc);
            assert_eq!(got.labels, expected.labels);
            for (g, e) in got.answers.iter().zip(&expected.answers) {
                let diff = g.max_abs_diff(e).unwrap();
                assert!(diff < 1e-9, "{name} {enc}: diff {diff}");
            }
        }
    }
}

#[test]
fn luhn9_posterior_is_normalized() {
    let r = run("luhn-9", Encoding::Bitwise);
    let Answer::Array(digits) = &r.answers[0] else {
        panic!()
    };
    assert_eq!(digits.len(), 9);
    for d in digits {
        assert!((dist(d).total() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn survey_network_reproduces_published_mixture() {
    let table = [
        ((9, 3), 0.226),
        ((8, 4), 0.207),
        ((10, 2), 0.177),
        ((7, 5), 0.160),
        ((6, 6), 0.109),
        ((5, 7), 0.066),
        ((4, 8), 0.035),
        ((3, 9), 0.016),
        ((2, 10), 0.005),
    ];
    let start = Instant::now();
    let r = run("survey-network", Encoding::Bitwise);
    let elapsed = start.elapsed();
    let Answer::BetaMixture(m) = &r.answers[0] else {
        panic!()
    };
    assert_eq!(m.len(), table.len());
    for (params, p) in table {
        let got = m.get(&params).copied().unwrap_or(0.0);
        assert!((got - p).abs() < 1e-3, "{params:?}: {got} vs {p}");
    }
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
}
