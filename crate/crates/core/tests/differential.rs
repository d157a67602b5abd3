use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use probbits::fuzz::{differential, random_program};
use probbits::lang::parse;
use probbits::oracle::enumerate;
use probbits::Encoding;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn engine_matches_oracle(seed in any::<u64>()) {
        let src = random_program(&mut StdRng::seed_from_u64(seed));
        for enc in [Encoding::Bitwise, Encoding::Categ] {
            match differential(&src, enc) {
                Ok(d) => prop_assert!(d < 1e-9, "{enc}: deviation {d}\n{src}"),
                Err(msg) => prop_assert!(false, "{enc}: {msg}\n{src}"),
            }
        }
    }

    #[test]
    fn oracle_is_deterministic_and_conserves_weight(seed in any::<u64>()) {
        let src = random_program(&mut StdRng::seed_from_u64(seed));
        let program = parse(&src).unwrap();
        if let Ok(a) = enumerate(&program) {
            prop_assert!((a.evidence_probability + a.rejected_mass - 1.0).abs() < 1e-12);
            prop_assert_eq!(a, enumerate(&program).unwrap());
        }
    }
}

#[test]
fn generator_is_reproducible() {
    let a = random_program(&mut StdRng::seed_from_u64(7));
    let b = random_program(&mut StdRng::seed_from_u64(7));
    assert_eq!(a, b);
}
