//! Indexed evaluation against brute-force enumeration on random stores.

mod common;

use common::*;
use hyperkb::eval::{evaluate, oracle_evaluate};

const PRODUCT_LIMIT: u128 = 100_000;

#[test]
fn evaluator_matches_oracle_on_random_stores() {
    let mut compared = 0;
    let mut errors = 0;
    let mut non_empty = 0;
    for seed in 0..300u64 {
        let mut rng = rng(seed);
        let (kb, nodes) = random_kb(&mut rng, 60, 180);
        let st = kb.state();
        for _ in 0..4 {
            let text = random_query(&mut rng, nodes);
            let Some(q) = resolved(&text, st) else { continue };
            if max_product(&q, st) > PRODUCT_LIMIT {
                continue;
            }
            let fast = evaluate(&q, st, &registry());
            let slow = oracle_evaluate(&q, st, &registry());
            assert_eq!(fast, slow, "seed {seed}: {text}");
            compared += 1;
            match fast {
                Err(_) => errors += 1,
                Ok(r) if !r.is_empty() => non_empty += 1,
                _ => {}
            }
        }
    }
    eprintln!("compared {compared}, errors {errors}, non-empty {non_empty}");
    // the generator must exercise more than empty answers
    assert!(compared > 600, "{compared}");
    assert!(non_empty > compared / 5, "{non_empty} of {compared}");
    assert!(errors > 0 && errors < compared / 4, "{errors} of {compared}");
}

#[test]
fn empty_store_answers_nothing() {
    let mut rng = rng(9);
    let (kb, _) = random_kb(&mut rng, 0, 0);
    let q = resolved("SELECT A WHERE A p B", kb.state()).unwrap();
    let r = evaluate(&q, kb.state(), &registry()).unwrap();
    assert!(r.is_empty() && r.cardinality() == 0);
    assert_eq!(Ok(r), oracle_evaluate(&q, kb.state(), &registry()));
}
