mod common;

use common::*;
use nlbox_core::analysis::{best_success, SearchConfig};
use nlbox_core::locality::vertex_iter;
use nlbox_core::{evaluate_wiring, game_value, is_local, rat, ExactRational, Game, Wiring, DEFAULT_VERTEX_CAP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn wirings_of_no_signalling_boxes_do_not_signal() {
    let corpus = wiring_corpus();
    assert!(corpus.len() >= 200);
    ns_closure(&corpus).unwrap();
}

#[test]
fn denominators_stay_within_resource_primes() {
    denominator_closure(&wiring_corpus()).unwrap();
}

#[test]
fn is_local_agrees_with_chsh_oracle_on_quarter_boxes() {
    locality_agreement(&quarter_corpus()).unwrap();
}

#[test]
fn extremal_boxes_classify_as_expected() {
    for (i, b) in extremal_2222().iter().enumerate() {
        assert_eq!(is_local(b, DEFAULT_VERTEX_CAP).unwrap().is_local(), i < 16);
    }
}

#[test]
fn quarter_vertex_mixtures_are_local() {
    let s = shape(2, 2);
    let vs: Vec<_> = vertex_iter(s).map(|v| v.to_box(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let parts: Vec<(ExactRational, _)> = (0..4)
            .map(|_| (rat(1, 4), vs[rng.gen_range(0..16)].clone()))
            .collect();
        assert!(is_local(&mix(&parts), DEFAULT_VERTEX_CAP).unwrap().is_local());
    }
}

#[test]
fn mixtures_never_beat_the_best_deterministic_wiring() {
    dominance_suite().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pruned_and_plain_search_agree(seed in any::<u64>(), a in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = shape(a, 2);
        let payoff: Vec<ExactRational> =
            (0..s.len()).map(|_| rat(rng.gen_range(0..=4), 4)).collect();
        let game = Game::new(s, vec![rat(1, 4); 4], payoff).unwrap();
        let resources = vec![random_ns_box(&mut rng)];
        let cfg = |pruning| SearchConfig { pruning, workers: 1, ..SearchConfig::default() };
        let pruned = best_success(&game, &resources, &cfg(true)).unwrap();
        let plain = best_success(&game, &resources, &cfg(false)).unwrap();
        prop_assert_eq!(&pruned.best_value, &plain.best_value);
        prop_assert_eq!(&pruned.best_witness, &plain.best_witness);
        let achieved = game_value(&evaluate_wiring(&pruned.best_witness).unwrap(), &game).unwrap();
        prop_assert_eq!(achieved, pruned.best_value);
    }

    #[test]
    fn best_success_dominates_every_sampled_wiring(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let resources = vec![random_ns_box(&mut rng)];
        let game = Game::chsh();
        let best = best_success(&game, &resources, &SearchConfig::default()).unwrap().best_value;
        for _ in 0..20 {
            let w = Wiring::random(resources.clone(), game.shape(), &mut rng);
            prop_assert!(game_value(&evaluate_wiring(&w).unwrap(), &game).unwrap() <= best);
        }
    }
}
