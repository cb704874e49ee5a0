//! Corpora and oracles shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use nlbox_core::analysis::{best_success, denominator_primes_of, SearchConfig};
use nlbox_core::boxes::Party;
use nlbox_core::locality::vertex_iter;
use nlbox_core::wiring::party_marginals;
use nlbox_core::{
    evaluate_wiring, game_value, is_local, rat, BipartiteBox, BoxShape, ExactRational, Game,
    Wiring, DEFAULT_VERTEX_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn shape(a: usize, b: usize) -> BoxShape {
    BoxShape::new(2, 2, a, b).unwrap()
}

pub fn modp(p: u64) -> BipartiteBox {
    BipartiteBox::modp_nlb(p).unwrap()
}

pub fn weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<ExactRational> {
    let raw: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: u64 = raw.iter().sum();
    raw.into_iter().map(|r| ExactRational::new(r, total).unwrap()).collect()
}

pub fn mix(parts: &[(ExactRational, BipartiteBox)]) -> BipartiteBox {
    let s = parts[0].1.shape();
    let mut table = vec![ExactRational::zero(); s.len()];
    for (w, b) in parts {
        for (t, v) in table.iter_mut().zip(b.flat()) {
            *t += &(w * v);
        }
    }
    BipartiteBox::from_flat(s, table).unwrap()
}

/// A random no-signalling box with binary inputs: a rational mixture of
/// deterministic vertices, the mod-p box when the outputs allow, and noise.
pub fn random_ns_box(rng: &mut ChaCha8Rng) -> BipartiteBox {
    let (a, b) = [(2, 2), (2, 3), (3, 3), (3, 2)][rng.gen_range(0..4)];
    let s = shape(a, b);
    let k = rng.gen_range(1..=3);
    let w = weights(rng, k);
    let parts: Vec<(ExactRational, BipartiteBox)> = w
        .into_iter()
        .map(|w| {
            let comp = match rng.gen_range(0..3) {
                0 if a == b => modp(a as u64),
                1 => BipartiteBox::uniform(s).unwrap(),
                _ => {
                    let al: Vec<usize> = (0..2).map(|_| rng.gen_range(0..a)).collect();
                    let bo: Vec<usize> = (0..2).map(|_| rng.gen_range(0..b)).collect();
                    BipartiteBox::deterministic(s, &al, &bo).unwrap()
                }
            };
            (w, comp)
        })
        .collect();
    mix(&parts)
}

fn primes_of<'a>(values: impl IntoIterator<Item = &'a ExactRational>) -> BTreeSet<u64> {
    values.into_iter().flat_map(|v| v.denominator_primes()).collect()
}

/// 240 random wirings over up to three random no-signalling resources.
pub fn wiring_corpus() -> Vec<Wiring> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..240)
        .map(|_| {
            let n = rng.gen_range(0..=3);
            let resources = (0..n).map(|_| random_ns_box(&mut rng)).collect();
            let t = BoxShape::new(
                rng.gen_range(1..=3),
                rng.gen_range(1..=3),
                rng.gen_range(1..=3),
                rng.gen_range(1..=3),
            )
            .unwrap();
            Wiring::random(resources, t, &mut rng)
        })
        .collect()
}

/// Every wiring's output is no-signalling, and each side's marginals
/// computed from that side alone match the joint table.
pub fn ns_closure(corpus: &[Wiring]) -> Check {
    for (i, w) in corpus.iter().enumerate() {
        let b = evaluate_wiring(w).map_err(|e| format!("wiring {i}: {e}"))?;
        if let Some(s) = b.signalling_witness() {
            return Err(format!("wiring {i} signals: {s}"));
        }
        for party in [Party::Alice, Party::Bob] {
            let side = party_marginals(w, party).map_err(|e| e.to_string())?;
            if Some(side) != b.marginal_family(party) {
                return Err(format!("wiring {i}: {party} marginals disagree"));
            }
        }
    }
    Ok(format!("{} wirings", corpus.len()))
}

/// Joint entries use only primes of resource entries; marginals only
/// primes of the resource profile.
pub fn denominator_closure(corpus: &[Wiring]) -> Check {
    for (i, w) in corpus.iter().enumerate() {
        let b = evaluate_wiring(w).map_err(|e| e.to_string())?;
        let entry_primes: BTreeSet<u64> = w.resources.iter().flat_map(|r| primes_of(r.flat())).collect();
        if !primes_of(b.flat()).is_subset(&entry_primes) {
            return Err(format!("wiring {i}: joint table has a fresh prime"));
        }
        let profile = denominator_primes_of(&w.resources).map_err(|e| e.to_string())?.primes;
        for party in [Party::Alice, Party::Bob] {
            let fam = b.marginal_family(party).ok_or("signalling output")?;
            if !primes_of(fam.dist.iter().flatten()).is_subset(&profile) {
                return Err(format!("wiring {i}: {party} marginal has a fresh prime"));
            }
        }
    }
    Ok(format!("{} wirings", corpus.len()))
}

/// `a ⊕ b = xy ⊕ αx ⊕ βy ⊕ γ`: the eight CHSH variants.
pub fn chsh_variant(v: usize) -> Game {
    let (al, be, ga) = (v & 1, (v >> 1) & 1, (v >> 2) & 1);
    Game::from_predicate(shape(2, 2), |x, y, a, b| {
        (a ^ b) == ((x & y) ^ (al & x) ^ (be & y) ^ ga)
    })
    .unwrap()
}

/// Brute-force locality for binary boxes: no-signalling and every CHSH
/// variant at or below 3/4.
pub fn chsh_oracle(b: &BipartiteBox) -> bool {
    b.is_no_signalling() && (0..8).all(|v| game_value(b, &chsh_variant(v)).unwrap() <= rat(3, 4))
}

/// The 16 deterministic vertices and the 8 PR-type boxes.
pub fn extremal_2222() -> Vec<BipartiteBox> {
    let s = shape(2, 2);
    let mut out: Vec<BipartiteBox> = vertex_iter(s).map(|v| v.to_box(s)).collect();
    for v in 0..8usize {
        let g = chsh_variant(v);
        let table = (0..16)
            .map(|i| {
                let (x, y, a, b) = (i >> 3, (i >> 2) & 1, (i >> 1) & 1, i & 1);
                if g.payoff(x, y, a, b).is_one() {
                    rat(1, 2)
                } else {
                    rat(0, 1)
                }
            })
            .collect();
        out.push(BipartiteBox::from_flat(s, table).unwrap());
    }
    out
}

/// Binary boxes with entries in {0, 1/4, 1/2, 3/4, 1}: quarter mixtures of
/// extremal boxes (those that stay on the quarter grid), quarter mixtures
/// of vertices, and independently drawn rows.
pub fn quarter_corpus() -> Vec<BipartiteBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ext = extremal_2222();
    let s = shape(2, 2);
    let quarter = |b: &BipartiteBox| b.flat().iter().all(|v| (v * &rat(4, 1)).is_integer());
    let mut out = Vec::new();
    for _ in 0..150 {
        let parts: Vec<(ExactRational, BipartiteBox)> = (0..4)
            .map(|_| (rat(1, 4), ext[rng.gen_range(0..ext.len())].clone()))
            .collect();
        let b = mix(&parts);
        if quarter(&b) {
            out.push(b);
        }
    }
    for _ in 0..40 {
        let parts: Vec<(ExactRational, BipartiteBox)> = (0..4)
            .map(|_| (rat(1, 4), ext[rng.gen_range(0..16)].clone()))
            .collect();
        out.push(mix(&parts));
    }
    for _ in 0..50 {
        let mut table = Vec::with_capacity(16);
        for _ in 0..4 {
            let mut counts = [0i64; 4];
            for _ in 0..4 {
                counts[rng.gen_range(0..4)] += 1;
            }
            table.extend(counts.iter().map(|&c| rat(c, 4)));
        }
        out.push(BipartiteBox::from_flat(s, table).unwrap());
    }
    out
}

/// `is_local` matches the oracle and its certificate re-verifies.
pub fn locality_agreement(corpus: &[BipartiteBox]) -> Check {
    let (mut local, mut nonlocal) = (0, 0);
    for (i, b) in corpus.iter().enumerate() {
        let cert = is_local(b, DEFAULT_VERTEX_CAP).map_err(|e| e.to_string())?;
        if cert.is_local() != chsh_oracle(b) {
            return Err(format!("box {i}: is_local says {}, oracle disagrees", cert.is_local()));
        }
        if !cert.verify(b, DEFAULT_VERTEX_CAP) {
            return Err(format!("box {i}: certificate does not verify"));
        }
        if cert.is_local() {
            local += 1;
        } else {
            nonlocal += 1;
        }
    }
    if local < 20 || nonlocal < 20 {
        return Err(format!("corpus is one-sided: {local} local, {nonlocal} nonlocal"));
    }
    Ok(format!("{} boxes, {local} local, {nonlocal} nonlocal", corpus.len()))
}

/// 100 random rational mixtures of random wirings never beat the best
/// deterministic wiring.
pub fn dominance(game: &Game, resources: &[BipartiteBox], seed: u64) -> Check {
    let best = best_success(game, resources, &SearchConfig::default())
        .map_err(|e| e.to_string())?
        .best_value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..100 {
        let k = rng.gen_range(1..=4);
        let parts: Vec<(ExactRational, BipartiteBox)> = weights(&mut rng, k)
            .into_iter()
            .map(|w| {
                let wiring = Wiring::random(resources.to_vec(), game.shape(), &mut rng);
                (w, evaluate_wiring(&wiring).unwrap())
            })
            .collect();
        let v = game_value(&mix(&parts), game).map_err(|e| e.to_string())?;
        if v > best {
            return Err(format!("mixture {i} reaches {v} above {best}"));
        }
    }
    Ok(format!("best {best}"))
}

/// The dominance check over the standard game and resource pairs.
pub fn dominance_suite() -> Check {
    let pr = modp(2);
    let cases: [(Game, Vec<BipartiteBox>); 4] = [
        (Game::chsh(), vec![]),
        (Game::chsh(), vec![pr.clone()]),
        (Game::modp(3).unwrap(), vec![]),
        (Game::modp(3).unwrap(), vec![pr]),
    ];
    let mut notes = Vec::new();
    for (seed, (g, r)) in cases.iter().enumerate() {
        notes.push(dominance(g, r, seed as u64)?);
    }
    Ok(format!("4 games x 100 mixtures ({})", notes.join(", ")))
}
