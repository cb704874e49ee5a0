//! Obstructions to simulating mod-p boxes.
//!
//! A perfect simulation of the mod-p box pins down both parties' marginals:
//! the four input pairs give four equalities between Alice's and Bob's
//! output distributions, which together force both marginals to be uniform
//! over `Z_p`. Everything a wiring can produce on one side is a sum of
//! products of resource marginals, so its denominators only involve the
//! primes that occur in those marginals. A fresh prime factor in `p` is
//! therefore out of reach.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxes::{BipartiteBox, MarginalFamily, Party, SignallingWitness};
use crate::exact_num::{is_prime, prime_factors, ExactRational};

pub use crate::search::{
    best_success, search_perfect, SearchConfig, SearchError, SearchOutcome, SearchResult,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("{side} family has {inputs} inputs and {outputs} outputs; expected 2 inputs and {expected} outputs")]
    AlphabetMismatch {
        side: Party,
        inputs: usize,
        outputs: usize,
        expected: usize,
    },
    #[error("resource {index} signals: {witness}")]
    SignallingResource {
        index: usize,
        witness: SignallingWitness,
    },
}

/// Verdicts of the four marginal equalities, one per input pair `(x, y)`.
/// For `(1, 1)` Bob's output is shifted by one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalConditions {
    /// `p_A(q|0) = p_B(q|0)`
    pub x0_y0: bool,
    /// `p_A(q|0) = p_B(q|1)`
    pub x0_y1: bool,
    /// `p_A(q|1) = p_B(q|0)`
    pub x1_y0: bool,
    /// `p_A(q|1) = p_B(q+1|1)`
    pub x1_y1: bool,
}

impl MarginalConditions {
    pub fn all(&self) -> bool {
        self.x0_y0 && self.x0_y1 && self.x1_y0 && self.x1_y1
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.x0_y0, self.x0_y1, self.x1_y0, self.x1_y1]
    }
}

/// Checks the marginal equalities every perfect simulation of the mod-p
/// box satisfies, for all outputs `q`.
pub fn marginal_conditions_check(
    p: u64,
    alice: &MarginalFamily,
    bob: &MarginalFamily,
) -> Result<MarginalConditions, AnalysisError> {
    if p < 2 {
        return Err(AnalysisError::ModulusTooSmall(p));
    }
    let n = p as usize;
    for f in [alice, bob] {
        if f.inputs() != 2 || f.dist.iter().any(|row| row.len() != n) {
            return Err(AnalysisError::AlphabetMismatch {
                side: f.side,
                inputs: f.inputs(),
                outputs: f.outputs(),
                expected: n,
            });
        }
    }
    let (a, b) = (&alice.dist, &bob.dist);
    let holds = |x: usize, y: usize, shift: usize| (0..n).all(|q| a[x][q] == b[y][(q + shift) % n]);
    Ok(MarginalConditions {
        x0_y0: holds(0, 0, 0),
        x0_y1: holds(0, 1, 0),
        x1_y0: holds(1, 0, 0),
        x1_y1: holds(1, 1, 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionKind {
    Dyadic,
    DenominatorPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Obstructed,
    NotObstructed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Obstructed => "obstructed",
            Verdict::NotObstructed => "not_obstructed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObstructionParams {
    /// Target modulus and number of mod-2 resources.
    Dyadic { p: u64, n: u32 },
    /// Target modulus and the primes of the resource profile.
    DenominatorPrime { p: u64, profile_primes: BTreeSet<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    MarginalConditions,
    InputIndependence,
    ShiftInvariance,
    Uniformity,
    Denominators,
    Divisibility,
    Conclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationStep {
    pub rule: StepRule,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub kind: ObstructionKind,
    pub params: ObstructionParams,
    pub verdict: Verdict,
    pub derivation: Vec<DerivationStep>,
}

impl ObstructionReport {
    pub fn is_obstructed(&self) -> bool {
        self.verdict == Verdict::Obstructed
    }

    pub fn rules(&self) -> Vec<StepRule> {
        self.derivation.iter().map(|s| s.rule).collect()
    }
}

fn step(rule: StepRule, statement: String) -> DerivationStep {
    DerivationStep { rule, statement }
}

/// The steps shared by both obstructions: from the four conditions to
/// uniform marginals.
fn uniformity_chain(p: u64) -> Vec<DerivationStep> {
    vec![
        step(
            StepRule::MarginalConditions,
            format!(
                "a perfect simulation of the mod-{p} box satisfies, for every q: \
                 p_A(q|0) = p_B(q|0), p_A(q|0) = p_B(q|1), p_A(q|1) = p_B(q|0), \
                 p_A(q|1) = p_B(q+1 mod {p}|1)"
            ),
        ),
        step(
            StepRule::InputIndependence,
            "the (0,0) and (1,0) conditions give p_A(q|0) = p_B(q|0) = p_A(q|1), \
             so Alice's marginal does not depend on her input"
                .to_string(),
        ),
        step(
            StepRule::ShiftInvariance,
            "with that, the (0,1) and (1,1) conditions give \
             p_B(q|1) = p_A(q|0) = p_A(q|1) = p_B(q+1|1)"
                .to_string(),
        ),
        step(
            StepRule::Uniformity,
            format!("a shift-invariant distribution on Z_{p} is constant, so p_B(q|1) = 1/{p}"),
        ),
    ]
}

/// Whether marginals built from `n` mod-2 boxes can reach `1/p`:
/// obstructed iff `p` does not divide `2^n`.
pub fn dyadic_obstruction(p: u64, n: u32) -> Result<ObstructionReport, AnalysisError> {
    if p < 2 {
        return Err(AnalysisError::ModulusTooSmall(p));
    }
    let power = BigUint::one() << n;
    let divides = (&power % p).is_zero();
    let mut derivation = uniformity_chain(p);
    derivation.push(step(
        StepRule::Denominators,
        format!(
            "each party's marginal is a sum of products of {n} mod-2 box marginals, \
             all equal to 1/2, so it has the form k/2^{n}"
        ),
    ));
    let (verdict, division, conclusion) = if divides {
        (
            Verdict::NotObstructed,
            format!("{p} divides 2^{n} = {power}, so 1/{p} = k/2^{n} has an integer solution"),
            "no obstruction: the divisibility argument does not rule out a simulation"
                .to_string(),
        )
    } else {
        (
            Verdict::Obstructed,
            format!("1/{p} = k/2^{n} needs {p}·k = 2^{n} = {power}, but {p} does not divide it"),
            format!(
                "contradiction: no deterministic wiring of {n} mod-2 boxes reproduces the \
                 mod-{p} box, and so no randomized one does either"
            ),
        )
    };
    derivation.push(step(StepRule::Divisibility, division));
    derivation.push(step(StepRule::Conclusion, conclusion));
    Ok(ObstructionReport {
        kind: ObstructionKind::Dyadic,
        params: ObstructionParams::Dyadic { p, n },
        verdict,
        derivation,
    })
}

/// Single-box marginals of each resource and the primes in their
/// denominators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceProfile {
    pub alice: Vec<MarginalFamily>,
    pub bob: Vec<MarginalFamily>,
    pub primes: BTreeSet<u64>,
}

impl ResourceProfile {
    /// Every marginal probability of every resource, Alice's then Bob's.
    pub fn values(&self) -> impl Iterator<Item = &ExactRational> {
        self.alice
            .iter()
            .chain(&self.bob)
            .flat_map(|f| f.dist.iter().flatten())
    }
}

pub fn denominator_primes_of(resources: &[BipartiteBox]) -> Result<ResourceProfile, AnalysisError> {
    let mut alice = Vec::with_capacity(resources.len());
    let mut bob = Vec::with_capacity(resources.len());
    for (index, r) in resources.iter().enumerate() {
        if let Some(witness) = r.signalling_witness() {
            return Err(AnalysisError::SignallingResource { index, witness });
        }
        alice.push(r.marginal_family(Party::Alice).expect("no-signalling"));
        bob.push(r.marginal_family(Party::Bob).expect("no-signalling"));
    }
    let mut profile = ResourceProfile {
        alice,
        bob,
        primes: BTreeSet::new(),
    };
    profile.primes = profile.values().flat_map(|v| v.denominator_primes()).collect();
    Ok(profile)
}

fn set_text(primes: &BTreeSet<u64>) -> String {
    let items: Vec<String> = primes.iter().map(u64::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

/// Whether `p` has a prime factor missing from the resources' profile;
/// obstructed iff it does.
pub fn prime_obstruction(p: u64, resources: &[BipartiteBox]) -> Result<ObstructionReport, AnalysisError> {
    if p < 2 {
        return Err(AnalysisError::ModulusTooSmall(p));
    }
    let profile = denominator_primes_of(resources)?;
    let primes = profile.primes;
    let shown = set_text(&primes);
    let fresh: Vec<u64> = prime_factors(&BigUint::from(p))
        .into_iter()
        .filter(|f| !primes.contains(f))
        .collect();
    let mut derivation = vec![step(
        StepRule::Denominators,
        format!(
            "resource marginals have denominators built from the primes {shown}; a party's \
             simulated marginal is an integer combination of products of them, so its \
             reduced denominator uses only primes in {shown}"
        ),
    )];
    derivation.extend(uniformity_chain(p));
    let verdict = if let Some(&q) = fresh.first() {
        derivation.push(step(
            StepRule::Divisibility,
            format!("{q} divides {p} but is not in {shown}, so 1/{p} is not such a value"),
        ));
        derivation.push(step(
            StepRule::Conclusion,
            format!(
                "contradiction: no finite wiring of these resources simulates the mod-{p} box"
            ),
        ));
        Verdict::Obstructed
    } else {
        derivation.push(step(
            StepRule::Divisibility,
            format!("every prime factor of {p} lies in {shown}"),
        ));
        derivation.push(step(
            StepRule::Conclusion,
            "no obstruction: the denominator argument does not rule out a simulation".to_string(),
        ));
        Verdict::NotObstructed
    };
    Ok(ObstructionReport {
        kind: ObstructionKind::DenominatorPrime,
        params: ObstructionParams::DenominatorPrime {
            p,
            profile_primes: primes,
        },
        verdict,
        derivation,
    })
}

/// The smallest prime `p` outside the resource profile, with the report
/// showing the mod-p box cannot be simulated from these resources.
pub fn witness_unsimulable_prime(
    resources: &[BipartiteBox],
) -> Result<(u64, ObstructionReport), AnalysisError> {
    let primes = denominator_primes_of(resources)?.primes;
    let p = (2..)
        .find(|&c| is_prime(c) && !primes.contains(&c))
        .expect("primes are unbounded");
    let report = prime_obstruction(p, resources)?;
    debug_assert!(report.is_obstructed());
    Ok((p, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_num::rat;
    use crate::wiring::{evaluate_wiring, party_marginals, LookupTable, PartyStrategy, Wiring};
    use crate::boxes::BoxShape;

    fn family(side: Party, rows: Vec<Vec<ExactRational>>) -> MarginalFamily {
        MarginalFamily::new(side, rows).unwrap()
    }

    fn uniform3() -> Vec<ExactRational> {
        vec![rat(1, 3); 3]
    }

    fn modp(p: u64) -> BipartiteBox {
        BipartiteBox::modp_nlb(p).unwrap()
    }

    #[test]
    fn uniform_families_pass_all_conditions() {
        let a = family(Party::Alice, vec![uniform3(), uniform3()]);
        let b = family(Party::Bob, vec![uniform3(), uniform3()]);
        assert!(marginal_conditions_check(3, &a, &b).unwrap().all());
    }

    #[test]
    fn skewed_bob_fails_shifted_condition() {
        let a = family(Party::Alice, vec![uniform3(), uniform3()]);
        let b = family(
            Party::Bob,
            vec![uniform3(), vec![rat(1, 2), rat(1, 4), rat(1, 4)]],
        );
        let c = marginal_conditions_check(3, &a, &b).unwrap();
        assert!(c.x0_y0 && c.x1_y0);
        assert!(!c.x1_y1);
    }

    #[test]
    fn alphabet_mismatch_is_an_error() {
        let a = family(Party::Alice, vec![uniform3(), uniform3()]);
        let b = family(Party::Bob, vec![uniform3(), uniform3()]);
        assert!(matches!(
            marginal_conditions_check(2, &a, &b),
            Err(AnalysisError::AlphabetMismatch { .. })
        ));
    }

    /// Every single-resource strategy pair over one mod-2 box, with ternary
    /// outputs, violates at least one condition.
    #[test]
    fn one_pr_box_never_meets_the_mod3_conditions() {
        let target = BoxShape::new(2, 2, 3, 3).unwrap();
        let strategies = || {
            (0..4).flat_map(|input| {
                (0..81).map(move |output| {
                    let digits = |mut v: usize, base: usize, len: usize| {
                        let mut d = vec![0; len];
                        for slot in d.iter_mut().rev() {
                            *slot = v % base;
                            v /= base;
                        }
                        d
                    };
                    PartyStrategy {
                        input_maps: vec![LookupTable::from_dense(&[2], &digits(input, 2, 2))],
                        output_map: LookupTable::from_dense(&[2, 2], &digits(output, 3, 4)),
                    }
                })
            })
        };
        let resources = vec![modp(2)];
        let fams = |party| -> Vec<MarginalFamily> {
            strategies()
                .map(|s| {
                    let w = Wiring {
                        resources: resources.clone(),
                        alice: s.clone(),
                        bob: s,
                        target_shape: target,
                    };
                    party_marginals(&w, party).unwrap()
                })
                .collect()
        };
        let alice: Vec<MarginalFamily> = fams(Party::Alice);
        let bob: Vec<MarginalFamily> = fams(Party::Bob);
        assert_eq!(alice.len(), 324);
        for a in &alice {
            for b in &bob {
                assert!(!marginal_conditions_check(3, a, b).unwrap().all());
            }
        }
    }

    #[test]
    fn identity_wiring_meets_the_mod2_conditions() {
        let w = Wiring::identity(modp(2));
        let a = party_marginals(&w, Party::Alice).unwrap();
        let b = party_marginals(&w, Party::Bob).unwrap();
        assert!(marginal_conditions_check(2, &a, &b).unwrap().all());
    }

    #[test]
    fn dyadic_examples() {
        for n in 0..=64 {
            let r = dyadic_obstruction(3, n).unwrap();
            assert!(r.is_obstructed(), "N = {n}");
        }
        let r = dyadic_obstruction(2, 1).unwrap();
        assert_eq!(r.verdict, Verdict::NotObstructed);
        assert_eq!(evaluate_wiring(&Wiring::identity(modp(2))).unwrap(), modp(2));
        assert!(dyadic_obstruction(5, 10).unwrap().is_obstructed());
        assert!(!dyadic_obstruction(4, 2).unwrap().is_obstructed());
        assert!(dyadic_obstruction(8, 2).unwrap().is_obstructed());
        assert!(dyadic_obstruction(1, 2).is_err());
    }

    #[test]
    fn dyadic_derivation_follows_the_chain() {
        use StepRule::*;
        assert_eq!(
            dyadic_obstruction(3, 4).unwrap().rules(),
            vec![
                MarginalConditions,
                InputIndependence,
                ShiftInvariance,
                Uniformity,
                Denominators,
                Divisibility,
                Conclusion
            ]
        );
    }

    #[test]
    fn profile_examples() {
        let set = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
        assert_eq!(denominator_primes_of(&[modp(2)]).unwrap().primes, set(&[2]));
        assert_eq!(
            denominator_primes_of(&[modp(2), modp(3)]).unwrap().primes,
            set(&[2, 3])
        );
        assert_eq!(denominator_primes_of(&[modp(6)]).unwrap().primes, set(&[2, 3]));
        assert!(denominator_primes_of(&[]).unwrap().primes.is_empty());
    }

    #[test]
    fn witness_prime_examples() {
        assert_eq!(witness_unsimulable_prime(&[modp(2)]).unwrap().0, 3);
        assert_eq!(witness_unsimulable_prime(&[modp(2), modp(3)]).unwrap().0, 5);
        let small: Vec<BipartiteBox> = [2, 3, 5, 7, 11, 13].into_iter().map(modp).collect();
        let (p, report) = witness_unsimulable_prime(&small).unwrap();
        assert_eq!(p, 17);
        assert!(report.is_obstructed());
        assert_eq!(witness_unsimulable_prime(&[]).unwrap().0, 2);
    }

    #[test]
    fn prime_obstruction_verdicts() {
        assert!(!prime_obstruction(6, &[modp(2), modp(3)]).unwrap().is_obstructed());
        assert!(prime_obstruction(10, &[modp(2), modp(3)]).unwrap().is_obstructed());
    }

    #[test]
    fn signalling_resource_rejected() {
        let s = BoxShape::new(2, 2, 2, 2).unwrap();
        // Alice's output copies Bob's input.
        let table = (0..16)
            .map(|i| {
                let (y, a, b) = ((i >> 2) & 1, (i >> 1) & 1, i & 1);
                if b == 0 && a == y { rat(1, 1) } else { rat(0, 1) }
            })
            .collect();
        let sig = BipartiteBox::from_flat(s, table).unwrap();
        assert!(matches!(
            denominator_primes_of(&[modp(2), sig]),
            Err(AnalysisError::SignallingResource { index: 1, .. })
        ));
    }
}
