//! Exhaustive search over deterministic wirings.
//!
//! The space is every pair of party strategies over a fixed resource list
//! (shared query order = list order). Wirings are ordered lexicographically
//! by the tuple (Alice input maps, Bob input maps, Alice output map, Bob
//! output map), each table read as its dense value vector in lexicographic
//! key order.
//!
//! The pruned engine fixes both parties' input maps (a "combo"), computes
//! the joint support of resource outcomes for every input pair, and then
//! branches only on Alice's output map. Bob's output map never needs to be
//! enumerated: the objective splits into independent per-cell terms for
//! each of Bob's `(y, z_B)` cells, so his best response is a per-cell
//! argmax. Partial Alice assignments are cut with a bound (Bob's current
//! per-cell maxima plus the most the unassigned Alice cells could add).
//!
//! Two modes:
//! - optimization, used by game searches and by perfect-simulation
//!   searches whose naive size fits the budget. Alice's cells are assigned
//!   in index order and the reported witness is the least maximizer.
//! - feasibility, for larger perfect-simulation searches. Only branches
//!   that can still reach the full score survive. For mod-p resources the
//!   support forces Bob's output from Alice's, so cells are assigned in
//!   connectivity order and a single inconsistent pair ends the branch.
//!   The witness is the first exact match in that order.
//!
//! Combos are independent units of work. They are evaluated in parallel and
//! merged in combo order, so results and counts do not depend on the number
//! of workers.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use thiserror::Error;

use crate::boxes::{boxes_equal, BipartiteBox, BoxShape, Party, SignallingWitness};
use crate::exact_num::{common_denominator, ExactRational};
use crate::locality::{Game, LocalityError};
use crate::wiring::{encode, evaluate_wiring, DenseStrategy, PartyLayout, Wiring};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search needs about {estimate} checks, above the budget of {budget}")]
    BudgetExceeded { estimate: String, budget: u64 },
    #[error("resource {index} signals: {witness}")]
    SignallingResource {
        index: usize,
        witness: SignallingWitness,
    },
    #[error("scaled probabilities overflow 128-bit integers")]
    Overflow,
    #[error(transparent)]
    Locality(#[from] LocalityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of checks before the search refuses.
    pub budget: u64,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    /// Branch-and-bound over Alice's output map with Bob's best response
    /// (true), or plain enumeration of both output maps (false).
    pub pruning: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: DEFAULT_BUDGET,
            workers: 0,
            pruning: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Wiring),
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    /// Checks performed: search-tree nodes plus exact comparisons when
    /// pruning, (Alice, Bob) strategy pairs otherwise.
    pub strategies_examined: u64,
    /// Best objective seen. For perfect-simulation searches the objective
    /// is the probability that the output lands in the target's support
    /// (uniform inputs); for game searches it is the game value.
    pub best_value: ExactRational,
    pub best_witness: Wiring,
}

impl SearchResult {
    pub fn is_found(&self) -> bool {
        matches!(self.outcome, SearchOutcome::Found(_))
    }
}

/// Looks for a deterministic wiring whose output equals `target` exactly.
///
/// `Exhausted` means no deterministic wiring works, which also rules out
/// every shared-randomness protocol: a mixture reproduces the target only
/// if each of its deterministic components does.
pub fn search_perfect(
    target: &BipartiteBox,
    resources: &[BipartiteBox],
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let game = Game::support_of(target);
    run(Problem::new(&game, Some(target), resources)?, config)
}

/// Best game value over all deterministic wirings. By linearity no
/// shared-randomness mixture can do better. The outcome is always
/// `Exhausted`; the answer is in `best_value` and `best_witness`.
pub fn best_success(
    game: &Game,
    resources: &[BipartiteBox],
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    run(Problem::new(game, None, resources)?, config)
}

fn to_i128(v: &BigInt) -> Result<i128, SearchError> {
    v.to_i128().ok_or(SearchError::Overflow)
}

fn scaled(v: &ExactRational, scale: &BigInt) -> Result<i128, SearchError> {
    to_i128(&(v.numer() * (scale / v.denom())))
}

/// Dense tables of one party's input maps, enumerated as one mixed-radix
/// counter (first table's first entry most significant).
#[derive(Debug, Clone)]
struct InputSpace {
    sizes: Vec<usize>,
    codomains: Vec<usize>,
}

impl InputSpace {
    fn new(layout: &PartyLayout) -> Self {
        InputSpace {
            sizes: layout.input_radices.iter().map(|r| r.iter().product()).collect(),
            codomains: layout.input_codomain.clone(),
        }
    }

    /// Number of input-map choices, or `None` above `u64`.
    fn count(&self) -> Option<u64> {
        let mut n: u64 = 1;
        for (&s, &c) in self.sizes.iter().zip(&self.codomains) {
            for _ in 0..s {
                n = n.checked_mul(c as u64)?;
            }
        }
        Some(n)
    }

    fn decode(&self, mut idx: u64) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| vec![0; s]).collect();
        for (table, &c) in out.iter_mut().zip(&self.codomains).rev() {
            for slot in table.iter_mut().rev() {
                *slot = (idx % c as u64) as usize;
                idx /= c as u64;
            }
        }
        out
    }
}

struct ResourceInt {
    shape: BoxShape,
    /// Nonzero outcomes per input pair: (a, b, scaled probability).
    support: Vec<Vec<(usize, usize, i128)>>,
}

struct Problem {
    target_shape: BoxShape,
    resources: Vec<BipartiteBox>,
    res: Vec<ResourceInt>,
    la: PartyLayout,
    lb: PartyLayout,
    alice_inputs: InputSpace,
    bob_inputs: InputSpace,
    /// Input weight per (x, y), scaled.
    pi: Vec<i128>,
    /// Payoff `[x][y][a][b]`, scaled.
    pay: Vec<i128>,
    /// Max payoff per (x, y).
    max_pay: Vec<i128>,
    /// Denominator of every objective value.
    scale: BigInt,
    /// Largest attainable objective (every outcome earns its max payoff).
    full: i128,
    /// Target entries scaled by the product of resource denominators, or
    /// `None` where that is not an integer.
    exact: Option<Vec<Option<i128>>>,
}

impl Problem {
    fn new(
        game: &Game,
        target: Option<&BipartiteBox>,
        resources: &[BipartiteBox],
    ) -> Result<Self, SearchError> {
        for (index, r) in resources.iter().enumerate() {
            if let Some(witness) = r.signalling_witness() {
                return Err(SearchError::SignallingResource { index, witness });
            }
        }
        let t = game.shape();
        let mut prob_scale = BigInt::one();
        let mut res = Vec::with_capacity(resources.len());
        for r in resources {
            let d = common_denominator(r.flat());
            prob_scale *= &d;
            let s = r.shape();
            let mut support = Vec::with_capacity(s.input_pairs());
            for x in 0..s.x_size {
                for y in 0..s.y_size {
                    let mut row = Vec::new();
                    for a in 0..s.a_size {
                        for b in 0..s.b_size {
                            let p = r.prob(x, y, a, b);
                            if !p.is_zero() {
                                row.push((a, b, scaled(p, &d)?));
                            }
                        }
                    }
                    support.push(row);
                }
            }
            res.push(ResourceInt { shape: s, support });
        }
        let pi_inputs: Vec<ExactRational> = (0..t.x_size)
            .flat_map(|x| (0..t.y_size).map(move |y| (x, y)))
            .map(|(x, y)| game.input_prob(x, y).clone())
            .collect();
        let pi_scale = common_denominator(&pi_inputs);
        let pay_scale = common_denominator(game.payoff_flat());
        let pi = pi_inputs
            .iter()
            .map(|v| scaled(v, &pi_scale))
            .collect::<Result<Vec<_>, _>>()?;
        let pay = game
            .payoff_flat()
            .iter()
            .map(|v| scaled(v, &pay_scale))
            .collect::<Result<Vec<_>, _>>()?;
        let outcomes = t.outcomes();
        let max_pay: Vec<i128> = pay
            .chunks(outcomes)
            .map(|c| *c.iter().max().expect("nonempty row"))
            .collect();
        let prob_total = to_i128(&prob_scale)?;
        let mut full: i128 = 0;
        for (w, m) in pi.iter().zip(&max_pay) {
            let term = w
                .checked_mul(*m)
                .and_then(|v| v.checked_mul(prob_total))
                .ok_or(SearchError::Overflow)?;
            full = full.checked_add(term).ok_or(SearchError::Overflow)?;
        }
        let scale = &pi_scale * &pay_scale * &prob_scale;
        to_i128(&scale)?;
        let exact = target.map(|tb| {
            tb.flat()
                .iter()
                .map(|v| {
                    let n = v.numer() * &prob_scale;
                    if (&n % v.denom()) == BigInt::ZERO {
                        (n / v.denom()).to_i128()
                    } else {
                        None
                    }
                })
                .collect()
        });
        let la = PartyLayout::new(Party::Alice, resources, t);
        let lb = PartyLayout::new(Party::Bob, resources, t);
        Ok(Problem {
            target_shape: t,
            resources: resources.to_vec(),
            res,
            alice_inputs: InputSpace::new(&la),
            bob_inputs: InputSpace::new(&lb),
            la,
            lb,
            pi,
            pay,
            max_pay,
            scale,
            full,
            exact,
        })
    }

    fn alice_cells(&self) -> usize {
        self.la.output_radices.iter().product()
    }

    fn bob_cells(&self) -> usize {
        self.lb.output_radices.iter().product()
    }

    /// Every joint resource outcome reachable under fixed input maps.
    fn leaves(&self, alice_in: &[Vec<usize>], bob_in: &[Vec<usize>]) -> Vec<Leaf> {
        let t = self.target_shape;
        let mut out = Vec::new();
        let mut za = Vec::with_capacity(self.res.len() + 1);
        let mut zb = Vec::with_capacity(self.res.len() + 1);
        for x in 0..t.x_size {
            for y in 0..t.y_size {
                za.clear();
                zb.clear();
                za.push(x);
                zb.push(y);
                self.walk(0, 1, alice_in, bob_in, &mut za, &mut zb, &mut out);
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        l: usize,
        prob: i128,
        alice_in: &[Vec<usize>],
        bob_in: &[Vec<usize>],
        za: &mut Vec<usize>,
        zb: &mut Vec<usize>,
        out: &mut Vec<Leaf>,
    ) {
        if l == self.res.len() {
            let (x, y) = (za[0], zb[0]);
            out.push(Leaf {
                xy: x * self.target_shape.y_size + y,
                x,
                y,
                acell: encode(&self.la.output_radices, za),
                bcell: encode(&self.lb.output_radices, zb),
                prob,
            });
            return;
        }
        let xl = alice_in[l][encode(&self.la.input_radices[l], za)];
        let yl = bob_in[l][encode(&self.lb.input_radices[l], zb)];
        let r = &self.res[l];
        for &(a, b, p) in &r.support[xl * r.shape.y_size + yl] {
            za.push(a);
            zb.push(b);
            self.walk(l + 1, prob * p, alice_in, bob_in, za, zb, out);
            za.pop();
            zb.pop();
        }
    }

    fn value(&self, leaves: &[Leaf], alice_out: &[usize], bob_out: &[usize]) -> i128 {
        let t = self.target_shape;
        leaves
            .iter()
            .map(|lf| {
                self.pi[lf.xy] * lf.prob * self.pay[t.index(lf.x, lf.y, alice_out[lf.acell], bob_out[lf.bcell])]
            })
            .sum()
    }

    /// Exact comparison of the wiring's scaled table with the target.
    fn matches_target(&self, leaves: &[Leaf], alice_out: &[usize], bob_out: &[usize]) -> bool {
        let Some(exact) = &self.exact else {
            return false;
        };
        let t = self.target_shape;
        let mut table = vec![0i128; t.len()];
        for lf in leaves {
            table[t.index(lf.x, lf.y, alice_out[lf.acell], bob_out[lf.bcell])] += lf.prob;
        }
        table
            .iter()
            .zip(exact)
            .all(|(v, e)| Some(*v) == *e)
    }

    fn wiring(&self, alice: DenseStrategy, bob: DenseStrategy) -> Wiring {
        Wiring {
            resources: self.resources.clone(),
            alice: alice.to_strategy(&self.la),
            bob: bob.to_strategy(&self.lb),
            target_shape: self.target_shape,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Leaf {
    xy: usize,
    x: usize,
    y: usize,
    acell: usize,
    bcell: usize,
    prob: i128,
}

/// Shared check counter with cooperative cancellation on budget overrun.
struct Meter {
    spent: AtomicU64,
    budget: u64,
    aborted: AtomicBool,
}

const FLUSH: u64 = 1 << 14;

struct LocalMeter<'a> {
    meter: &'a Meter,
    pending: u64,
    total: u64,
}

impl LocalMeter<'_> {
    /// Counts one check; false once the budget is gone.
    #[inline]
    fn tick(&mut self) -> bool {
        self.pending += 1;
        self.total += 1;
        if self.pending >= FLUSH {
            return self.flush();
        }
        true
    }

    fn flush(&mut self) -> bool {
        let m = self.meter;
        let now = m.spent.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
        self.pending = 0;
        if now > m.budget {
            m.aborted.store(true, Ordering::Relaxed);
        }
        !m.aborted.load(Ordering::Relaxed)
    }
}

/// Result of one combo (fixed input maps for both parties).
#[derive(Debug, Clone)]
struct ComboResult {
    best: Option<(i128, Vec<usize>, Vec<usize>)>,
    found: Option<(Vec<usize>, Vec<usize>)>,
    checks: u64,
}

fn run(problem: Problem, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    let na = problem.alice_inputs.count();
    let nb = problem.bob_inputs.count();
    let combos = na.zip(nb).and_then(|(a, b)| a.checked_mul(b));

    let pow = |base: usize, exp: usize| -> Option<u64> {
        (0..exp).try_fold(1u64, |acc, _| acc.checked_mul(base as u64))
    };
    let alice_out = pow(problem.target_shape.a_size, problem.alice_cells());
    let bob_out = pow(problem.target_shape.b_size, problem.bob_cells());
    // Naive sizes: strategy pairs without pruning; (Alice strategy, Bob
    // input maps) pairs with it.
    let estimate = if config.pruning {
        combos.zip(alice_out).and_then(|(c, a)| c.checked_mul(a))
    } else {
        combos
            .zip(alice_out)
            .zip(bob_out)
            .and_then(|((c, a), b)| c.checked_mul(a)?.checked_mul(b))
    };
    let refuse = || SearchError::BudgetExceeded {
        estimate: estimate.map_or_else(|| "more than 2^64".to_string(), |e| e.to_string()),
        budget: config.budget,
    };
    let combos = match combos {
        Some(c) if c <= config.budget => c,
        _ => return Err(refuse()),
    };
    let over = estimate.is_none_or(|e| e > config.budget);
    if !config.pruning && over {
        return Err(refuse());
    }
    let nb = nb.expect("checked above");
    // Exact optimization of the support value is only affordable when the
    // naive space fits the budget. Beyond that a perfect-simulation search
    // only follows branches that can still reach the full value, and
    // `best_value` is the best seen on those branches.
    let feasibility = problem.exact.is_some() && over;

    let meter = Meter {
        spent: AtomicU64::new(0),
        budget: config.budget,
        aborted: AtomicBool::new(false),
    };
    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");

    let solve = |k: u64, floor: Option<i128>| -> ComboResult {
        let alice_in = problem.alice_inputs.decode(k / nb);
        let bob_in = problem.bob_inputs.decode(k % nb);
        let leaves = problem.leaves(&alice_in, &bob_in);
        let mut local = LocalMeter {
            meter: &meter,
            pending: 0,
            total: 0,
        };
        let mut r = if config.pruning {
            BranchAndBound::new(&problem, &leaves, floor, feasibility).run(&mut local)
        } else {
            enumerate_combo(&problem, &leaves, &mut local)
        };
        local.flush();
        r.checks = local.total;
        r
    };

    // Combos run in fixed blocks. The best value of all earlier blocks is a
    // floor for the next one: a combo that cannot reach it cannot win the
    // merge. Block boundaries do not depend on the worker count, so neither
    // do the results or the counts.
    const BLOCK: u64 = 256;
    let mut merged: Option<(i128, u64, Vec<usize>, Vec<usize>)> = None;
    let mut found: Option<(u64, Vec<usize>, Vec<usize>)> = None;
    let mut examined: u64 = 0;
    let mut start = 0;
    while start < combos {
        let end = (start + BLOCK).min(combos);
        let floor = if feasibility {
            Some(problem.full)
        } else {
            merged.as_ref().map(|m| m.0)
        };
        let results: Vec<ComboResult> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|k| solve(k, floor))
                .collect()
        });
        if meter.aborted.load(Ordering::Relaxed) {
            return Err(refuse());
        }
        for (offset, r) in results.into_iter().enumerate() {
            let k = start + offset as u64;
            examined += r.checks;
            if found.is_none() {
                if let Some((a, b)) = r.found {
                    found = Some((k, a, b));
                }
            }
            if let Some((v, a, b)) = r.best {
                if merged.as_ref().is_none_or(|(bv, ..)| v > *bv) {
                    merged = Some((v, k, a, b));
                }
            }
        }
        if found.is_some() {
            break;
        }
        start = end;
    }

    let dense = |k: u64, out_a: Vec<usize>, out_b: Vec<usize>| {
        (
            DenseStrategy {
                input_maps: problem.alice_inputs.decode(k / nb),
                output_map: out_a,
            },
            DenseStrategy {
                input_maps: problem.bob_inputs.decode(k % nb),
                output_map: out_b,
            },
        )
    };
    let (best_raw, bk, ba, bb) = merged.unwrap_or_else(|| {
        // Feasibility mode reached no leaf: report the first wiring.
        let (da, db) = dense(0, vec![0; problem.alice_cells()], vec![0; problem.bob_cells()]);
        let leaves = problem.leaves(&da.input_maps, &db.input_maps);
        (problem.value(&leaves, &da.output_map, &db.output_map), 0, da.output_map, db.output_map)
    });
    let best_value = ExactRational::new(best_raw, problem.scale.clone()).expect("nonzero scale");
    let (outcome, best_witness) = match found {
        Some((k, a, b)) => {
            let (da, db) = dense(k, a, b);
            let w = problem.wiring(da, db);
            (SearchOutcome::Found(w.clone()), w)
        }
        None => {
            let (da, db) = dense(bk, ba, bb);
            (SearchOutcome::Exhausted, problem.wiring(da, db))
        }
    };
    Ok(SearchResult {
        outcome,
        strategies_examined: examined,
        best_value,
        best_witness,
    })
}

/// Plain enumeration of both output maps for one combo.
fn enumerate_combo(p: &Problem, leaves: &[Leaf], meter: &mut LocalMeter) -> ComboResult {
    let t = p.target_shape;
    let (na, nb) = (p.alice_cells(), p.bob_cells());
    let mut alice = vec![0usize; na];
    let mut best: Option<(i128, Vec<usize>, Vec<usize>)> = None;
    let mut found = None;
    'alice: loop {
        let mut bob = vec![0usize; nb];
        loop {
            if !meter.tick() {
                break 'alice;
            }
            let value = p.value(leaves, &alice, &bob);
            if best.as_ref().is_none_or(|(v, ..)| value > *v) {
                best = Some((value, alice.clone(), bob.clone()));
            }
            if found.is_none() && value == p.full && p.matches_target(leaves, &alice, &bob) {
                found = Some((alice.clone(), bob.clone()));
            }
            if !odometer(&mut bob, t.b_size) {
                break;
            }
        }
        if !odometer(&mut alice, t.a_size) {
            break;
        }
    }
    ComboResult {
        best,
        found,
        checks: 0,
    }
}

/// Advances a lexicographic counter (last digit fastest); false on wrap.
fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

struct AliceCell {
    index: usize,
    /// (bob cell, x·|Y|+y, input weight × probability)
    leaves: Vec<(usize, usize, i128)>,
    touched: Vec<usize>,
    max_gain: i128,
}

/// Reorders cells so that each one shares as many of Bob's cells as
/// possible with those before it (ties to the lower index). A cell that
/// meets already-constrained Bob cells has few values that keep the full
/// score, so conflicts surface near the root.
fn connectivity_order(cells: Vec<AliceCell>, bob_cells: usize) -> Vec<AliceCell> {
    let mut seen = vec![false; bob_cells];
    let mut pending: Vec<Option<AliceCell>> = cells.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(pending.len());
    while out.len() < pending.len() {
        let pick = pending
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
            .max_by_key(|(i, c)| {
                let shared = c.touched.iter().filter(|&&b| seen[b]).count();
                (shared, std::cmp::Reverse(*i))
            })
            .map(|(i, _)| i)
            .expect("cells remain");
        let cell = pending[pick].take().expect("unpicked");
        for &b in &cell.touched {
            seen[b] = true;
        }
        out.push(cell);
    }
    out
}

struct BranchAndBound<'a> {
    p: &'a Problem,
    leaves: &'a [Leaf],
    cells: Vec<AliceCell>,
    b_size: usize,
    outcomes: usize,
    score: Vec<i128>,
    cell_best: Vec<i128>,
    sum_best: i128,
    remaining: i128,
    alice: Vec<usize>,
    incumbent: Option<i128>,
    /// Value already achieved by an earlier combo.
    floor: Option<i128>,
    best: Option<(i128, Vec<usize>, Vec<usize>)>,
    found: Option<(Vec<usize>, Vec<usize>)>,
    perfect: bool,
    stop: bool,
}

impl<'a> BranchAndBound<'a> {
    fn new(p: &'a Problem, leaves: &'a [Leaf], floor: Option<i128>, connected: bool) -> Self {
        let t = p.target_shape;
        let mut by_cell: Vec<Vec<(usize, usize, i128)>> = vec![Vec::new(); p.alice_cells()];
        for lf in leaves {
            by_cell[lf.acell].push((lf.bcell, lf.xy, p.pi[lf.xy] * lf.prob));
        }
        let mut cells: Vec<AliceCell> = by_cell
            .into_iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(index, leaves)| {
                let mut touched: Vec<usize> = leaves.iter().map(|l| l.0).collect();
                touched.sort_unstable();
                touched.dedup();
                let max_gain = leaves.iter().map(|&(_, xy, w)| w * p.max_pay[xy]).sum();
                AliceCell {
                    index,
                    leaves,
                    touched,
                    max_gain,
                }
            })
            .collect();
        let nb = p.bob_cells();
        if connected {
            cells = connectivity_order(cells, nb);
        }
        let remaining = cells.iter().map(|c| c.max_gain).sum();
        BranchAndBound {
            p,
            leaves,
            cells,
            b_size: t.b_size,
            outcomes: t.outcomes(),
            score: vec![0; nb * t.b_size],
            cell_best: vec![0; nb],
            sum_best: 0,
            remaining,
            alice: vec![0; p.alice_cells()],
            incumbent: None,
            floor,
            best: None,
            found: None,
            perfect: p.exact.is_some(),
            stop: false,
        }
    }

    fn run(mut self, meter: &mut LocalMeter) -> ComboResult {
        self.descend(0, meter);
        ComboResult {
            best: self.best,
            found: self.found,
            checks: 0,
        }
    }

    fn apply(&mut self, ci: usize, a: usize, sign: i128) {
        let cell = &self.cells[ci];
        let bs = self.b_size;
        for &(bcell, xy, w) in &cell.leaves {
            let pay = &self.p.pay[xy * self.outcomes + a * bs..][..bs];
            let sc = &mut self.score[bcell * bs..][..bs];
            for (s, &q) in sc.iter_mut().zip(pay) {
                if q != 0 {
                    *s += sign * w * q;
                }
            }
        }
        for &bcell in &cell.touched {
            let new = *self.score[bcell * bs..][..bs].iter().max().expect("b_size >= 1");
            self.sum_best += new - self.cell_best[bcell];
            self.cell_best[bcell] = new;
        }
        self.remaining -= sign * cell.max_gain;
    }

    fn worth_exploring(&self, bound: i128) -> bool {
        if self.floor.is_some_and(|f| bound < f) {
            return false;
        }
        match self.incumbent {
            None => true,
            Some(inc) => {
                bound > inc
                    || (bound == inc && self.perfect && inc == self.p.full && self.found.is_none())
            }
        }
    }

    fn descend(&mut self, depth: usize, meter: &mut LocalMeter) {
        if depth == self.cells.len() {
            self.leaf(meter);
            return;
        }
        let index = self.cells[depth].index;
        for a in 0..self.p.target_shape.a_size {
            if self.stop {
                return;
            }
            if !meter.tick() {
                self.stop = true;
                return;
            }
            self.apply(depth, a, 1);
            self.alice[index] = a;
            if self.worth_exploring(self.sum_best + self.remaining) {
                self.descend(depth + 1, meter);
            }
            self.apply(depth, a, -1);
            self.alice[index] = 0;
        }
    }

    fn bob_response(&self) -> Vec<usize> {
        let bs = self.b_size;
        self.score
            .chunks(bs)
            .zip(&self.cell_best)
            .map(|(s, best)| s.iter().position(|v| v == best).expect("max is attained"))
            .collect()
    }

    fn leaf(&mut self, meter: &mut LocalMeter) {
        let value = self.sum_best;
        if self.incumbent.is_none_or(|inc| value > inc) {
            self.incumbent = Some(value);
            self.best = Some((value, self.alice.clone(), self.bob_response()));
        }
        if self.perfect && self.found.is_none() && value == self.p.full {
            self.try_exact(meter);
        }
    }

    /// Every Bob map that keeps each reached cell at its maximum, in
    /// lexicographic order, compared exactly against the target.
    fn try_exact(&mut self, meter: &mut LocalMeter) {
        let bs = self.b_size;
        let mut reached = vec![false; self.cell_best.len()];
        for lf in self.leaves {
            reached[lf.bcell] = true;
        }
        let options: Vec<Vec<usize>> = self
            .score
            .chunks(bs)
            .zip(&self.cell_best)
            .zip(&reached)
            .map(|((s, best), &r)| {
                if r {
                    (0..bs).filter(|&b| s[b] == *best).collect()
                } else {
                    vec![0]
                }
            })
            .collect();
        let mut pick = vec![0usize; options.len()];
        loop {
            if !meter.tick() {
                self.stop = true;
                return;
            }
            let bob: Vec<usize> = pick.iter().zip(&options).map(|(&i, o)| o[i]).collect();
            if self.p.matches_target(self.leaves, &self.alice, &bob) {
                self.found = Some((self.alice.clone(), bob));
                self.stop = true;
                return;
            }
            let mut advanced = false;
            for (i, o) in pick.iter_mut().zip(&options).rev() {
                *i += 1;
                if *i < o.len() {
                    advanced = true;
                    break;
                }
                *i = 0;
            }
            if !advanced {
                return;
            }
        }
    }
}

/// Re-checks a found witness along the exact rational path.
pub fn verify_found(result: &SearchResult, target: &BipartiteBox) -> bool {
    match &result.outcome {
        SearchOutcome::Found(w) => evaluate_wiring(w).is_ok_and(|b| boxes_equal(&b, target)),
        SearchOutcome::Exhausted => true,
    }
}
