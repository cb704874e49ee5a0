//! Local polytope membership, nonlocal games and classical bounds.
//!
//! A deterministic local strategy is a pair of functions `a = f(x)`,
//! `b = g(y)`; these are the vertices of the local polytope. Membership is
//! decided exactly with the rational simplex in [`crate::lp`]. A local box
//! comes back with mixture weights over vertices; a nonlocal one with a Bell
//! functional written as a success game (uniform inputs, payoffs in `[0,1]`),
//! so that its local bound reads as a classical winning probability.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxes::{BipartiteBox, BoxError, BoxShape};
use crate::exact_num::ExactRational;
use crate::lp::{LinearProgram, LpOutcome};

pub const DEFAULT_VERTEX_CAP: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum LocalityError {
    #[error("{count} deterministic vertices exceed the cap of {cap}")]
    VertexCapExceeded { count: u128, cap: u128 },
    #[error("shape mismatch: box is {box_shape}, game is {game_shape}")]
    ShapeMismatch {
        box_shape: BoxShape,
        game_shape: BoxShape,
    },
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error(transparent)]
    Box(#[from] BoxError),
}

/// Number of deterministic strategies `|A|^|X| · |B|^|Y|`, saturating.
pub fn vertex_count(shape: BoxShape) -> u128 {
    let pow = |base: usize, exp: usize| -> u128 {
        (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
    };
    pow(shape.a_size, shape.x_size).saturating_mul(pow(shape.b_size, shape.y_size))
}

fn check_cap(shape: BoxShape, cap: u128) -> Result<u128, LocalityError> {
    let count = vertex_count(shape);
    if count > cap {
        return Err(LocalityError::VertexCapExceeded { count, cap });
    }
    Ok(count)
}

/// A deterministic local strategy: `a = alice[x]`, `b = bob[y]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalVertex {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl LocalVertex {
    /// Decodes a position in the lexicographic order of
    /// (Alice function, Bob function), first input most significant.
    pub fn from_index(shape: BoxShape, index: u128) -> Self {
        let bob_count = (0..shape.y_size).fold(1u128, |acc, _| acc * shape.b_size as u128);
        let decode = |mut n: u128, len: usize, base: usize| {
            let mut out = vec![0; len];
            for slot in out.iter_mut().rev() {
                *slot = (n % base as u128) as usize;
                n /= base as u128;
            }
            out
        };
        LocalVertex {
            alice: decode(index / bob_count, shape.x_size, shape.a_size),
            bob: decode(index % bob_count, shape.y_size, shape.b_size),
        }
    }

    pub fn index(&self, shape: BoxShape) -> u128 {
        let encode = |f: &[usize], base: usize| {
            f.iter().fold(0u128, |acc, &v| acc * base as u128 + v as u128)
        };
        let bob_count = (0..shape.y_size).fold(1u128, |acc, _| acc * shape.b_size as u128);
        encode(&self.alice, shape.a_size) * bob_count + encode(&self.bob, shape.b_size)
    }

    pub fn to_box(&self, shape: BoxShape) -> BipartiteBox {
        BipartiteBox::deterministic(shape, &self.alice, &self.bob)
            .expect("vertex functions match the shape")
    }
}

/// Iterates deterministic strategies in lexicographic order.
pub fn vertex_iter(shape: BoxShape) -> impl Iterator<Item = LocalVertex> {
    let count = vertex_count(shape);
    (0..count).map(move |i| LocalVertex::from_index(shape, i))
}

/// All deterministic boxes of `shape`, in lexicographic order.
pub fn local_vertices(shape: BoxShape, cap: u128) -> Result<Vec<BipartiteBox>, LocalityError> {
    shape.check()?;
    check_cap(shape, cap)?;
    Ok(vertex_iter(shape).map(|v| v.to_box(shape)).collect())
}

/// A two-party game: inputs drawn from `input_dist[x][y]`, payoff
/// `payoff[x][y][a][b]` (stored flat like a box table).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    shape: BoxShape,
    input_dist: Vec<ExactRational>,
    payoff: Vec<ExactRational>,
}

impl Game {
    pub fn new(
        shape: BoxShape,
        input_dist: Vec<ExactRational>,
        payoff: Vec<ExactRational>,
    ) -> Result<Self, LocalityError> {
        shape.check()?;
        if input_dist.len() != shape.input_pairs() {
            return Err(LocalityError::InvalidGame(format!(
                "input distribution has {} entries, expected {}",
                input_dist.len(),
                shape.input_pairs()
            )));
        }
        if payoff.len() != shape.len() {
            return Err(LocalityError::InvalidGame(format!(
                "payoff has {} entries, expected {}",
                payoff.len(),
                shape.len()
            )));
        }
        if let Some(i) = input_dist.iter().position(ExactRational::is_negative) {
            return Err(LocalityError::InvalidGame(format!(
                "input probability for (x={}, y={}) is negative",
                i / shape.y_size,
                i % shape.y_size
            )));
        }
        let total: ExactRational = input_dist.iter().sum();
        if !total.is_one() {
            return Err(LocalityError::InvalidGame(format!(
                "input distribution sums to {total}"
            )));
        }
        Ok(Game {
            shape,
            input_dist,
            payoff,
        })
    }

    fn uniform_inputs(shape: BoxShape) -> Vec<ExactRational> {
        let w = ExactRational::new(1, shape.input_pairs() as u64).expect("nonempty");
        vec![w; shape.input_pairs()]
    }

    /// Uniform inputs, payoff 1 where `win(x, y, a, b)` holds.
    pub fn from_predicate(
        shape: BoxShape,
        win: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self, LocalityError> {
        shape.check()?;
        let mut payoff = vec![ExactRational::zero(); shape.len()];
        for x in 0..shape.x_size {
            for y in 0..shape.y_size {
                for a in 0..shape.a_size {
                    for b in 0..shape.b_size {
                        if win(x, y, a, b) {
                            payoff[shape.index(x, y, a, b)] = ExactRational::one();
                        }
                    }
                }
            }
        }
        Game::new(shape, Self::uniform_inputs(shape), payoff)
    }

    /// CHSH as a success game: win iff `a ⊕ b = x·y`.
    pub fn chsh() -> Self {
        Self::modp(2).expect("p = 2")
    }

    /// Win iff `b - a ≡ x·y (mod p)`.
    pub fn modp(p: u64) -> Result<Self, LocalityError> {
        if p < 2 {
            return Err(BoxError::ModulusTooSmall(p).into());
        }
        let n = p as usize;
        let shape = BoxShape::new(2, 2, n, n)?;
        Self::from_predicate(shape, |x, y, a, b| (b + n - a) % n == (x * y) % n)
    }

    /// Win iff the outcome lies in the support of `target`.
    pub fn support_of(target: &BipartiteBox) -> Self {
        let s = target.shape();
        Self::from_predicate(s, |x, y, a, b| !target.prob(x, y, a, b).is_zero())
            .expect("target shape is valid")
    }

    pub fn shape(&self) -> BoxShape {
        self.shape
    }

    pub fn input_prob(&self, x: usize, y: usize) -> &ExactRational {
        &self.input_dist[x * self.shape.y_size + y]
    }

    pub fn payoff(&self, x: usize, y: usize, a: usize, b: usize) -> &ExactRational {
        &self.payoff[self.shape.index(x, y, a, b)]
    }

    pub fn payoff_flat(&self) -> &[ExactRational] {
        &self.payoff
    }

    /// Value of a deterministic strategy.
    pub fn vertex_value(&self, v: &LocalVertex) -> ExactRational {
        let s = self.shape;
        let mut total = ExactRational::zero();
        for x in 0..s.x_size {
            for y in 0..s.y_size {
                let w = self.input_prob(x, y);
                if w.is_zero() {
                    continue;
                }
                let pay = self.payoff(x, y, v.alice[x], v.bob[y]);
                if !pay.is_zero() {
                    total += &(w * pay);
                }
            }
        }
        total
    }

    pub fn to_document(&self) -> GameDocument {
        let s = self.shape;
        let input_dist = (0..s.x_size)
            .map(|x| (0..s.y_size).map(|y| self.input_prob(x, y).clone()).collect())
            .collect();
        let payoff = (0..s.x_size)
            .map(|x| {
                (0..s.y_size)
                    .map(|y| {
                        (0..s.a_size)
                            .map(|a| (0..s.b_size).map(|b| self.payoff(x, y, a, b).clone()).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GameDocument {
            shape: s,
            input_dist,
            payoff,
        }
    }

    pub fn from_document(doc: GameDocument) -> Result<Self, LocalityError> {
        let s = doc.shape;
        s.check()?;
        let bad = |what: &str| LocalityError::InvalidGame(format!("{what} does not match shape {s}"));
        if doc.input_dist.len() != s.x_size || doc.input_dist.iter().any(|r| r.len() != s.y_size) {
            return Err(bad("input_dist"));
        }
        let input_dist: Vec<ExactRational> = doc.input_dist.into_iter().flatten().collect();
        if doc.payoff.len() != s.x_size
            || doc.payoff.iter().any(|r| {
                r.len() != s.y_size
                    || r.iter().any(|r| r.len() != s.a_size || r.iter().any(|r| r.len() != s.b_size))
            })
        {
            return Err(bad("payoff"));
        }
        let payoff: Vec<ExactRational> = doc.payoff.into_iter().flatten().flatten().flatten().collect();
        Game::new(s, input_dist, payoff)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("game serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LocalityError> {
        let doc: GameDocument = serde_json::from_str(text)
            .map_err(|e| LocalityError::InvalidGame(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, LocalityError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BoxError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), LocalityError> {
        let path = path.as_ref();
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|source| {
            BoxError::Io {
                path: path.display().to_string(),
                source,
            }
            .into()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub shape: BoxShape,
    pub input_dist: Vec<Vec<ExactRational>>,
    pub payoff: Vec<Vec<Vec<Vec<ExactRational>>>>,
}

/// `Σ_{x,y} π(x,y) Σ_{a,b} payoff · p(a,b|x,y)`.
pub fn game_value(b: &BipartiteBox, game: &Game) -> Result<ExactRational, LocalityError> {
    if b.shape() != game.shape() {
        return Err(LocalityError::ShapeMismatch {
            box_shape: b.shape(),
            game_shape: game.shape(),
        });
    }
    let s = game.shape();
    let mut total = ExactRational::zero();
    for x in 0..s.x_size {
        for y in 0..s.y_size {
            let w = game.input_prob(x, y);
            if w.is_zero() {
                continue;
            }
            let start = s.index(x, y, 0, 0);
            let row: ExactRational = b
                .row(x, y)
                .iter()
                .zip(&game.payoff_flat()[start..start + s.outcomes()])
                .filter(|(p, q)| !p.is_zero() && !q.is_zero())
                .map(|(p, q)| p * q)
                .sum();
            total += &(w * &row);
        }
    }
    Ok(total)
}

/// Best classical value of `game` and the lexicographically least vertex
/// attaining it.
pub fn best_local_value(game: &Game, cap: u128) -> Result<(ExactRational, LocalVertex), LocalityError> {
    let shape = game.shape();
    check_cap(shape, cap)?;
    let mut best: Option<(ExactRational, LocalVertex)> = None;
    for v in vertex_iter(shape) {
        let value = game.vertex_value(&v);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, v));
        }
    }
    Ok(best.expect("at least one vertex"))
}

/// A Bell functional in success-game form that the tested box beats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellCertificate {
    pub game: Game,
    /// Maximum of the game over all deterministic strategies.
    pub local_bound: ExactRational,
    /// Value of the game on the tested box; strictly above `local_bound`.
    pub achieved: ExactRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalityCertificate {
    /// Mixture weights, keyed by vertex index in lexicographic order.
    Local { weights: Vec<(u128, ExactRational)> },
    Nonlocal(BellCertificate),
}

impl LocalityCertificate {
    pub fn is_local(&self) -> bool {
        matches!(self, LocalityCertificate::Local { .. })
    }

    /// Re-checks the certificate against `tested` from scratch.
    pub fn verify(&self, tested: &BipartiteBox, cap: u128) -> bool {
        let shape = tested.shape();
        match self {
            LocalityCertificate::Local { weights } => {
                if weights.iter().any(|(_, w)| w.is_negative()) {
                    return false;
                }
                let total: ExactRational = weights.iter().map(|(_, w)| w).sum();
                if !total.is_one() {
                    return false;
                }
                let mut mix = vec![ExactRational::zero(); shape.len()];
                for (idx, w) in weights {
                    let v = LocalVertex::from_index(shape, *idx);
                    for x in 0..shape.x_size {
                        for y in 0..shape.y_size {
                            mix[shape.index(x, y, v.alice[x], v.bob[y])] += w;
                        }
                    }
                }
                BipartiteBox::from_flat(shape, mix).is_ok_and(|m| m == *tested)
            }
            LocalityCertificate::Nonlocal(cert) => {
                let Ok((bound, _)) = best_local_value(&cert.game, cap) else {
                    return false;
                };
                let Ok(achieved) = game_value(tested, &cert.game) else {
                    return false;
                };
                bound == cert.local_bound && achieved == cert.achieved && achieved > bound
            }
        }
    }
}

impl fmt::Display for LocalityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalityCertificate::Local { weights } => {
                writeln!(f, "local: mixture of {} deterministic vertices", weights.len())?;
                for (idx, w) in weights {
                    writeln!(f, "  vertex {idx}  weight {w}")?;
                }
                Ok(())
            }
            LocalityCertificate::Nonlocal(cert) => {
                let s = cert.game.shape();
                writeln!(f, "nonlocal: Bell functional (uniform inputs, payoff table [x][y][a][b])")?;
                for x in 0..s.x_size {
                    for y in 0..s.y_size {
                        let row: Vec<String> = (0..s.a_size)
                            .flat_map(|a| (0..s.b_size).map(move |b| (a, b)))
                            .map(|(a, b)| cert.game.payoff(x, y, a, b).to_string())
                            .collect();
                        writeln!(f, "  x={x} y={y}: {}", row.join(" "))?;
                    }
                }
                writeln!(f, "  local_bound {}", cert.local_bound)?;
                writeln!(f, "  achieved    {}", cert.achieved)
            }
        }
    }
}

/// Decides whether `tested` lies in the local polytope.
pub fn is_local(tested: &BipartiteBox, cap: u128) -> Result<LocalityCertificate, LocalityError> {
    let shape = tested.shape();
    let count = check_cap(shape, cap)?;
    let vertices: Vec<LocalVertex> = vertex_iter(shape).collect();

    // Σ_v λ_v V_v = P, Σ_v λ_v = 1, λ ≥ 0.
    let rows = shape.len() + 1;
    let mut a = vec![vec![ExactRational::zero(); count as usize]; rows];
    for (j, v) in vertices.iter().enumerate() {
        for x in 0..shape.x_size {
            for y in 0..shape.y_size {
                a[shape.index(x, y, v.alice[x], v.bob[y])][j] = ExactRational::one();
            }
        }
        a[rows - 1][j] = ExactRational::one();
    }
    let mut b: Vec<ExactRational> = tested.flat().to_vec();
    b.push(ExactRational::one());
    let lp = LinearProgram {
        a,
        b,
        c: vec![ExactRational::zero(); count as usize],
    };
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let weights = x
                .into_iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(j, w)| (j as u128, w))
                .collect();
            Ok(LocalityCertificate::Local { weights })
        }
        LpOutcome::Infeasible { .. } => Ok(LocalityCertificate::Nonlocal(bell_certificate(
            tested, &vertices,
        ))),
        LpOutcome::Unbounded => unreachable!("zero objective"),
    }
}

/// Finds the success game (uniform inputs, payoffs in `[0,1]`) with the
/// largest gap between the tested box and the best vertex; among those,
/// the one the box scores highest on.
fn bell_certificate(tested: &BipartiteBox, vertices: &[LocalVertex]) -> BellCertificate {
    let shape = tested.shape();
    let len = shape.len();
    let nv = vertices.len();
    let pi = ExactRational::new(1, shape.input_pairs() as u64).expect("nonempty");

    // Columns: F_e (len), L, vertex slacks (nv), upper-bound slacks (len).
    let cols = len + 1 + nv + len;
    let l_col = len;
    let build = |gap: Option<&ExactRational>| {
        let mut a = Vec::with_capacity(nv + len + 1);
        let mut b = Vec::with_capacity(nv + len + 1);
        for (k, v) in vertices.iter().enumerate() {
            let mut row = vec![ExactRational::zero(); cols];
            for x in 0..shape.x_size {
                for y in 0..shape.y_size {
                    row[shape.index(x, y, v.alice[x], v.bob[y])] = pi.clone();
                }
            }
            row[l_col] = -ExactRational::one();
            row[len + 1 + k] = ExactRational::one();
            a.push(row);
            b.push(ExactRational::zero());
        }
        for e in 0..len {
            let mut row = vec![ExactRational::zero(); cols];
            row[e] = ExactRational::one();
            row[len + 1 + nv + e] = ExactRational::one();
            a.push(row);
            b.push(ExactRational::one());
        }
        let mut achieved_row = vec![ExactRational::zero(); cols];
        for (e, p) in tested.flat().iter().enumerate() {
            achieved_row[e] = &pi * p;
        }
        let mut c = vec![ExactRational::zero(); cols];
        match gap {
            None => {
                // maximize achieved - L
                for e in 0..len {
                    c[e] = -&achieved_row[e];
                }
                c[l_col] = ExactRational::one();
            }
            Some(g) => {
                // achieved - L = g, maximize achieved
                let mut row = achieved_row.clone();
                row[l_col] = -ExactRational::one();
                a.push(row);
                b.push(g.clone());
                for e in 0..len {
                    c[e] = -&achieved_row[e];
                }
            }
        }
        LinearProgram { a, b, c }
    };

    let gap = match build(None).solve() {
        LpOutcome::Optimal { objective, .. } => -objective,
        other => unreachable!("gap program is bounded and feasible: {other:?}"),
    };
    assert!(gap.is_positive(), "nonlocal box must admit a positive gap");
    let payoff = match build(Some(&gap)).solve() {
        LpOutcome::Optimal { x, .. } => x[..len].to_vec(),
        other => unreachable!("gap is attainable: {other:?}"),
    };
    let game = Game::new(shape, vec![pi; shape.input_pairs()], payoff).expect("valid game");
    let local_bound = vertices
        .iter()
        .map(|v| game.vertex_value(v))
        .max()
        .expect("nonempty");
    let achieved = game_value(tested, &game).expect("same shape");
    assert!(achieved > local_bound);
    BellCertificate {
        game,
        local_bound,
        achieved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_num::rat;

    fn shape(x: usize, y: usize, a: usize, b: usize) -> BoxShape {
        BoxShape::new(x, y, a, b).unwrap()
    }

    #[test]
    fn vertex_counts_and_order() {
        let cap = DEFAULT_VERTEX_CAP;
        assert_eq!(local_vertices(shape(2, 2, 2, 2), cap).unwrap().len(), 16);
        assert_eq!(local_vertices(shape(2, 2, 3, 3), cap).unwrap().len(), 81);
        assert_eq!(local_vertices(shape(1, 1, 2, 2), cap).unwrap().len(), 4);
        let vs: Vec<_> = vertex_iter(shape(2, 2, 2, 2)).collect();
        assert_eq!(vs[0], LocalVertex { alice: vec![0, 0], bob: vec![0, 0] });
        assert_eq!(vs[1], LocalVertex { alice: vec![0, 0], bob: vec![0, 1] });
        assert_eq!(vs[4], LocalVertex { alice: vec![0, 1], bob: vec![0, 0] });
        assert!(vs.windows(2).all(|w| w[0] < w[1]));
        for (i, v) in vs.iter().enumerate() {
            assert_eq!(v.index(shape(2, 2, 2, 2)), i as u128);
        }
        assert_eq!(vertex_count(shape(4, 4, 5, 5)), 390_625);
        assert!(matches!(
            local_vertices(shape(2, 2, 3, 3), 80),
            Err(LocalityError::VertexCapExceeded { count: 81, cap: 80 })
        ));
    }

    #[test]
    fn game_values() {
        let pr = BipartiteBox::modp_nlb(2).unwrap();
        assert_eq!(game_value(&pr, &Game::chsh()).unwrap(), rat(1, 1));
        for p in [2, 3, 5, 6] {
            let b = BipartiteBox::modp_nlb(p).unwrap();
            assert_eq!(game_value(&b, &Game::modp(p).unwrap()).unwrap(), rat(1, 1));
        }
        let noise = BipartiteBox::uniform(shape(2, 2, 2, 2)).unwrap();
        assert_eq!(game_value(&noise, &Game::chsh()).unwrap(), rat(1, 2));
        let m3 = BipartiteBox::modp_nlb(3).unwrap();
        assert!(matches!(
            game_value(&m3, &Game::chsh()),
            Err(LocalityError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn best_local_values() {
        let (v, w) = best_local_value(&Game::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(v, rat(3, 4));
        assert_eq!(w, LocalVertex { alice: vec![0, 0], bob: vec![0, 0] });
        let (v, _) = best_local_value(&Game::modp(3).unwrap(), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(v, rat(3, 4));
        let s = shape(2, 3, 2, 2);
        let constant = Game::from_predicate(s, |_, _, _, _| true).unwrap();
        assert_eq!(best_local_value(&constant, DEFAULT_VERTEX_CAP).unwrap().0, rat(1, 1));
    }

    #[test]
    fn vertices_are_local_with_unit_weight() {
        let s = shape(2, 2, 2, 2);
        for (i, v) in vertex_iter(s).enumerate() {
            let b = v.to_box(s);
            let cert = is_local(&b, DEFAULT_VERTEX_CAP).unwrap();
            assert_eq!(
                cert,
                LocalityCertificate::Local { weights: vec![(i as u128, rat(1, 1))] }
            );
            assert!(cert.verify(&b, DEFAULT_VERTEX_CAP));
        }
    }

    #[test]
    fn pr_box_certificate_is_chsh() {
        let pr = BipartiteBox::modp_nlb(2).unwrap();
        let cert = is_local(&pr, DEFAULT_VERTEX_CAP).unwrap();
        let LocalityCertificate::Nonlocal(bell) = &cert else {
            panic!("PR box must be nonlocal");
        };
        assert_eq!(bell.local_bound, rat(3, 4));
        assert_eq!(bell.achieved, rat(1, 1));
        assert_eq!(bell.game, Game::chsh());
        assert!(cert.verify(&pr, DEFAULT_VERTEX_CAP));
    }

    #[test]
    fn mod3_box_is_nonlocal() {
        let m3 = BipartiteBox::modp_nlb(3).unwrap();
        let cert = is_local(&m3, DEFAULT_VERTEX_CAP).unwrap();
        assert!(!cert.is_local());
        assert!(cert.verify(&m3, DEFAULT_VERTEX_CAP));
    }

    #[test]
    fn noisy_pr_boxes() {
        // PR mixed with noise is local exactly when the CHSH value is at most 3/4.
        let s = shape(2, 2, 2, 2);
        let pr = BipartiteBox::modp_nlb(2).unwrap();
        let noise = BipartiteBox::uniform(s).unwrap();
        for (num, local) in [(1, true), (2, true), (3, false)] {
            let w = rat(num, 4);
            let mix: Vec<ExactRational> = pr
                .flat()
                .iter()
                .zip(noise.flat())
                .map(|(p, n)| &(&w * p) + &(&(&ExactRational::one() - &w) * n))
                .collect();
            let b = BipartiteBox::from_flat(s, mix).unwrap();
            let cert = is_local(&b, DEFAULT_VERTEX_CAP).unwrap();
            assert_eq!(cert.is_local(), local, "weight {w}");
            assert!(cert.verify(&b, DEFAULT_VERTEX_CAP));
        }
    }

    #[test]
    fn game_document_round_trip() {
        let g = Game::modp(3).unwrap();
        assert_eq!(Game::from_json(&g.to_json()).unwrap(), g);
        let bad = r#"{"shape":{"x_size":1,"y_size":1,"a_size":1,"b_size":1},
                      "input_dist":[["1/2"]],"payoff":[[[["1/1"]]]]}"#;
        assert!(matches!(Game::from_json(bad), Err(LocalityError::InvalidGame(_))));
    }
}
