//! Bipartite boxes: conditional distributions `p(a,b|x,y)` over finite
//! index alphabets, the mod-p nonlocal box family, marginals, the
//! no-signalling test, sampling and the on-disk format.

use std::fmt;
use std::fs;
use std::path::Path;

use num_bigint::{BigInt, RandBigInt};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_num::{common_denominator, ExactRational};

#[derive(Debug, Error)]
pub enum BoxError {
    #[error("invalid shape {0}: every alphabet needs at least one symbol")]
    InvalidShape(BoxShape),
    #[error("table dimension mismatch at {at}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        at: String,
        expected: usize,
        found: usize,
    },
    #[error("negative entry {value} at (x={x}, y={y}, a={a}, b={b})")]
    NegativeEntry {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
        value: ExactRational,
    },
    #[error("row (x={x}, y={y}) sums to {sum}, expected 1/1")]
    Normalization { x: usize, y: usize, sum: ExactRational },
    #[error("modulus {0} is below 2")]
    ModulusTooSmall(u64),
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed box document: {0}")]
    Malformed(String),
}

/// Alphabet sizes |X|, |Y|, |A|, |B|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoxShape {
    pub x_size: usize,
    pub y_size: usize,
    pub a_size: usize,
    pub b_size: usize,
}

impl BoxShape {
    pub fn new(x_size: usize, y_size: usize, a_size: usize, b_size: usize) -> Result<Self, BoxError> {
        let shape = BoxShape {
            x_size,
            y_size,
            a_size,
            b_size,
        };
        shape.check()?;
        Ok(shape)
    }

    pub fn check(&self) -> Result<(), BoxError> {
        if self.x_size == 0 || self.y_size == 0 || self.a_size == 0 || self.b_size == 0 {
            return Err(BoxError::InvalidShape(*self));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x_size * self.y_size * self.a_size * self.b_size
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_pairs(&self) -> usize {
        self.x_size * self.y_size
    }

    pub fn outcomes(&self) -> usize {
        self.a_size * self.b_size
    }

    /// Flat offset of `[x][y][a][b]`.
    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.y_size + y) * self.a_size + a) * self.b_size + b
    }
}

impl fmt::Display for BoxShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}x{}x{}",
            self.x_size, self.y_size, self.a_size, self.b_size
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => f.write_str("Alice"),
            Party::Bob => f.write_str("Bob"),
        }
    }
}

/// One party's marginal distributions, `dist[input][output]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalFamily {
    pub side: Party,
    pub dist: Vec<Vec<ExactRational>>,
}

impl MarginalFamily {
    /// Checks that each row is nonnegative and sums to one.
    pub fn new(side: Party, dist: Vec<Vec<ExactRational>>) -> Result<Self, BoxError> {
        for (i, row) in dist.iter().enumerate() {
            if let Some((o, v)) = row.iter().enumerate().find(|(_, v)| v.is_negative()) {
                return Err(BoxError::Malformed(format!(
                    "{side} marginal p({o}|{i}) = {v} is negative"
                )));
            }
            let sum: ExactRational = row.iter().sum();
            if !sum.is_one() {
                return Err(BoxError::Malformed(format!(
                    "{side} marginal row {i} sums to {sum}"
                )));
            }
        }
        Ok(MarginalFamily { side, dist })
    }

    pub fn inputs(&self) -> usize {
        self.dist.len()
    }

    pub fn outputs(&self) -> usize {
        self.dist.first().map_or(0, Vec::len)
    }
}

/// A validated conditional distribution `p(a,b|x,y)`.
///
/// Entries are nonnegative and every `(x, y)` row sums to exactly one.
/// Immutable once built.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BipartiteBox {
    shape: BoxShape,
    table: Vec<ExactRational>,
}

impl fmt::Debug for BipartiteBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BipartiteBox({}) ", self.shape)?;
        f.debug_list().entries(self.table.iter()).finish()
    }
}

/// Where the two marginal distributions differ when a box signals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignallingWitness {
    pub side: Party,
    pub own_input: usize,
    pub other_input_1: usize,
    pub other_input_2: usize,
    pub output: usize,
}

impl fmt::Display for SignallingWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} marginal of output {} at own input {} differs between other inputs {} and {}",
            self.side, self.output, self.own_input, self.other_input_1, self.other_input_2
        )
    }
}

impl BipartiteBox {
    /// Validates a flat table laid out as `[x][y][a][b]`.
    pub fn from_flat(shape: BoxShape, table: Vec<ExactRational>) -> Result<Self, BoxError> {
        shape.check()?;
        if table.len() != shape.len() {
            return Err(BoxError::DimensionMismatch {
                at: "table".into(),
                expected: shape.len(),
                found: table.len(),
            });
        }
        for x in 0..shape.x_size {
            for y in 0..shape.y_size {
                let mut sum = ExactRational::zero();
                for a in 0..shape.a_size {
                    for b in 0..shape.b_size {
                        let v = &table[shape.index(x, y, a, b)];
                        if v.is_negative() {
                            return Err(BoxError::NegativeEntry {
                                x,
                                y,
                                a,
                                b,
                                value: v.clone(),
                            });
                        }
                        sum += v;
                    }
                }
                if !sum.is_one() {
                    return Err(BoxError::Normalization { x, y, sum });
                }
            }
        }
        Ok(BipartiteBox { shape, table })
    }

    /// Validates a nested `[x][y][a][b]` table.
    pub fn new(shape: BoxShape, table: Vec<Vec<Vec<Vec<ExactRational>>>>) -> Result<Self, BoxError> {
        shape.check()?;
        let mismatch = |at: String, expected: usize, found: usize| BoxError::DimensionMismatch {
            at,
            expected,
            found,
        };
        if table.len() != shape.x_size {
            return Err(mismatch("table".into(), shape.x_size, table.len()));
        }
        let mut flat = Vec::with_capacity(shape.len());
        for (x, by_y) in table.into_iter().enumerate() {
            if by_y.len() != shape.y_size {
                return Err(mismatch(format!("[{x}]"), shape.y_size, by_y.len()));
            }
            for (y, by_a) in by_y.into_iter().enumerate() {
                if by_a.len() != shape.a_size {
                    return Err(mismatch(format!("[{x}][{y}]"), shape.a_size, by_a.len()));
                }
                for (a, by_b) in by_a.into_iter().enumerate() {
                    if by_b.len() != shape.b_size {
                        return Err(mismatch(format!("[{x}][{y}][{a}]"), shape.b_size, by_b.len()));
                    }
                    flat.extend(by_b);
                }
            }
        }
        Self::from_flat(shape, flat)
    }

    /// The mod-p nonlocal box: `p(a,b|x,y) = 1/p` iff `b - a ≡ x·y (mod p)`,
    /// binary inputs, p-ary outputs. `p` need not be prime.
    pub fn modp_nlb(p: u64) -> Result<Self, BoxError> {
        if p < 2 {
            return Err(BoxError::ModulusTooSmall(p));
        }
        let n = p as usize;
        let shape = BoxShape::new(2, 2, n, n)?;
        let share = ExactRational::new(1, p).expect("p >= 2");
        let mut table = vec![ExactRational::zero(); shape.len()];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..n {
                    let b = (a + x * y) % n;
                    table[shape.index(x, y, a, b)] = share.clone();
                }
            }
        }
        Ok(BipartiteBox { shape, table })
    }

    /// Uniform noise over all outcome pairs.
    pub fn uniform(shape: BoxShape) -> Result<Self, BoxError> {
        shape.check()?;
        let v = ExactRational::new(1, shape.outcomes() as u64).expect("nonempty shape");
        Ok(BipartiteBox {
            shape,
            table: vec![v; shape.len()],
        })
    }

    /// Local deterministic box with `a = alice[x]` and `b = bob[y]`.
    pub fn deterministic(shape: BoxShape, alice: &[usize], bob: &[usize]) -> Result<Self, BoxError> {
        shape.check()?;
        if alice.len() != shape.x_size {
            return Err(BoxError::DimensionMismatch {
                at: "alice function".into(),
                expected: shape.x_size,
                found: alice.len(),
            });
        }
        if bob.len() != shape.y_size {
            return Err(BoxError::DimensionMismatch {
                at: "bob function".into(),
                expected: shape.y_size,
                found: bob.len(),
            });
        }
        if let Some(&a) = alice.iter().find(|&&a| a >= shape.a_size) {
            return Err(BoxError::IndexOutOfRange {
                what: "alice output",
                index: a,
                size: shape.a_size,
            });
        }
        if let Some(&b) = bob.iter().find(|&&b| b >= shape.b_size) {
            return Err(BoxError::IndexOutOfRange {
                what: "bob output",
                index: b,
                size: shape.b_size,
            });
        }
        let mut table = vec![ExactRational::zero(); shape.len()];
        for (x, &a) in alice.iter().enumerate() {
            for (y, &b) in bob.iter().enumerate() {
                table[shape.index(x, y, a, b)] = ExactRational::one();
            }
        }
        Ok(BipartiteBox { shape, table })
    }

    pub fn shape(&self) -> BoxShape {
        self.shape
    }

    pub fn flat(&self) -> &[ExactRational] {
        &self.table
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> &ExactRational {
        &self.table[self.shape.index(x, y, a, b)]
    }

    /// The `(x, y)` row as a flat `[a][b]` slice.
    pub fn row(&self, x: usize, y: usize) -> &[ExactRational] {
        let start = self.shape.index(x, y, 0, 0);
        &self.table[start..start + self.shape.outcomes()]
    }

    fn check_input(&self, what: &'static str, index: usize, size: usize) -> Result<(), BoxError> {
        if index >= size {
            return Err(BoxError::IndexOutOfRange { what, index, size });
        }
        Ok(())
    }

    /// One party's output distribution with both inputs fixed.
    ///
    /// For `Party::Alice`, `own_input` is x and `other_input` is y; the
    /// result is `Σ_b p(·,b|x,y)`. Bob is symmetric.
    pub fn marginal(
        &self,
        side: Party,
        own_input: usize,
        other_input: usize,
    ) -> Result<Vec<ExactRational>, BoxError> {
        let s = self.shape;
        let (x, y) = match side {
            Party::Alice => (own_input, other_input),
            Party::Bob => (other_input, own_input),
        };
        self.check_input("x", x, s.x_size)?;
        self.check_input("y", y, s.y_size)?;
        Ok(self.marginal_unchecked(side, x, y))
    }

    fn marginal_unchecked(&self, side: Party, x: usize, y: usize) -> Vec<ExactRational> {
        let s = self.shape;
        match side {
            Party::Alice => (0..s.a_size)
                .map(|a| (0..s.b_size).map(|b| self.prob(x, y, a, b)).sum())
                .collect(),
            Party::Bob => (0..s.b_size)
                .map(|b| (0..s.a_size).map(|a| self.prob(x, y, a, b)).sum())
                .collect(),
        }
    }

    /// Returns the first place where a marginal depends on the other
    /// party's input, or `None` when the box is no-signalling.
    ///
    /// Alice's side is scanned first (x ascending, comparing every y to
    /// y = 0), then Bob's.
    pub fn signalling_witness(&self) -> Option<SignallingWitness> {
        let s = self.shape;
        for x in 0..s.x_size {
            let reference = self.marginal_unchecked(Party::Alice, x, 0);
            for y in 1..s.y_size {
                let m = self.marginal_unchecked(Party::Alice, x, y);
                if let Some(a) = (0..s.a_size).find(|&a| m[a] != reference[a]) {
                    return Some(SignallingWitness {
                        side: Party::Alice,
                        own_input: x,
                        other_input_1: 0,
                        other_input_2: y,
                        output: a,
                    });
                }
            }
        }
        for y in 0..s.y_size {
            let reference = self.marginal_unchecked(Party::Bob, 0, y);
            for x in 1..s.x_size {
                let m = self.marginal_unchecked(Party::Bob, x, y);
                if let Some(b) = (0..s.b_size).find(|&b| m[b] != reference[b]) {
                    return Some(SignallingWitness {
                        side: Party::Bob,
                        own_input: y,
                        other_input_1: 0,
                        other_input_2: x,
                        output: b,
                    });
                }
            }
        }
        None
    }

    pub fn is_no_signalling(&self) -> bool {
        self.signalling_witness().is_none()
    }

    /// Input-independent marginals of a no-signalling box.
    ///
    /// Returns `None` if the box signals, since the marginal is then not a
    /// function of the party's own input alone.
    pub fn marginal_family(&self, side: Party) -> Option<MarginalFamily> {
        if !self.is_no_signalling() {
            return None;
        }
        let dist = match side {
            Party::Alice => (0..self.shape.x_size)
                .map(|x| self.marginal_unchecked(Party::Alice, x, 0))
                .collect(),
            Party::Bob => (0..self.shape.y_size)
                .map(|y| self.marginal_unchecked(Party::Bob, 0, y))
                .collect(),
        };
        Some(MarginalFamily { side, dist })
    }

    /// Draws one `(a, b)` for inputs `(x, y)`.
    ///
    /// The row is scaled to a common denominator `D`, a uniform integer in
    /// `[0, D)` is drawn from ChaCha8 seeded with `seed`, and the outcome is
    /// the first whose cumulative numerator exceeds it (row-major in a, b).
    pub fn sample(&self, x: usize, y: usize, seed: u64) -> Result<(usize, usize), BoxError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(x, y, &mut rng)
    }

    pub fn sample_with(
        &self,
        x: usize,
        y: usize,
        rng: &mut impl rand::Rng,
    ) -> Result<(usize, usize), BoxError> {
        self.check_input("x", x, self.shape.x_size)?;
        self.check_input("y", y, self.shape.y_size)?;
        let row = self.row(x, y);
        let denom = common_denominator(row);
        let draw = rng.gen_bigint_range(&BigInt::zero(), &denom);
        let mut cumulative = BigInt::zero();
        let b_size = self.shape.b_size;
        for (k, v) in row.iter().enumerate() {
            cumulative += v.numer() * (&denom / v.denom());
            if draw < cumulative {
                return Ok((k / b_size, k % b_size));
            }
        }
        unreachable!("row sums to one")
    }

    /// Nested `[x][y][a][b]` view, used for serialization.
    pub fn nested(&self) -> Vec<Vec<Vec<Vec<ExactRational>>>> {
        let s = self.shape;
        (0..s.x_size)
            .map(|x| {
                (0..s.y_size)
                    .map(|y| {
                        (0..s.a_size)
                            .map(|a| (0..s.b_size).map(|b| self.prob(x, y, a, b).clone()).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_document(&self) -> BoxDocument {
        BoxDocument {
            shape: self.shape,
            table: self.nested(),
        }
    }

    pub fn from_document(doc: BoxDocument) -> Result<Self, BoxError> {
        Self::new(doc.shape, doc.table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("box serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BoxError> {
        let doc: BoxDocument =
            serde_json::from_str(text).map_err(|e| BoxError::Malformed(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, BoxError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BoxError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), BoxError> {
        let path = path.as_ref();
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|source| BoxError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Exact equality: same shape and identical entries.
pub fn boxes_equal(a: &BipartiteBox, b: &BipartiteBox) -> bool {
    a == b
}

/// On-disk form of a box: `{"shape": {...}, "table": [[[["num/den", ...]]]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDocument {
    pub shape: BoxShape,
    pub table: Vec<Vec<Vec<Vec<ExactRational>>>>,
}
