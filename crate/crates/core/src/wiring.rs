//! Deterministic wirings: communication-free protocols over a fixed list of
//! resource boxes.
//!
//! Both parties query the resources in list order. Alice's input to
//! resource `l` is a function of her own input and the outputs she already
//! received from resources `0..l`; her final output is a function of her
//! input and all `N` resource outputs. Bob is symmetric. Each resource is
//! used exactly once per party, so reusing a box means listing it twice.
//!
//! Strategies are explicit lookup tables keyed by tuples
//! `(own input, z_0, ..., z_{l-1})`, which keeps wirings serializable and
//! enumerable.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxes::{BipartiteBox, BoxDocument, BoxError, BoxShape, MarginalFamily, Party, SignallingWitness};
use crate::exact_num::ExactRational;

#[derive(Debug, Error)]
pub enum WiringError {
    #[error("invalid wiring:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error("moduli {p} and {q} are not coprime")]
    NotCoprime { p: u64, q: u64 },
    #[error("malformed wiring document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Box(#[from] BoxError),
}

/// Which lookup table of a party a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableRef {
    Input(usize),
    Output,
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableRef::Input(l) => write!(f, "input map for resource {l}"),
            TableRef::Output => f.write_str("output map"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InputMapCount { party: Party, expected: usize, found: usize },
    MissingRow { party: Party, table: TableRef, key: Vec<usize> },
    UnexpectedRow { party: Party, table: TableRef, key: Vec<usize> },
    ValueOutOfRange { party: Party, table: TableRef, key: Vec<usize>, value: usize, size: usize },
    SignallingResource { resource: usize, witness: SignallingWitness },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InputMapCount { party, expected, found } => {
                write!(f, "{party} has {found} input maps for {expected} resources")
            }
            Violation::MissingRow { party, table, key } => {
                write!(f, "{party} {table} has no row for {key:?}")
            }
            Violation::UnexpectedRow { party, table, key } => {
                write!(f, "{party} {table} has a row {key:?} outside its domain")
            }
            Violation::ValueOutOfRange { party, table, key, value, size } => {
                write!(f, "{party} {table} maps {key:?} to {value}, alphabet size is {size}")
            }
            Violation::SignallingResource { resource, witness } => {
                write!(f, "resource {resource} signals: {witness}")
            }
        }
    }
}

/// A finite function from key tuples to values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LookupTable {
    pub entries: BTreeMap<Vec<usize>, usize>,
}

impl LookupTable {
    /// Tabulates `f` over the full mixed-radix domain `radices`.
    pub fn from_fn(radices: &[usize], mut f: impl FnMut(&[usize]) -> usize) -> Self {
        let entries = tuples(radices).map(|k| {
            let v = f(&k);
            (k, v)
        });
        LookupTable {
            entries: entries.collect(),
        }
    }

    /// Tabulates a dense table indexed in lexicographic order of the domain.
    pub fn from_dense(radices: &[usize], values: &[usize]) -> Self {
        let mut it = values.iter();
        Self::from_fn(radices, |_| *it.next().expect("dense table covers the domain"))
    }

    pub fn get(&self, key: &[usize]) -> Option<usize> {
        self.entries.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense values in lexicographic domain order; `None` if not total.
    fn to_dense(&self, radices: &[usize]) -> Option<Vec<usize>> {
        tuples(radices).map(|k| self.get(&k)).collect()
    }

    fn check(
        &self,
        party: Party,
        table: TableRef,
        radices: &[usize],
        codomain: usize,
        out: &mut Vec<Violation>,
    ) {
        for key in tuples(radices) {
            match self.get(&key) {
                None => out.push(Violation::MissingRow { party, table, key }),
                Some(value) if value >= codomain => out.push(Violation::ValueOutOfRange {
                    party,
                    table,
                    key,
                    value,
                    size: codomain,
                }),
                Some(_) => {}
            }
        }
        for key in self.entries.keys() {
            let inside = key.len() == radices.len() && key.iter().zip(radices).all(|(k, r)| k < r);
            if !inside {
                out.push(Violation::UnexpectedRow {
                    party,
                    table,
                    key: key.clone(),
                });
            }
        }
    }
}

impl Serialize for LookupTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.entries.iter())
    }
}

impl<'de> Deserialize<'de> for LookupTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<(Vec<usize>, usize)> = Vec::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for (k, v) in rows {
            if entries.insert(k.clone(), v).is_some() {
                return Err(serde::de::Error::custom(format!("duplicate row for {k:?}")));
            }
        }
        Ok(LookupTable { entries })
    }
}

/// Every tuple of the mixed-radix domain, lexicographically (first digit
/// most significant).
pub fn tuples(radices: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = radices.iter().product();
    (0..total).map(move |mut n| {
        let mut key = vec![0; radices.len()];
        for (slot, &r) in key.iter_mut().zip(radices).rev() {
            *slot = n % r;
            n /= r;
        }
        key
    })
}

/// Mixed-radix index of `key`, first digit most significant.
#[inline]
pub(crate) fn encode(radices: &[usize], key: &[usize]) -> usize {
    key.iter().zip(radices).fold(0, |acc, (&k, &r)| acc * r + k)
}

/// One party's protocol: adaptive input choices and the final output.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartyStrategy {
    pub input_maps: Vec<LookupTable>,
    pub output_map: LookupTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Wiring {
    pub resources: Vec<BipartiteBox>,
    pub alice: PartyStrategy,
    pub bob: PartyStrategy,
    pub target_shape: BoxShape,
}

/// Domain layout of one party's tables.
#[derive(Debug, Clone)]
pub(crate) struct PartyLayout {
    /// `input_radices[l]` = [own input size, out_0, ..., out_{l-1}].
    pub input_radices: Vec<Vec<usize>>,
    pub input_codomain: Vec<usize>,
    pub output_radices: Vec<usize>,
    pub output_codomain: usize,
}

impl PartyLayout {
    pub fn new(party: Party, resources: &[BipartiteBox], target: BoxShape) -> Self {
        let (own_in, own_out) = match party {
            Party::Alice => (target.x_size, target.a_size),
            Party::Bob => (target.y_size, target.b_size),
        };
        let res_in = |b: &BipartiteBox| match party {
            Party::Alice => b.shape().x_size,
            Party::Bob => b.shape().y_size,
        };
        let res_out = |b: &BipartiteBox| match party {
            Party::Alice => b.shape().a_size,
            Party::Bob => b.shape().b_size,
        };
        let mut radices = vec![own_in];
        let mut input_radices = Vec::with_capacity(resources.len());
        let mut input_codomain = Vec::with_capacity(resources.len());
        for r in resources {
            input_radices.push(radices.clone());
            input_codomain.push(res_in(r));
            radices.push(res_out(r));
        }
        PartyLayout {
            input_radices,
            input_codomain,
            output_radices: radices,
            output_codomain: own_out,
        }
    }
}

/// Strategy tables flattened for fast lookup.
#[derive(Debug, Clone)]
pub(crate) struct DenseStrategy {
    pub input_maps: Vec<Vec<usize>>,
    pub output_map: Vec<usize>,
}

impl DenseStrategy {
    pub fn to_strategy(&self, layout: &PartyLayout) -> PartyStrategy {
        PartyStrategy {
            input_maps: self
                .input_maps
                .iter()
                .zip(&layout.input_radices)
                .map(|(vals, radices)| LookupTable::from_dense(radices, vals))
                .collect(),
            output_map: LookupTable::from_dense(&layout.output_radices, &self.output_map),
        }
    }
}

impl Wiring {
    fn layout(&self, party: Party) -> PartyLayout {
        PartyLayout::new(party, &self.resources, self.target_shape)
    }

    fn strategy(&self, party: Party) -> &PartyStrategy {
        match party {
            Party::Alice => &self.alice,
            Party::Bob => &self.bob,
        }
    }

    pub(crate) fn dense(&self, party: Party) -> DenseStrategy {
        let layout = self.layout(party);
        let s = self.strategy(party);
        DenseStrategy {
            input_maps: s
                .input_maps
                .iter()
                .zip(&layout.input_radices)
                .map(|(t, r)| t.to_dense(r).expect("validated"))
                .collect(),
            output_map: s.output_map.to_dense(&layout.output_radices).expect("validated"),
        }
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    /// Feeds both inputs straight into one resource and outputs what it
    /// returns.
    pub fn identity(resource: BipartiteBox) -> Self {
        let shape = resource.shape();
        let pass = |radices: &[usize]| LookupTable::from_fn(radices, |k| k[0]);
        let out = |radices: &[usize]| LookupTable::from_fn(radices, |k| k[1]);
        Wiring {
            alice: PartyStrategy {
                input_maps: vec![pass(&[shape.x_size])],
                output_map: out(&[shape.x_size, shape.a_size]),
            },
            bob: PartyStrategy {
                input_maps: vec![pass(&[shape.y_size])],
                output_map: out(&[shape.y_size, shape.b_size]),
            },
            resources: vec![resource],
            target_shape: shape,
        }
    }

    /// Local deterministic strategy using no resources.
    pub fn local(target_shape: BoxShape, alice: &[usize], bob: &[usize]) -> Self {
        Wiring {
            resources: vec![],
            alice: PartyStrategy {
                input_maps: vec![],
                output_map: LookupTable::from_fn(&[target_shape.x_size], |k| alice[k[0]]),
            },
            bob: PartyStrategy {
                input_maps: vec![],
                output_map: LookupTable::from_fn(&[target_shape.y_size], |k| bob[k[0]]),
            },
            target_shape,
        }
    }

    /// Uniformly random total strategies for both parties.
    pub fn random(resources: Vec<BipartiteBox>, target_shape: BoxShape, rng: &mut impl Rng) -> Self {
        let mut party = |p: Party| {
            let layout = PartyLayout::new(p, &resources, target_shape);
            PartyStrategy {
                input_maps: layout
                    .input_radices
                    .iter()
                    .zip(&layout.input_codomain)
                    .map(|(r, &c)| LookupTable::from_fn(r, |_| rng.gen_range(0..c)))
                    .collect(),
                output_map: LookupTable::from_fn(&layout.output_radices, |_| {
                    rng.gen_range(0..layout.output_codomain)
                }),
            }
        };
        let alice = party(Party::Alice);
        let bob = party(Party::Bob);
        Wiring {
            resources,
            alice,
            bob,
            target_shape,
        }
    }

    pub fn to_document(&self) -> WiringDocument {
        WiringDocument {
            target_shape: self.target_shape,
            resources: self
                .resources
                .iter()
                .map(|r| ResourceEntry::Inline(r.to_document()))
                .collect(),
            alice: self.alice.clone(),
            bob: self.bob.clone(),
        }
    }

    /// Builds a wiring from its document, loading `file` resources relative
    /// to `base_dir`. The result is not validated.
    pub fn from_document(doc: WiringDocument, base_dir: &Path) -> Result<Self, WiringError> {
        let resources = doc
            .resources
            .into_iter()
            .map(|r| match r {
                ResourceEntry::Inline(d) => BipartiteBox::from_document(d),
                ResourceEntry::File(f) => {
                    let p = PathBuf::from(&f);
                    BipartiteBox::read(if p.is_absolute() { p } else { base_dir.join(p) })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        doc.target_shape.check()?;
        Ok(Wiring {
            resources,
            alice: doc.alice,
            bob: doc.bob,
            target_shape: doc.target_shape,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("wiring serializes")
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, WiringError> {
        let doc: WiringDocument =
            serde_json::from_str(text).map_err(|e| WiringError::Malformed(e.to_string()))?;
        Self::from_document(doc, base_dir)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, WiringError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BoxError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), WiringError> {
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

/// On-disk wiring: `{"target_shape", "resources", "alice", "bob"}`, where
/// each resource is `{"inline": <box document>}` or `{"file": "path"}` and
/// every lookup table is a list of `[[key...], value]` rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiringDocument {
    pub target_shape: BoxShape,
    pub resources: Vec<ResourceEntry>,
    pub alice: PartyStrategy,
    pub bob: PartyStrategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceEntry {
    Inline(BoxDocument),
    File(String),
}

/// Checks totality and ranges of every table and that every resource is
/// no-signalling. Reports all violations found.
pub fn validate_wiring(w: &Wiring) -> Result<(), WiringError> {
    let mut out = Vec::new();
    for party in [Party::Alice, Party::Bob] {
        let layout = w.layout(party);
        let s = w.strategy(party);
        if s.input_maps.len() != w.len() {
            out.push(Violation::InputMapCount {
                party,
                expected: w.len(),
                found: s.input_maps.len(),
            });
        } else {
            for (l, t) in s.input_maps.iter().enumerate() {
                t.check(
                    party,
                    TableRef::Input(l),
                    &layout.input_radices[l],
                    layout.input_codomain[l],
                    &mut out,
                );
            }
        }
        s.output_map.check(
            party,
            TableRef::Output,
            &layout.output_radices,
            layout.output_codomain,
            &mut out,
        );
    }
    for (resource, r) in w.resources.iter().enumerate() {
        if let Some(witness) = r.signalling_witness() {
            out.push(Violation::SignallingResource { resource, witness });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(WiringError::Invalid(out))
    }
}

/// Exact distribution produced by the wiring.
///
/// `Pr[a,b|x,y] = Σ Π_l p_l(z_A[l], z_B[l] | g^A_l(x, z_A[<l]), g^B_l(y, z_B[<l]))`
/// over resource outcomes with `F_A(x, z_A) = a` and `F_B(y, z_B) = b`.
pub fn evaluate_wiring(w: &Wiring) -> Result<BipartiteBox, WiringError> {
    validate_wiring(w)?;
    let alice = w.dense(Party::Alice);
    let bob = w.dense(Party::Bob);
    let la = w.layout(Party::Alice);
    let lb = w.layout(Party::Bob);
    let t = w.target_shape;
    let mut table = vec![ExactRational::zero(); t.len()];

    struct Walk<'a> {
        w: &'a Wiring,
        alice: &'a DenseStrategy,
        bob: &'a DenseStrategy,
        la: &'a PartyLayout,
        lb: &'a PartyLayout,
        za: Vec<usize>,
        zb: Vec<usize>,
    }

    type Emit<'e> = dyn FnMut(&[usize], &[usize], &ExactRational) + 'e;

    impl Walk<'_> {
        fn go(&mut self, l: usize, prob: &ExactRational, emit: &mut Emit<'_>) {
            if l == self.w.resources.len() {
                emit(&self.za, &self.zb, prob);
                return;
            }
            let xl = self.alice.input_maps[l][encode(&self.la.input_radices[l], &self.za)];
            let yl = self.bob.input_maps[l][encode(&self.lb.input_radices[l], &self.zb)];
            let r = &self.w.resources[l];
            let bs = r.shape().b_size;
            for (k, p) in r.row(xl, yl).iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                self.za.push(k / bs);
                self.zb.push(k % bs);
                self.go(l + 1, &(prob * p), emit);
                self.za.pop();
                self.zb.pop();
            }
        }
    }

    for x in 0..t.x_size {
        for y in 0..t.y_size {
            let mut walk = Walk {
                w,
                alice: &alice,
                bob: &bob,
                la: &la,
                lb: &lb,
                za: vec![x],
                zb: vec![y],
            };
            walk.go(0, &ExactRational::one(), &mut |za, zb, p| {
                let a = alice.output_map[encode(&la.output_radices, za)];
                let b = bob.output_map[encode(&lb.output_radices, zb)];
                table[t.index(x, y, a, b)] += p;
            });
        }
    }
    Ok(BipartiteBox::from_flat(t, table)?)
}

/// One party's output marginals computed from that party's side alone:
/// `Σ_{z: F(x,z)=a} Π_l m_l(z[l] | chosen input)`, with `m_l` the
/// resource's own-side marginal.
pub fn party_marginals(w: &Wiring, party: Party) -> Result<MarginalFamily, WiringError> {
    validate_wiring(w)?;
    let dense = w.dense(party);
    let layout = w.layout(party);
    let families: Vec<MarginalFamily> = w
        .resources
        .iter()
        .map(|r| r.marginal_family(party).expect("validated as no-signalling"))
        .collect();

    fn go(
        l: usize,
        z: &mut Vec<usize>,
        prob: &ExactRational,
        dense: &DenseStrategy,
        layout: &PartyLayout,
        families: &[MarginalFamily],
        row: &mut [ExactRational],
    ) {
        if l == families.len() {
            row[dense.output_map[encode(&layout.output_radices, z)]] += prob;
            return;
        }
        let input = dense.input_maps[l][encode(&layout.input_radices[l], z)];
        for (o, p) in families[l].dist[input].iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            z.push(o);
            go(l + 1, z, &(prob * p), dense, layout, families, row);
            z.pop();
        }
    }

    let inputs = layout.output_radices[0];
    let dist = (0..inputs)
        .map(|i| {
            let mut row = vec![ExactRational::zero(); layout.output_codomain];
            go(0, &mut vec![i], &ExactRational::one(), &dense, &layout, &families, &mut row);
            row
        })
        .collect();
    Ok(MarginalFamily::new(party, dist)?)
}

/// Combines a mod-p and a mod-q box into a mod-pq box by Chinese-remainder
/// recombination of the two outputs. Both parties feed their raw input to
/// both resources.
pub fn crt_wiring(p: u64, q: u64) -> Result<Wiring, WiringError> {
    let first = BipartiteBox::modp_nlb(p)?;
    let second = BipartiteBox::modp_nlb(q)?;
    if num_integer::gcd(p, q) != 1 {
        return Err(WiringError::NotCoprime { p, q });
    }
    let (pu, qu) = (p as usize, q as usize);
    let r = pu * qu;
    let recombine = |u: usize, v: usize| {
        (0..qu)
            .map(|k| u + pu * k)
            .find(|c| c % qu == v)
            .expect("coprime moduli")
    };
    let party = || PartyStrategy {
        input_maps: vec![
            LookupTable::from_fn(&[2], |k| k[0]),
            LookupTable::from_fn(&[2, pu], |k| k[0]),
        ],
        output_map: LookupTable::from_fn(&[2, pu, qu], |k| recombine(k[1], k[2])),
    };
    Ok(Wiring {
        resources: vec![first, second],
        alice: party(),
        bob: party(),
        target_shape: BoxShape::new(2, 2, r, r)?,
    })
}
