//! Stable text and JSON reports.
//!
//! Every report carries the tool version and the invocation that produced
//! it, and nothing else that varies between runs, so identical invocations
//! give byte-identical output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{MarginalConditions, ObstructionParams, ObstructionReport};
use crate::boxes::{BoxShape, SignallingWitness};
use crate::exact_num::ExactRational;
use crate::locality::{GameDocument, LocalVertex, LocalityCertificate};
use crate::search::{SearchOutcome, SearchResult};
use crate::wiring::WiringDocument;

pub const TOOL: &str = "nlbox";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub invocation: Vec<String>,
    pub result: ReportBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReportBody {
    Search(SearchReport),
    Obstruction(ObstructionReport),
    WitnessPrime {
        prime: u64,
        obstruction: ObstructionReport,
    },
    NoSignalling {
        no_signalling: bool,
        witness: Option<WitnessDocument>,
    },
    Locality(LocalityReport),
    GameValue {
        value: ExactRational,
        local_bound: ExactRational,
    },
    Box {
        shape: BoxShape,
        no_signalling: bool,
        path: Option<String>,
    },
    MarginalConditions(MarginalConditions),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessDocument {
    pub side: String,
    pub own_input: usize,
    pub other_input_1: usize,
    pub other_input_2: usize,
    pub output: usize,
}

impl From<&SignallingWitness> for WitnessDocument {
    fn from(w: &SignallingWitness) -> Self {
        WitnessDocument {
            side: w.side.to_string(),
            own_input: w.own_input,
            other_input_1: w.other_input_1,
            other_input_2: w.other_input_2,
            output: w.output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchVerdict {
    Found,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub outcome: SearchVerdict,
    pub strategies_examined: u64,
    pub best_value: ExactRational,
    pub best_witness: WiringDocument,
}

impl From<&SearchResult> for SearchReport {
    fn from(r: &SearchResult) -> Self {
        SearchReport {
            outcome: match r.outcome {
                SearchOutcome::Found(_) => SearchVerdict::Found,
                SearchOutcome::Exhausted => SearchVerdict::Exhausted,
            },
            strategies_examined: r.strategies_examined,
            best_value: r.best_value.clone(),
            best_witness: r.best_witness.to_document(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexWeight {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
    pub weight: ExactRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LocalityReport {
    Local {
        weights: Vec<VertexWeight>,
    },
    Nonlocal {
        game: GameDocument,
        local_bound: ExactRational,
        achieved: ExactRational,
    },
}

impl LocalityReport {
    pub fn new(cert: &LocalityCertificate, shape: BoxShape) -> Self {
        match cert {
            LocalityCertificate::Local { weights } => LocalityReport::Local {
                weights: weights
                    .iter()
                    .map(|(idx, w)| {
                        let v = LocalVertex::from_index(shape, *idx);
                        VertexWeight {
                            alice: v.alice,
                            bob: v.bob,
                            weight: w.clone(),
                        }
                    })
                    .collect(),
            },
            LocalityCertificate::Nonlocal(c) => LocalityReport::Nonlocal {
                game: c.game.to_document(),
                local_bound: c.local_bound.clone(),
                achieved: c.achieved.clone(),
            },
        }
    }
}

impl Report {
    pub fn new(invocation: Vec<String>, result: ReportBody) -> Self {
        Report {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            invocation,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn rows(f: &mut fmt::Formatter<'_>, table: &[Vec<Vec<Vec<ExactRational>>>]) -> fmt::Result {
    for (x, by_y) in table.iter().enumerate() {
        for (y, by_a) in by_y.iter().enumerate() {
            let cells: Vec<String> = by_a
                .iter()
                .map(|row| row.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                .collect();
            writeln!(f, "    x={x} y={y}: {}", cells.join(" | "))?;
        }
    }
    Ok(())
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.tool, self.version)?;
        writeln!(f, "invocation: {}", self.invocation.join(" "))?;
        match &self.result {
            ReportBody::Search(s) => {
                let verdict = match s.outcome {
                    SearchVerdict::Found => "found",
                    SearchVerdict::Exhausted => "exhausted",
                };
                writeln!(f, "search: {verdict}")?;
                writeln!(f, "strategies examined: {}", s.strategies_examined)?;
                writeln!(f, "best value: {}", s.best_value)?;
                let w = &s.best_witness;
                writeln!(
                    f,
                    "best witness: {} resources, target shape {}",
                    w.resources.len(),
                    w.target_shape
                )?;
                for (name, p) in [("alice", &w.alice), ("bob", &w.bob)] {
                    for (l, t) in p.input_maps.iter().enumerate() {
                        writeln!(f, "  {name} input {l}: {}", table_text(t))?;
                    }
                    writeln!(f, "  {name} output: {}", table_text(&p.output_map))?;
                }
                Ok(())
            }
            ReportBody::Obstruction(o) => obstruction(f, o),
            ReportBody::WitnessPrime { prime, obstruction: o } => {
                writeln!(f, "unsimulable prime: {prime}")?;
                obstruction(f, o)
            }
            ReportBody::NoSignalling {
                no_signalling,
                witness,
            } => {
                if *no_signalling {
                    writeln!(f, "no-signalling: yes")
                } else {
                    writeln!(f, "no-signalling: no")?;
                    if let Some(w) = witness {
                        writeln!(
                            f,
                            "  {} marginal of output {} at own input {} differs between other inputs {} and {}",
                            w.side, w.output, w.own_input, w.other_input_1, w.other_input_2
                        )?;
                    }
                    Ok(())
                }
            }
            ReportBody::Locality(LocalityReport::Local { weights }) => {
                writeln!(f, "local: mixture of {} deterministic vertices", weights.len())?;
                for v in weights {
                    writeln!(f, "  alice {:?} bob {:?} weight {}", v.alice, v.bob, v.weight)?;
                }
                Ok(())
            }
            ReportBody::Locality(LocalityReport::Nonlocal {
                game,
                local_bound,
                achieved,
            }) => {
                writeln!(f, "nonlocal: Bell functional, payoff [x][y] rows over (a, b)")?;
                rows(f, &game.payoff)?;
                writeln!(f, "  local bound {local_bound}")?;
                writeln!(f, "  achieved    {achieved}")
            }
            ReportBody::GameValue { value, local_bound } => {
                writeln!(f, "game value: {value}")?;
                writeln!(f, "local bound: {local_bound}")
            }
            ReportBody::Box {
                shape,
                no_signalling,
                path,
            } => {
                writeln!(f, "box: shape {shape}, no-signalling {no_signalling}")?;
                if let Some(p) = path {
                    writeln!(f, "written to {p}")?;
                }
                Ok(())
            }
            ReportBody::MarginalConditions(c) => {
                writeln!(f, "marginal conditions (x,y)=00 01 10 11: {:?}", c.as_array())
            }
        }
    }
}

fn table_text(t: &crate::wiring::LookupTable) -> String {
    t.entries
        .iter()
        .map(|(k, v)| {
            let key: Vec<String> = k.iter().map(ToString::to_string).collect();
            format!("({})->{v}", key.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn obstruction(f: &mut fmt::Formatter<'_>, o: &ObstructionReport) -> fmt::Result {
    match &o.params {
        ObstructionParams::Dyadic { p, n } => {
            writeln!(f, "dyadic obstruction for mod-{p} from {n} mod-2 boxes: {}", o.verdict)?
        }
        ObstructionParams::DenominatorPrime { p, profile_primes } => writeln!(
            f,
            "denominator-prime obstruction for mod-{p}, profile primes {profile_primes:?}: {}",
            o.verdict
        )?,
    }
    for (i, s) in o.derivation.iter().enumerate() {
        writeln!(f, "  {}. {}", i + 1, s.statement)?;
    }
    Ok(())
}
