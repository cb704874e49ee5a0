//! `nlbox`: generate, check, wire and search no-signalling boxes.
//!
//! Exit codes: 0 affirmative (valid, local, found, composed, not
//! obstructed), 1 negative (signalling, nonlocal, exhausted, invalid,
//! obstructed), 2 usage, input or budget errors. A path of `-` reads from
//! stdin or writes to stdout; the text report then goes to stderr.

use std::fmt::Display;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlbox_core::analysis::{
    dyadic_obstruction, witness_unsimulable_prime, SearchConfig, SearchOutcome,
};
use nlbox_core::locality::best_local_value;
use nlbox_core::report::{LocalityReport, Report, ReportBody, SearchReport, WitnessDocument};
use nlbox_core::search::{search_perfect, verify_found, SearchError, DEFAULT_BUDGET};
use nlbox_core::{
    crt_wiring, evaluate_wiring, game_value, is_local, BipartiteBox, Game, Wiring, WiringError,
    DEFAULT_VERTEX_CAP,
};

#[derive(Parser)]
#[command(name = "nlbox", version, about = "Exact no-signalling boxes and their simulability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ReportOpt {
    /// Also write the report as JSON to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a box.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Check a property of a box.
    Check {
        #[command(subcommand)]
        what: CheckKind,
    },
    /// Search all deterministic wirings for a perfect simulation.
    Search {
        #[arg(long)]
        target: PathBuf,
        /// Resource box, in query order; repeat for several.
        #[arg(long = "resource")]
        resources: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Enumerate both output maps instead of branch-and-bound.
        #[arg(long)]
        no_pruning: bool,
        /// Where to write the witness wiring when one is found.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        report: ReportOpt,
    },
    /// Smallest prime p whose mod-p box the resources cannot simulate.
    WitnessPrime {
        #[arg(long = "resource")]
        resources: Vec<PathBuf>,
        #[command(flatten)]
        report: ReportOpt,
    },
    /// Divisibility obstruction for mod-p from n mod-2 boxes.
    Obstruct {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        report: ReportOpt,
    },
    /// Compose boxes with a fixed wiring.
    Compose {
        #[command(subcommand)]
        kind: ComposeKind,
    },
    /// Value of a game on a box, with the game's local bound.
    Game {
        #[arg(long = "box")]
        box_path: PathBuf,
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        report: ReportOpt,
    },
    /// Work with wiring files.
    Wire {
        #[command(subcommand)]
        what: WireKind,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// The mod-p nonlocal box.
    Modp {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CheckKind {
    /// No-signalling; prints a witness if the box signals.
    Ns {
        #[arg(long = "box")]
        box_path: PathBuf,
        #[command(flatten)]
        report: ReportOpt,
    },
    /// Local polytope membership with a certificate either way.
    Local {
        #[arg(long = "box")]
        box_path: PathBuf,
        #[command(flatten)]
        report: ReportOpt,
    },
}

#[derive(Subcommand)]
enum ComposeKind {
    /// mod-p and mod-q boxes into a mod-pq box, for coprime p and q.
    Crt {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        /// Where to write the composed box.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the wiring itself.
        #[arg(long)]
        wiring_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WireKind {
    /// Validate and evaluate a wiring, writing the resulting box.
    Eval {
        #[arg(long)]
        wiring: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error that maps to exit code 2.
struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(bool, Report, Option<PathBuf>), Failure>;

fn is_stdio(p: &Path) -> bool {
    p.as_os_str() == "-"
}

fn read_text(p: &Path) -> Result<String, Failure> {
    let mut s = String::new();
    if is_stdio(p) {
        io::stdin().read_to_string(&mut s)?;
    } else {
        s = std::fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
    }
    Ok(s)
}

fn write_text(p: &Path, text: &str) -> Result<(), Failure> {
    if is_stdio(p) {
        io::stdout().write_all(text.as_bytes())?;
    } else {
        std::fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn read_box(p: &Path) -> Result<BipartiteBox, Failure> {
    BipartiteBox::from_json(&read_text(p)?).map_err(|e| Failure(format!("{}: {e}", p.display())))
}

fn write_box(p: &Path, b: &BipartiteBox) -> Result<(), Failure> {
    write_text(p, &format!("{}\n", b.to_json()))
}

fn read_wiring(p: &Path) -> Result<Wiring, WiringError> {
    if is_stdio(p) {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| WiringError::Malformed(e.to_string()))?;
        Wiring::from_json(&s, Path::new("."))
    } else {
        Wiring::read(p)
    }
}

fn read_boxes(paths: &[PathBuf]) -> Result<Vec<BipartiteBox>, Failure> {
    paths.iter().map(|p| read_box(p)).collect()
}

fn run(cmd: Command, invocation: Vec<String>) -> Outcome {
    let report = |body| Report::new(invocation.clone(), body);
    match cmd {
        Command::Gen {
            kind: GenKind::Modp { p, out },
        } => {
            let b = BipartiteBox::modp_nlb(p)?;
            write_box(&out, &b)?;
            let body = ReportBody::Box {
                shape: b.shape(),
                no_signalling: b.is_no_signalling(),
                path: Some(out.display().to_string()),
            };
            Ok((true, report(body), None))
        }
        Command::Check {
            what: CheckKind::Ns { box_path, report: r },
        } => {
            let b = read_box(&box_path)?;
            let witness = b.signalling_witness();
            let body = ReportBody::NoSignalling {
                no_signalling: witness.is_none(),
                witness: witness.as_ref().map(WitnessDocument::from),
            };
            Ok((witness.is_none(), report(body), r.report))
        }
        Command::Check {
            what: CheckKind::Local { box_path, report: r },
        } => {
            let b = read_box(&box_path)?;
            let cert = is_local(&b, DEFAULT_VERTEX_CAP)?;
            let body = ReportBody::Locality(LocalityReport::new(&cert, b.shape()));
            Ok((cert.is_local(), report(body), r.report))
        }
        Command::Search {
            target,
            resources,
            budget,
            workers,
            no_pruning,
            out,
            report: r,
        } => {
            let t = read_box(&target)?;
            let res = read_boxes(&resources)?;
            let config = SearchConfig {
                budget,
                workers,
                pruning: !no_pruning,
            };
            let result = match search_perfect(&t, &res, &config) {
                Ok(result) => result,
                Err(e @ SearchError::BudgetExceeded { .. }) => return Err(Failure(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            if !verify_found(&result, &t) {
                return Err(Failure("internal error: witness failed re-verification".into()));
            }
            if let (SearchOutcome::Found(w), Some(out)) = (&result.outcome, &out) {
                write_text(out, &format!("{}\n", w.to_json()))?;
            }
            let body = ReportBody::Search(SearchReport::from(&result));
            Ok((result.is_found(), report(body), r.report))
        }
        Command::WitnessPrime { resources, report: r } => {
            let res = read_boxes(&resources)?;
            let (prime, obstruction) = witness_unsimulable_prime(&res)?;
            let body = ReportBody::WitnessPrime { prime, obstruction };
            Ok((false, report(body), r.report))
        }
        Command::Obstruct { p, n, report: r } => {
            let o = dyadic_obstruction(p, n)?;
            let ok = !o.is_obstructed();
            Ok((ok, report(ReportBody::Obstruction(o)), r.report))
        }
        Command::Compose {
            kind:
                ComposeKind::Crt {
                    p,
                    q,
                    out,
                    wiring_out,
                },
        } => {
            let w = crt_wiring(p, q)?;
            let b = evaluate_wiring(&w)?;
            if let Some(path) = wiring_out {
                w.write(path)?;
            }
            write_box(&out, &b)?;
            let body = ReportBody::Box {
                shape: b.shape(),
                no_signalling: b.is_no_signalling(),
                path: Some(out.display().to_string()),
            };
            Ok((true, report(body), None))
        }
        Command::Game {
            box_path,
            game,
            report: r,
        } => {
            let b = read_box(&box_path)?;
            let g = Game::from_json(&read_text(&game)?)?;
            let value = game_value(&b, &g)?;
            let (local_bound, _) = best_local_value(&g, DEFAULT_VERTEX_CAP)?;
            let body = ReportBody::GameValue { value, local_bound };
            Ok((true, report(body), r.report))
        }
        Command::Wire {
            what: WireKind::Eval { wiring, out },
        } => {
            let w = match read_wiring(&wiring) {
                Ok(w) => w,
                Err(e) => return Err(Failure(format!("{}: {e}", wiring.display()))),
            };
            match evaluate_wiring(&w) {
                Ok(b) => {
                    write_box(&out, &b)?;
                    let body = ReportBody::Box {
                        shape: b.shape(),
                        no_signalling: b.is_no_signalling(),
                        path: Some(out.display().to_string()),
                    };
                    Ok((true, report(body), None))
                }
                Err(e @ WiringError::Invalid(_)) => {
                    eprintln!("{e}");
                    Err(Failure::negative())
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

impl Failure {
    /// Marker for a negative verdict that has no report.
    fn negative() -> Self {
        Failure(String::new())
    }
}

/// Where stdout is taken by data, the text report moves to stderr.
fn stdout_busy(cmd: &Command) -> bool {
    match cmd {
        Command::Gen {
            kind: GenKind::Modp { out, .. },
        }
        | Command::Compose {
            kind: ComposeKind::Crt { out, .. },
        }
        | Command::Wire {
            what: WireKind::Eval { out, .. },
        } => is_stdio(out),
        Command::Search { out, .. } => out.as_deref().is_some_and(is_stdio),
        _ => false,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let invocation: Vec<String> = std::iter::once("nlbox".to_string())
        .chain(std::env::args().skip(1))
        .collect();
    let busy = stdout_busy(&cli.command);
    match run(cli.command, invocation) {
        Ok((affirmative, report, json_path)) => {
            let text = report.to_string();
            if busy {
                eprint!("{text}");
            } else {
                print!("{text}");
            }
            if let Some(path) = json_path {
                if let Err(Failure(msg)) = write_text(&path, &report.to_json()) {
                    eprintln!("error: {msg}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if affirmative { 0 } else { 1 })
        }
        Err(Failure(msg)) if msg.is_empty() => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
