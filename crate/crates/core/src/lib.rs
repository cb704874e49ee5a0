//! Exact no-signalling boxes and the limits of simulating them.
//!
//! The crate models bipartite boxes `p(a,b|x,y)` with exact rational
//! entries, the mod-p nonlocal box family, deterministic wirings that build
//! new boxes out of resource boxes without communication, locality
//! certificates, and two impossibility checks: exhaustive search over
//! wirings, and denominator-based obstructions (dyadic and prime-support).

pub mod analysis;
pub mod boxes;
pub mod exact_num;
pub mod locality;
pub mod lp;
pub mod report;
pub mod search;
pub mod wiring;

pub use boxes::{boxes_equal, BipartiteBox, BoxError, BoxShape, MarginalFamily, Party};
pub use exact_num::{rat, ExactRational, NumError};
pub use locality::{
    best_local_value, game_value, is_local, local_vertices, Game, LocalityCertificate,
    LocalityError, DEFAULT_VERTEX_CAP,
};
pub use wiring::{crt_wiring, evaluate_wiring, validate_wiring, Wiring, WiringError};
