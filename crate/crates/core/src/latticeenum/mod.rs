//! Enumeration of the lattices `Δ` with `c(Γ, Δ) = p^k`, `k ≤ K`.
//!
//! The search walks index-p steps up and down from `Γ = G(Z)`. Every `Δ`
//! is reached through `D = Δ ∩ Γ`: a chain of maximal subgroups leads from
//! `Γ` down to `D` (finite p-group quotients have index-p maximal
//! subgroups), then a chain of minimal overgroups leads up to `Δ`. Along
//! that path every node `X` has `c(Γ, X) ≤ c(Γ, Δ)`, which justifies the
//! pruning modes. An independent oracle counts the same lattices as
//! subgroups of a finite quotient `E_K / F`.

pub mod ball;
pub mod envelope;
pub mod floor;
pub mod oracle;
pub mod quotient;
pub mod steps;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::CapHit;

pub use ball::{count_coefficients, down_only_count, lattice_ball, Ball, BallOptions, LatticeRecord, Pruning};
pub use envelope::{iterated_envelopes, root_envelope};
pub use floor::{certify_floor, CertifiedFloor, FloorRequest};
pub use oracle::{intersect_normative, oracle_count, OracleOptions, OracleOutcome};
pub use steps::{maximal_subgroups_p, minimal_overgroups_p};

pub const TABLE_SCHEMA: &str = "commgrowth.table/1";
pub const RECORD_SCHEMA: &str = "commgrowth.lattice/1";

/// Resource limits. Hitting one is reported, never turned into a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest `log_p [E_K : Γ]` the oracle will build envelopes for.
    pub max_envelope_index: i64,
    pub max_oracle_group_size: u64,
    pub max_frontier: usize,
    /// Wall-clock budget in seconds; 0 disables it.
    pub timeout_seconds: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_envelope_index: 64, max_oracle_group_size: 65_536, max_frontier: 200_000, timeout_seconds: 0 }
    }
}

impl Caps {
    pub fn timeout(&self) -> Option<Duration> {
        (self.timeout_seconds > 0).then(|| Duration::from_secs(self.timeout_seconds))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Search,
    Oracle,
    DownOnly,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Search => "search",
            Method::Oracle => "oracle",
            Method::DownOnly => "down-only",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "search" => Ok(Method::Search),
            "oracle" => Ok(Method::Oracle),
            "down-only" | "down_only" => Ok(Method::DownOnly),
            other => Err(format!("unknown method {other:?} (expected search, oracle or down-only)")),
        }
    }
}

/// `c[k]` for `k = 0..=max_k`. When a cap stopped the computation,
/// entries above `complete_through` are lower bounds only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub schema: String,
    pub group: String,
    pub p: u64,
    pub method: Method,
    pub max_k: usize,
    pub coeffs: Vec<u64>,
    pub complete_through: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<CapHitDoc>,
    pub engine: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapHitDoc {
    pub cap: String,
    pub limit: u64,
    pub observed: u64,
}

impl From<&CapHit> for CapHitDoc {
    fn from(c: &CapHit) -> Self {
        CapHitDoc { cap: c.cap.clone(), limit: c.limit, observed: c.observed }
    }
}

impl CoefficientTable {
    pub fn new(group: &str, p: u64, method: Method, max_k: usize, coeffs: Vec<u64>) -> Self {
        CoefficientTable {
            schema: TABLE_SCHEMA.into(),
            group: group.into(),
            p,
            method,
            max_k,
            complete_through: max_k,
            coeffs,
            cap: None,
            engine: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cap.is_none() && self.complete_through >= self.max_k
    }
}
