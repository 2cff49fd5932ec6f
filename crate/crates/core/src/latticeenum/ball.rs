//! Breadth-first search over index-p steps.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CapHit, Error, Result};
use crate::goodbasis::{comm_data, BasisDoc, GoodBasis, DEFAULT_ORBIT_CAP};
use crate::latticeenum::steps::{maximal_subgroups_p, minimal_overgroups_p};
use crate::latticeenum::{Caps, CoefficientTable, Method, RECORD_SCHEMA};
use crate::malcev::GroupSpec;
use crate::rational::ensure_prime;

/// Which nodes of valuation `v = log_p c(Γ, X)` found at depth `t` are
/// expanded further.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pruning {
    /// Expand everything within distance K.
    None,
    /// Drop a node when `v - (K - t) > K`.
    Admissible,
    /// Drop a node when `v > K`. Sound because the down-then-up path to a
    /// target never passes through a node of larger valuation.
    #[default]
    Tight,
}

impl Pruning {
    fn keep(self, v: i64, depth: usize, max_k: usize) -> bool {
        let k = max_k as i64;
        match self {
            Pruning::None => true,
            Pruning::Admissible => v - (k - depth as i64) <= k,
            Pruning::Tight => v <= k,
        }
    }
}

impl std::str::FromStr for Pruning {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Pruning::None),
            "admissible" => Ok(Pruning::Admissible),
            "tight" => Ok(Pruning::Tight),
            other => Err(format!("unknown pruning {other:?}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BallOptions {
    pub caps: Caps,
    pub pruning: Pruning,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions { caps: Caps::default(), pruning: Pruning::Tight, jobs: 0 }
    }
}

/// A lattice `Δ` with its intersection `Δ ∩ Γ` and the index valuations
/// `a = log_p [Γ : Δ∩Γ]`, `b = log_p [Δ : Δ∩Γ]`.
#[derive(Clone, Debug)]
pub struct LatticeRecord {
    pub lattice: GoodBasis,
    pub intersection: GoodBasis,
    pub a: i64,
    pub b: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RecordDoc {
    pub schema: String,
    pub key: String,
    pub k: i64,
    pub a: i64,
    pub b: i64,
    #[serde(rename = "A")]
    pub lattice: BasisDoc,
    #[serde(rename = "B")]
    pub intersection: BasisDoc,
}

impl LatticeRecord {
    pub fn new(lattice: GoodBasis, gamma: &GoodBasis) -> Result<Self> {
        let lattice = lattice.canonical()?;
        let (intersection, a, b) = comm_data(&lattice, gamma, DEFAULT_ORBIT_CAP)?;
        Ok(LatticeRecord { lattice, intersection, a, b })
    }

    pub fn k(&self) -> i64 {
        self.a + self.b
    }

    pub fn key(&self) -> String {
        self.lattice.key()
    }

    pub fn doc(&self) -> RecordDoc {
        RecordDoc {
            schema: RECORD_SCHEMA.into(),
            key: self.key(),
            k: self.k(),
            a: self.a,
            b: self.b,
            lattice: self.lattice.to_doc(),
            intersection: self.intersection.to_doc(),
        }
    }

    /// Checks the structural invariants every emitted record must satisfy.
    pub fn verify(&self, gamma: &GoodBasis) -> Result<()> {
        if !self.lattice.is_closure_valid() || !self.lattice.is_canonical() {
            return Err(Error::Inconsistent(format!("{}: basis not canonical and closure-valid", self.key())));
        }
        if !self.lattice.contains_lattice(&self.intersection) || !gamma.contains_lattice(&self.intersection) {
            return Err(Error::Inconsistent(format!("{}: intersection not contained in both", self.key())));
        }
        if self.a < 0 || self.b < 0 {
            return Err(Error::Inconsistent(format!("{}: negative index", self.key())));
        }
        let lhs = self.a + self.b;
        let rhs = 2 * self.intersection.exponent_sum() - self.lattice.exponent_sum();
        if lhs != rhs {
            return Err(Error::Inconsistent(format!("{}: determinant identity {lhs} != {rhs}", self.key())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BallStats {
    pub nodes_expanded: u64,
    pub nodes_seen: u64,
    pub dedupe_hits: u64,
    pub pruned: u64,
    pub max_frontier: usize,
}

#[derive(Clone, Debug)]
pub struct Ball {
    pub group: String,
    pub p: u64,
    pub max_k: usize,
    /// Records with `k ≤ max_k`, sorted by `(k, key)`.
    pub records: Vec<LatticeRecord>,
    /// Depth up to which the search finished; `c[0..=completed_depth]` is exact.
    pub completed_depth: usize,
    pub cap_hit: Option<CapHit>,
    pub stats: BallStats,
}

fn run_in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn neighbours(x: &GoodBasis) -> Result<Vec<GoodBasis>> {
    let mut v = maximal_subgroups_p(x)?;
    v.extend(minimal_overgroups_p(x)?);
    Ok(v)
}

/// Every lattice `Δ` with `c(Γ, Δ) = p^k`, `k ≤ max_k`, exactly once.
pub fn lattice_ball(group: &Arc<GroupSpec>, p: u64, max_k: usize, opts: &BallOptions) -> Result<Ball> {
    ensure_prime(p)?;
    run_in_pool(opts.jobs, || ball_inner(group, p, max_k, opts))?
}

fn ball_inner(group: &Arc<GroupSpec>, p: u64, max_k: usize, opts: &BallOptions) -> Result<Ball> {
    let start = Instant::now();
    let gamma = GoodBasis::standard(group.clone(), Some(p));
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(gamma.key());
    let root = LatticeRecord::new(gamma.clone(), &gamma)?;
    let mut records = vec![root.clone()];
    let mut frontier = vec![root.lattice];
    let mut stats = BallStats { nodes_seen: 1, max_frontier: 1, ..Default::default() };
    let mut completed_depth = 0;
    let mut cap_hit = None;

    for depth in 1..=max_k {
        if frontier.is_empty() {
            completed_depth = max_k;
            break;
        }
        let expanded: Vec<Vec<GoodBasis>> = frontier.par_iter().map(neighbours).collect::<Result<_>>()?;
        stats.nodes_expanded += frontier.len() as u64;
        let mut fresh: BTreeMap<String, GoodBasis> = BTreeMap::new();
        for n in expanded.into_iter().flatten() {
            let key = n.key();
            if seen.contains(&key) || fresh.contains_key(&key) {
                stats.dedupe_hits += 1;
            } else {
                fresh.insert(key, n);
            }
        }
        seen.extend(fresh.keys().cloned());
        stats.nodes_seen += fresh.len() as u64;
        let fresh: Vec<GoodBasis> = fresh.into_values().collect();
        let recs: Vec<LatticeRecord> =
            fresh.into_par_iter().map(|x| LatticeRecord::new(x, &gamma)).collect::<Result<_>>()?;
        let mut next = Vec::new();
        for r in recs {
            let v = r.k();
            if opts.pruning.keep(v, depth, max_k) {
                next.push(r.lattice.clone());
            } else {
                stats.pruned += 1;
            }
            if v <= max_k as i64 {
                records.push(r);
            }
        }
        frontier = next;
        completed_depth = depth;
        stats.max_frontier = stats.max_frontier.max(frontier.len());
        tracing::info!(
            group = %group.id, p, depth, frontier = frontier.len(), seen = stats.nodes_seen,
            dedupe_hits = stats.dedupe_hits, pruned = stats.pruned, "ball layer"
        );
        if depth < max_k {
            if frontier.len() > opts.caps.max_frontier {
                cap_hit = Some(CapHit {
                    cap: "max_frontier".into(),
                    limit: opts.caps.max_frontier as u64,
                    observed: frontier.len() as u64,
                });
                break;
            }
            if let Some(t) = opts.caps.timeout() {
                if start.elapsed() > t {
                    cap_hit = Some(CapHit {
                        cap: "timeout_seconds".into(),
                        limit: t.as_secs(),
                        observed: start.elapsed().as_secs(),
                    });
                    break;
                }
            }
        }
    }
    if max_k == 0 {
        completed_depth = 0;
    }
    records.sort_by_key(|x| (x.k(), x.key()));
    Ok(Ball { group: group.id.clone(), p, max_k, records, completed_depth, cap_hit, stats })
}

/// `c[k] = #{records with a + b = k}`.
pub fn count_coefficients(ball: &Ball) -> CoefficientTable {
    let mut c = vec![0u64; ball.max_k + 1];
    for r in &ball.records {
        c[r.k() as usize] += 1;
    }
    let mut t = CoefficientTable::new(&ball.group, ball.p, Method::Search, ball.max_k, c);
    t.complete_through = ball.completed_depth;
    t.cap = ball.cap_hit.as_ref().map(Into::into);
    t
}

/// Subgroups of `Γ` of index `p^k`, layer by layer through maximal subgroups.
pub fn down_only_count(group: &Arc<GroupSpec>, p: u64, max_k: usize, opts: &BallOptions) -> Result<CoefficientTable> {
    ensure_prime(p)?;
    run_in_pool(opts.jobs, || {
        let gamma = GoodBasis::standard(group.clone(), Some(p));
        let mut layer = vec![gamma];
        let mut c = vec![1u64];
        let mut cap = None;
        for k in 1..=max_k {
            let next: Vec<Vec<GoodBasis>> = layer.par_iter().map(maximal_subgroups_p).collect::<Result<_>>()?;
            let mut uniq: BTreeMap<String, GoodBasis> = BTreeMap::new();
            for x in next.into_iter().flatten() {
                uniq.entry(x.key()).or_insert(x);
            }
            c.push(uniq.len() as u64);
            layer = uniq.into_values().collect();
            tracing::info!(group = %group.id, p, k, layer = layer.len(), "down-only layer");
            if k < max_k && layer.len() > opts.caps.max_frontier {
                cap = Some(CapHit {
                    cap: "max_frontier".into(),
                    limit: opts.caps.max_frontier as u64,
                    observed: layer.len() as u64,
                });
                break;
            }
        }
        let done = c.len() - 1;
        c.resize(max_k + 1, 0);
        let mut t = CoefficientTable::new(&group.id, p, Method::DownOnly, max_k, c);
        t.complete_through = done;
        t.cap = cap.as_ref().map(Into::into);
        Ok(t)
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn coeffs(id: &str, p: u64, k: usize) -> Vec<u64> {
        let g = Catalog::builtin().get(id).unwrap();
        count_coefficients(&lattice_ball(&g, p, k, &BallOptions::default()).unwrap()).coeffs
    }

    #[test]
    fn small_balls() {
        assert_eq!(coeffs("Z1", 2, 2), vec![1, 2, 2]);
        assert_eq!(coeffs("Z1", 3, 0), vec![1]);
        assert_eq!(coeffs("Z2", 2, 1), vec![1, 6]);
        assert_eq!(coeffs("heis3", 2, 1), vec![1, 4]);
    }

    #[test]
    fn records_satisfy_invariants() {
        let g = Catalog::builtin().get("heis3").unwrap();
        let gamma = GoodBasis::standard(g.clone(), Some(2));
        let ball = lattice_ball(&g, 2, 2, &BallOptions::default()).unwrap();
        for r in &ball.records {
            r.verify(&gamma).unwrap();
        }
    }

    #[test]
    fn down_only_small() {
        let g = Catalog::builtin().get("Z2").unwrap();
        assert_eq!(down_only_count(&g, 2, 3, &BallOptions::default()).unwrap().coeffs, vec![1, 3, 7, 15]);
        let z1 = Catalog::builtin().get("Z1").unwrap();
        assert_eq!(down_only_count(&z1, 5, 3, &BallOptions::default()).unwrap().coeffs, vec![1, 1, 1, 1]);
    }
}
