//! Verification suites. Each check records a name, a verdict and a short
//! detail; the suite passes when every check does.

use std::collections::BTreeMap;

use clap::ValueEnum;
use commgrowth::goodbasis::{comm_index, intersect};
use commgrowth::latticeenum::{
    intersect_normative, lattice_ball, oracle_count, BallOptions, Caps, Method, OracleOptions, Pruning,
};
use commgrowth::selfcheck::{sample_lattices, selfcheck};
use commgrowth::zeta::{self, LocalSeries};
use commgrowth::{Catalog, Element, GoodBasis};
use serde::Serialize;

use crate::commands::compute;
use crate::CliError;

pub const VERIFY_SCHEMA: &str = "commgrowth.verify/1";

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Selfcheck,
    Goodbasis,
    OracleEquivalence,
    AbelianClosedForm,
    Euler,
    Determinism,
    DownOnly,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

type Outcome = Result<String, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn expect_eq<T: PartialEq + std::fmt::Debug>(got: T, want: T) -> Outcome {
    if got == want {
        Ok(format!("{got:?}"))
    } else {
        Err(format!("got {got:?}, expected {want:?}"))
    }
}

struct Runner {
    checks: Vec<Check>,
}

impl Runner {
    fn check(&mut self, name: impl Into<String>, f: impl FnOnce() -> Outcome) {
        let name = name.into();
        let (passed, detail) = match f() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if !passed {
            tracing::warn!(check = %name, %detail, "check failed");
        }
        self.checks.push(Check { name, passed, detail });
    }
}

pub fn run_suite(catalog: &Catalog, suite: Suite, seed: u64, jobs: usize, caps: &Caps) -> VerifyReport {
    let mut r = Runner { checks: Vec::new() };
    let opts = BallOptions { caps: caps.clone(), pruning: Pruning::Tight, jobs };
    match suite {
        Suite::Selfcheck => suite_selfcheck(&mut r, catalog, seed),
        Suite::Goodbasis => suite_goodbasis(&mut r, catalog, seed),
        Suite::OracleEquivalence => suite_oracle(&mut r, catalog, &opts),
        Suite::AbelianClosedForm => suite_abelian(&mut r, catalog, &opts),
        Suite::Euler => suite_euler(&mut r, catalog, &opts),
        Suite::Determinism => suite_determinism(&mut r, catalog, &opts),
        Suite::DownOnly => suite_down_only(&mut r, catalog, &opts),
    }
    let passed = r.checks.iter().all(|c| c.passed);
    let suite = suite.to_possible_value().expect("named").get_name().to_string();
    VerifyReport { schema: VERIFY_SCHEMA, suite, seed, passed, checks: r.checks }
}

fn table(catalog: &Catalog, id: &str, p: u64, k: usize, method: Method, opts: &BallOptions) -> Result<Vec<u64>, String> {
    let g = catalog.get(id).map_err(err)?;
    let (t, _) = compute(&g, p, k, method, opts).map_err(|e: CliError| e.to_string())?;
    if !t.is_complete() {
        return Err(format!("{id} p={p}: incomplete table {:?}", t.cap));
    }
    Ok(t.coeffs)
}

fn suite_selfcheck(r: &mut Runner, catalog: &Catalog, seed: u64) {
    for g in catalog.iter() {
        r.check(format!("selfcheck {}", g.id), || {
            selfcheck(g, 64, seed).map(|rep| format!("{} identities", rep.identities.len())).map_err(err)
        });
    }
}

fn suite_goodbasis(r: &mut Runner, catalog: &Catalog, seed: u64) {
    for id in ["Z1", "Z2", "heis3"] {
        let Ok(g) = catalog.get(id) else { continue };
        for p in [2u64, 3] {
            let name = format!("{id} p={p}");
            let Ok(ls) = sample_lattices(&g, p, 8, seed) else {
                r.check(format!("sample {name}"), || Err("sampling failed".into()));
                continue;
            };
            r.check(format!("canonical form {name}"), || {
                for h in &ls {
                    let c = h.canonical().map_err(err)?;
                    if !h.is_canonical() || c.key() != h.key() || !h.is_closure_valid() {
                        return Err(format!("{} not a fixed point of canonicalization", h.key()));
                    }
                }
                Ok(format!("{} lattices", ls.len()))
            });
            r.check(format!("membership round trip {name}"), || {
                for h in &ls {
                    let mut x = g.identity();
                    for (i, row) in h.rows().iter().enumerate() {
                        x = g.mul(&x, &g.pow_i64(row, i as i64 - 1));
                    }
                    let m = h.member(&x).ok_or("word in the basis is not a member")?;
                    if h.word(&m) != x {
                        return Err(format!("{}: word(member(x)) != x", h.key()));
                    }
                    let mut off = x.clone();
                    let unit: Element = Element::unit(g.dim, g.dim - 1, commgrowth::rational::p_power(p, -3));
                    off = g.mul(&off, &unit);
                    if h.exponents()[g.dim - 1] > -3 && h.contains(&off) {
                        return Err(format!("{}: accepted a non-member", h.key()));
                    }
                }
                Ok("ok".into())
            });
            r.check(format!("intersection {name}"), || {
                for pair in ls.windows(2) {
                    let (h, k) = (&pair[0], &pair[1]);
                    let hk = intersect(h, k).map_err(err)?;
                    let kh = intersect(k, h).map_err(err)?;
                    if hk.key() != kh.key() {
                        return Err(format!("not symmetric: {} vs {}", hk.key(), kh.key()));
                    }
                    if intersect(h, h).map_err(err)?.key() != h.key() {
                        return Err(format!("{}: H ∩ H != H", h.key()));
                    }
                    let n = intersect_normative(h, k, 1 << 22).map_err(err)?;
                    if n.key() != hk.key() {
                        return Err(format!("orbit method {} disagrees with floor method {}", hk.key(), n.key()));
                    }
                    let (a, b) = comm_index(h, k).map_err(err)?;
                    let (b2, a2) = comm_index(k, h).map_err(err)?;
                    if (a, b) != (a2, b2) {
                        return Err(format!("index not symmetric: ({a},{b}) vs ({a2},{b2})"));
                    }
                }
                Ok(format!("{} pairs", ls.len() - 1))
            });
        }
    }
}

fn suite_oracle(r: &mut Runner, catalog: &Catalog, opts: &BallOptions) {
    let configs: &[(&str, u64, usize)] =
        &[("Z1", 2, 3), ("Z1", 3, 3), ("Z1", 5, 3), ("Z2", 2, 2), ("Z2", 3, 2), ("heis3", 2, 1)];
    for &(id, p, k) in configs {
        r.check(format!("search = oracle {id} p={p} K={k}"), || {
            let g = catalog.get(id).map_err(err)?;
            let ball = lattice_ball(&g, p, k, opts).map_err(err)?;
            let gamma = GoodBasis::standard(g.clone(), Some(p));
            let mut search: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for rec in &ball.records {
                rec.verify(&gamma).map_err(err)?;
                search.entry(rec.k() as usize).or_default().push(rec.key());
            }
            for v in search.values_mut() {
                v.sort();
            }
            let o = oracle_count(&g, p, k, &OracleOptions { caps: opts.caps.clone(), deepen: 0, collect_keys: true })
                .map_err(err)?;
            if search != o.keys {
                return Err(format!("lattice sets differ; oracle counts {:?}", o.table.coeffs));
            }
            Ok(format!("{:?}, quotient order {}", o.table.coeffs, o.quotient_order))
        });
    }
}

fn suite_abelian(r: &mut Runner, catalog: &Catalog, opts: &BallOptions) {
    for p in [2u64, 3, 5] {
        r.check(format!("Z1 local p={p}"), || {
            let c = table(catalog, "Z1", p, 4, Method::Search, opts)?;
            expect_eq(c, zeta::abelian_local(4))
        });
        r.check(format!("Z1 rational function p={p}"), || {
            let s = LocalSeries::new("Z1", p, table(catalog, "Z1", p, 4, Method::Search, opts)?);
            let f = zeta::fit_recurrence(&s, 2).map_err(err)?;
            zeta::to_rational_function(&f, &s).map_err(err)?;
            if f.length != 1 || f.rational_function != "(1 + t) / (1 - t)" {
                return Err(format!("fit {} with length {}", f.rational_function, f.length));
            }
            Ok(f.rational_function)
        });
    }
    r.check("Z1 global n <= 200", || {
        let c = global(catalog, "Z1", 200, opts)?;
        let want: Vec<u64> = (1..=200).map(zeta::abelian_reference).collect();
        expect_eq(c, want).map(|_| "2^omega(n) for all n <= 200".into())
    });
}

fn global(catalog: &Catalog, id: &str, n: u64, opts: &BallOptions) -> Result<Vec<u64>, String> {
    let mut tables = BTreeMap::new();
    for p in (2..=n).filter(|&p| commgrowth::rational::is_prime(p)) {
        let k = n.ilog(p) as usize;
        tables.insert(p, LocalSeries::new(id, p, table(catalog, id, p, k, Method::Search, opts)?));
    }
    zeta::global_coefficients(&tables, n).map_err(err)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn suite_euler(r: &mut Runner, catalog: &Catalog, opts: &BallOptions) {
    let n = 30;
    for id in ["Z1", "Z2"] {
        let c = global(catalog, id, n, opts);
        r.check(format!("{id} multiplicative up to {n}"), || {
            let c = c.clone()?;
            for a in 1..=n {
                for b in 1..=n / a {
                    if gcd(a, b) == 1 && c[(a * b - 1) as usize] != c[(a - 1) as usize] * c[(b - 1) as usize] {
                        return Err(format!("c_{} != c_{a} c_{b}", a * b));
                    }
                }
            }
            Ok(format!("c_1..c_{n} = {c:?}"))
        });
        if id == "Z2" {
            r.check(format!("Z2 c_p = 2(p+1) for p <= {n}"), || {
                let c = c?;
                for p in (2..=n).filter(|&p| commgrowth::rational::is_prime(p)) {
                    if c[(p - 1) as usize] != 2 * (p + 1) {
                        return Err(format!("c_{p} = {}", c[(p - 1) as usize]));
                    }
                }
                Ok("ok".into())
            });
        } else {
            r.check("Z1 matches 2^omega(n)", || {
                let want: Vec<u64> = (1..=n).map(zeta::abelian_reference).collect();
                expect_eq(c?, want).map(|_| "ok".into())
            });
        }
    }
}

fn suite_determinism(r: &mut Runner, catalog: &Catalog, opts: &BallOptions) {
    for &(id, p, k) in &[("Z2", 2u64, 2usize), ("Z2", 3, 2), ("heis3", 2, 1)] {
        for method in [Method::Search, Method::Oracle] {
            r.check(format!("{id} p={p} K={k} {} with 1 and 8 workers", method.as_str()), || {
                let g = catalog.get(id).map_err(err)?;
                let run = |jobs| -> Result<String, String> {
                    let o = BallOptions { jobs, ..opts.clone() };
                    let (t, d) = compute(&g, p, k, method, &o).map_err(|e| e.to_string())?;
                    Ok(format!("{}\n{d:?}", serde_json::to_string(&t).map_err(err)?))
                };
                let (a, b) = (run(1)?, run(8)?);
                if a != b {
                    return Err(format!("outputs differ:\n{a}\n{b}"));
                }
                Ok(a.lines().next().unwrap_or_default().to_string())
            });
        }
    }
}

/// Subgroups of index `n` in Z², one per Hermite normal form
/// `[[a, b], [0, d]]` with `ad = n`, `0 ≤ b < d`.
pub fn hnf_count_z2(n: u64) -> u64 {
    let mut count = 0;
    for a in 1..=n {
        if n.is_multiple_of(a) {
            let d = n / a;
            count += d;
        }
    }
    count
}

fn suite_down_only(r: &mut Runner, catalog: &Catalog, opts: &BallOptions) {
    r.check("Z2 p=2 against Hermite normal forms", || {
        let c = table(catalog, "Z2", 2, 3, Method::DownOnly, opts)?;
        let want: Vec<u64> = (0..=3).map(|k| hnf_count_z2(1 << k)).collect();
        expect_eq(c, want)
    });
    for p in [2u64, 3] {
        r.check(format!("heis3 a_p = p+1 at p={p}"), || {
            let c = table(catalog, "heis3", p, 1, Method::DownOnly, opts)?;
            expect_eq(c, vec![1, p + 1])
        });
    }
    for &(id, p, k) in &[("Z2", 2u64, 2usize), ("heis3", 2, 1), ("Z1", 3, 3)] {
        r.check(format!("{id} p={p} down-only <= search"), || {
            let d = table(catalog, id, p, k, Method::DownOnly, opts)?;
            let s = table(catalog, id, p, k, Method::Search, opts)?;
            if d.iter().zip(&s).all(|(a, b)| a <= b) {
                Ok(format!("{d:?} <= {s:?}"))
            } else {
                Err(format!("{d:?} exceeds {s:?}"))
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_counts_are_divisor_sums() {
        assert_eq!((0..=3).map(|k| hnf_count_z2(1 << k)).collect::<Vec<_>>(), vec![1, 3, 7, 15]);
        assert_eq!(hnf_count_z2(6), 12);
    }
}
