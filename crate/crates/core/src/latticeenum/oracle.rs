//! Brute-force counting inside the finite group `E_K / F`, and the
//! floor-based intersection of two lattices.
//!
//! `E_K` contains every `Δ` with `c(Γ, Δ) ≤ p^K`; the certified floor `F`
//! consists of `p^K`-th powers of elements of `Γ`, so it lies in every
//! such `Δ` (a subgroup of index `p^a` in `Γ` contains all `p^a`-th
//! powers), and it is normal in the ambient grid. Lattices between `F`
//! and `E_K` are therefore exactly the subgroups of `E_K / F`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::goodbasis::{complete_basis, GoodBasis};
use crate::latticeenum::envelope::iterated_envelopes;
use crate::latticeenum::floor::{certify_floor, close_grid, grid_containing, meet, recertify, FloorRequest};
use crate::latticeenum::quotient::{all_subgroups, Digits, FiniteQuotient};
use crate::latticeenum::{Caps, CoefficientTable, Method};
use crate::malcev::{Element, GroupSpec};
use crate::rational::ensure_prime;

/// Subgroups visited before the oracle gives up.
const SUBGROUP_CAP: u64 = 5_000_000;

#[derive(Clone, Debug, Default)]
pub struct OracleOptions {
    pub caps: Caps,
    /// Added to every certified floor weight (the result must not change).
    pub deepen: i64,
    /// Also lift every counted subgroup back to a canonical lattice key.
    pub collect_keys: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleOutcome {
    pub table: CoefficientTable,
    pub envelope_exponents: Vec<i64>,
    pub floor_weights: Vec<i64>,
    pub ambient: Vec<i64>,
    pub quotient_order: u64,
    pub subgroups: u64,
    /// Canonical keys per `k`, when requested.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub keys: BTreeMap<usize, Vec<String>>,
}

fn exact_p_log(mut x: u64, p: u64) -> Option<usize> {
    let mut k = 0;
    while x > 1 {
        if !x.is_multiple_of(p) {
            return None;
        }
        x /= p;
        k += 1;
    }
    (x == 1).then_some(k)
}

pub fn oracle_count(group: &Arc<GroupSpec>, p: u64, max_k: usize, opts: &OracleOptions) -> Result<OracleOutcome> {
    ensure_prime(p)?;
    let d = group.dim;
    let envelopes = iterated_envelopes(group, p, max_k, opts.caps.max_envelope_index)?;
    let e = envelopes.last().expect("nonempty");
    let ambient = grid_containing(e);
    let req = FloorRequest { ambient: ambient.clone(), start: vec![0; d], power: Some(max_k as u32), inside: vec![] };
    let mut floor = certify_floor(group, p, &req)?;
    if opts.deepen != 0 {
        let w: Vec<i64> = floor.weights.iter().map(|w| w + opts.deepen).collect();
        floor = recertify(group, p, &req, &w)?;
    }
    let log_order: i64 = floor.weights.iter().sum::<i64>() - e.exponent_sum();
    let cap = opts.caps.max_oracle_group_size;
    let order = p
        .checked_pow(log_order as u32)
        .filter(|o| *o <= cap)
        .ok_or_else(|| Error::cap("max_oracle_group_size", cap, p.saturating_pow(log_order as u32)))?;
    let q = FiniteQuotient::new(group, &floor)?;
    let enc = |rows: &[Element]| rows.iter().map(|r| q.encode(r)).collect::<Result<Vec<Digits>>>();
    let ebar = q.generate(&enc(e.rows())?, cap)?;
    if ebar.order() as u64 != order {
        return Err(Error::Inconsistent(format!("|E/F| = {} but the diagonal predicts {order}", ebar.order())));
    }
    let gamma = GoodBasis::standard(group.clone(), Some(p));
    let gbar = ebar.subgroup(&enc(gamma.rows())?)?;
    let g_order = gbar.count();
    tracing::info!(group = %group.id, p, max_k, order, floor = ?floor.weights, "oracle quotient built");

    let mut coeffs = vec![0u64; max_k + 1];
    let mut lifted: Vec<(usize, Vec<u32>)> = Vec::new();
    let subgroups = all_subgroups(&ebar, SUBGROUP_CAP, |s| {
        let s_order = s.members.count();
        let meet = s.members.intersection_count(&gbar);
        let num = g_order as u128 * s_order as u128;
        let den = meet as u128 * meet as u128;
        if !num.is_multiple_of(den) {
            return;
        }
        let c = num / den;
        if let Some(k) = u64::try_from(c).ok().and_then(|c| exact_p_log(c, p)) {
            if k <= max_k {
                coeffs[k] += 1;
                if opts.collect_keys {
                    lifted.push((k, s.gens.clone()));
                }
            }
        }
    })?;

    let mut keys: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (k, gens) in lifted {
        let mut rows = floor.basis.rows().to_vec();
        rows.extend(gens.iter().map(|&i| q.decode(ebar.element(i))));
        let l = complete_basis(group, Some(p), &rows)?.canonical()?;
        keys.entry(k).or_default().push(l.key());
    }
    for v in keys.values_mut() {
        v.sort();
    }
    let table = CoefficientTable::new(&group.id, p, Method::Oracle, max_k, coeffs);
    Ok(OracleOutcome {
        table,
        envelope_exponents: e.exponents(),
        floor_weights: floor.weights,
        ambient,
        quotient_order: order,
        subgroups,
        keys,
    })
}

/// `H ∩ K` through a floor `F ⊆ H ∩ K` normal in a common ambient grid:
/// list `H/F` and `K/F` as digit boxes, intersect, and lift.
pub fn intersect_normative(h: &GoodBasis, k: &GoodBasis, cap: u64) -> Result<GoodBasis> {
    if h.group().id != k.group().id || h.prime() != k.prime() {
        return Err(Error::Incompatible);
    }
    let p = h.prime().ok_or(Error::Incompatible)?;
    let group = h.group().clone();
    let ambient = close_grid(&group, p, &meet(&grid_containing(h), &grid_containing(k)));
    let req = FloorRequest { ambient: ambient.clone(), start: ambient, power: None, inside: vec![h.clone(), k.clone()] };
    let floor = certify_floor(&group, p, &req)?;
    let q = FiniteQuotient::new(&group, &floor)?;
    let enc = |rows: &[Element]| rows.iter().map(|r| q.encode(r)).collect::<Result<Vec<Digits>>>();
    let mut both = enc(h.rows())?;
    both.extend(enc(k.rows())?);
    let joint = q.generate(&both, cap)?;
    let hb = joint.subgroup(&enc(h.rows())?)?;
    let kb = joint.subgroup(&enc(k.rows())?)?;
    let mut rows = floor.basis.rows().to_vec();
    rows.extend(hb.iter().filter(|&i| kb.contains(i)).map(|i| q.decode(joint.element(i))));
    complete_basis(&group, Some(p), &rows)?.canonical()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn oracle(id: &str, p: u64, k: usize) -> OracleOutcome {
        oracle_count(&Catalog::builtin().get(id).unwrap(), p, k, &OracleOptions::default()).unwrap()
    }

    #[test]
    fn abelian_oracle() {
        assert_eq!(oracle("Z1", 2, 2).table.coeffs, vec![1, 2, 2]);
        assert_eq!(oracle("Z2", 2, 1).table.coeffs, vec![1, 6]);
        assert_eq!(oracle("Z2", 3, 1).table.coeffs, vec![1, 8]);
    }

    #[test]
    fn heisenberg_oracle_at_two() {
        let o = oracle("heis3", 2, 1);
        assert_eq!(o.table.coeffs, vec![1, 4]);
        assert_eq!(o.quotient_order, 1 << 10);
        assert_eq!(o.floor_weights, vec![1, 2, 2]);
        assert_eq!(o.envelope_exponents, vec![-3, -1, -1]);
    }

    #[test]
    fn normative_intersection_examples() {
        let g = Catalog::builtin().get("Z2").unwrap();
        let gamma = GoodBasis::standard(g.clone(), Some(2));
        let h = complete_basis(
            &g,
            Some(2),
            &[Element::new(vec![crate::rational::frac(1, 2), crate::rational::frac(0, 1)]), Element::from_ints(&[0, 2])],
        )
        .unwrap();
        let i = intersect_normative(&h, &gamma, 1 << 16).unwrap();
        assert_eq!(i.exponents(), vec![0, 1]);
        assert_eq!(i, crate::goodbasis::intersect(&h, &gamma).unwrap());
    }
}
