//! Index-p neighbours of a lattice: maximal subgroups (down) and minimal
//! overgroups (up).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::goodbasis::{complete_basis, det_index, GoodBasis};
use crate::latticeenum::envelope::peeled_power_coordinate;
use crate::malcev::Element;
use crate::rational::{rem_euclid, Rational};

/// `H^p [H, H]`, closed under conjugation by `H`.
pub fn frattini(h: &GoodBasis) -> Result<GoodBasis> {
    let group = h.group();
    let p = h.prime().ok_or(Error::Incompatible)?;
    let rows = h.rows();
    let mut gens: Vec<Element> = rows.iter().map(|r| group.pow_int(r, &BigInt::from(p))).collect();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            gens.push(group.comm(&rows[i], &rows[j]));
        }
    }
    loop {
        let phi = complete_basis(group, Some(p), &gens)?;
        let extra: Vec<Element> = phi
            .rows()
            .iter()
            .flat_map(|x| rows.iter().map(move |r| (x, r)))
            .map(|(x, r)| group.comm(x, r))
            .filter(|c| !phi.contains(c))
            .collect();
        if extra.is_empty() {
            return phi.canonical();
        }
        gens = phi.rows().to_vec();
        gens.extend(extra);
    }
}

fn modp(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue")
}

/// All subgroups of index p, as kernels of the nonzero functionals on the
/// elementary abelian quotient `H / Φ(H)`, sorted by canonical key.
pub fn maximal_subgroups_p(h: &GoodBasis) -> Result<Vec<GoodBasis>> {
    let p = h.prime().ok_or(Error::Incompatible)?;
    let group = h.group().clone();
    let h = h.canonical()?;
    let phi = frattini(&h)?;
    let d = h.dim();
    let ratio: Vec<i64> = phi.exponents().iter().zip(h.exponents()).map(|(a, b)| a - b).collect();
    if ratio.iter().any(|&r| r != 0 && r != 1) {
        return Err(Error::Inconsistent(format!("Frattini quotient is not elementary abelian: {ratio:?}")));
    }
    let free: Vec<usize> = (0..d).filter(|&i| ratio[i] == 1).collect();
    // Relations: for a level not in `free`, the Frattini row expresses h_i
    // through lower rows modulo Φ.
    let mut relations: Vec<Option<Vec<BigInt>>> = vec![None; d];
    for i in 0..d {
        if ratio[i] == 0 {
            let m = h.member(&phi.rows()[i]).ok_or_else(|| Error::Inconsistent("Φ ⊄ H".into()))?;
            debug_assert!(m[i].abs() == BigInt::from(1));
            relations[i] = Some(m);
        }
    }
    let r = free.len() as u32;
    let total = p.checked_pow(r).ok_or_else(|| Error::cap("Frattini rank", 64, r as u64))?;
    let mut out: BTreeMap<String, GoodBasis> = BTreeMap::new();
    for code in 1..total {
        let digits: Vec<u64> = (0..r).map(|t| code / p.pow(t) % p).collect();
        let lead = digits.iter().position(|&x| x != 0).expect("nonzero");
        if digits[lead] != 1 {
            continue;
        }
        let mut f = vec![0u64; d];
        for (t, &lvl) in free.iter().enumerate() {
            f[lvl] = digits[t];
        }
        for i in 0..d {
            if let Some(m) = &relations[i] {
                let s: BigInt = (0..i).map(|l| &m[l] * BigInt::from(f[l])).sum();
                let mi = modp(&m[i], p);
                // m_i = ±1, so its inverse mod p is itself.
                f[i] = modp(&(-(s * BigInt::from(mi))), p);
            }
        }
        let j0 = free[lead];
        debug_assert_eq!(f[j0], 1);
        let rows = h.rows();
        let mut gens: Vec<Element> = phi.rows().to_vec();
        gens.push(group.pow_int(&rows[j0], &BigInt::from(p)));
        for i in 0..d {
            if i != j0 {
                gens.push(group.mul(&rows[i], &group.pow_int(&rows[j0], &-BigInt::from(f[i]))));
            }
        }
        let m = complete_basis(&group, Some(p), &gens)?.canonical()?;
        if det_index(&m, &h)? != 1 {
            return Err(Error::Inconsistent("kernel of a functional does not have index p".into()));
        }
        out.insert(m.key(), m);
    }
    let expected = (total - 1) / (p - 1);
    if out.len() as u64 != expected {
        return Err(Error::Inconsistent(format!("found {} maximal subgroups, expected {expected}", out.len())));
    }
    Ok(out.into_values().collect())
}

/// All lattices containing `H` with index p, sorted by canonical key.
///
/// Every such overgroup is `⟨H, g⟩` where `g` can be taken as the box
/// representative of its left coset (`0 ≤ g_j < diag_j`). The condition
/// `g^p ∈ H` fixes `g_j` modulo `diag_j / p` level by level, leaving p
/// choices per level; survivors must normalize `H`.
pub fn minimal_overgroups_p(h: &GoodBasis) -> Result<Vec<GoodBasis>> {
    let p = h.prime().ok_or(Error::Incompatible)?;
    let group = h.group().clone();
    let h = h.canonical()?;
    let d = h.dim();
    let pr = Rational::from_integer(p.into());
    let mut out: BTreeMap<String, GoodBasis> = BTreeMap::new();
    let mut stack = vec![(d, group.identity())];
    while let Some((level, g)) = stack.pop() {
        if level == 0 {
            if g.is_identity() || !h.contains(&group.pow_int(&g, &BigInt::from(p))) {
                continue;
            }
            if !h.rows().iter().all(|r| h.contains(&group.comm(&g, r))) {
                continue;
            }
            let mut gens = h.rows().to_vec();
            gens.push(g);
            let o = complete_basis(&group, Some(p), &gens)?.canonical()?;
            if det_index(&h, &o)? != 1 {
                return Err(Error::Inconsistent("overgroup does not have index p".into()));
            }
            out.insert(o.key(), o);
            continue;
        }
        let j = level - 1;
        let Some(x0) = peeled_power_coordinate(&group, &h, &g, p, j) else { continue };
        let step = h.diag(j) / &pr;
        let r0 = rem_euclid(&(-x0 / &pr), &step);
        for t in 0..p {
            let mut next = g.clone();
            next.coords[j] = &r0 + &step * Rational::from_integer(t.into());
            stack.push((j, next));
        }
    }
    Ok(out.into_values().collect())
}

/// Sanity helper for tests: every element of `list` contains or is
/// contained in `h` with index p.
pub fn all_index_p(h: &GoodBasis, list: &[GoodBasis]) -> bool {
    list.iter().all(|x| {
        let down = h.contains_lattice(x) && det_index(x, h).ok() == Some(1);
        let up = x.contains_lattice(h) && det_index(h, x).ok() == Some(1);
        down || up
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::rational::frac;

    fn gamma(id: &str, p: u64) -> GoodBasis {
        GoodBasis::standard(Catalog::builtin().get(id).unwrap(), Some(p))
    }

    #[test]
    fn down_steps() {
        for p in [2, 3, 5] {
            assert_eq!(maximal_subgroups_p(&gamma("Z1", p)).unwrap().len(), 1);
            assert_eq!(maximal_subgroups_p(&gamma("Z2", p)).unwrap().len() as u64, p + 1);
            assert_eq!(maximal_subgroups_p(&gamma("heis3", p)).unwrap().len() as u64, p + 1);
            assert_eq!(maximal_subgroups_p(&gamma("Z3", p)).unwrap().len() as u64, p * p + p + 1);
        }
        let g = gamma("heis3", 2);
        let phi = frattini(&g).unwrap();
        assert_eq!(phi.exponents(), vec![0, 1, 1]);
        assert!(all_index_p(&g, &maximal_subgroups_p(&g).unwrap()));
    }

    #[test]
    fn up_steps() {
        let z1 = minimal_overgroups_p(&gamma("Z1", 3)).unwrap();
        assert_eq!(z1.len(), 1);
        assert_eq!(z1[0].exponents(), vec![-1]);
        assert_eq!(minimal_overgroups_p(&gamma("Z2", 2)).unwrap().len(), 3);
        assert_eq!(minimal_overgroups_p(&gamma("Z2", 3)).unwrap().len(), 4);
        let up = minimal_overgroups_p(&gamma("heis3", 2)).unwrap();
        assert_eq!(up.len(), 1);
        assert_eq!(up[0].exponents(), vec![-1, 0, 0]);
        assert!(up[0].contains(&Element::new(vec![frac(1, 2), frac(0, 1), frac(0, 1)])));
        assert!(all_index_p(&gamma("heis3", 2), &up));
    }
}
