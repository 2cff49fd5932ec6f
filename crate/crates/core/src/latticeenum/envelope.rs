//! Root envelopes `E₁(H) = ⟨g : g^p ∈ H⟩`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::goodbasis::{complete_basis, det_index, GoodBasis};
use crate::latticeenum::floor::{certify_floor, close_grid, grid_containing, lambda_at, term_valuation, FloorRequest};
use crate::malcev::{Element, GroupSpec};
use crate::rational::{is_integer, p_power, rem_euclid, vp, Rational};

/// Coordinate `j` of `g^p` after peeling the levels above `j` against `h`.
/// `None` if some level above `j` is already not divisible.
pub(crate) fn peeled_power_coordinate(group: &GroupSpec, h: &GoodBasis, g: &Element, p: u64, j: usize) -> Option<Rational> {
    let mut cur = group.pow_int(g, &BigInt::from(p));
    for l in (j + 1..group.dim).rev() {
        let q = &cur.coords[l] / h.diag(l);
        if !is_integer(&q) {
            return None;
        }
        if !q.is_zero() {
            cur = group.mul(&cur, &group.pow_int(&h.rows()[l], &-q.to_integer()));
        }
    }
    Some(cur.coords[j].clone())
}

/// Weights of a closed grid containing every `p`-th root of an element of `h`.
pub fn root_grid(h: &GoodBasis) -> Vec<i64> {
    let p = h.prime().expect("p-local basis");
    let group = h.group();
    let u = grid_containing(h);
    let roots = lambda_at(group, &p_power(p, -1));
    let w: Vec<i64> = (0..group.dim)
        .map(|j| roots[j].terms().iter().map(|t| term_valuation(t, p, |v| u[v])).fold(u[j], i64::min))
        .collect();
    close_grid(group, p, &w)
}

/// One root step. Solves `g^p ∈ H` level by level from the top, modulo a
/// floor `F ⊆ H` that is normal in the root grid (so the condition only
/// depends on the coset `gF`), and completes `H` with the solutions.
pub fn root_envelope(h: &GoodBasis) -> Result<GoodBasis> {
    let p = h.prime().ok_or(Error::Incompatible)?;
    let group = h.group().clone();
    let h = h.canonical()?;
    let d = group.dim;
    let ambient = root_grid(&h);
    let req = FloorRequest { ambient: ambient.clone(), start: ambient.clone(), power: None, inside: vec![h.clone()] };
    let floor = certify_floor(&group, p, &req)?;
    let moduli: Vec<Rational> = floor.weights.iter().map(|&w| p_power(p, w)).collect();
    let pr = Rational::from_integer(p.into());

    let mut roots = Vec::new();
    let mut stack = vec![(d, group.identity())];
    while let Some((level, g)) = stack.pop() {
        if level == 0 {
            debug_assert!(h.contains(&group.pow_int(&g, &BigInt::from(p))));
            if !g.is_identity() {
                roots.push(g);
            }
            continue;
        }
        let j = level - 1;
        let Some(x0) = peeled_power_coordinate(&group, &h, &g, p, j) else { continue };
        let step = h.diag(j).abs() / &pr;
        let base = -x0 / &pr;
        let m = &moduli[j];
        let residues: Vec<Rational> = if is_integer(&(&step / m)) {
            vec![rem_euclid(&base, m)]
        } else {
            let r0 = rem_euclid(&base, &step);
            let count = (m / &step).to_integer();
            let count: u64 = count.try_into().map_err(|_| Error::cap("root candidates per level", u64::MAX, u64::MAX))?;
            (0..count).map(|i| &r0 + &step * Rational::from_integer(i.into())).collect()
        };
        for a in residues {
            if vp(&a, p).is_some_and(|v| v < ambient[j]) {
                continue;
            }
            let mut next = g.clone();
            next.coords[j] = a;
            stack.push((j, next));
        }
    }
    tracing::debug!(group = %group.id, p, roots = roots.len(), floor = ?floor.weights, "root candidates");

    let mut gens: Vec<Element> = h.rows().to_vec();
    gens.extend(roots);
    let e = complete_basis(&group, Some(p), &gens)?.canonical()?;
    let step = det_index(&h, &e)?;
    let bound = group.root_step_bound();
    if step > bound {
        return Err(Error::EnvelopeBound { observed: step, bound });
    }
    Ok(e)
}

/// `[E_0 = Γ, E_1, …, E_k]`, stopping with a cap error once
/// `log_p [E_i : Γ]` exceeds `max_log_index`.
pub fn iterated_envelopes(group: &Arc<GroupSpec>, p: u64, k: usize, max_log_index: i64) -> Result<Vec<GoodBasis>> {
    let gamma = GoodBasis::standard(group.clone(), Some(p));
    let mut out = vec![gamma.clone()];
    for _ in 0..k {
        let e = root_envelope(out.last().expect("nonempty"))?;
        let idx = det_index(&gamma, &e)?;
        tracing::debug!(group = %group.id, p, level = out.len(), log_index = idx, "envelope");
        if idx > max_log_index {
            return Err(Error::cap("envelope index (log_p)", max_log_index as u64, idx as u64));
        }
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn exps(id: &str, p: u64, k: usize) -> Vec<i64> {
        let g = Catalog::builtin().get(id).unwrap();
        iterated_envelopes(&g, p, k, 100).unwrap().last().unwrap().exponents()
    }

    #[test]
    fn abelian_envelopes() {
        assert_eq!(exps("Z1", 2, 1), vec![-1]);
        assert_eq!(exps("Z1", 3, 2), vec![-2]);
        assert_eq!(exps("Z2", 5, 1), vec![-1, -1]);
    }

    #[test]
    fn heisenberg_envelopes() {
        assert_eq!(exps("heis3", 2, 1), vec![-3, -1, -1]);
        assert_eq!(exps("heis3", 3, 1), vec![-2, -1, -1]);
        assert_eq!(exps("heis3", 5, 1), vec![-2, -1, -1]);
    }

    #[test]
    fn envelope_elements_are_roots_generated() {
        let g = Catalog::builtin().get("heis3").unwrap();
        let gamma = GoodBasis::standard(g.clone(), Some(2));
        let e = root_envelope(&gamma).unwrap();
        // x2^{1/2} x3^{1/2} squares into Γ and lies in E₁.
        let r = Element::new(vec![Rational::new((-1).into(), 8.into()), Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into())]);
        assert!(gamma.contains(&g.pow_i64(&r, 2)));
        assert!(e.contains(&r));
    }
}
