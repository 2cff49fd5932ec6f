use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use commgrowth::goodbasis::{comm_index, complete_basis, det_index, intersect, intersect_with_orbit};
use commgrowth::latticeenum::intersect_normative;
use commgrowth::rational::frac;
use commgrowth::selfcheck::sample_lattices;
use commgrowth::{Catalog, Element, GoodBasis, GroupSpec};
use proptest::prelude::*;

fn group(id: &str) -> Arc<GroupSpec> {
    Catalog::builtin().get(id).unwrap()
}

fn pair(id: &str, p: u64, seed: u64) -> (GoodBasis, GoodBasis) {
    let mut v = sample_lattices(&group(id), p, 2, seed).unwrap();
    let k = v.pop().unwrap();
    (v.pop().unwrap(), k)
}

/// `[H : K]` by breadth-first search over left cosets `gK`, `g ∈ H`.
fn coset_count(h: &GoodBasis, k: &GoodBasis, limit: usize) -> usize {
    let g = h.group();
    let mut gens: Vec<Element> = h.rows().to_vec();
    gens.extend(h.rows().iter().map(|r| g.inv(r)));
    let start = k.left_coset_rep(&g.identity());
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for s in &gens {
            let y = k.left_coset_rep(&g.mul(s, &x));
            if seen.insert(y.clone()) {
                assert!(seen.len() <= limit, "coset search exceeded {limit}");
                queue.push_back(y);
            }
        }
    }
    seen.len()
}

fn groups() -> impl Strategy<Value = (&'static str, u64)> {
    prop_oneof![Just(("Z1", 2)), Just(("Z2", 2)), Just(("Z2", 3)), Just(("heis3", 2)), Just(("heis3", 3))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_form_is_a_complete_invariant((id, p) in groups(), seed in any::<u64>()) {
        let (h, k) = pair(id, p, seed);
        prop_assert!(h.is_canonical() && h.is_closure_valid());
        prop_assert_eq!(h.canonical().unwrap().key(), h.key());
        let same = h.contains_lattice(&k) && k.contains_lattice(&h);
        prop_assert_eq!(same, h.key() == k.key());
        // A different basis of the same lattice.
        let mut rows = h.rows().to_vec();
        let top = rows.len() - 1;
        if top > 0 {
            rows[top] = h.group().mul(&rows[top], &rows[0]);
        }
        rows.reverse();
        let other = complete_basis(h.group(), Some(p), &rows).unwrap();
        prop_assert_eq!(other.canonical().unwrap().key(), h.key());
    }

    #[test]
    fn membership_round_trip((id, p) in groups(), seed in any::<u64>(), exps in proptest::collection::vec(-3i64..=3, 3)) {
        let (h, _) = pair(id, p, seed);
        let g = h.group();
        let x = h.rows().iter().zip(&exps).fold(g.identity(), |acc, (r, &e)| g.mul(&acc, &g.pow_i64(r, e)));
        let m = h.member(&x).expect("product of basis powers is a member");
        prop_assert_eq!(h.word(&m), x);
    }

    #[test]
    fn intersection_laws((id, p) in groups(), seed in any::<u64>()) {
        let (h, k) = pair(id, p, seed);
        let hk = intersect(&h, &k).unwrap();
        prop_assert_eq!(hk.key(), intersect(&k, &h).unwrap().key());
        prop_assert_eq!(intersect(&h, &h).unwrap().key(), h.key());
        prop_assert!(h.contains_lattice(&hk) && k.contains_lattice(&hk));
        let (_, orbit) = intersect_with_orbit(&h, &k, 1 << 20).unwrap();
        prop_assert_eq!(orbit as u64, p.pow(det_index(&hk, &h).unwrap() as u32));
        prop_assert_eq!(intersect_normative(&h, &k, 1 << 22).unwrap().key(), hk.key());
    }

    #[test]
    fn index_symmetry_and_determinant((id, p) in groups(), seed in any::<u64>()) {
        let (h, k) = pair(id, p, seed);
        let (a, b) = comm_index(&h, &k).unwrap();
        let (b2, a2) = comm_index(&k, &h).unwrap();
        prop_assert_eq!((a, b), (a2, b2));
        let i = intersect(&h, &k).unwrap();
        prop_assert_eq!(a + b, 2 * i.exponent_sum() - h.exponent_sum() - k.exponent_sum());
    }

    #[test]
    fn coset_count_matches_determinant((id, p) in groups(), seed in any::<u64>()) {
        let (h, k) = pair(id, p, seed);
        let i = intersect(&h, &k).unwrap();
        let a = det_index(&i, &h).unwrap();
        prop_assume!(a <= 10);
        prop_assert_eq!(coset_count(&h, &i, 1 << 12) as u64, p.pow(a as u32));
    }
}

#[test]
fn rational_line_examples() {
    let g = group("Z1");
    let z = GoodBasis::standard(g.clone(), None);
    let two_thirds = complete_basis(&g, None, &[Element::new(vec![frac(2, 3)])]).unwrap();
    assert_eq!(commgrowth::goodbasis::comm_index_global(&two_thirds, &z).unwrap(), (2.into(), 3.into()));
}

#[test]
fn heisenberg_square_index() {
    let g = group("heis3");
    let gamma = GoodBasis::standard(g.clone(), Some(2));
    let x = Element::from_ints(&[0, 0, 1]);
    let y = Element::from_ints(&[0, 1, 0]);
    let h = complete_basis(&g, Some(2), &[g.pow_i64(&x, 2), g.pow_i64(&y, 2)]).unwrap();
    assert_eq!(h.exponents(), vec![2, 1, 1]);
    assert_eq!(comm_index(&gamma, &h).unwrap(), (0, 4));
    assert_eq!(coset_count(&gamma, &h, 64), 16);
}
