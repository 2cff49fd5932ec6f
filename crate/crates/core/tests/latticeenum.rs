use std::collections::BTreeMap;
use std::sync::Arc;

use commgrowth::goodbasis::det_index;
use commgrowth::latticeenum::{
    count_coefficients, down_only_count, iterated_envelopes, lattice_ball, oracle_count, root_envelope, BallOptions,
    OracleOptions, Pruning,
};
use commgrowth::selfcheck::sample_lattices;
use commgrowth::{Catalog, GoodBasis, GroupSpec};
use proptest::prelude::*;

fn group(id: &str) -> Arc<GroupSpec> {
    Catalog::builtin().get(id).unwrap()
}

fn search(id: &str, p: u64, k: usize) -> Vec<u64> {
    count_coefficients(&lattice_ball(&group(id), p, k, &BallOptions::default()).unwrap()).coeffs
}

fn search_keys(id: &str, p: u64, k: usize, pruning: Pruning) -> BTreeMap<usize, Vec<String>> {
    let g = group(id);
    let ball = lattice_ball(&g, p, k, &BallOptions { pruning, ..Default::default() }).unwrap();
    let gamma = GoodBasis::standard(g, Some(p));
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for r in &ball.records {
        r.verify(&gamma).unwrap();
        out.entry(r.k() as usize).or_default().push(r.key());
    }
    for v in out.values_mut() {
        v.sort();
    }
    out
}

/// Sublattices of index `n` in Z² via Hermite normal forms
/// `[[a, b], [0, d]]`, `ad = n`, `0 ≤ b < d`.
fn hnf_z2(n: u64) -> u64 {
    let mut c = 0;
    for a in (1..=n).filter(|a| n.is_multiple_of(*a)) {
        let d = n / a;
        c += d;
    }
    c
}

#[test]
fn additive_group_coefficients() {
    for p in [2, 3, 5] {
        assert_eq!(search("Z1", p, 4), vec![1, 2, 2, 2, 2]);
    }
}

#[test]
fn plane_closed_forms() {
    // c_p = 2(p+1); c_{p^2} = 2(p^2+p+1) from pure sub- and overlattices
    // plus p(p+1) lattices meeting Z² in an index-p sublattice.
    for p in [2u64, 3, 5] {
        let c = search("Z2", p, 2);
        assert_eq!(c, vec![1, 2 * (p + 1), 3 * p * p + 3 * p + 2]);
    }
}

#[test]
fn search_matches_oracle() {
    let configs = [("Z1", 2, 3), ("Z1", 3, 3), ("Z1", 5, 3), ("Z2", 2, 2), ("Z2", 3, 2), ("heis3", 2, 1)];
    for (id, p, k) in configs {
        let o = oracle_count(&group(id), p, k, &OracleOptions { collect_keys: true, ..Default::default() }).unwrap();
        let s = search_keys(id, p, k, Pruning::Tight);
        assert_eq!(o.keys, s, "{id} p={p} K={k}");
        assert_eq!(o.table.coeffs, search(id, p, k), "{id} p={p} K={k}");
    }
}

#[test]
fn heisenberg_at_two() {
    let o = oracle_count(&group("heis3"), 2, 1, &OracleOptions::default()).unwrap();
    assert_eq!(o.table.coeffs, vec![1, 4]);
    assert!(o.quotient_order <= 1 << 10);
    assert_eq!(search("heis3", 2, 1), vec![1, 4]);
}

#[test]
fn heisenberg_single_central_overgroup() {
    for p in [2u64, 3, 5, 7] {
        let g = group("heis3");
        let up = commgrowth::latticeenum::minimal_overgroups_p(&GoodBasis::standard(g, Some(p))).unwrap();
        assert_eq!(up.len(), 1, "p = {p}");
        assert_eq!(up[0].exponents(), vec![-1, 0, 0]);
        assert_eq!(search("heis3", p, 1), vec![1, p + 2]);
    }
}

/// Pinned after the oracle reproduced it (quotient of order 2^19).
#[test]
fn heisenberg_second_coefficient_regression() {
    assert_eq!(search("heis3", 2, 2), vec![1, 4, 44]);
}

#[test]
#[ignore = "oracle quotient of order 2^19 takes minutes"]
fn heisenberg_second_coefficient_oracle() {
    let mut opts = OracleOptions::default();
    opts.caps.max_oracle_group_size = 1 << 20;
    let o = oracle_count(&group("heis3"), 2, 2, &opts).unwrap();
    assert_eq!(o.table.coeffs, vec![1, 4, 44]);
}

#[test]
fn deeper_floor_changes_nothing() {
    for (id, p, k) in [("Z1", 3, 2), ("Z2", 2, 2), ("heis3", 2, 1)] {
        let g = group(id);
        let base = oracle_count(&g, p, k, &OracleOptions::default()).unwrap();
        let mut opts = OracleOptions { deepen: 1, ..Default::default() };
        opts.caps.max_oracle_group_size = 1 << 20;
        let deep = oracle_count(&g, p, k, &opts).unwrap();
        assert_eq!(base.table.coeffs, deep.table.coeffs, "{id} p={p}");
        assert!(deep.quotient_order > base.quotient_order);
    }
}

#[test]
fn pruning_modes_agree() {
    for (id, p, k) in [("Z1", 2, 3), ("Z2", 2, 3), ("Z2", 3, 2), ("heis3", 2, 2)] {
        let tight = search_keys(id, p, k, Pruning::Tight);
        assert_eq!(tight, search_keys(id, p, k, Pruning::None), "{id} p={p}");
        assert_eq!(tight, search_keys(id, p, k, Pruning::Admissible), "{id} p={p}");
    }
}

#[test]
fn down_only_against_hermite_forms() {
    let g = group("Z2");
    for p in [2u64, 3] {
        let t = down_only_count(&g, p, 3, &BallOptions::default()).unwrap();
        let want: Vec<u64> = (0..=3).map(|k| hnf_z2(p.pow(k))).collect();
        assert_eq!(t.coeffs, want);
    }
    assert_eq!(down_only_count(&g, 2, 3, &BallOptions::default()).unwrap().coeffs, vec![1, 3, 7, 15]);
    for p in [2u64, 3] {
        assert_eq!(down_only_count(&group("heis3"), p, 1, &BallOptions::default()).unwrap().coeffs, vec![1, p + 1]);
    }
}

#[test]
fn down_only_is_a_lower_bound() {
    for (id, p, k) in [("Z1", 3, 3), ("Z2", 2, 3), ("heis3", 2, 2), ("heis3", 3, 1)] {
        let d = down_only_count(&group(id), p, k, &BallOptions::default()).unwrap().coeffs;
        let s = search(id, p, k);
        assert!(d.iter().zip(&s).all(|(a, b)| a <= b), "{id} p={p}: {d:?} vs {s:?}");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    for (id, p, k) in [("Z2", 3, 2), ("heis3", 2, 2)] {
        let g = group(id);
        let run = |jobs| {
            let b = lattice_ball(&g, p, k, &BallOptions { jobs, ..Default::default() }).unwrap();
            b.records.iter().map(|r| serde_json::to_string(&r.doc()).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(8));
    }
}

#[test]
fn frontier_cap_reports_partial_result() {
    let mut opts = BallOptions::default();
    opts.caps.max_frontier = 3;
    let b = lattice_ball(&group("Z2"), 2, 3, &opts).unwrap();
    assert!(b.cap_hit.is_some());
    assert_eq!(b.completed_depth, 1);
    let t = count_coefficients(&b);
    assert_eq!(&t.coeffs[..2], &[1, 6]);
    assert!(!t.is_complete());
}

#[test]
fn envelope_chain_respects_the_root_bound() {
    for (id, p, k) in [("Z2", 2, 3), ("heis3", 2, 3), ("heis3", 3, 2), ("u4", 2, 1)] {
        let g = group(id);
        let chain = iterated_envelopes(&g, p, k, 64).unwrap();
        for w in chain.windows(2) {
            assert!(w[1].contains_lattice(&w[0]));
            assert!(det_index(&w[0], &w[1]).unwrap() <= g.root_step_bound());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn root_envelope_of_random_lattices(id in prop_oneof![Just("Z2"), Just("heis3")], p in prop_oneof![Just(2u64), Just(3)], seed in any::<u64>()) {
        let g = group(id);
        let h = sample_lattices(&g, p, 1, seed).unwrap().pop().unwrap();
        let e = root_envelope(&h).unwrap();
        prop_assert!(e.contains_lattice(&h));
        prop_assert!(det_index(&h, &e).unwrap() <= g.root_step_bound());
        if id == "Z2" {
            let want: Vec<i64> = h.exponents().iter().map(|x| x - 1).collect();
            prop_assert_eq!(e.exponents(), want);
        }
    }

    #[test]
    fn record_invariants(seed in any::<u64>()) {
        let g = group("heis3");
        let gamma = GoodBasis::standard(g.clone(), Some(2));
        let h = sample_lattices(&g, 2, 1, seed).unwrap().pop().unwrap();
        let r = commgrowth::LatticeRecord::new(h.clone(), &gamma).unwrap();
        r.verify(&gamma).unwrap();
        prop_assert_eq!(r.key(), h.key());
    }
}
