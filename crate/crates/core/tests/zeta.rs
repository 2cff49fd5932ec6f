use std::collections::BTreeMap;

use commgrowth::latticeenum::{count_coefficients, lattice_ball, BallOptions};
use commgrowth::rational::{is_prime, rat};
use commgrowth::zeta::{
    abelian_local, abelian_reference, expand, factorize, fit_recurrence, global_coefficients, to_rational_function,
    FitFailure, LocalSeries,
};
use commgrowth::{Catalog, Rational};
use proptest::prelude::*;

fn computed(id: &str, p: u64, k: usize) -> LocalSeries {
    let g = Catalog::builtin().get(id).unwrap();
    let t = count_coefficients(&lattice_ball(&g, p, k, &BallOptions::default()).unwrap());
    LocalSeries::from_table(&t)
}

fn omega(n: u64) -> u32 {
    (2..=n).filter(|&q| is_prime(q) && n.is_multiple_of(q)).count() as u32
}

#[test]
fn additive_group_fits_every_prime() {
    for p in [2, 3, 5, 7] {
        let s = computed("Z1", p, 4);
        let f = fit_recurrence(&s, 2).unwrap();
        assert_eq!(f.length, 1, "p = {p}");
        assert_eq!((f.numerator.clone(), f.denominator.clone()), (vec![rat(1), rat(1)], vec![rat(1), rat(-1)]));
        assert_eq!(to_rational_function(&f, &s).unwrap().1, vec![rat(1), rat(-1)]);
    }
}

#[test]
fn additive_group_global_coefficients() {
    let n = 200;
    let mut tables = BTreeMap::new();
    for p in (2..=n).filter(|&p| is_prime(p)) {
        tables.insert(p, computed("Z1", p, n.ilog(p) as usize));
    }
    let c = global_coefficients(&tables, n).unwrap();
    for m in 1..=n {
        assert_eq!(c[m as usize - 1], 1 << omega(m), "n = {m}");
        assert_eq!(c[m as usize - 1], abelian_reference(m));
    }
    assert_eq!((c[5], c[11], c[29]), (4, 4, 8));
}

#[test]
fn nonabelian_short_series_do_not_extrapolate() {
    for (id, p, k) in [("heis3", 2, 3), ("Z2", 2, 4)] {
        let s = computed(id, p, k);
        match fit_recurrence(&s, 2) {
            Ok(f) => {
                let (n, d) = to_rational_function(&f, &s).unwrap();
                let back = expand(&n, &d, s.coeffs.len());
                let want: Vec<Rational> = s.coeffs.iter().map(|&c| rat(c as i64)).collect();
                assert_eq!(back, want);
            }
            Err(FitFailure::InsufficientTerms { .. } | FitFailure::NoRecurrence { .. }) => {}
        }
    }
}

#[test]
fn missing_primes_are_reported() {
    let mut tables = BTreeMap::new();
    tables.insert(2, LocalSeries::new("Z1", 2, abelian_local(1)));
    let e = global_coefficients(&tables, 6).unwrap_err().to_string();
    assert!(e.contains("2^2") && e.contains("3^1") && e.contains("5^1"), "{e}");
}

fn arbitrary_rational_series() -> impl Strategy<Value = (Vec<i64>, Vec<i64>)> {
    (proptest::collection::vec(-3i64..=3, 1..=3), proptest::collection::vec(-4i64..=4, 1..=4))
}

proptest! {
    #[test]
    fn fits_reproduce_their_input((q, init) in arbitrary_rational_series(), extra in 0usize..4) {
        // Initial terms, then c_k = Σ q_j c_{k-j}.
        let l = q.len();
        let mut c: Vec<i64> = init.iter().map(|x| x.abs()).collect();
        c[0] = 1;
        while c.len() < init.len().max(l) + 2 * l + extra + 1 {
            let k = c.len();
            let v: i64 = (1..=l).map(|j| if k >= j { q[j - 1] * c[k - j] } else { 0 }).sum();
            c.push(v);
        }
        prop_assume!(c.iter().all(|&x| (0..1 << 40).contains(&x)));
        let s = LocalSeries::new("synthetic", 2, c.iter().map(|&x| x as u64).collect());
        let f = fit_recurrence(&s, l).expect("a recurrence of length l exists");
        prop_assert!(f.length <= l);
        let (n, d) = to_rational_function(&f, &s).unwrap();
        let back = expand(&n, &d, c.len());
        prop_assert_eq!(back, c.iter().map(|&x| rat(x)).collect::<Vec<_>>());
    }

    #[test]
    fn assembly_is_multiplicative(a in 1u64..60, b in 1u64..60) {
        let n = 3600;
        let mut tables = BTreeMap::new();
        for p in (2..=n).filter(|&p| is_prime(p)) {
            let k = n.ilog(p) as usize;
            tables.insert(p, LocalSeries::new("synthetic", p, (0..=k as u32).map(|e| p.pow(e) + e as u64).collect()));
        }
        let c = global_coefficients(&tables, n).unwrap();
        let g = num_integer::gcd(a, b);
        if g == 1 {
            prop_assert_eq!(c[(a * b - 1) as usize], c[(a - 1) as usize] * c[(b - 1) as usize]);
        }
        let direct: u64 = factorize(a).iter().map(|&(p, e)| p.pow(e) + e as u64).product();
        prop_assert_eq!(c[(a - 1) as usize], direct);
    }
}
