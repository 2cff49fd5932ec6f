//! Validation of a [`GroupSpec`] against the identities its structure
//! polynomials must satisfy, on seeded random rational samples.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::goodbasis::{complete_basis, GoodBasis};
use crate::malcev::{mat_mul, Element, GroupSpec};
use crate::poly::Poly;
use crate::rational::{format_rational, p_power, Rational};

#[derive(Clone, Debug, Serialize)]
pub struct SelfCheckReport {
    pub group: String,
    pub samples: usize,
    pub seed: u64,
    pub identities: Vec<String>,
}

fn fail(g: &GroupSpec, identity: &str, detail: String) -> Error {
    Error::BrokenGroupSpec { group: g.id.clone(), identity: identity.to_string(), detail }
}

fn sample_rational(rng: &mut ChaCha8Rng) -> Rational {
    let n: i64 = rng.gen_range(-6..=6);
    let d: i64 = [1, 1, 2, 3, 4, 5][rng.gen_range(0..6)];
    Rational::new(n.into(), d.into())
}

pub fn sample_element(g: &GroupSpec, rng: &mut ChaCha8Rng) -> Element {
    Element::new((0..g.dim).map(|_| sample_rational(rng)).collect())
}

/// Each term of `poly` may only use variables accepted by `allowed`.
fn terms_use_only(poly: &Poly, allowed: impl Fn(usize) -> bool) -> bool {
    poly.terms().iter().all(|t| t.vars().all(&allowed))
}

fn syntactic_checks(g: &GroupSpec) -> Result<Vec<String>> {
    let d = g.dim;
    let idx = |v: usize| v % d;
    for (j, rest) in g.mu_rest().iter().enumerate() {
        if !terms_use_only(rest, |v| idx(v) > j) {
            return Err(fail(g, "mu_j - a_j - b_j uses only coordinates above j", format!("j = {}", j + 1)));
        }
        let mixed = rest.terms().iter().all(|t| t.vars().any(|v| v < d) && t.vars().any(|v| v >= d));
        if !mixed {
            return Err(fail(g, "mu(a,0) = a and mu(0,b) = b", format!("j = {}", j + 1)));
        }
    }
    for (j, lam) in g.lam.iter().enumerate() {
        let linear = Poly::var(d + 1, j).mul(&Poly::var(d + 1, d));
        let rest = lam.sub(&linear);
        if !terms_use_only(&rest, |v| v == d || v > j) {
            return Err(fail(g, "lam_j - k a_j uses only coordinates above j", format!("j = {}", j + 1)));
        }
    }
    for (j, kap) in g.kap.iter().enumerate() {
        if !terms_use_only(kap, |v| idx(v) > j) {
            return Err(fail(g, "kap_j uses only coordinates above j", format!("j = {}", j + 1)));
        }
    }
    let n = g.embed.len();
    for i in 0..n {
        for j in i..n {
            let want = if i == j { Poly::constant(d, Rational::one()) } else { Poly::zero(d) };
            if g.embed[i][j] != want {
                return Err(fail(g, "embedding template is lower unitriangular", format!("entry ({}, {})", i + 1, j + 1)));
            }
        }
    }
    // Catalog constants must divide a class-bounded factorial so that
    // roots only ever introduce p-power denominators for p > class.
    let fact: BigInt = (1..=g.class as u64).map(BigInt::from).product();
    for p in g.mu.iter().chain(&g.lam).chain(&g.kap) {
        for t in p.terms() {
            if !fact.is_multiple_of(t.coef.denom()) {
                return Err(fail(
                    g,
                    "coefficient denominators divide class!",
                    format!("coefficient {}", format_rational(&t.coef)),
                ));
            }
        }
    }
    Ok(vec![
        "mu triangular structure".into(),
        "mu identity law (syntactic)".into(),
        "lam triangular structure".into(),
        "kap triangular structure".into(),
        "embedding unitriangular".into(),
        "denominators divide class!".into(),
    ])
}

pub fn selfcheck(g: &GroupSpec, samples: usize, seed: u64) -> Result<SelfCheckReport> {
    let mut identities = syntactic_checks(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = g.identity();
    for _ in 0..samples {
        let x = sample_element(g, &mut rng);
        let y = sample_element(g, &mut rng);
        let z = sample_element(g, &mut rng);
        let show = |v: &[&Element]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");

        if g.mul(&g.mul(&x, &y), &z) != g.mul(&x, &g.mul(&y, &z)) {
            return Err(fail(g, "associativity", show(&[&x, &y, &z])));
        }
        if g.mul(&x, &id) != x || g.mul(&id, &x) != x {
            return Err(fail(g, "identity law", show(&[&x])));
        }
        let xi = g.inv(&x);
        if !g.mul(&x, &xi).is_identity() || !g.mul(&xi, &x).is_identity() {
            return Err(fail(g, "inverse law", show(&[&x])));
        }
        if mat_mul(&g.embed_matrix(&x), &g.embed_matrix(&y)) != g.embed_matrix(&g.mul(&x, &y)) {
            return Err(fail(g, "embedding is a homomorphism", show(&[&x, &y])));
        }
        let vals: Vec<Rational> = x.coords.iter().chain(&y.coords).cloned().collect();
        let kap = Element::new(g.kap.iter().map(|k| k.eval(&vals)).collect());
        if kap != g.comm_by_mul(&x, &y) {
            return Err(fail(g, "kap equals inv(g) inv(h) g h", show(&[&x, &y])));
        }
        if g.pow_i64(&x, -1) != xi {
            return Err(fail(g, "lam(a, -1) is the inverse", show(&[&x])));
        }
        let s = sample_rational(&mut rng);
        let t = sample_rational(&mut rng);
        let lam = |k: &Rational| {
            let mut v = x.coords.clone();
            v.push(k.clone());
            Element::new(g.lam.iter().map(|l| l.eval(&v)).collect())
        };
        if lam(&Rational::one()) != x || !lam(&Rational::zero()).is_identity() {
            return Err(fail(g, "lam(a, 1) = a and lam(a, 0) = 0", show(&[&x])));
        }
        if lam(&(&s + &t)) != g.mul(&lam(&s), &lam(&t)) {
            return Err(fail(
                g,
                "lam(a, s+t) = mu(lam(a, s), lam(a, t))",
                format!("{} at s = {}, t = {}", x, format_rational(&s), format_rational(&t)),
            ));
        }
        let k: i64 = rng.gen_range(-8..=8);
        if g.pow_i64(&x, k) != g.pow_by_mul(&x, &BigInt::from(k)) {
            return Err(fail(g, "integer powers agree with iterated products", format!("{x} ^ {k}")));
        }
        for m in [2i64, 3, 4] {
            let r = g.pow(&x, &Rational::new(1.into(), m.into()))?;
            if g.pow_by_mul(&r, &BigInt::from(m)) != x {
                return Err(fail(g, "roots power back", format!("{x}, m = {m}")));
            }
        }
    }
    identities.extend(
        [
            "associativity",
            "identity law",
            "inverse law",
            "embedding homomorphism",
            "kap consistency",
            "lam(a,-1) inverse",
            "lam one-parameter law",
            "integer powers",
            "roots",
        ]
        .map(String::from),
    );
    Ok(SelfCheckReport { group: g.id.clone(), samples, seed, identities })
}

/// Random p-local lattices: the scaled standard basis (exponents in
/// `-1..=2`) plus two random p-local elements, closed into a good basis.
pub fn sample_lattices(g: &Arc<GroupSpec>, p: u64, count: usize, seed: u64) -> Result<Vec<GoodBasis>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p.rotate_left(17));
    let d = g.dim;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut gens: Vec<Element> = (0..d).map(|i| Element::unit(d, i, p_power(p, rng.gen_range(-1..=2)))).collect();
        for _ in 0..2 {
            let coords = (0..d)
                .map(|_| Rational::from_integer(rng.gen_range(-4i64..=4).into()) * p_power(p, rng.gen_range(-1..=1)))
                .collect();
            gens.push(Element::new(coords));
        }
        out.push(complete_basis(g, Some(p), &gens)?.canonical()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    #[test]
    fn shipped_groups_pass() {
        for g in Catalog::builtin().iter() {
            selfcheck(g, 100, 7).unwrap();
        }
        selfcheck(&Catalog::builtin().get("Z3").unwrap(), 30, 12345).unwrap();
    }

    #[test]
    fn dropping_the_heisenberg_cross_term_is_caught() {
        let mut g = (*Catalog::builtin().get("heis3").unwrap()).clone();
        let d = g.dim;
        g.mu[0] = Poly::var(2 * d, 0).add(&Poly::var(2 * d, d));
        let g = GroupSpec::new(g.id, g.description, g.dim, g.class, g.mu, g.lam, g.kap, g.embed).unwrap();
        let err = selfcheck(&g, 50, 1).unwrap_err();
        match err {
            Error::BrokenGroupSpec { identity, .. } => assert!(!identity.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_commutator_is_caught() {
        let mut g = (*Catalog::builtin().get("heis3").unwrap()).clone();
        g.kap[0] = g.kap[0].scale(&Rational::from_integer(2.into()));
        let err = selfcheck(&g, 20, 3).unwrap_err();
        assert!(err.to_string().contains("kap"));
    }
}
