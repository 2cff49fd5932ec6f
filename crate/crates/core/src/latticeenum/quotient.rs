//! Finite quotients `grid(V) / grid(W)` of a closed ambient grid by a
//! certified floor, with the product law compiled to modular arithmetic.
//!
//! An element is stored as digits `n_j ∈ [0, p^{W_j - V_j})` standing for
//! the coordinate `a_j = p^{V_j}·n_j`. The congruence certificate of the
//! floor makes cosets exactly these digit boxes, so every computation on
//! representatives is well defined.

use std::collections::HashMap;
use std::sync::Arc;


use crate::error::{Error, Result};
use crate::latticeenum::floor::{lambda_at, CertifiedFloor};
use crate::malcev::{Element, GroupSpec};
use crate::poly::Poly;
use crate::rational::{p_power, residue_mod, vp, Rational};

pub type Digits = Vec<u64>;

#[derive(Clone, Debug)]
struct CompiledPoly {
    modulus: u64,
    terms: Vec<(u64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    /// Rescales `poly` (variables `v` of weight `ambient[v % d]`) so that it
    /// acts on digits and reduces it modulo `modulus`.
    fn compile(poly: &Poly, p: u64, ambient: &[i64], target: usize, modulus: u64) -> Result<Self> {
        let d = ambient.len();
        let mut terms = Vec::new();
        for t in poly.terms() {
            let shift: i64 =
                t.exps.iter().enumerate().filter(|(_, e)| **e > 0).map(|(v, &e)| e as i64 * ambient[v % d]).sum::<i64>()
                    - ambient[target];
            let c = &t.coef * p_power(p, shift);
            if vp(&c, p).is_some_and(|v| v < 0) {
                return Err(Error::FloorNotCertified("ambient grid is not closed under the product law".into()));
            }
            let r = residue_mod(&c, modulus).expect("p-integral coefficient");
            if r != 0 {
                let factors = t.exps.iter().enumerate().filter(|(_, e)| **e > 0).map(|(v, e)| (v, *e)).collect();
                terms.push((r, factors));
            }
        }
        Ok(CompiledPoly { modulus, terms })
    }

    fn eval(&self, vals: &[u64]) -> u64 {
        let m = self.modulus as u128;
        let mut acc: u128 = 0;
        for (c, factors) in &self.terms {
            let mut t = *c as u128;
            for &(v, e) in factors {
                let x = vals[v] as u128;
                for _ in 0..e {
                    t = t * x % m;
                }
            }
            acc = (acc + t) % m;
        }
        acc as u64
    }
}

#[derive(Clone, Debug)]
pub struct FiniteQuotient {
    group: Arc<GroupSpec>,
    p: u64,
    ambient: Vec<i64>,
    weights: Vec<i64>,
    moduli: Vec<u64>,
    strides: Vec<u128>,
    mu: Vec<CompiledPoly>,
    inv: Vec<CompiledPoly>,
}

impl FiniteQuotient {
    pub fn new(group: &Arc<GroupSpec>, floor: &CertifiedFloor) -> Result<Self> {
        let p = floor.p;
        let d = group.dim;
        let mut moduli = Vec::with_capacity(d);
        let mut strides = Vec::with_capacity(d);
        let mut total: u128 = 1;
        for j in 0..d {
            let e = floor.weights[j] - floor.ambient[j];
            let m = (p as u128).checked_pow(e as u32).filter(|m| *m < (1u128 << 62));
            let Some(m) = m else {
                return Err(Error::cap("quotient digit modulus", 1 << 62, u64::MAX));
            };
            strides.push(total);
            total = total
                .checked_mul(m)
                .ok_or_else(|| Error::cap("quotient box size", u64::MAX, u64::MAX))?;
            moduli.push(m as u64);
        }
        let inv_polys = lambda_at(group, &Rational::from_integer((-1).into()));
        let mut mu = Vec::with_capacity(d);
        let mut inv = Vec::with_capacity(d);
        for j in 0..d {
            mu.push(CompiledPoly::compile(&group.mu[j], p, &floor.ambient, j, moduli[j])?);
            inv.push(CompiledPoly::compile(&inv_polys[j], p, &floor.ambient, j, moduli[j])?);
        }
        Ok(FiniteQuotient {
            group: group.clone(),
            p,
            ambient: floor.ambient.clone(),
            weights: floor.weights.clone(),
            moduli,
            strides,
            mu,
            inv,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn identity(&self) -> Digits {
        vec![0; self.moduli.len()]
    }

    pub fn encode(&self, g: &Element) -> Result<Digits> {
        g.coords
            .iter()
            .enumerate()
            .map(|(j, a)| {
                if vp(a, self.p).is_some_and(|v| v < self.ambient[j]) {
                    return Err(Error::ContainmentViolated(format!("{g} is outside the ambient grid")));
                }
                let n = a * p_power(self.p, -self.ambient[j]);
                Ok(residue_mod(&n, self.moduli[j]).expect("p-integral digit"))
            })
            .collect()
    }

    pub fn decode(&self, x: &[u64]) -> Element {
        Element::new(
            x.iter()
                .enumerate()
                .map(|(j, &n)| Rational::from_integer(n.into()) * p_power(self.p, self.ambient[j]))
                .collect(),
        )
    }

    pub fn key(&self, x: &[u64]) -> u128 {
        x.iter().zip(&self.strides).map(|(&n, s)| n as u128 * s).sum()
    }

    pub fn mul(&self, x: &[u64], y: &[u64]) -> Digits {
        let vals: Vec<u64> = x.iter().chain(y).copied().collect();
        self.mu.iter().map(|m| m.eval(&vals)).collect()
    }

    pub fn inv(&self, x: &[u64]) -> Digits {
        self.inv.iter().map(|m| m.eval(x)).collect()
    }

    pub fn pow(&self, x: &[u64], mut e: u64) -> Digits {
        let mut acc = self.identity();
        let mut base = x.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Closure of `gens` under right multiplication by the generators.
    pub fn generate(&self, gens: &[Digits], cap: u64) -> Result<DenseGroup> {
        let mut elems = vec![self.identity()];
        let mut index: HashMap<u128, u32> = HashMap::new();
        index.insert(self.key(&elems[0]), 0);
        let mut i = 0;
        while i < elems.len() {
            for g in gens {
                let y = self.mul(&elems[i], g);
                let k = self.key(&y);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(k) {
                    if elems.len() as u64 >= cap {
                        return Err(Error::cap("finite quotient order", cap, elems.len() as u64 + 1));
                    }
                    e.insert(elems.len() as u32);
                    elems.push(y);
                }
            }
            i += 1;
        }
        Ok(DenseGroup { quotient: self.clone(), elems, index })
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn floor_rows(&self) -> Vec<Element> {
        let d = self.weights.len();
        (0..d).map(|j| Element::unit(d, j, p_power(self.p, self.weights[j]))).collect()
    }
}

/// An explicitly listed finite group inside a [`FiniteQuotient`].
#[derive(Clone, Debug)]
pub struct DenseGroup {
    quotient: FiniteQuotient,
    elems: Vec<Digits>,
    index: HashMap<u128, u32>,
}

impl DenseGroup {
    pub fn order(&self) -> usize {
        self.elems.len()
    }

    pub fn quotient(&self) -> &FiniteQuotient {
        &self.quotient
    }

    pub fn element(&self, i: u32) -> &Digits {
        &self.elems[i as usize]
    }

    pub fn index_of(&self, x: &[u64]) -> Option<u32> {
        self.index.get(&self.quotient.key(x)).copied()
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let y = self.quotient.mul(&self.elems[a as usize], &self.elems[b as usize]);
        self.index_of(&y).expect("closed under products")
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.index_of(&self.quotient.inv(&self.elems[a as usize])).expect("closed under inverses")
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        self.index_of(&self.quotient.pow(&self.elems[a as usize], e)).expect("closed under powers")
    }

    /// Indices of the subgroup generated by `gens` (elements of this group).
    pub fn subgroup(&self, gens: &[Digits]) -> Result<Bitset> {
        let sub = self.quotient.generate(gens, self.order() as u64)?;
        let mut bits = Bitset::new(self.order());
        for e in &sub.elems {
            let i = self
                .index_of(e)
                .ok_or_else(|| Error::ContainmentViolated("generator outside the listed group".into()))?;
            bits.insert(i);
        }
        Ok(bits)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(n: usize) -> Self {
        Bitset { words: vec![0; n.div_ceil(64)] }
    }

    pub fn insert(&mut self, i: u32) {
        self.words[i as usize / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: u32) -> bool {
        self.words[i as usize / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn intersection_count(&self, other: &Bitset) -> u64 {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| (w * 64 + b) as u32)
        })
    }
}

/// A subgroup found by [`all_subgroups`], with a generating set.
#[derive(Clone, Debug)]
pub struct FoundSubgroup {
    pub members: Bitset,
    pub gens: Vec<u32>,
}

/// Every subgroup of a finite p-group, layer by layer in the order.
///
/// Each subgroup `T ≠ 1` has a normal subgroup `S` of index p, so `T` is
/// `S ∪ Sg ∪ … ∪ Sg^{p-1}` for some `g` with `g^p ∈ S` normalizing `S`.
/// `visit` is called once per subgroup, including the trivial one.
pub fn all_subgroups(g: &DenseGroup, cap: u64, mut visit: impl FnMut(&FoundSubgroup)) -> Result<u64> {
    let n = g.order();
    let p = g.quotient().p();
    let pth: Vec<u32> = (0..n as u32).map(|a| g.pow(a, p)).collect();
    let inv: Vec<u32> = (0..n as u32).map(|a| g.inv(a)).collect();
    let mut trivial = Bitset::new(n);
    trivial.insert(0);
    let mut layer = vec![FoundSubgroup { members: trivial, gens: vec![] }];
    let mut total = 0u64;
    while !layer.is_empty() {
        let mut next: HashMap<Bitset, Vec<u32>> = HashMap::new();
        for s in &layer {
            total += 1;
            if total > cap {
                return Err(Error::cap("oracle subgroup count", cap, total));
            }
            visit(s);
            let members: Vec<u32> = s.members.iter().collect();
            let mut covered = s.members.clone();
            for x in 0..n as u32 {
                if covered.contains(x) || !s.members.contains(pth[x as usize]) {
                    continue;
                }
                let normalizes = s.gens.iter().all(|&h| s.members.contains(g.mul(g.mul(inv[x as usize], h), x)));
                if !normalizes {
                    continue;
                }
                let mut t = s.members.clone();
                let mut power = x;
                for _ in 1..p {
                    for &m in &members {
                        t.insert(g.mul(m, power));
                    }
                    power = g.mul(power, x);
                }
                debug_assert_eq!(t.count(), members.len() as u64 * p);
                for i in t.iter() {
                    covered.insert(i);
                }
                next.entry(t).or_insert_with(|| {
                    let mut gens = s.gens.clone();
                    gens.push(x);
                    gens
                });
            }
        }
        let mut entries: Vec<(Bitset, Vec<u32>)> = next.into_iter().collect();
        entries.sort_by(|a, b| a.0.words.cmp(&b.0.words));
        layer = entries.into_iter().map(|(members, gens)| FoundSubgroup { members, gens }).collect();
    }
    Ok(total)
}

/// Order of the quotient box, if it fits in 64 bits.
pub fn box_order(floor: &CertifiedFloor) -> Option<u64> {
    floor.weights.iter().zip(&floor.ambient).try_fold(1u64, |acc, (w, v)| {
        floor.p.checked_pow((w - v) as u32).and_then(|m| acc.checked_mul(m))
    })
}
