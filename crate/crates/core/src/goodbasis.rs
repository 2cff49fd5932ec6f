//! Good bases of lattices in G(Q).
//!
//! A good basis is a tuple `(h_1, …, h_d)` with `h_i` having zero
//! coordinates above `i` and a nonzero diagonal entry, such that
//! `[h_i, h_j] ∈ ⟨h_1, …, h_{i-1}⟩` for `i < j`. Every element of the
//! lattice is then uniquely `h_1^{m_1} ⋯ h_d^{m_d}` with integer `m`.
//!
//! In p-local mode (`prime = Some(p)`) every coordinate has a p-power
//! denominator and every diagonal is `±p^e`; without a prime the basis
//! lives in global-rational mode, which is only used for index
//! computations across several primes at once.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::malcev::{Element, GroupSpec};
use crate::rational::{
    floor_int, format_rational, is_integer, is_p_local, p_power, rational_bezout, signed_p_power_exponent, Rational,
};

/// Upper bound on sifting steps inside one basis completion.
const COMPLETION_STEP_LIMIT: u64 = 2_000_000;

/// Default cap on coset orbits explored by [`intersect`].
pub const DEFAULT_ORBIT_CAP: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct GoodBasis {
    group: Arc<GroupSpec>,
    prime: Option<u64>,
    rows: Vec<Element>,
}

impl PartialEq for GoodBasis {
    fn eq(&self, other: &Self) -> bool {
        self.group.id == other.group.id && self.prime == other.prime && self.rows == other.rows
    }
}

impl Eq for GoodBasis {}

impl GoodBasis {
    /// The basis of `G(Z)` given by the coordinate generators.
    pub fn standard(group: Arc<GroupSpec>, prime: Option<u64>) -> Self {
        let d = group.dim;
        let rows = (0..d).map(|i| Element::unit(d, i, Rational::one())).collect();
        GoodBasis { group, prime, rows }
    }

    /// Validates triangular shape, the diagonal, p-locality and the
    /// commutator closure condition.
    pub fn from_rows(group: Arc<GroupSpec>, prime: Option<u64>, rows: Vec<Element>) -> Result<Self> {
        if rows.len() != group.dim {
            return Err(Error::DimensionMismatch { expected: group.dim, found: rows.len() });
        }
        for (i, r) in rows.iter().enumerate() {
            group.check(r)?;
            if r.level() != Some(i) {
                return Err(Error::RankDeficient { missing: vec![i + 1] });
            }
            if let Some(p) = prime {
                check_p_local(r, p)?;
                if signed_p_power_exponent(&r.coords[i], p).is_none() {
                    return Err(Error::NonPPowerDiagonal {
                        level: i + 1,
                        value: format_rational(&r.coords[i]),
                        p,
                    });
                }
            }
        }
        let b = GoodBasis { group, prime, rows };
        if !b.is_closure_valid() {
            return Err(Error::ContainmentViolated("rows do not satisfy the commutator closure condition".into()));
        }
        Ok(b)
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn prime(&self) -> Option<u64> {
        self.prime
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Element] {
        &self.rows
    }

    pub fn diag(&self, i: usize) -> &Rational {
        &self.rows[i].coords[i]
    }

    /// Diagonal exponents `e_i` with `diag_i = ±p^{e_i}` (p-local mode only).
    pub fn exponents(&self) -> Vec<i64> {
        let p = self.prime.expect("exponents need a prime");
        (0..self.dim())
            .map(|i| signed_p_power_exponent(self.diag(i), p).expect("p-power diagonal"))
            .collect()
    }

    pub fn exponent_sum(&self) -> i64 {
        self.exponents().iter().sum()
    }

    /// Exponents `m` with `g = row_1^{m_1} ⋯ row_d^{m_d}`, or `None` if
    /// `g` is not in the lattice. Peels coordinates from the top.
    pub fn member(&self, g: &Element) -> Option<Vec<BigInt>> {
        let grp = &self.group;
        let mut cur = g.clone();
        let mut m = vec![BigInt::zero(); self.dim()];
        for j in (0..self.dim()).rev() {
            if cur.coords[j].is_zero() {
                continue;
            }
            let q = &cur.coords[j] / self.diag(j);
            if !is_integer(&q) {
                return None;
            }
            let e = q.to_integer();
            cur = grp.mul(&cur, &grp.pow_int(&self.rows[j], &-&e));
            m[j] = e;
        }
        debug_assert!(cur.is_identity());
        Some(m)
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.member(g).is_some()
    }

    /// Every row of `other` lies in this lattice.
    pub fn contains_lattice(&self, other: &GoodBasis) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    /// Product `row_1^{m_1} ⋯ row_d^{m_d}`.
    pub fn word(&self, m: &[BigInt]) -> Element {
        let g = &self.group;
        self.rows
            .iter()
            .zip(m)
            .fold(g.identity(), |acc, (r, e)| g.mul(&acc, &g.pow_int(r, e)))
    }

    pub fn is_closure_valid(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (i + 1..d).all(|j| {
                let c = self.group.comm(&self.rows[i], &self.rows[j]);
                c.level().is_none_or(|l| l < i) && self.contains(&c)
            })
        })
    }

    /// Canonical representative of the left coset `gH`: coordinate `j`
    /// reduced into `[0, diag_j)` by right multiplication, top-down.
    pub fn left_coset_rep(&self, g: &Element) -> Element {
        let grp = &self.group;
        let mut cur = g.clone();
        for j in (0..self.dim()).rev() {
            let t = floor_int(&(&cur.coords[j] / self.diag(j).abs()));
            if !t.is_zero() {
                let step = if self.diag(j).is_positive() { -t } else { t };
                cur = grp.mul(&cur, &grp.pow_int(&self.rows[j], &step));
            }
        }
        cur
    }

    /// Canonical representative of the right coset `Hg`, reduced by left
    /// multiplication.
    pub fn right_coset_rep(&self, g: &Element) -> Element {
        let grp = &self.group;
        let mut cur = g.clone();
        for j in (0..self.dim()).rev() {
            let t = floor_int(&(&cur.coords[j] / self.diag(j).abs()));
            if !t.is_zero() {
                let step = if self.diag(j).is_positive() { -t } else { t };
                cur = grp.mul(&grp.pow_int(&self.rows[j], &step), &cur);
            }
        }
        cur
    }

    /// Unique representative of the lattice: positive (p-power) diagonal
    /// and off-diagonal entries reduced into `[0, diag_j)`.
    pub fn canonical(&self) -> Result<GoodBasis> {
        let g = &self.group;
        let mut rows: Vec<Element> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| if r.coords[i].is_negative() { g.inv(r) } else { r.clone() })
            .collect();
        if let Some(p) = self.prime {
            for (i, r) in rows.iter().enumerate() {
                if signed_p_power_exponent(&r.coords[i], p).is_none() {
                    return Err(Error::NonPPowerDiagonal { level: i + 1, value: format_rational(&r.coords[i]), p });
                }
            }
        }
        for i in 0..rows.len() {
            for j in (0..i).rev() {
                let t = floor_int(&(&rows[i].coords[j] / &rows[j].coords[j]));
                if !t.is_zero() {
                    rows[i] = g.mul(&g.pow_int(&rows[j], &-t), &rows[i]);
                }
            }
        }
        Ok(GoodBasis { group: self.group.clone(), prime: self.prime, rows })
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical().is_ok_and(|c| c.rows == self.rows)
    }

    /// Stable deduplication key of a canonical basis: group id, prime,
    /// diagonal exponents (or diagonal values without a prime), then the
    /// off-diagonal entries in row-major order.
    pub fn key(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{};", self.group.id);
        match self.prime {
            Some(p) => {
                let e: Vec<String> = self.exponents().iter().map(|x| x.to_string()).collect();
                let _ = write!(s, "p={p};e=[{}]", e.join(","));
            }
            None => {
                let dg: Vec<String> = (0..self.dim()).map(|i| format_rational(self.diag(i))).collect();
                let _ = write!(s, "p=none;diag=[{}]", dg.join(","));
            }
        }
        let off: Vec<String> = (0..self.dim())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| format_rational(&self.rows[i].coords[j]))
            .collect();
        let _ = write!(s, ";off=[{}]", off.join(","));
        s
    }

    /// Key of the canonical form of this lattice.
    pub fn canonical_key(&self) -> Result<String> {
        Ok(self.canonical()?.key())
    }

    pub fn to_doc(&self) -> BasisDoc {
        BasisDoc {
            key: self.key(),
            e: self.prime.map(|_| self.exponents()),
            rows: self.rows.iter().map(|r| r.coords.iter().map(format_rational).collect()).collect(),
        }
    }

    fn compatible(&self, other: &GoodBasis) -> Result<()> {
        if self.group.id != other.group.id || self.prime != other.prime {
            return Err(Error::Incompatible);
        }
        Ok(())
    }
}

/// Serialized form of a good basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDoc {
    pub key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<i64>>,
    pub rows: Vec<Vec<String>>,
}

fn check_p_local(g: &Element, p: u64) -> Result<()> {
    for c in &g.coords {
        if !is_p_local(c, p) {
            return Err(Error::NonPLocal { value: format_rational(c), p });
        }
    }
    Ok(())
}

/// Triangular table used while completing a basis.
struct Completion<'a> {
    group: &'a GroupSpec,
    rows: Vec<Option<Element>>,
    steps: u64,
}

impl Completion<'_> {
    /// Reduces `g` against the table; inserts what is left and reports
    /// whether the table changed. Elements split off by a Euclidean
    /// step are pushed onto `queue`.
    fn sift(&mut self, mut g: Element, queue: &mut VecDeque<Element>) -> Result<bool> {
        let grp = self.group;
        for j in (0..g.dim()).rev() {
            self.steps += 1;
            if self.steps > COMPLETION_STEP_LIMIT {
                return Err(Error::cap("basis completion steps", COMPLETION_STEP_LIMIT, self.steps));
            }
            if g.coords[j].is_zero() {
                continue;
            }
            let Some(r) = &self.rows[j] else {
                self.rows[j] = Some(g);
                return Ok(true);
            };
            let q = &g.coords[j] / &r.coords[j];
            if is_integer(&q) {
                g = grp.mul(&g, &grp.pow_int(r, &-q.to_integer()));
                continue;
            }
            let (gcd, x, y) = rational_bezout(&g.coords[j], &r.coords[j]);
            let new = grp.mul(&grp.pow_int(&g, &x), &grp.pow_int(r, &y));
            debug_assert_eq!(new.coords[j], gcd);
            let gq = (&g.coords[j] / &gcd).to_integer();
            let rq = (&r.coords[j] / &gcd).to_integer();
            let g_rest = grp.mul(&g, &grp.pow_int(&new, &-gq));
            let r_rest = grp.mul(r, &grp.pow_int(&new, &-rq));
            self.rows[j] = Some(new);
            queue.push_back(g_rest);
            queue.push_back(r_rest);
            return Ok(true);
        }
        Ok(false)
    }
}

/// Good basis of the subgroup generated by `gens`.
///
/// Generators are inserted by triangular Euclidean reduction on their top
/// coordinates; then pairwise commutators of the rows are sifted until
/// nothing changes. Fails if some level is never reached (the generated
/// group is not a lattice) or, in p-local mode, if a diagonal is not a
/// signed power of p.
pub fn complete_basis(group: &Arc<GroupSpec>, prime: Option<u64>, gens: &[Element]) -> Result<GoodBasis> {
    let d = group.dim;
    let mut queue = VecDeque::with_capacity(gens.len());
    for g in gens {
        group.check(g)?;
        if let Some(p) = prime {
            check_p_local(g, p)?;
        }
        if !g.is_identity() {
            queue.push_back(g.clone());
        }
    }
    let mut table = Completion { group, rows: vec![None; d], steps: 0 };
    loop {
        while let Some(g) = queue.pop_front() {
            table.sift(g, &mut queue)?;
        }
        let present: Vec<(usize, Element)> =
            table.rows.iter().enumerate().filter_map(|(i, r)| r.clone().map(|r| (i, r))).collect();
        let mut comms = Vec::new();
        for (x, (_, ri)) in present.iter().enumerate() {
            for (_, rj) in &present[x + 1..] {
                let c = group.comm(ri, rj);
                if !c.is_identity() {
                    comms.push(c);
                }
            }
        }
        let mut changed = false;
        for c in comms {
            changed |= table.sift(c, &mut queue)?;
        }
        if !changed && queue.is_empty() {
            break;
        }
    }
    let missing: Vec<usize> = (0..d).filter(|&i| table.rows[i].is_none()).map(|i| i + 1).collect();
    if !missing.is_empty() {
        return Err(Error::RankDeficient { missing });
    }
    let rows: Vec<Element> = table
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let r = r.expect("present");
            if r.coords[i].is_negative() {
                group.inv(&r)
            } else {
                r
            }
        })
        .collect();
    if let Some(p) = prime {
        for (i, r) in rows.iter().enumerate() {
            if signed_p_power_exponent(&r.coords[i], p).is_none() {
                return Err(Error::NonPPowerDiagonal { level: i + 1, value: format_rational(&r.coords[i]), p });
            }
        }
    }
    let b = GoodBasis { group: group.clone(), prime, rows };
    debug_assert!(b.is_closure_valid());
    Ok(b)
}

/// `log_p [K : H]` for a sublattice `H ⊆ K`, from the diagonal exponents.
pub fn det_index(h: &GoodBasis, k: &GoodBasis) -> Result<i64> {
    h.compatible(k)?;
    if h.prime.is_none() {
        return Err(Error::Incompatible);
    }
    if !k.contains_lattice(h) {
        return Err(Error::ContainmentViolated("the first lattice is not contained in the second".into()));
    }
    Ok(h.exponent_sum() - k.exponent_sum())
}

/// `[K : H]` as an integer for a sublattice `H ⊆ K` (any mode).
pub fn index_value(h: &GoodBasis, k: &GoodBasis) -> Result<BigInt> {
    h.compatible(k)?;
    if !k.contains_lattice(h) {
        return Err(Error::ContainmentViolated("the first lattice is not contained in the second".into()));
    }
    let ratio = (0..h.dim()).fold(Rational::one(), |acc, i| acc * (h.diag(i) / k.diag(i)).abs());
    if !is_integer(&ratio) {
        return Err(Error::Inconsistent(format!("non-integral index {}", format_rational(&ratio))));
    }
    Ok(ratio.to_integer())
}

/// Canonical basis of `H ∩ K` together with the orbit size `[H : H ∩ K]`.
///
/// `H` acts on the right cosets of `K` by right multiplication; the
/// stabilizer of the trivial coset is `H ∩ K`, generated by the Schreier
/// generators of the (finite) orbit.
pub fn intersect_with_orbit(h: &GoodBasis, k: &GoodBasis, max_orbit: usize) -> Result<(GoodBasis, usize)> {
    h.compatible(k)?;
    let grp = &h.group;
    let start = grp.identity();
    let mut transversal: HashMap<Element, Element> = HashMap::new();
    transversal.insert(k.right_coset_rep(&start), start.clone());
    let mut order = vec![start];
    let mut gens = Vec::new();
    let mut idx = 0;
    while idx < order.len() {
        let t = order[idx].clone();
        idx += 1;
        for s in &h.rows {
            let y = grp.mul(&t, s);
            let key = k.right_coset_rep(&y);
            match transversal.get(&key) {
                Some(ty) => {
                    let sg = grp.mul(&y, &grp.inv(ty));
                    if !sg.is_identity() {
                        gens.push(sg);
                    }
                }
                None => {
                    if order.len() >= max_orbit {
                        return Err(Error::cap("coset orbit size", max_orbit as u64, order.len() as u64 + 1));
                    }
                    transversal.insert(key, y.clone());
                    order.push(y);
                }
            }
        }
    }
    let basis = complete_basis(grp, h.prime, &gens)?.canonical()?;
    Ok((basis, order.len()))
}

pub fn intersect(h: &GoodBasis, k: &GoodBasis) -> Result<GoodBasis> {
    Ok(intersect_with_orbit(h, k, DEFAULT_ORBIT_CAP)?.0)
}

/// Commensurability index of `H` and `K` as `(a, b)` with
/// `a = log_p [K : H∩K]` and `b = log_p [H : H∩K]`.
pub fn comm_index(h: &GoodBasis, k: &GoodBasis) -> Result<(i64, i64)> {
    comm_index_capped(h, k, DEFAULT_ORBIT_CAP)
}

pub fn comm_index_capped(h: &GoodBasis, k: &GoodBasis, max_orbit: usize) -> Result<(i64, i64)> {
    let (_, a, b) = comm_data(h, k, max_orbit)?;
    Ok((a, b))
}

/// `H ∩ K` together with the valuations returned by [`comm_index`].
pub fn comm_data(h: &GoodBasis, k: &GoodBasis, max_orbit: usize) -> Result<(GoodBasis, i64, i64)> {
    let p = h.prime.ok_or(Error::Incompatible)?;
    let (i, orbit) = intersect_with_orbit(h, k, max_orbit)?;
    let a = det_index(&i, k)?;
    let b = det_index(&i, h)?;
    if p_power(p, b) != Rational::from_integer(orbit.into()) {
        return Err(Error::Inconsistent(format!(
            "determinant index p^{b} disagrees with coset count {orbit}"
        )));
    }
    if k.rows.iter().enumerate().all(|(j, r)| *r == Element::unit(r.dim(), j, Rational::one())) {
        // Against G(Z): a + b = 2·Σe(B) − Σe(A) with B the intersection.
        let a_sum = h.exponent_sum();
        if a + b != 2 * i.exponent_sum() - a_sum {
            return Err(Error::Inconsistent("determinant formula for the commensurability index".into()));
        }
    }
    Ok((i, a, b))
}

/// `([K : H∩K], [H : H∩K])` in global-rational mode.
pub fn comm_index_global(h: &GoodBasis, k: &GoodBasis) -> Result<(BigInt, BigInt)> {
    let (i, orbit) = intersect_with_orbit(h, k, DEFAULT_ORBIT_CAP)?;
    let a = index_value(&i, k)?;
    let b = index_value(&i, h)?;
    if b != BigInt::from(orbit) {
        return Err(Error::Inconsistent(format!("index {b} disagrees with coset count {orbit}")));
    }
    Ok((a, b))
}
