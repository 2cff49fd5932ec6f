//! Group arithmetic in Mal'cev coordinates.
//!
//! An element is a coordinate vector `a ∈ Q^d`; coordinate 1 (index 0) is
//! the most central one. Products, powers and commutators are evaluated
//! through the structure polynomials μ, λ, κ of a [`GroupSpec`], and every
//! group carries a unitriangular matrix template that serves as an
//! independent oracle for the polynomial data.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{var_names, Poly};
use crate::rational::{format_rational, is_integer, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub coords: Vec<Rational>,
}

impl Element {
    pub fn new(coords: Vec<Rational>) -> Self {
        Element { coords }
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Element { coords: v.iter().map(|&x| Rational::from_integer(x.into())).collect() }
    }

    pub fn identity(d: usize) -> Self {
        Element { coords: vec![Rational::zero(); d] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Index of the highest nonzero coordinate.
    pub fn level(&self) -> Option<usize> {
        self.coords.iter().rposition(|c| !c.is_zero())
    }

    /// Coordinate `i` scaled: `(0,..,0,q,0,..)`.
    pub fn unit(d: usize, i: usize, q: Rational) -> Self {
        let mut coords = vec![Rational::zero(); d];
        coords[i] = q;
        Element { coords }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", format_rational(c))?;
        }
        write!(f, ")")
    }
}

pub type Matrix = Vec<Vec<Rational>>;

/// A unipotent group presented by its structure polynomials.
///
/// Variable layout: `mu`/`kap` use `a1..ad, b1..bd`; `lam` uses
/// `a1..ad, k`; the embedding template uses `a1..ad`.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    pub id: String,
    pub description: String,
    pub dim: usize,
    pub class: usize,
    pub mu: Vec<Poly>,
    pub lam: Vec<Poly>,
    pub kap: Vec<Poly>,
    pub embed: Vec<Vec<Poly>>,
    /// `mu_j - a_j - b_j`, cached for inversion.
    mu_rest: Vec<Poly>,
}

impl GroupSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        dim: usize,
        class: usize,
        mu: Vec<Poly>,
        lam: Vec<Poly>,
        kap: Vec<Poly>,
        embed: Vec<Vec<Poly>>,
    ) -> Result<Self> {
        let id = id.into();
        let shape_err = |what: &str| Error::Catalog(format!("group {id:?}: {what}"));
        if dim == 0 || class == 0 {
            return Err(shape_err("dimension and class must be positive"));
        }
        if mu.len() != dim || lam.len() != dim || kap.len() != dim {
            return Err(shape_err("mu, lam and kap need one polynomial per coordinate"));
        }
        if mu.iter().chain(&kap).any(|p| p.nvars() != 2 * dim) || lam.iter().any(|p| p.nvars() != dim + 1) {
            return Err(shape_err("polynomial arity does not match the dimension"));
        }
        let n = embed.len();
        if n < 2 || embed.iter().any(|r| r.len() != n || r.iter().any(|p| p.nvars() != dim)) {
            return Err(shape_err("embedding template must be a square matrix in d variables"));
        }
        let mu_rest = mu
            .iter()
            .enumerate()
            .map(|(j, m)| m.sub(&Poly::var(2 * dim, j)).sub(&Poly::var(2 * dim, dim + j)))
            .collect();
        Ok(GroupSpec {
            id,
            description: description.into(),
            dim,
            class,
            mu,
            lam,
            kap,
            embed,
            mu_rest,
        })
    }

    pub fn pair_names(&self) -> Vec<String> {
        var_names(&[("a", self.dim), ("b", self.dim)])
    }

    pub fn power_names(&self) -> Vec<String> {
        var_names(&[("a", self.dim), ("k", 0)])
    }

    pub fn coord_names(&self) -> Vec<String> {
        var_names(&[("a", self.dim)])
    }

    pub fn mu_rest(&self) -> &[Poly] {
        &self.mu_rest
    }

    /// Bound from the roots lemma: one root step has index at most
    /// `p^(d·c(c+1)/2)`.
    pub fn root_step_bound(&self) -> i64 {
        (self.dim * self.class * (self.class + 1) / 2) as i64
    }

    pub fn identity(&self) -> Element {
        Element::identity(self.dim)
    }

    pub fn check(&self, g: &Element) -> Result<()> {
        if g.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, found: g.dim() })
        }
    }

    fn pair(g: &Element, h: &Element) -> Vec<Rational> {
        g.coords.iter().chain(&h.coords).cloned().collect()
    }

    pub fn mul(&self, g: &Element, h: &Element) -> Element {
        assert!(g.dim() == self.dim && h.dim() == self.dim, "element dimension mismatch");
        let vals = Self::pair(g, h);
        Element { coords: self.mu.iter().map(|m| m.eval(&vals)).collect() }
    }

    pub fn try_mul(&self, g: &Element, h: &Element) -> Result<Element> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul(g, h))
    }

    /// Inverse by solving `μ(g, x) = 0` from the top coordinate down.
    pub fn inv(&self, g: &Element) -> Element {
        let d = self.dim;
        let mut vals: Vec<Rational> = g.coords.iter().cloned().chain(std::iter::repeat_n(Rational::zero(), d)).collect();
        for j in (0..d).rev() {
            let rest = self.mu_rest[j].eval(&vals);
            vals[d + j] = -&g.coords[j] - rest;
        }
        Element { coords: vals.split_off(d) }
    }

    /// `g^k` through λ evaluated at an integer exponent.
    pub fn pow_int(&self, g: &Element, k: &BigInt) -> Element {
        if k.is_zero() || g.is_identity() {
            return self.identity();
        }
        if k.is_one() {
            return g.clone();
        }
        self.eval_lambda(g, &Rational::from_integer(k.clone()))
    }

    pub fn pow_i64(&self, g: &Element, k: i64) -> Element {
        self.pow_int(g, &BigInt::from(k))
    }

    fn eval_lambda(&self, g: &Element, k: &Rational) -> Element {
        let mut vals = g.coords.clone();
        vals.push(k.clone());
        Element { coords: self.lam.iter().map(|l| l.eval(&vals)).collect() }
    }

    /// `g^k` for rational `k`. Non-integral exponents are verified by
    /// raising the result back with the product law.
    pub fn pow(&self, g: &Element, k: &Rational) -> Result<Element> {
        self.check(g)?;
        if is_integer(k) {
            return Ok(self.pow_int(g, k.numer()));
        }
        let r = self.eval_lambda(g, k);
        let back = self.pow_by_mul(&r, k.denom());
        let want = self.pow_by_mul(g, k.numer());
        if back != want {
            return Err(Error::BrokenGroupSpec {
                group: self.id.clone(),
                identity: "x(a)^(n/m) raised to m equals x(a)^n".into(),
                detail: format!("g = {g}, k = {}, root = {r}", format_rational(k)),
            });
        }
        Ok(r)
    }

    /// Integer power by repeated squaring with the product law only.
    pub fn pow_by_mul(&self, g: &Element, k: &BigInt) -> Element {
        let mut base = if k.is_negative() { self.inv(g) } else { g.clone() };
        let mut e = k.abs();
        let mut acc = self.identity();
        let two = BigInt::from(2);
        while !e.is_zero() {
            if (&e % &two).is_one() {
                acc = self.mul(&acc, &base);
            }
            e /= &two;
            if !e.is_zero() {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// `[g, h] = g⁻¹h⁻¹gh` through κ.
    pub fn comm(&self, g: &Element, h: &Element) -> Element {
        let vals = Self::pair(g, h);
        let c = Element { coords: self.kap.iter().map(|k| k.eval(&vals)).collect() };
        debug_assert_eq!(c, self.comm_by_mul(g, h), "κ disagrees with the product law");
        c
    }

    pub fn comm_by_mul(&self, g: &Element, h: &Element) -> Element {
        let gi = self.inv(g);
        let hi = self.inv(h);
        self.mul(&self.mul(&self.mul(&gi, &hi), g), h)
    }

    /// Conjugate `h⁻¹ g h`.
    pub fn conj(&self, g: &Element, h: &Element) -> Element {
        self.mul(&self.mul(&self.inv(h), g), h)
    }

    pub fn embed_matrix(&self, g: &Element) -> Matrix {
        self.embed.iter().map(|row| row.iter().map(|p| p.eval(&g.coords)).collect()).collect()
    }
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Rational::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

pub fn identity_matrix(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}
