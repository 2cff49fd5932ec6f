//! Sparse multivariate polynomials over Q, stored as explicit monomial
//! term lists so that structural properties can be checked syntactically.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coef: Rational,
    /// One exponent per variable.
    pub exps: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn uses(&self, var: usize) -> bool {
        self.exps[var] > 0
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps.iter().enumerate().filter(|(_, e)| **e > 0).map(|(i, _)| i)
    }
}

/// Invariant: terms are sorted by exponent vector, merged, and nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: Vec<Term>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::from_terms(nvars, vec![Term { coef: c, exps: vec![0; nvars] }])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Poly { nvars, terms: vec![Term { coef: Rational::one(), exps }] }
    }

    pub fn from_terms(nvars: usize, terms: Vec<Term>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for t in terms {
            assert_eq!(t.exps.len(), nvars, "term arity");
            *merged.entry(t.exps).or_insert_with(Rational::zero) += t.coef;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(exps, coef)| Term { coef, exps })
            .collect();
        Poly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        Poly::from_terms(self.nvars, t)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        Poly::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|t| Term { coef: &t.coef * c, exps: t.exps.clone() })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                out.push(Term { coef: &a.coef * &b.coef, exps });
            }
        }
        Poly::from_terms(self.nvars, out)
    }

    pub fn eval(&self, vals: &[Rational]) -> Rational {
        debug_assert_eq!(vals.len(), self.nvars);
        let mut acc = Rational::zero();
        'terms: for t in &self.terms {
            let mut m = t.coef.clone();
            for (v, &e) in vals.iter().zip(&t.exps) {
                if e == 0 {
                    continue;
                }
                if v.is_zero() {
                    continue 'terms;
                }
                m *= num_traits::pow(v.clone(), e as usize);
            }
            acc += m;
        }
        acc
    }

    /// Substitutes `var := value`, keeping the variable slot (now unused).
    pub fn substitute(&self, var: usize, value: &Rational) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut exps = t.exps.clone();
                let e = std::mem::take(&mut exps[var]);
                Term { coef: &t.coef * num_traits::pow(value.clone(), e as usize), exps }
            })
            .collect();
        Poly::from_terms(self.nvars, terms)
    }

    /// Re-indexes variables into a polynomial ring with `nvars` variables.
    pub fn remap(&self, nvars: usize, map: impl Fn(usize) -> usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut exps = vec![0; nvars];
                for (i, &e) in t.exps.iter().enumerate() {
                    if e > 0 {
                        exps[map(i)] += e;
                    }
                }
                Term { coef: t.coef.clone(), exps }
            })
            .collect();
        Poly::from_terms(nvars, terms)
    }

    pub fn to_doc(&self, names: &[String]) -> Vec<TermDoc> {
        self.terms
            .iter()
            .map(|t| TermDoc {
                c: format_rational(&t.coef),
                m: t
                    .exps
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(i, e)| (names[i].clone(), *e))
                    .collect(),
            })
            .collect()
    }

    pub fn from_doc(doc: &[TermDoc], names: &[String]) -> Result<Poly> {
        let mut terms = Vec::with_capacity(doc.len());
        for td in doc {
            let mut exps = vec![0; names.len()];
            for (name, e) in &td.m {
                let i = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))?;
                exps[i] += e;
            }
            terms.push(Term { coef: parse_rational(&td.c)?, exps });
        }
        Ok(Poly::from_terms(names.len(), terms))
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

/// File form of one monomial: coefficient text plus variable exponents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub c: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub m: BTreeMap<String, u32>,
}

pub struct PolyDisplay<'a> {
    poly: &'a Poly,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (n, t) in self.poly.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", format_rational(&t.coef))?;
            for (i, &e) in t.exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", self.names[i])?,
                    _ => write!(f, "*{}^{}", self.names[i], e)?,
                }
            }
        }
        Ok(())
    }
}

pub fn var_names(prefixes: &[(&str, usize)]) -> Vec<String> {
    let mut v = Vec::new();
    for (p, n) in prefixes {
        if *n == 0 {
            v.push(p.to_string());
        } else {
            v.extend((1..=*n).map(|i| format!("{p}{i}")));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, rat};

    #[test]
    fn arithmetic_and_eval() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y));
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.eval(&[rat(3), rat(2)]), rat(5));
        let q = p.substitute(1, &frac(1, 2));
        assert_eq!(q.eval(&[rat(1), rat(99)]), frac(3, 4));
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn doc_round_trip() {
        let names = var_names(&[("a", 2), ("k", 0)]);
        let p = Poly::var(3, 0).mul(&Poly::var(3, 2)).scale(&frac(-1, 8)).add(&Poly::constant(3, rat(2)));
        let doc = p.to_doc(&names);
        assert_eq!(Poly::from_doc(&doc, &names).unwrap(), p);
        assert_eq!(p.display(&names).to_string(), "2 + -1/8*a1*k");
        assert!(Poly::from_doc(&[TermDoc { c: "1".into(), m: [("z".to_string(), 1)].into() }], &names).is_err());
    }
}
