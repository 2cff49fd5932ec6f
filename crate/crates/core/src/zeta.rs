//! Local series `Σ c_{p^k} t^k` (with `t = p^{-s}`), recurrence fitting
//! over exact rationals, and Euler-product assembly of global
//! coefficients.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latticeenum::{CoefficientTable, Method};
use crate::rational::{format_rational, is_integer, Rational};

pub const SERIES_SCHEMA: &str = "commgrowth.series/1";
pub const FIT_SCHEMA: &str = "commgrowth.fit/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSeries {
    pub schema: String,
    pub group: String,
    pub p: u64,
    pub coeffs: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
}

impl LocalSeries {
    pub fn new(group: &str, p: u64, coeffs: Vec<u64>) -> Self {
        LocalSeries { schema: SERIES_SCHEMA.into(), group: group.into(), p, coeffs, method: None }
    }

    pub fn from_table(t: &CoefficientTable) -> Self {
        let mut s = Self::new(&t.group, t.p, t.coeffs[..=t.complete_through.min(t.max_k)].to_vec());
        s.method = Some(t.method);
        s
    }

    pub fn max_k(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn rationals(&self) -> Vec<Rational> {
        self.coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect()
    }
}

/// `c_k = Σ_{j=1..L} q_j c_{k-j}` for every `k ≥ offset + length`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceFit {
    pub schema: String,
    pub offset: usize,
    pub length: usize,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub q: Vec<Rational>,
    /// Coefficients of `t^0, t^1, …`.
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub numerator: Vec<Rational>,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub denominator: Vec<Rational>,
    /// Equations satisfied beyond the `length` needed to determine `q`.
    pub validation_window: usize,
    pub integral: bool,
    pub rational_function: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFailure {
    /// Not enough terms to test recurrences up to the requested length.
    InsufficientTerms { terms: usize, max_len: usize, longest_testable: Option<usize> },
    NoRecurrence { terms: usize, max_len: usize },
}

impl std::fmt::Display for FitFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitFailure::InsufficientTerms { terms, max_len, longest_testable } => write!(
                f,
                "insufficient data: {terms} terms; recurrences longer than {} cannot be validated (requested up to {max_len})",
                longest_testable.map_or("none".into(), |l| l.to_string())
            ),
            FitFailure::NoRecurrence { terms, max_len } => {
                write!(f, "no recurrence of length <= {max_len} fits the {terms} available terms")
            }
        }
    }
}

/// Solves `A x = b` exactly; returns one solution (free variables zero)
/// or `None` if the system is inconsistent.
fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>, n: usize) -> Option<Vec<Rational>> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, piv);
        b.swap(r, piv);
        let inv = Rational::one() / &a[r][c];
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        b[r] *= &inv;
        let pivot = a[r].clone();
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
                let v = &f * &b[r];
                b[i] -= v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if b[r..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = b[i].clone();
    }
    Some(x)
}

/// Smallest recurrence (by length, then offset) that holds on every
/// available index and leaves at least `length` equations for validation.
pub fn fit_recurrence(series: &LocalSeries, max_len: usize) -> std::result::Result<RecurrenceFit, FitFailure> {
    let c = series.rationals();
    let n = c.len();
    let mut longest_testable = None;
    for len in 0..=max_len {
        let need = (2 * len).max(1);
        if n < len + need {
            break;
        }
        longest_testable = Some(len);
        for offset in 0..=(n - len - need) {
            let eqs: Vec<usize> = (offset + len..n).collect();
            let a: Vec<Vec<Rational>> = eqs.iter().map(|&k| (1..=len).map(|j| c[k - j].clone()).collect()).collect();
            let b: Vec<Rational> = eqs.iter().map(|&k| c[k].clone()).collect();
            let Some(q) = solve(a, b, len) else { continue };
            let fit = build_fit(series, offset, len, q, eqs.len() - len);
            return Ok(fit);
        }
    }
    if longest_testable == Some(max_len) {
        Err(FitFailure::NoRecurrence { terms: n, max_len })
    } else {
        Err(FitFailure::InsufficientTerms { terms: n, max_len, longest_testable })
    }
}

fn build_fit(series: &LocalSeries, offset: usize, length: usize, q: Vec<Rational>, window: usize) -> RecurrenceFit {
    let (numerator, denominator) = rational_parts(&series.rationals(), offset, &q);
    let integral = q.iter().all(is_integer);
    let rational_function = format!("({}) / ({})", format_poly(&numerator), format_poly(&denominator));
    RecurrenceFit {
        schema: FIT_SCHEMA.into(),
        offset,
        length,
        q,
        numerator,
        denominator,
        validation_window: window,
        integral,
        rational_function,
    }
}

fn rational_parts(c: &[Rational], offset: usize, q: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut den = vec![Rational::one()];
    den.extend(q.iter().map(|x| -x));
    let deg = (offset + q.len()).max(1);
    let mut num = vec![Rational::zero(); deg];
    for (k, slot) in num.iter_mut().enumerate() {
        for (j, dj) in den.iter().enumerate().take(k + 1) {
            if let Some(ck) = c.get(k - j) {
                *slot += dj * ck;
            }
        }
    }
    trim(&mut num);
    trim(&mut den);
    (num, den)
}

fn trim(v: &mut Vec<Rational>) {
    while v.len() > 1 && v.last().is_some_and(|x| x.is_zero()) {
        v.pop();
    }
}

/// `(numerator, denominator)` of the fitted series; panics if the fit does
/// not reproduce `series`.
pub fn to_rational_function(fit: &RecurrenceFit, series: &LocalSeries) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let (num, den) = rational_parts(&series.rationals(), fit.offset, &fit.q);
    let back = expand(&num, &den, series.coeffs.len());
    if back != series.rationals() {
        return Err(Error::Inconsistent("rational function does not re-expand to the series".into()));
    }
    Ok((num, den))
}

/// First `n` power-series coefficients of `num / den` (`den[0] = 1`).
pub fn expand(num: &[Rational], den: &[Rational], n: usize) -> Vec<Rational> {
    assert!(den.first().is_some_and(|d| d.is_one()), "denominator must start with 1");
    let mut out: Vec<Rational> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = num.get(k).cloned().unwrap_or_else(Rational::zero);
        for j in 1..den.len().min(k + 1) {
            v -= &den[j] * &out[k - j];
        }
        out.push(v);
    }
    out
}

pub fn format_poly(c: &[Rational]) -> String {
    let mut s = String::new();
    for (k, x) in c.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let neg = *x < Rational::zero();
        let mag = if neg { -x } else { x.clone() };
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        let coef = format_rational(&mag);
        match (k, mag.is_one()) {
            (0, _) => s.push_str(&coef),
            (_, true) => {}
            _ => {
                let _ = write!(s, "{coef}*");
            }
        }
        match k {
            0 => {}
            1 => s.push('t'),
            _ => {
                let _ = write!(s, "t^{k}");
            }
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// `n = ∏ p^e` by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Prime powers `p^e ≤ n_max` whose local coefficient is not in `tables`.
pub fn missing_local_data(tables: &BTreeMap<u64, LocalSeries>, n_max: u64) -> Vec<(u64, usize)> {
    let mut gaps = Vec::new();
    for p in (2..=n_max).filter(|&p| crate::rational::is_prime(p)) {
        let mut e = 1usize;
        let mut pe = p;
        let have = tables.get(&p).map_or(0, |s| s.max_k());
        while pe <= n_max {
            if e > have {
                gaps.push((p, e));
            }
            e += 1;
            match pe.checked_mul(p) {
                Some(x) => pe = x,
                None => break,
            }
        }
    }
    gaps
}

/// `c_n = ∏_{p^e ∥ n} c_{p^e}` for `n = 1..=n_max` (index 0 holds `c_1`).
pub fn global_coefficients(tables: &BTreeMap<u64, LocalSeries>, n_max: u64) -> Result<Vec<u64>> {
    let gaps = missing_local_data(tables, n_max);
    if !gaps.is_empty() {
        let list: Vec<String> = gaps.iter().map(|(p, e)| format!("{p}^{e}")).collect();
        return Err(Error::MissingLocalData(list.join(", ")));
    }
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let mut c = 1u64;
        for (p, e) in factorize(n) {
            let local = tables[&p].coeffs[e as usize];
            c = c.checked_mul(local).ok_or_else(|| Error::cap("coefficient size", u64::MAX, u64::MAX))?;
        }
        out.push(c);
    }
    Ok(out)
}

/// `2^{ω(n)}`, the coefficients of the additive group of dimension one.
pub fn abelian_reference(n: u64) -> u64 {
    assert!(n >= 1);
    1 << factorize(n).len()
}

pub fn abelian_local(max_k: usize) -> Vec<u64> {
    (0..=max_k).map(|k| if k == 0 { 1 } else { 2 }).collect()
}

pub fn series_csv(s: &LocalSeries) -> String {
    let mut out = String::from("group,p,k,p_pow_k,c\n");
    let mut pk: u128 = 1;
    for (k, c) in s.coeffs.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", s.group, s.p, k, pk, c);
        pk = pk.saturating_mul(s.p as u128);
    }
    out
}

pub fn global_csv(group: &str, coeffs: &[u64]) -> String {
    let mut out = String::from("group,n,c\n");
    for (i, c) in coeffs.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", group, i + 1, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn series(c: &[u64]) -> LocalSeries {
        LocalSeries::new("test", 2, c.to_vec())
    }

    #[test]
    fn additive_group_fit() {
        let s = series(&[1, 2, 2, 2, 2, 2]);
        let f = fit_recurrence(&s, 2).unwrap();
        assert_eq!((f.offset, f.length), (1, 1));
        assert_eq!(f.q, vec![rat(1)]);
        assert_eq!(f.numerator, vec![rat(1), rat(1)]);
        assert_eq!(f.denominator, vec![rat(1), rat(-1)]);
        assert_eq!(f.rational_function, "(1 + t) / (1 - t)");
        assert!(f.integral);
        assert_eq!(to_rational_function(&f, &s).unwrap(), (f.numerator.clone(), f.denominator.clone()));
    }

    #[test]
    fn polynomial_and_geometric() {
        let f = fit_recurrence(&series(&[1, 0, 0, 0]), 1).unwrap();
        assert_eq!((f.offset, f.length), (1, 0));
        assert_eq!(f.numerator, vec![rat(1)]);
        assert_eq!(f.denominator, vec![rat(1)]);
        let f = fit_recurrence(&series(&[1, 3, 9, 27, 81]), 2).unwrap();
        assert_eq!((f.offset, f.length), (0, 1));
        assert_eq!(f.denominator, vec![rat(1), rat(-3)]);
        assert_eq!(f.numerator, vec![rat(1)]);
    }

    #[test]
    fn short_series_are_reported() {
        assert!(matches!(
            fit_recurrence(&series(&[1, 4]), 2),
            Err(FitFailure::InsufficientTerms { .. })
        ));
        assert!(matches!(
            fit_recurrence(&series(&[1, 4, 44, 108]), 1),
            Err(FitFailure::NoRecurrence { .. })
        ));
    }

    #[test]
    fn euler_assembly() {
        let mut t = BTreeMap::new();
        for p in [2, 3, 5, 7] {
            t.insert(p, LocalSeries::new("Z1", p, abelian_local(3)));
        }
        let c = global_coefficients(&t, 10).unwrap();
        assert_eq!(c[0], 1);
        assert_eq!(c[5], 4);
        assert!(global_coefficients(&t, 12).is_err());
        assert_eq!(missing_local_data(&t, 12), vec![(11, 1)]);
        assert_eq!(abelian_reference(30), 8);
        assert_eq!(abelian_reference(1), 1);
        assert_eq!(abelian_local(4), vec![1, 2, 2, 2, 2]);
    }
}
