//! Valuation grids and certified floors.
//!
//! A weight vector `w` describes the grid `{a : v_p(a_j) ≥ w_j}`. Whether
//! such a grid is a subgroup, normal, or sits inside some lattice can be
//! read off the monomials of the structure polynomials: each monomial
//! `c·∏ a_v^{e_v}` evaluated on a grid has valuation at least
//! `v_p(c) + Σ e_v w_v`. All checks below are of that form.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::goodbasis::GoodBasis;
use crate::malcev::{Element, GroupSpec};
use crate::poly::{Poly, Term};
use crate::rational::{p_power, vp, Rational};

const FLOOR_RAISE_LIMIT: usize = 10_000;

/// Lower bound for the valuation of `t` when variable `v` has weight `w(v)`.
pub fn term_valuation(t: &Term, p: u64, w: impl Fn(usize) -> i64) -> i64 {
    let c = vp(&t.coef, p).expect("terms are nonzero");
    c + t.exps.iter().enumerate().filter(|(_, e)| **e > 0).map(|(v, &e)| e as i64 * w(v)).sum::<i64>()
}

/// λ with the exponent variable fixed to `k`.
pub fn lambda_at(group: &GroupSpec, k: &Rational) -> Vec<Poly> {
    group.lam.iter().map(|l| l.substitute(group.dim, k)).collect()
}

/// Lowers weights top-down until the grid is closed under products and
/// inverses. Coordinates above `j` are final when `j` is processed.
pub fn close_grid(group: &GroupSpec, p: u64, w: &[i64]) -> Vec<i64> {
    let d = group.dim;
    let inv = lambda_at(group, &Rational::from_integer((-1).into()));
    let mut w = w.to_vec();
    for j in (0..d).rev() {
        let mut m = w[j];
        for t in group.mu_rest()[j].terms() {
            m = m.min(term_valuation(t, p, |v| w[v % d]));
        }
        for t in inv[j].terms() {
            m = m.min(term_valuation(t, p, |v| w[v]));
        }
        w[j] = m;
    }
    w
}

/// Smallest closed grid containing every row of `b`.
pub fn grid_containing(b: &GoodBasis) -> Vec<i64> {
    let p = b.prime().expect("grids need a prime");
    let d = b.dim();
    let w: Vec<i64> = (0..d)
        .map(|j| b.rows()[j..].iter().filter_map(|r| vp(&r.coords[j], p)).min().expect("diagonal is nonzero"))
        .collect();
    close_grid(b.group(), p, &w)
}

/// Coordinatewise minimum.
pub fn meet(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| *x.min(y)).collect()
}

/// Good basis `p^{w_j}·e_j` of a closed grid.
pub fn grid_basis(group: &Arc<GroupSpec>, p: u64, w: &[i64]) -> Result<GoodBasis> {
    let rows = w.iter().enumerate().map(|(j, &e)| Element::unit(w.len(), j, p_power(p, e))).collect();
    GoodBasis::from_rows(group.clone(), Some(p), rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Products and inverses of floor elements stay in the floor.
    Subgroup,
    /// Commutators of ambient elements with floor elements land in the floor.
    Normal,
    /// Multiplying an ambient element by a floor element moves each
    /// coordinate by a multiple of the floor weight, so cosets are boxes.
    Congruence,
    /// `λ(·, p^{-k})` maps the floor into the integer grid.
    Power,
    /// Floor generators are members of a required lattice.
    Inside,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateLine {
    pub check: Check,
    pub coordinate: usize,
    pub monomials: usize,
    /// Smallest excess of a monomial bound over its target.
    pub min_slack: i64,
}

#[derive(Clone, Debug)]
struct Violation {
    check: Check,
    raise: usize,
}

/// What a floor must satisfy.
#[derive(Clone, Debug)]
pub struct FloorRequest {
    /// Closed grid the floor must be normal in.
    pub ambient: Vec<i64>,
    /// Initial weights; raised to at least `ambient`.
    pub start: Vec<i64>,
    /// If set, elements of the floor are `p^k`-th powers of integral elements.
    pub power: Option<u32>,
    /// Lattices that must contain the floor.
    pub inside: Vec<GoodBasis>,
}

#[derive(Clone, Debug)]
pub struct CertifiedFloor {
    pub p: u64,
    pub ambient: Vec<i64>,
    pub weights: Vec<i64>,
    pub basis: GoodBasis,
    pub certificate: Vec<CertificateLine>,
}

#[derive(Serialize)]
pub struct FloorDoc<'a> {
    pub p: u64,
    pub ambient: &'a [i64],
    pub weights: &'a [i64],
    pub certificate: &'a [CertificateLine],
}

impl CertifiedFloor {
    pub fn doc(&self) -> FloorDoc<'_> {
        FloorDoc { p: self.p, ambient: &self.ambient, weights: &self.weights, certificate: &self.certificate }
    }
}

struct Checker<'a> {
    group: &'a GroupSpec,
    p: u64,
    req: &'a FloorRequest,
    inv: Vec<Poly>,
    power: Option<Vec<Poly>>,
}

impl Checker<'_> {
    fn line(check: Check, coordinate: usize, slacks: impl Iterator<Item = i64>) -> Option<CertificateLine> {
        let mut monomials = 0;
        let mut min_slack = i64::MAX;
        for s in slacks {
            monomials += 1;
            min_slack = min_slack.min(s);
        }
        (monomials > 0).then_some(CertificateLine { check, coordinate, monomials, min_slack })
    }

    fn highest(t: &Term, d: usize, filter: impl Fn(usize) -> bool) -> Option<usize> {
        t.vars().filter(|&v| filter(v)).map(|v| v % d).max()
    }

    fn evaluate(&self, w: &[i64]) -> std::result::Result<Vec<CertificateLine>, Violation> {
        let d = self.group.dim;
        let amb = &self.req.ambient;
        let mut lines = Vec::new();
        let unfixable = |check| Violation { check, raise: usize::MAX };
        for j in (0..d).rev() {
            // subgroup
            let mut slacks = Vec::new();
            for t in self.group.mu_rest()[j].terms() {
                let s = term_valuation(t, self.p, |v| w[v % d]) - w[j];
                if s < 0 {
                    let raise = Self::highest(t, d, |_| true).ok_or(unfixable(Check::Subgroup))?;
                    return Err(Violation { check: Check::Subgroup, raise });
                }
                slacks.push(s);
            }
            for t in self.inv[j].terms().iter().filter(|t| t.exps[j] == 0) {
                let s = term_valuation(t, self.p, |v| w[v]) - w[j];
                if s < 0 {
                    let raise = Self::highest(t, d, |_| true).ok_or(unfixable(Check::Subgroup))?;
                    return Err(Violation { check: Check::Subgroup, raise });
                }
                slacks.push(s);
            }
            lines.extend(Self::line(Check::Subgroup, j + 1, slacks.into_iter()));

            // normality in the ambient grid
            let mut slacks = Vec::new();
            for t in self.group.kap[j].terms() {
                let s = term_valuation(t, self.p, |v| if v < d { amb[v] } else { w[v - d] }) - w[j];
                if s < 0 {
                    let raise = Self::highest(t, d, |v| v >= d).ok_or(unfixable(Check::Normal))?;
                    return Err(Violation { check: Check::Normal, raise });
                }
                slacks.push(s);
            }
            lines.extend(Self::line(Check::Normal, j + 1, slacks.into_iter()));

            // cosets are coordinate boxes
            let mut slacks = Vec::new();
            for t in self.group.mu_rest()[j].terms() {
                let base = term_valuation(t, self.p, |v| amb[v % d]);
                for u in t.vars() {
                    let c = u % d;
                    let s = base + (w[c] - amb[c]) - w[j];
                    if s < 0 {
                        return Err(Violation { check: Check::Congruence, raise: c });
                    }
                    slacks.push(s);
                }
            }
            lines.extend(Self::line(Check::Congruence, j + 1, slacks.into_iter()));

            if let Some(pw) = &self.power {
                let mut slacks = Vec::new();
                for t in pw[j].terms() {
                    let s = term_valuation(t, self.p, |v| w[v]);
                    if s < 0 {
                        let raise = Self::highest(t, d, |_| true).ok_or(unfixable(Check::Power))?;
                        return Err(Violation { check: Check::Power, raise });
                    }
                    slacks.push(s);
                }
                lines.extend(Self::line(Check::Power, j + 1, slacks.into_iter()));
            }

            if !self.req.inside.is_empty() {
                let g = Element::unit(d, j, p_power(self.p, w[j]));
                if self.req.inside.iter().any(|b| !b.contains(&g)) {
                    return Err(Violation { check: Check::Inside, raise: j });
                }
                lines.push(CertificateLine {
                    check: Check::Inside,
                    coordinate: j + 1,
                    monomials: 0,
                    min_slack: 0,
                });
            }
        }
        Ok(lines)
    }
}

/// Raises weights from `req.start` until every certificate check passes.
pub fn certify_floor(group: &Arc<GroupSpec>, p: u64, req: &FloorRequest) -> Result<CertifiedFloor> {
    let d = group.dim;
    if req.ambient.len() != d || req.start.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: req.ambient.len().min(req.start.len()) });
    }
    if close_grid(group, p, &req.ambient) != req.ambient {
        return Err(Error::FloorNotCertified("ambient grid is not closed".into()));
    }
    let checker = Checker {
        group,
        p,
        req,
        inv: lambda_at(group, &Rational::from_integer((-1).into())),
        power: req.power.map(|k| lambda_at(group, &p_power(p, -(k as i64)))),
    };
    let mut w: Vec<i64> = req.start.iter().zip(&req.ambient).map(|(s, a)| *s.max(a)).collect();
    for round in 0..FLOOR_RAISE_LIMIT {
        match checker.evaluate(&w) {
            Ok(certificate) => {
                let basis = grid_basis(group, p, &w)?;
                tracing::debug!(group = %group.id, p, ?w, rounds = round, "floor certified");
                return Ok(CertifiedFloor { p, ambient: req.ambient.clone(), weights: w, basis, certificate });
            }
            Err(v) if v.raise == usize::MAX => {
                return Err(Error::FloorNotCertified(format!("{:?} check has a monomial with no floor variable", v.check)));
            }
            Err(v) => w[v.raise] += 1,
        }
    }
    Err(Error::cap("floor weight raises", FLOOR_RAISE_LIMIT as u64, FLOOR_RAISE_LIMIT as u64))
}

/// Re-runs the checks on fixed weights (used for deepened floors).
pub fn recertify(group: &Arc<GroupSpec>, p: u64, req: &FloorRequest, weights: &[i64]) -> Result<CertifiedFloor> {
    let checker = Checker {
        group,
        p,
        req,
        inv: lambda_at(group, &Rational::from_integer((-1).into())),
        power: req.power.map(|k| lambda_at(group, &p_power(p, -(k as i64)))),
    };
    if weights.iter().zip(&req.ambient).any(|(w, a)| w < a) {
        return Err(Error::FloorNotCertified("floor weights below the ambient grid".into()));
    }
    match checker.evaluate(weights) {
        Ok(certificate) => Ok(CertifiedFloor {
            p,
            ambient: req.ambient.clone(),
            weights: weights.to_vec(),
            basis: grid_basis(group, p, weights)?,
            certificate,
        }),
        Err(v) => Err(Error::FloorNotCertified(format!("{:?} check fails at the given weights", v.check))),
    }
}
