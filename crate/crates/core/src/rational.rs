//! Exact rational helpers: p-adic valuations, rational gcds with Bézout
//! coefficients, and the fraction text format used by every file schema.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact `p^e` for any integer `e`.
pub fn p_power(p: u64, e: i64) -> Rational {
    let base = BigInt::from(p);
    let mag = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2u64;
    while q * q <= p {
        if p.is_multiple_of(q) {
            return false;
        }
        q += 1;
    }
    true
}

pub fn ensure_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

fn int_valuation(n: &BigInt, p: &BigInt) -> i64 {
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of `q`; `None` stands for +infinity (q = 0).
pub fn vp(q: &Rational, p: u64) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    Some(int_valuation(q.numer(), &pb) - int_valuation(q.denom(), &pb))
}

/// True when the reduced denominator of `q` is a power of `p`.
pub fn is_p_local(q: &Rational, p: u64) -> bool {
    let pb = BigInt::from(p);
    let mut d = q.denom().clone();
    while !d.is_one() {
        let (quo, r) = d.div_rem(&pb);
        if !r.is_zero() {
            return false;
        }
        d = quo;
    }
    true
}

/// If `q = ±p^e` exactly, returns `e`.
pub fn signed_p_power_exponent(q: &Rational, p: u64) -> Option<i64> {
    let e = vp(q, p)?;
    if q.abs() == p_power(p, e) {
        Some(e)
    } else {
        None
    }
}

/// Returns `(g, x, y)` with `g = x·u + y·v > 0` generating the additive
/// group `uZ + vZ`. Both inputs must not be zero simultaneously.
pub fn rational_bezout(u: &Rational, v: &Rational) -> (Rational, BigInt, BigInt) {
    let den = u.denom().lcm(v.denom());
    let uu = u.numer() * (&den / u.denom());
    let vv = v.numer() * (&den / v.denom());
    let ext = uu.extended_gcd(&vv);
    let (mut g, mut x, mut y) = (ext.gcd, ext.x, ext.y);
    if g.is_negative() {
        g = -g;
        x = -x;
        y = -y;
    }
    (Rational::new(g, den), x, y)
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

pub fn floor_int(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

/// `q mod m` in `[0, m)` for positive `m`.
pub fn rem_euclid(q: &Rational, m: &Rational) -> Rational {
    let t = floor_int(&(q / m));
    q - m * Rational::from_integer(t)
}

pub fn to_i64(n: &BigInt) -> Option<i64> {
    n.to_i64()
}

/// `n mod p^k` for a p-integral rational, using modular inverses for
/// denominators prime to p.
pub fn residue_mod(q: &Rational, modulus: u64) -> Option<u64> {
    let m = BigInt::from(modulus);
    let den = q.denom().mod_floor(&m);
    let inv = mod_inverse(&den, &m)?;
    let num = q.numer().mod_floor(&m);
    (num * inv).mod_floor(&m).to_u64()
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let ext = a.extended_gcd(m);
    if ext.gcd.is_one() {
        Some(ext.x.mod_floor(m))
    } else {
        None
    }
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Serde adapter storing a rational as its `"n/d"` string.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer, ser::SerializeSeq};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format_rational(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuations() {
        assert_eq!(vp(&rat(12), 2), Some(2));
        assert_eq!(vp(&frac(2, 9), 3), Some(-2));
        assert_eq!(vp(&rat(0), 5), None);
        assert_eq!(vp(&frac(-5, 7), 5), Some(1));
    }

    #[test]
    fn bezout_on_rationals() {
        let (g, x, y) = rational_bezout(&frac(1, 2), &frac(1, 3));
        assert_eq!(g, frac(1, 6));
        assert_eq!(frac(1, 2) * Rational::from_integer(x) + frac(1, 3) * Rational::from_integer(y), g);
        let (g, _, _) = rational_bezout(&rat(-4), &rat(6));
        assert_eq!(g, rat(2));
        let (g, x, _) = rational_bezout(&rat(-3), &rat(0));
        assert_eq!(g, rat(3));
        assert_eq!(x, BigInt::from(-1));
    }

    #[test]
    fn p_power_detection() {
        assert_eq!(signed_p_power_exponent(&frac(-1, 8), 2), Some(-3));
        assert_eq!(signed_p_power_exponent(&rat(6), 2), None);
        assert!(is_p_local(&frac(3, 16), 2));
        assert!(!is_p_local(&frac(1, 6), 2));
    }

    #[test]
    fn residues() {
        assert_eq!(residue_mod(&frac(1, 3), 8), Some(3));
        assert_eq!(residue_mod(&frac(-1, 1), 9), Some(8));
        assert_eq!(residue_mod(&frac(1, 2), 4), None);
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "-7", "3/4", "-1/8"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }
}
