//! Structure polynomials of the full lower unitriangular group `U_n`,
//! read off from symbolic matrix products. Coordinates are the
//! below-diagonal entries, ordered from the most central corner outwards.
//! Used to produce the shipped `u4` catalog entry and to re-check `heis3`.

use num_traits::One;

use crate::error::Result;
use crate::malcev::GroupSpec;
use crate::poly::Poly;
use crate::rational::Rational;

type PolyMatrix = Vec<Vec<Poly>>;

/// Entries `(row, col)` (0-based, row > col) ordered by distance from
/// the diagonal (largest first), ties broken by larger row first.
pub fn coordinate_order(n: usize) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    v.sort_by(|x, y| (y.0 - y.1).cmp(&(x.0 - x.1)).then(y.0.cmp(&x.0)));
    v
}

fn identity(n: usize, nvars: usize) -> PolyMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Poly::constant(nvars, Rational::one()) } else { Poly::zero(nvars) })
                .collect()
        })
        .collect()
}

fn mat_mul(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let n = a.len();
    let nv = a[0][0].nvars();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Poly::zero(nv), |acc, k| acc.add(&a[i][k].mul(&b[k][j]))))
                .collect()
        })
        .collect()
}

fn mat_add_scaled(a: &PolyMatrix, b: &PolyMatrix, c: &Poly) -> PolyMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(&y.mul(c))).collect())
        .collect()
}

/// Nilpotent part `N = A - I` with entries the variables starting at `offset`.
fn nilpotent(n: usize, order: &[(usize, usize)], nvars: usize, offset: usize) -> PolyMatrix {
    let mut m: PolyMatrix = (0..n).map(|_| (0..n).map(|_| Poly::zero(nvars)).collect()).collect();
    for (l, &(i, j)) in order.iter().enumerate() {
        m[i][j] = Poly::var(nvars, offset + l);
    }
    m
}

/// `Σ_m c_m N^m` for `m < n`.
fn series(n_mat: &PolyMatrix, coeffs: &[Poly]) -> PolyMatrix {
    let n = n_mat.len();
    let nv = n_mat[0][0].nvars();
    let mut acc: PolyMatrix = (0..n).map(|_| (0..n).map(|_| Poly::zero(nv)).collect()).collect();
    let mut power = identity(n, nv);
    for c in coeffs {
        acc = mat_add_scaled(&acc, &power, c);
        power = mat_mul(&power, n_mat);
    }
    acc
}

fn read(m: &PolyMatrix, order: &[(usize, usize)]) -> Vec<Poly> {
    order.iter().map(|&(i, j)| m[i][j].clone()).collect()
}

/// Binomial polynomial `C(k, m)` in the variable `kvar`.
fn binomial_poly(nvars: usize, kvar: usize, m: usize) -> Poly {
    let mut p = Poly::constant(nvars, Rational::one());
    for i in 0..m {
        let term = Poly::var(nvars, kvar).sub(&Poly::constant(nvars, Rational::from_integer((i as i64).into())));
        p = p.mul(&term).scale(&Rational::new(1.into(), ((i + 1) as i64).into()));
    }
    p
}

pub fn unitriangular_group(n: usize, id: &str) -> Result<GroupSpec> {
    let order = coordinate_order(n);
    let d = order.len();
    let pv = 2 * d;

    let one_p = Poly::constant(pv, Rational::one());
    let a = mat_add_scaled(&identity(n, pv), &nilpotent(n, &order, pv, 0), &one_p);
    let b = mat_add_scaled(&identity(n, pv), &nilpotent(n, &order, pv, d), &one_p);
    let mu = read(&mat_mul(&a, &b), &order);

    let signs: Vec<Poly> = (0..n)
        .map(|m| Poly::constant(pv, Rational::from_integer(if m % 2 == 0 { 1.into() } else { (-1).into() })))
        .collect();
    let a_inv = series(&nilpotent(n, &order, pv, 0), &signs);
    let b_inv = series(&nilpotent(n, &order, pv, d), &signs);
    let comm = mat_mul(&mat_mul(&mat_mul(&a_inv, &b_inv), &a), &b);
    let kap = read(&comm, &order);

    let lv = d + 1;
    let binoms: Vec<Poly> = (0..n).map(|m| binomial_poly(lv, d, m)).collect();
    let lam = read(&series(&nilpotent(n, &order, lv, 0), &binoms), &order);

    let cv = d;
    let one_c = Poly::constant(cv, Rational::one());
    let embed = mat_add_scaled(&identity(n, cv), &nilpotent(n, &order, cv, 0), &one_c);

    let entries: Vec<String> = order.iter().map(|(i, j)| format!("({},{})", i + 1, j + 1)).collect();
    GroupSpec::new(
        id,
        format!(
            "lower unitriangular {n}x{n} integer matrices; coordinates are the entries {}",
            entries.join(", ")
        ),
        d,
        n - 1,
        mu,
        lam,
        kap,
        embed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    #[test]
    fn order_for_three_by_three_matches_heisenberg_layout() {
        assert_eq!(coordinate_order(3), vec![(2, 0), (2, 1), (1, 0)]);
        assert_eq!(coordinate_order(4)[0], (3, 0));
    }

    #[test]
    fn derived_u3_equals_shipped_heisenberg() {
        let derived = unitriangular_group(3, "heis3").unwrap();
        let shipped = Catalog::builtin().get("heis3").unwrap();
        assert_eq!(derived.mu, shipped.mu);
        assert_eq!(derived.lam, shipped.lam);
        assert_eq!(derived.kap, shipped.kap);
        assert_eq!(derived.embed, shipped.embed);
    }

    #[test]
    fn derived_u4_equals_shipped_u4() {
        let derived = unitriangular_group(4, "u4").unwrap();
        let shipped = Catalog::builtin().get("u4").unwrap();
        assert_eq!(derived.mu, shipped.mu);
        assert_eq!(derived.lam, shipped.lam);
        assert_eq!(derived.kap, shipped.kap);
        assert_eq!(derived.embed, shipped.embed);
        assert_eq!((shipped.dim, shipped.class), (6, 3));
    }
}
