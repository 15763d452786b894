//! Linear systems of plane curves with assigned base points and a fixed component.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, from_biguint, int, pow, serde_rational, Rational};

/// A point of `P²` with exact homogeneous coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanePoint(#[serde(with = "serde_rational::vec")] pub Vec<Rational>);

impl PlanePoint {
    pub fn new(x: Rational, y: Rational, z: Rational) -> Result<Self> {
        if x.is_zero() && y.is_zero() && z.is_zero() {
            return Err(Error::InvalidArgument("(0:0:0) is not a point of P²".into()));
        }
        Ok(Self(vec![x, y, z]))
    }

    pub fn ints(x: i64, y: i64, z: i64) -> Result<Self> {
        Self::new(int(x), int(y), int(z))
    }

    /// `(1:0:0), (0:1:0), (0:0:1), (1:1:1)`: four points, no three collinear.
    pub fn standard_frame() -> Vec<Self> {
        [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]
            .into_iter()
            .map(|(x, y, z)| Self::ints(x, y, z).expect("nonzero"))
            .collect()
    }
}

/// A homogeneous polynomial in `x, y, z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneousPoly {
    degree: u32,
    terms: BTreeMap<[u32; 3], Rational>,
}

impl HomogeneousPoly {
    pub fn new(degree: u32, terms: impl IntoIterator<Item = ([u32; 3], Rational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (exp, c) in terms {
            if exp.iter().sum::<u32>() != degree {
                return Err(Error::InvalidArgument(format!(
                    "monomial {exp:?} is not of degree {degree}"
                )));
            }
            let slot: &mut Rational = map.entry(exp).or_insert_with(Rational::zero);
            *slot += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self { degree, terms: map })
    }

    pub fn monomial(exp: [u32; 3]) -> Self {
        Self {
            degree: exp.iter().sum(),
            terms: BTreeMap::from([(exp, Rational::one())]),
        }
    }

    /// `x^d + y^d + z^d`: smooth, and nonzero on the standard frame.
    pub fn fermat(d: u32) -> Self {
        Self::new(d, [[d, 0, 0], [0, d, 0], [0, 0, d]].map(|e| (e, Rational::one()))).expect("homogeneous")
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<[u32; 3], Rational> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let e = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                *terms.entry(e).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self {
            degree: self.degree + other.degree,
            terms,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::monomial([0, 0, 0]);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, p: &PlanePoint) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| c * pow(&p.0[0], e[0]) * pow(&p.0[1], e[1]) * pow(&p.0[2], e[2]))
            .sum()
    }

    /// Taylor coefficients of order `< m` at `p` in the affine chart where
    /// `p` has a nonzero coordinate; they all vanish iff `mult_p ≥ m`.
    fn local_jet(&self, p: &PlanePoint, m: u32) -> Vec<Rational> {
        let c = p.0.iter().position(|v| !v.is_zero()).expect("nonzero point");
        let base: Vec<Rational> = p.0.iter().map(|v| v / &p.0[c]).collect();
        let others: Vec<usize> = (0..3).filter(|&i| i != c).collect();
        // coefficient of u^i v^j, i + j < m
        let mut jet = BTreeMap::new();
        for (e, coeff) in &self.terms {
            let (a, b) = (others[0], others[1]);
            for i in 0..m.min(e[a] + 1) {
                let ca = from_biguint(&binomial(e[a] as u64, i as u64)) * pow(&base[a], e[a] - i);
                if ca.is_zero() {
                    continue;
                }
                for j in 0..(m - i).min(e[b] + 1) {
                    let cb = from_biguint(&binomial(e[b] as u64, j as u64)) * pow(&base[b], e[b] - j);
                    let slot: &mut Rational = jet.entry((i, j)).or_insert_with(Rational::zero);
                    *slot += coeff * &ca * cb;
                }
            }
        }
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m - i {
                out.push(jet.get(&(i, j)).cloned().unwrap_or_else(Rational::zero));
            }
        }
        out
    }
}

fn monomials_of_degree(d: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in (0..=d).rev() {
        for b in (0..=d - a).rev() {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

/// Rank of a dense rational matrix by Gaussian elimination.
fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        let inv = rows[r][c].recip();
        let pivot_row: Vec<Rational> = rows[r].iter().map(|v| v * &inv).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let factor = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &factor * y;
                }
            }
        }
        rows[r] = pivot_row;
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Dimension of the space of degree-`degree` forms `F` with `mult_{p_i} F ≥ m_i`
/// and `divisor^k | F`.
///
/// The fixed component is factored out first: `F = divisor^k · G` with `G`
/// ranging over forms of the residual degree, and the point conditions are
/// imposed on `F` as linear conditions on the coefficients of `G`.
pub fn plane_system_dim(
    degree: u32,
    points: &[(PlanePoint, u32)],
    divisor: Option<(&HomogeneousPoly, u32)>,
) -> Result<u64> {
    let fixed = match divisor {
        Some((poly, k)) => {
            if poly.is_zero() {
                return Err(Error::InvalidArgument("divisor polynomial is zero".into()));
            }
            poly.pow(k)
        }
        None => HomogeneousPoly::monomial([0, 0, 0]),
    };
    let Some(residual) = degree.checked_sub(fixed.degree()) else {
        return Ok(0);
    };
    let basis = monomials_of_degree(residual);
    // column j = jet of fixed·x^{basis[j]} at every point
    let columns: Vec<Vec<Rational>> = basis
        .iter()
        .map(|&e| {
            let f = fixed.mul(&HomogeneousPoly::monomial(e));
            points.iter().flat_map(|(p, m)| f.local_jet(p, *m)).collect()
        })
        .collect();
    let conditions = columns.first().map_or(0, Vec::len);
    let rows: Vec<Vec<Rational>> = (0..conditions)
        .map(|i| columns.iter().map(|col| col[i].clone()).collect())
        .collect();
    Ok((basis.len() - rank(rows)) as u64)
}
