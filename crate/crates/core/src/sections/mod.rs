//! Section counting on summand-center models via the monomial model.
//!
//! `π_*O_{P(V)}(N) = Sym^N V = ⊕_{|k|=N} O(Σ k_i a_i)`, and a monomial `x^k`
//! vanishes along the summand center `C_j` to order `Σ_{i≠j} k_i`, since the
//! ideal of `C_j` is generated by the other summands. So for
//! `D = xi·ξ + f·fiber − Σ e_j E_j` and a multiple `m` making `mD` integral,
//!
//! `f_*O_X(mD) = ⊕ O(Σ k_i a_i + m·f)` over `k ≥ 0`, `|k| = m·xi`,
//! `Σ_{i≠j} k_i ≥ m·e_j`,
//!
//! and `h⁰(X, mD) = Σ max(0, d + 1)` over that splitting (base `P¹`).

mod plane;

pub use plane::{plane_system_dim, HomogeneousPoly, PlanePoint};

use std::collections::{BTreeMap, HashMap};
use std::sync::{LazyLock, RwLock};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{anticanonical_class, DivisorClass, FamilyDescriptor};
use crate::intersect::top_intersection;
use crate::numeric::{
    binomial_transform_solve, factorial, from_bigint, from_biguint, int, interpolate, pow,
    serde_rational, to_integer, Polynomial, Rational,
};

/// Splitting type of a split bundle on `P¹`: degree ↦ multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SplittingType {
    pub degrees: BTreeMap<i64, u64>,
}

impl SplittingType {
    pub fn rank(&self) -> u64 {
        self.degrees.values().sum()
    }

    pub fn total_degree(&self) -> BigInt {
        self.degrees
            .iter()
            .map(|(&d, &m)| BigInt::from(d) * BigInt::from(m))
            .sum()
    }

    pub fn h0(&self) -> u64 {
        self.degrees
            .iter()
            .filter(|(&d, _)| d >= 0)
            .map(|(&d, &m)| (d as u64 + 1) * m)
            .sum()
    }

    /// Degrees with multiplicity, largest first.
    pub fn to_vec(&self) -> Vec<i64> {
        self.degrees
            .iter()
            .rev()
            .flat_map(|(&d, &m)| std::iter::repeat_n(d, m as usize))
            .collect()
    }
}

/// Leading Hilbert data of the fibers: `χ(q) = a0 q^n + a1 q^{n-1} + …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HilbertData {
    #[serde(with = "serde_rational")]
    pub a0: Rational,
    #[serde(with = "serde_rational")]
    pub a1: Rational,
    #[serde(with = "serde_rational")]
    pub mu: Rational,
    #[serde(with = "serde_rational")]
    pub volume: Rational,
    #[serde(skip)]
    pub polynomial: Polynomial,
    pub sample_q: Vec<u64>,
}

/// Scaled integral data for a class multiple: exponent total and per-center bounds.
struct Scaled {
    total: i64,
    twist: i64,
    /// `(summand index, max allowed exponent)`.
    caps: Vec<(usize, i64)>,
}

fn require_monomial_model(fam: &FamilyDescriptor) -> Result<()> {
    if !fam.all_summand_centers() {
        return Err(Error::UnsupportedModel(
            "section counting needs summand centers; curve centers have no monomial model".into(),
        ));
    }
    if fam.genus() != 0 {
        return Err(Error::UnsupportedModel(format!(
            "section counting is implemented over P¹ only (genus {})",
            fam.genus()
        )));
    }
    Ok(())
}

fn scaled(fam: &FamilyDescriptor, class: &DivisorClass, m: u64) -> Result<Scaled> {
    require_monomial_model(fam)?;
    fam.check_class(class)?;
    let mult = int(m as i64);
    let mc = class.scale(&mult);
    let as_i64 = |x: &Rational| {
        to_integer(x)
            .ok_or_else(|| Error::Scaling {
                multiplier: m.to_string(),
                class: class.to_string(),
            })?
            .to_i64()
            .ok_or_else(|| Error::InvalidArgument("class multiple out of range".into()))
    };
    let total = as_i64(&mc.xi)?;
    let twist = as_i64(&mc.f)?;
    let mut caps = Vec::with_capacity(fam.num_centers());
    for (j, e) in mc.e.iter().enumerate() {
        let order = as_i64(e)?;
        let idx = fam.center_summand(j).expect("checked summand centers");
        // Σ_{i≠j} k_i ≥ order  ⇔  k_idx ≤ total − order
        caps.push((idx, total - order.max(0)));
    }
    Ok(Scaled { total, twist, caps })
}

/// Calls `visit(k)` on every admissible exponent vector.
fn for_each_admissible(r: usize, s: &Scaled, mut visit: impl FnMut(&[i64])) {
    if s.total < 0 {
        return;
    }
    let mut cap = vec![s.total; r];
    for &(i, c) in &s.caps {
        cap[i] = cap[i].min(c);
    }
    if cap.iter().any(|&c| c < 0) {
        return;
    }
    let mut k = vec![0i64; r];
    fn rec(pos: usize, left: i64, cap: &[i64], k: &mut [i64], visit: &mut dyn FnMut(&[i64])) {
        let r = k.len();
        if pos == r - 1 {
            if left <= cap[pos] {
                k[pos] = left;
                visit(k);
            }
            return;
        }
        // the remaining slots can absorb at most Σ cap[pos+1..]
        let rest: i64 = cap[pos + 1..].iter().sum();
        let lo = (left - rest).max(0);
        let hi = left.min(cap[pos]);
        for v in lo..=hi {
            k[pos] = v;
            rec(pos + 1, left - v, cap, k, visit);
        }
    }
    rec(0, s.total, &cap, &mut k, &mut visit);
}

/// Splitting type of `f_*O_X(m·class)`, negative degrees included.
pub fn pushforward_splitting(fam: &FamilyDescriptor, class: &DivisorClass, m: u64) -> Result<SplittingType> {
    let s = scaled(fam, class, m)?;
    let mut degrees = BTreeMap::new();
    for_each_admissible(fam.rank(), &s, |k| {
        let d: i64 = k.iter().zip(&fam.twists).map(|(ki, ai)| ki * ai).sum::<i64>() + s.twist;
        *degrees.entry(d).or_insert(0) += 1;
    });
    Ok(SplittingType { degrees })
}

type CacheKey = (String, DivisorClass, u64);

static H0_CACHE: LazyLock<RwLock<HashMap<CacheKey, u64>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// `h⁰(X, m·class)`, memoized per process.
pub fn h0(fam: &FamilyDescriptor, class: &DivisorClass, m: u64) -> Result<u64> {
    let key = (fam.hash(), class.clone(), m);
    if let Some(&v) = H0_CACHE.read().expect("cache lock").get(&key) {
        return Ok(v);
    }
    let v = pushforward_splitting(fam, class, m)?.h0();
    H0_CACHE.write().expect("cache lock").insert(key, v);
    Ok(v)
}

/// Fiber section count `h⁰(X_t, q·class|_t)` = number of admissible monomials.
pub fn fiber_count(fam: &FamilyDescriptor, class: &DivisorClass, q: u64) -> Result<u64> {
    let s = scaled(fam, class, q)?;
    let mut count = 0u64;
    for_each_admissible(fam.rank(), &s, |_| count += 1);
    Ok(count)
}

/// Fits a polynomial of degree `< fit` on `xs[..fit]` and checks it on the rest.
fn fit_validated(points: &[(Rational, Rational)], fit: usize) -> Result<Polynomial> {
    let poly = interpolate(&points[..fit])?;
    for (x, y) in &points[fit..] {
        let got = poly.eval(x);
        if &got != y {
            return Err(Error::Fit(format!(
                "fitted {poly} predicts {got} at {x}, data has {y}"
            )));
        }
    }
    Ok(poly)
}

const VALIDATION_POINTS: usize = 3;

/// Fiber Hilbert data for `−K_{X/T}`.
pub fn fiber_hilbert(fam: &FamilyDescriptor) -> Result<HilbertData> {
    fiber_hilbert_for(fam, &anticanonical_class(fam), 1)
}

/// Fiber Hilbert data of `class`, sampled on `q = start .. start + n + 3`.
pub fn fiber_hilbert_for(fam: &FamilyDescriptor, class: &DivisorClass, start: u64) -> Result<HilbertData> {
    let n = fam.fiber_dim();
    let qs: Vec<u64> = (start..start + (n + 1 + VALIDATION_POINTS) as u64).collect();
    let points = qs
        .iter()
        .map(|&q| Ok((int(q as i64), int(fiber_count(fam, class, q)? as i64))))
        .collect::<Result<Vec<_>>>()?;
    let poly = fit_validated(&points, n + 1)?;
    let a0 = poly.coeff(n);
    let a1 = poly.coeff(n - 1);
    if a0.is_zero() {
        return Err(Error::Fit(format!(
            "fiber Hilbert polynomial {poly} has degree below {n}; class is not big on the fiber"
        )));
    }
    Ok(HilbertData {
        mu: int(2) * &a1 / &a0,
        volume: &a0 * from_biguint(&factorial(n as u64)),
        a0,
        a1,
        polynomial: poly,
        sample_q: qs,
    })
}

/// Result of a volume fit, with the sample progression that validated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VolumeFit {
    #[serde(with = "serde_rational")]
    pub volume: Rational,
    #[serde(skip)]
    pub polynomial: Polynomial,
    pub sample_m: Vec<u64>,
    /// Progressions tried before one validated.
    pub rejected: Vec<String>,
}

/// `vol(D) = (dim X)! · lim h⁰(mD)/m^{dim X}`, from an exact polynomial fit of
/// `h⁰` on an arithmetic progression of `m`, validated on three further points.
///
/// If validation fails (a quasi-polynomial period), the progression start is
/// pushed out and the step doubled, up to a fixed number of attempts.
pub fn volume_estimate(fam: &FamilyDescriptor, class: &DivisorClass) -> Result<VolumeFit> {
    require_monomial_model(fam)?;
    fam.check_class(class)?;
    let dim = fam.rank();
    let base_step = class_denominator(class);
    let mut rejected = Vec::new();
    let mut start = base_step;
    let mut step = base_step;
    for _ in 0..6 {
        let ms: Vec<u64> = (0..(dim + 1 + VALIDATION_POINTS) as u64)
            .map(|t| start + step * t)
            .collect();
        let points = ms
            .iter()
            .map(|&m| Ok((int(m as i64), int(h0(fam, class, m)? as i64))))
            .collect::<Result<Vec<_>>>()?;
        match fit_validated(&points, dim + 1) {
            Ok(poly) => {
                let lead = poly.coeff(dim);
                return Ok(VolumeFit {
                    volume: lead * from_biguint(&factorial(dim as u64)),
                    polynomial: poly,
                    sample_m: ms,
                    rejected,
                });
            }
            Err(e) => {
                rejected.push(format!("start {start}, step {step}: {e}"));
                start += step * (dim as u64 + 1);
                step *= 2;
            }
        }
    }
    Err(Error::Fit(format!(
        "h0 never matched a polynomial of degree {dim}: {}",
        rejected.join("; ")
    )))
}

fn class_denominator(class: &DivisorClass) -> u64 {
    use num_integer::Integer;
    std::iter::once(&class.xi)
        .chain(std::iter::once(&class.f))
        .chain(class.e.iter())
        .map(|x| x.denom().to_u64().expect("denominator fits in u64"))
        .fold(1u64, |acc, d| acc.lcm(&d))
}

/// Knudsen–Mumford data of `s·(−K_{X/T})` together with the identities it must satisfy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KMCoefficients {
    pub s: u64,
    /// `deg M_0, …, deg M_{n+1}` with `deg f_*O(qsL) = Σ deg M_i·C(q, i)`.
    #[serde(with = "serde_rational::vec")]
    pub m_degrees: Vec<Rational>,
    /// Degree of the Paul–Tian bundle `M_{n+1}^{n(n+1)+μ_{sL}} ⊗ M_n^{-2(n+1)}`.
    #[serde(with = "serde_rational")]
    pub lcm_degree: Rational,
    #[serde(with = "serde_rational")]
    pub mu_sl: Rational,
    #[serde(skip)]
    pub pushforward_degree: Polynomial,
    pub sample_q: Vec<u64>,
    pub checks: Vec<IdentityCheck>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    #[serde(with = "serde_rational")]
    pub lhs: Rational,
    #[serde(with = "serde_rational")]
    pub rhs: Rational,
    pub holds: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, lhs: Rational, rhs: Rational) -> Self {
        let holds = lhs == rhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            holds,
        }
    }
}

impl KMCoefficients {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Computes the Knudsen–Mumford expansion of `sL`, `L = −K_{X/T}`, without
/// failing on identity mismatches; see [`km_coefficients`] for the checked form.
///
/// `deg f_*O(qsL)` is the sum of all splitting degrees (negative ones
/// included). It is fitted as a polynomial in `q`, validated on extra points,
/// and re-expanded in the binomial basis `C(q, i)`.
pub fn km_expansion(fam: &FamilyDescriptor, s: u64) -> Result<KMCoefficients> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be positive".into()));
    }
    let n = fam.fiber_dim();
    let l = anticanonical_class(fam);
    let sl = l.scale(&int(s as i64));
    if !sl.is_integral() {
        return Err(Error::Scaling {
            multiplier: s.to_string(),
            class: l.to_string(),
        });
    }
    let qs: Vec<u64> = (1..=(n + 2 + VALIDATION_POINTS) as u64).collect();
    let points = qs
        .iter()
        .map(|&q| {
            let split = pushforward_splitting(fam, &sl, q)?;
            Ok((int(q as i64), from_bigint(split.total_degree())))
        })
        .collect::<Result<Vec<_>>>()?;
    let poly = fit_validated(&points, n + 2)?;
    let values: Vec<Rational> = (0..=(n + 1) as i64).map(|q| poly.eval(&int(q))).collect();
    let m_degrees = binomial_transform_solve(&values);

    let mu_sl = fiber_hilbert_for(fam, &sl, 1)?.mu;
    let n_r = int(n as i64);
    let m_top = m_degrees[n + 1].clone();
    let m_next = m_degrees[n].clone();
    let lcm_degree = (&n_r * (&n_r + int(1)) + &mu_sl) * &m_top - int(2) * (&n_r + int(1)) * &m_next;

    let cm = crate::intersect::cm_degree(fam);
    let s_r = int(s as i64);
    let r = fam.rank();
    let sl_power = top_intersection(fam, &vec![sl.clone(); r])?;
    let mut mixed = vec![sl.clone(); r];
    mixed[0] = l.clone();
    let k_dot = top_intersection(fam, &mixed)?;

    let checks = vec![
        IdentityCheck::new(
            "deg M_{n+1} = -s^{n+1} deg λ",
            m_top.clone(),
            -pow(&s_r, (n + 1) as u32) * &cm,
        ),
        IdentityCheck::new(
            "deg L_CM = s^n deg λ",
            lcm_degree.clone(),
            pow(&s_r, n as u32) * &cm,
        ),
        IdentityCheck::new(
            "[q^{n+1}] deg f_*O(qM) = M^{n+1}/(n+1)!",
            poly.coeff(n + 1),
            sl_power / from_biguint(&factorial(n as u64 + 1)),
        ),
        IdentityCheck::new(
            "[q^n] deg f_*O(qM) = -(K·M^n)/(2 n!)",
            poly.coeff(n),
            k_dot / (int(2) * from_biguint(&factorial(n as u64))),
        ),
    ];
    Ok(KMCoefficients {
        s,
        m_degrees,
        lcm_degree,
        mu_sl,
        pushforward_degree: poly,
        sample_q: qs,
        checks,
    })
}

/// [`km_expansion`], failing with a consistency error if any identity breaks.
pub fn km_coefficients(fam: &FamilyDescriptor, s: u64) -> Result<KMCoefficients> {
    let km = km_expansion(fam, s)?;
    if let Some(bad) = km.checks.iter().find(|c| !c.holds) {
        return Err(Error::Consistency(format!(
            "{}: {} != {}",
            bad.name, bad.lhs, bad.rhs
        )));
    }
    Ok(km)
}

/// `h¹ = 0` on `P¹`: every splitting degree is at least `-1`.
pub fn h1_vanishes(split: &SplittingType) -> bool {
    split.degrees.keys().next().is_none_or(|&d| d >= -1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{bundled, BlowupCenter};
    use crate::numeric::rat;

    fn fam(name: &str) -> FamilyDescriptor {
        bundled(name).unwrap()
    }

    /// Full-cube enumeration with the vanishing orders checked directly.
    fn brute_h0(fam: &FamilyDescriptor, class: &DivisorClass, m: i64) -> u64 {
        let r = fam.rank();
        let n = (&class.xi * int(m)).to_integer().to_i64().unwrap();
        if n < 0 {
            return 0;
        }
        let f = (&class.f * int(m)).to_integer().to_i64().unwrap();
        let orders: Vec<i64> = class.e.iter().map(|e| (e * int(m)).to_integer().to_i64().unwrap()).collect();
        let mut total = 0u64;
        let mut k = vec![0i64; r];
        loop {
            if k.iter().sum::<i64>() == n {
                let ok = (0..fam.num_centers()).all(|j| {
                    let idx = fam.center_summand(j).unwrap();
                    let order: i64 = (0..r).filter(|&i| i != idx).map(|i| k[i]).sum();
                    order >= orders[j]
                });
                if ok {
                    let d: i64 = k.iter().zip(&fam.twists).map(|(a, b)| a * b).sum::<i64>() + f;
                    total += (d + 1).max(0) as u64;
                }
            }
            let mut i = 0;
            loop {
                if i == r {
                    return total;
                }
                k[i] += 1;
                if k[i] <= n {
                    break;
                }
                k[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn positive_and_big_h0_at_one() {
        let fam = fam("positive_and_big");
        let k = anticanonical_class(&fam);
        // Σ_{i=m}^{2m} (3i-3m+1)(3m-i+1) at m = 1
        let closed: i64 = (1..=2).map(|i| (3 * i - 3 + 1) * (3 - i + 1)).sum();
        assert_eq!(closed, 11);
        assert_eq!(h0(&fam, &k, 1).unwrap(), 11);
        assert_eq!(brute_h0(&fam, &k, 1), 11);
    }

    #[test]
    fn positive_and_big_matches_closed_sum() {
        let fam = fam("positive_and_big");
        let k = anticanonical_class(&fam);
        for m in 1..=12i64 {
            let closed: i64 = (m..=2 * m).map(|i| (3 * i - 3 * m + 1) * (3 * m - i + 1)).sum();
            assert_eq!(h0(&fam, &k, m as u64).unwrap() as i64, closed, "m = {m}");
        }
    }

    #[test]
    fn not_nef_h0_equals_positive_and_big() {
        // the two extra centers only cap k2, k3 at 2m, which |k| = 3m, k1 >= m already forces
        let nn = fam("not_nef");
        let pb = fam("positive_and_big");
        for m in 1..=10 {
            let a = h0(&nn, &anticanonical_class(&nn), m).unwrap();
            let b = h0(&pb, &anticanonical_class(&pb), m).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, brute_h0(&nn, &anticanonical_class(&nn), m as i64));
        }
        assert_eq!(h0(&nn, &anticanonical_class(&nn), 1).unwrap(), 11);
    }

    #[test]
    fn closed_rule_matches_brute_force() {
        for fam in [fam("negative_degree"), fam("positive_and_big"), fam("not_nef"), fam("isotrivial_p2")] {
            let k = anticanonical_class(&fam);
            let classes = [k.clone(), k.plus_fibers(&int(-1)), k.plus_fibers(&int(2)), fam.fiber_class(), fam.xi_class()];
            for c in &classes {
                for m in 1..=8 {
                    assert_eq!(h0(&fam, c, m).unwrap(), brute_h0(&fam, c, m as i64), "{fam} {c} m={m}");
                }
            }
        }
    }

    #[test]
    fn zero_class_has_constants_only() {
        let fam = fam("not_nef");
        assert_eq!(h0(&fam, &fam.zero_class(), 3).unwrap(), 1);
        let split = pushforward_splitting(&fam, &fam.zero_class(), 2).unwrap();
        assert_eq!(split.to_vec(), vec![0]);
    }

    #[test]
    fn negative_degree_twisted_down() {
        // -K - f on negative_degree: brute-force value
        let fam = fam("negative_degree");
        let c = anticanonical_class(&fam).plus_fibers(&int(-1));
        let want = brute_h0(&fam, &c, 1);
        assert_eq!(h0(&fam, &c, 1).unwrap(), want);
        // degree 2 - 3k1, so only k1 = 0 contributes: four monomials of degree 2
        assert_eq!(want, 12);
    }

    #[test]
    fn splitting_of_sym2() {
        let fam = FamilyDescriptor::new(vec![-1, 1], vec![]).unwrap();
        let split = pushforward_splitting(&fam, &fam.xi_class(), 2).unwrap();
        assert_eq!(split.to_vec(), vec![2, 0, -2]);
    }

    #[test]
    fn splitting_not_nef_m1() {
        let fam = fam("not_nef");
        let split = pushforward_splitting(&fam, &anticanonical_class(&fam), 1).unwrap();
        assert_eq!(split.to_vec(), vec![3, 3, 0, 0, 0, -3, -3]);
        assert_eq!(split.h0(), 11);
    }

    #[test]
    fn o1_sections_pin_the_convention() {
        // h0(P(V), O(1)) = h0(V) = Σ max(0, a_i + 1)
        for twists in [vec![-2, 1, 1], vec![2, -1, -1], vec![3, 0, -4], vec![1, 1]] {
            let fam = FamilyDescriptor::new(twists.clone(), vec![]).unwrap();
            let want: u64 = twists.iter().map(|&a| (a + 1).max(0) as u64).sum();
            assert_eq!(h0(&fam, &fam.xi_class(), 1).unwrap(), want);
        }
    }

    #[test]
    fn curve_centers_are_unsupported() {
        let fam = fam("no_section_d1");
        let err = h0(&fam, &anticanonical_class(&fam), 1).unwrap_err();
        assert!(matches!(err, Error::UnsupportedModel(_)));
    }

    #[test]
    fn non_integral_multiple_is_rejected() {
        let fam = fam("not_nef");
        let half = anticanonical_class(&fam).scale(&rat(1, 2));
        assert!(matches!(h0(&fam, &half, 1), Err(Error::Scaling { .. })));
        assert!(h0(&fam, &half, 2).is_ok());
    }

    #[test]
    fn dp6_hilbert() {
        let data = fiber_hilbert(&fam("not_nef")).unwrap();
        assert_eq!(data.polynomial, Polynomial::new(vec![int(1), int(3), int(3)]));
        assert_eq!(data.volume, int(6));
        assert_eq!(data.mu, int(2));
        assert_eq!(fiber_count(&fam("not_nef"), &anticanonical_class(&fam("not_nef")), 1).unwrap(), 7);
    }

    #[test]
    fn projective_space_hilbert() {
        for r in 2..=5usize {
            let fam = FamilyDescriptor::new(vec![0; r], vec![]).unwrap();
            let n = (r - 1) as u64;
            let data = fiber_hilbert(&fam).unwrap();
            let want = from_biguint(&num_bigint::BigUint::from(r).pow(n as u32)) / from_biguint(&factorial(n));
            assert_eq!(data.a0, want);
            assert_eq!(data.mu, int(n as i64));
        }
    }

    #[test]
    fn volumes() {
        let pb = fam("positive_and_big");
        assert_eq!(volume_estimate(&pb, &anticanonical_class(&pb)).unwrap().volume, int(12));
        let nn = fam("not_nef");
        assert_eq!(volume_estimate(&nn, &anticanonical_class(&nn)).unwrap().volume, int(12));
        assert_eq!(volume_estimate(&nn, &nn.fiber_class()).unwrap().volume, int(0));
    }

    #[test]
    fn volume_handles_fractional_classes() {
        let pb = fam("positive_and_big");
        let half = anticanonical_class(&pb).scale(&rat(1, 2));
        // vol is homogeneous of degree 3
        assert_eq!(volume_estimate(&pb, &half).unwrap().volume, rat(12, 8));
    }

    #[test]
    fn km_identities_on_examples() {
        let km = km_coefficients(&fam("negative_degree"), 1).unwrap();
        assert_eq!(km.m_degrees[3], int(12));
        let km = km_coefficients(&fam("positive_and_big"), 1).unwrap();
        assert_eq!(km.lcm_degree, int(12));
        let km = km_coefficients(&fam("not_nef"), 1).unwrap();
        assert_eq!(km.m_degrees[3], int(0));
        assert_eq!(km.lcm_degree, int(0));
        for name in ["negative_degree", "positive_and_big", "not_nef", "isotrivial_p2"] {
            for s in 1..=3 {
                let km = km_expansion(&fam(name), s).unwrap();
                assert!(km.all_hold(), "{name} s={s}: {:?}", km.checks);
                assert_eq!(km.mu_sl, rat(2, s as i64));
            }
        }
    }

    #[test]
    fn km_binomial_sum_reproduces_degrees() {
        let fam = fam("negative_degree");
        let km = km_expansion(&fam, 2).unwrap();
        let sl = anticanonical_class(&fam).scale(&int(2));
        for q in 0..8u64 {
            let direct = if q == 0 {
                Rational::zero()
            } else {
                from_bigint(pushforward_splitting(&fam, &sl, q).unwrap().total_degree())
            };
            assert_eq!(crate::numeric::binomial_sum(&km.m_degrees, &int(q as i64)), direct);
        }
    }

    #[test]
    fn higher_rank_summand_model() {
        // r = 4 with one center: the identities still close
        let fam = FamilyDescriptor::new(vec![-1, 0, 0, 1], vec![BlowupCenter::summand(1)]).unwrap();
        let km = km_expansion(&fam, 1).unwrap();
        assert!(km.all_hold(), "{:?}", km.checks);
    }
}
