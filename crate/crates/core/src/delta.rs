//! Delta and alpha invariants on `(P^n, O(d))`, and the threshold arithmetic
//! built on them.
//!
//! Two divisorial valuations are modeled: order of vanishing along a
//! hyperplane (`A = 1`) and along the exceptional divisor of a point blow-up
//! (`A = n`). Both have closed-form filtrations, so `S_q` and `S` are exact.
//! On `P¹` every prime divisor is a point and `δ_q` itself is exact; in higher
//! dimension the ratios `A/S` are only upper bounds for `δ`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, from_biguint, int, parse_rational, pow, serde_rational, to_integer, Polynomial, Rational};

/// The pair `(P^n, O(d))`; the anticanonical polarization is `d = n + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolarizedModel {
    pub n: u32,
    #[serde(with = "serde_rational")]
    pub d: Rational,
}

impl PolarizedModel {
    pub fn new(n: u32, d: Rational) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("model dimension must be at least 1".into()));
        }
        if !d.is_positive() {
            return Err(Error::Validation(format!("polarization degree must be positive, got {d}")));
        }
        Ok(Self { n, d })
    }

    pub fn anticanonical(n: u32) -> Self {
        Self { n, d: int(n as i64 + 1) }
    }

    /// Parses `"P1:d=2"`, `"P3:d=-K"` or `"P2:d=3/2"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (space, deg) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected Pn:d=..., got {s:?}")))?;
        let n: u32 = space
            .trim()
            .strip_prefix('P')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected Pn, got {space:?}")))?;
        let deg = deg
            .trim()
            .strip_prefix("d=")
            .ok_or_else(|| Error::Parse(format!("expected d=..., got {deg:?}")))?;
        if deg == "-K" {
            return Self::new(n, int(n as i64 + 1));
        }
        Self::new(n, parse_rational(deg)?)
    }

    /// `h⁰(P^n, O(k)) = C(n + k, n)`, zero for negative `k`.
    fn h0(&self, k: i64) -> BigUint {
        if k < 0 {
            BigUint::zero()
        } else {
            binomial(self.n as u64 + k as u64, self.n as u64)
        }
    }

    fn level(&self, q: u64) -> Result<i64> {
        let qd = &self.d * int(q as i64);
        to_integer(&qd)
            .and_then(|v| i64::try_from(v).ok())
            .ok_or_else(|| Error::Scaling {
                multiplier: q.to_string(),
                class: format!("O({})", self.d),
            })
    }
}

impl fmt::Display for PolarizedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(P{}, O({}))", self.n, self.d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationKind {
    Hyperplane,
    PointBlowup,
}

impl std::str::FromStr for ValuationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperplane" => Ok(Self::Hyperplane),
            "point" | "point_blowup" | "point-blowup" => Ok(Self::PointBlowup),
            other => Err(Error::Parse(format!(
                "unknown valuation {other:?}; expected hyperplane or point_blowup"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValuationModel {
    pub kind: ValuationKind,
    #[serde(with = "serde_rational")]
    pub log_discrepancy: Rational,
}

impl ValuationModel {
    /// The valuation on a model of dimension `n`, with its log discrepancy.
    pub fn on(kind: ValuationKind, n: u32) -> Self {
        let log_discrepancy = match kind {
            ValuationKind::Hyperplane => Rational::one(),
            ValuationKind::PointBlowup => int(n as i64),
        };
        Self { kind, log_discrepancy }
    }
}

/// `dim F_i H⁰(qL)`, the sections with `v ≥ i`, at level `N = qd`.
pub fn filtration_dim(model: &PolarizedModel, kind: ValuationKind, level: i64, i: i64) -> BigUint {
    match kind {
        ValuationKind::Hyperplane => model.h0(level - i),
        // monomials of degree ≤ N in affine coordinates at the point, minus those of degree < i
        ValuationKind::PointBlowup => {
            if i > level {
                BigUint::zero()
            } else {
                model.h0(level) - model.h0(i - 1)
            }
        }
    }
}

/// `S_q(v) = (1/(q·h⁰(qL))) Σ_{i≥1} dim F_i`.
pub fn s_q(model: &PolarizedModel, kind: ValuationKind, q: u64) -> Result<Rational> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    let level = model.level(q)?;
    let sum: BigUint = (1..=level).map(|i| filtration_dim(model, kind, level, i)).sum();
    Ok(from_biguint(&sum) / (int(q as i64) * from_biguint(&model.h0(level))))
}

/// `vol(π*L − xE)` as a polynomial in `x`, valid on `[0, T]`.
pub fn volume_function(model: &PolarizedModel, kind: ValuationKind) -> Polynomial {
    let n = model.n;
    let x = Polynomial::var();
    match kind {
        ValuationKind::Hyperplane => (&Polynomial::constant(model.d.clone()) - &x).pow(n),
        ValuationKind::PointBlowup => &Polynomial::constant(pow(&model.d, n)) - &x.pow(n),
    }
}

/// `S(v) = (1/vol L) ∫_0^T vol(π*L − xE) dx`.
pub fn s_infinity(model: &PolarizedModel, kind: ValuationKind) -> Rational {
    let t = pseff_threshold(model, kind);
    volume_function(model, kind).integrate(&Rational::zero(), &t) / pow(&model.d, model.n)
}

/// `T(v)`: for both modeled valuations the extremal divisor is `d` times the
/// center (a hyperplane, or a hyperplane through the point), so `T = d` at every level.
pub fn pseff_threshold(model: &PolarizedModel, _kind: ValuationKind) -> Rational {
    model.d.clone()
}

/// `A(v)/S_q(v)` for `Some(q)`, `A(v)/S(v)` for `None`; an upper bound for `δ_q` resp. `δ`.
pub fn ratio_a_over_s(model: &PolarizedModel, kind: ValuationKind, q: Option<u64>) -> Result<Rational> {
    let v = ValuationModel::on(kind, model.n);
    let s = match q {
        Some(q) => s_q(model, kind, q)?,
        None => s_infinity(model, kind),
    };
    Ok(v.log_discrepancy / s)
}

/// Largest multiplicity at a point of a `q`-basis type divisor of `(P¹, O(d))`.
///
/// A basis adapted to the vanishing filtration at the point realizes every
/// order `0..=qd` once, and no basis does better.
pub fn max_basis_multiplicity_p1(d: u64, q: u64) -> Rational {
    let n = d * q;
    let orders: u64 = (0..=n).sum();
    int(orders as i64) / (int(q as i64) * int(n as i64 + 1))
}

/// `δ_q(P¹, O(d)) = 1 / max multiplicity`, since `lct` on a curve is `1/(max coefficient)`.
pub fn delta_q_p1(d: u64, q: u64) -> Result<Rational> {
    if d == 0 || q == 0 {
        return Err(Error::InvalidArgument("d and q must be positive".into()));
    }
    Ok(max_basis_multiplicity_p1(d, q).recip())
}

/// `α(P¹, O(d)) = 1/d`, attained by `d` times a point.
pub fn alpha_p1(d: u64) -> Result<Rational> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    Ok(int(d as i64).recip())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsCheck {
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// `δ − (n+1)/n·α`
    #[serde(with = "serde_rational")]
    pub lower_margin: Rational,
    /// `(n+1)·α − δ`
    #[serde(with = "serde_rational")]
    pub upper_margin: Rational,
}

impl BoundsCheck {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Checks `(n+1)/n · α ≤ δ ≤ (n+1) · α`.
pub fn alpha_delta_bounds_check(alpha: &Rational, delta: &Rational, n: u32) -> Result<BoundsCheck> {
    if !alpha.is_positive() || !delta.is_positive() || n == 0 {
        return Err(Error::InvalidArgument("alpha, delta and n must be positive".into()));
    }
    let n1 = int(n as i64 + 1);
    let lower_margin = delta - &n1 / int(n as i64) * alpha;
    let upper_margin = &n1 * alpha - delta;
    Ok(BoundsCheck {
        lower_holds: !lower_margin.is_negative(),
        upper_holds: !upper_margin.is_negative(),
        lower_margin,
        upper_margin,
    })
}

/// Lower bound for the lct of a product basis-type divisor: the least factor `δ_q`.
pub fn product_lct_bound(delta_q_values: &[Rational]) -> Result<Rational> {
    if delta_q_values.iter().any(|v| !v.is_positive()) {
        return Err(Error::InvalidArgument("delta values must be positive".into()));
    }
    delta_q_values
        .iter()
        .min()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("need at least one factor".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    KSemistable,
    UniformlyKStable,
    NotKSemistable,
    Inconclusive,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::KSemistable => "K-semistable",
            Self::UniformlyKStable => "uniformly K-stable",
            Self::NotKSemistable => "not K-semistable",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilityVerdict {
    pub classification: Stability,
    pub source: String,
}

/// Classifies from an exact `δ` if given, otherwise from `α`.
pub fn classify_stability(delta: Option<&Rational>, alpha: Option<&Rational>, n: u32) -> Result<StabilityVerdict> {
    let one = Rational::one();
    if let Some(delta) = delta {
        if !delta.is_positive() {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        let classification = if delta > &one {
            Stability::UniformlyKStable
        } else if delta == &one {
            Stability::KSemistable
        } else {
            Stability::NotKSemistable
        };
        return Ok(StabilityVerdict {
            classification,
            source: format!("delta = {delta}"),
        });
    }
    let Some(alpha) = alpha else {
        return Err(Error::InvalidArgument("need delta or alpha".into()));
    };
    if !alpha.is_positive() {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let n1 = int(n as i64 + 1);
    let upper = int(n as i64) / &n1;
    let classification = if alpha > &upper {
        Stability::UniformlyKStable
    } else if alpha == &upper {
        Stability::KSemistable
    } else if alpha < &n1.recip() {
        Stability::NotKSemistable
    } else {
        Stability::Inconclusive
    };
    Ok(StabilityVerdict {
        classification,
        source: format!("alpha = {alpha} against n/(n+1) = {upper} and 1/(n+1)"),
    })
}

/// Classification from an upper bound for `δ` such as `A(v)/S(v)`: only a
/// value below 1 is conclusive.
pub fn classify_from_upper_bound(bound: &Rational) -> StabilityVerdict {
    let classification = if bound < &Rational::one() {
        Stability::NotKSemistable
    } else {
        Stability::Inconclusive
    };
    StabilityVerdict {
        classification,
        source: format!("upper bound delta <= {bound}"),
    }
}

/// Coefficient `δ / ((δ − 1) v (n + 1))` of `f*λ` making `−K_{X/T} + c·f*λ` nef.
pub fn nef_threshold_coefficient(delta: &Rational, v: &Rational, n: u32) -> Result<Rational> {
    if delta <= &Rational::one() {
        return Err(Error::Hypothesis(format!(
            "the nef threshold needs uniformly K-stable fibers (delta > 1), got delta = {delta}; \
             for delta = 1 no threshold exists: -K + a·λ fails to be nef for every a \
             on the degree 6 del Pezzo family (see `nef-check` on not_nef)"
        )));
    }
    if !v.is_positive() {
        return Err(Error::InvalidArgument("fiber volume v must be positive".into()));
    }
    Ok(delta / ((delta - Rational::one()) * v * int(n as i64 + 1)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VolumeBoundCheck {
    pub fiber_bound_holds: bool,
    /// `2·dim·vol_F − vol_X`
    #[serde(with = "serde_rational")]
    pub fiber_margin: Rational,
    pub absolute_bound_holds: bool,
    /// `2·dim^dim − vol_X`
    #[serde(with = "serde_rational")]
    pub absolute_margin: Rational,
}

/// `vol(−K_X) ≤ 2·dim X·vol(−K_F)` and `vol(−K_X) ≤ 2·(dim X)^{dim X}`.
pub fn volume_bound_check(vol_x: &Rational, dim_x: u32, vol_f: &Rational) -> Result<VolumeBoundCheck> {
    if vol_x.is_negative() || vol_f.is_negative() || dim_x == 0 {
        return Err(Error::InvalidArgument("volumes must be nonnegative and dim positive".into()));
    }
    let dim = int(dim_x as i64);
    let fiber_margin = int(2) * &dim * vol_f - vol_x;
    let absolute_margin = int(2) * pow(&dim, dim_x) - vol_x;
    Ok(VolumeBoundCheck {
        fiber_bound_holds: !fiber_margin.is_negative(),
        fiber_margin,
        absolute_bound_holds: !absolute_margin.is_negative(),
        absolute_margin,
    })
}
