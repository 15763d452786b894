//! Model families `X = Bl_{C_1..C_k} P(V) → P¹` with `V = ⊕ O(a_i)` split.
//!
//! `P(V)` parametrizes rank-one quotients: `O(1)` restricted to the section
//! cut out by `V → O(a_j)` has degree `a_j`, and over a curve base the
//! Grothendieck relation reads `ξ^r = deg V · ξ^{r-1}·f`.
//!
//! Descriptors are read from JSON of the form
//!
//! ```json
//! {"base":{"genus":0},"twists":[-2,1,1],"centers":[{"type":"summand","index":1}]}
//! ```
//!
//! with curve centers written `{"type":"curve","xi_degree":d,"normal_degree":3d}`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::{int, serde_rational, Rational};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Base {
    pub genus: u32,
}

/// A blow-up center, always a section of the base curve.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BlowupCenter {
    /// The section cut out by the quotient onto the `index`-th summand (1-based).
    Summand { index: usize },
    /// A section given only by its intersection data.
    Curve {
        xi_degree: i64,
        normal_degree: i64,
        /// Degree of the center over the base; only sections (1) are accepted.
        #[serde(default = "one_usize", skip_serializing_if = "is_one")]
        base_degree: usize,
    },
}

fn one_usize() -> usize {
    1
}

fn is_one(x: &usize) -> bool {
    *x == 1
}

impl BlowupCenter {
    pub fn summand(index: usize) -> Self {
        Self::Summand { index }
    }

    pub fn curve(xi_degree: i64, normal_degree: i64) -> Self {
        Self::Curve {
            xi_degree,
            normal_degree,
            base_degree: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub base: Base,
    pub twists: Vec<i64>,
    #[serde(default)]
    pub centers: Vec<BlowupCenter>,
}

impl FamilyDescriptor {
    /// Builds and validates a genus-zero descriptor.
    pub fn new(twists: Vec<i64>, centers: Vec<BlowupCenter>) -> Result<Self> {
        let fam = Self {
            name: None,
            base: Base { genus: 0 },
            twists,
            centers,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fam: Self = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!(
                "line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })?;
        fam.validate()?;
        Ok(fam)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        if r < 2 {
            return Err(Error::Validation(format!(
                "twists: rank must be at least 2, got {r}"
            )));
        }
        if !self.centers.is_empty() && r < 3 {
            return Err(Error::Validation(
                "centers: blowing up a section needs rank at least 3".into(),
            ));
        }
        let mut seen = vec![false; r];
        for (pos, c) in self.centers.iter().enumerate() {
            match *c {
                BlowupCenter::Summand { index } => {
                    if index == 0 || index > r {
                        return Err(Error::Validation(format!(
                            "centers[{pos}].index: {index} is outside 1..={r}"
                        )));
                    }
                    if seen[index - 1] {
                        return Err(Error::Validation(format!(
                            "centers[{pos}].index: summand {index} is blown up twice"
                        )));
                    }
                    seen[index - 1] = true;
                }
                BlowupCenter::Curve { base_degree, .. } => {
                    if base_degree != 1 {
                        return Err(Error::Validation(format!(
                            "centers[{pos}].base_degree: only sections of the base are supported, got degree {base_degree}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Rank `r` of `V`; the fiber dimension is `r - 1`.
    pub fn rank(&self) -> usize {
        self.twists.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.rank() - 1
    }

    pub fn deg_v(&self) -> i64 {
        self.twists.iter().sum()
    }

    pub fn genus(&self) -> u32 {
        self.base.genus
    }

    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn all_summand_centers(&self) -> bool {
        self.centers
            .iter()
            .all(|c| matches!(c, BlowupCenter::Summand { .. }))
    }

    /// `ξ·C_j`.
    pub fn center_xi_degree(&self, j: usize) -> i64 {
        match self.centers[j] {
            BlowupCenter::Summand { index } => self.twists[index - 1],
            BlowupCenter::Curve { xi_degree, .. } => xi_degree,
        }
    }

    /// `deg N_{C_j/P(V)}`.
    pub fn center_normal_degree(&self, j: usize) -> i64 {
        match self.centers[j] {
            BlowupCenter::Summand { index } => {
                self.rank() as i64 * self.twists[index - 1] - self.deg_v()
            }
            BlowupCenter::Curve { normal_degree, .. } => normal_degree,
        }
    }

    /// `deg W_j = -deg N_{C_j}`, where `E_j = P(W_j)` and `O_{E_j}(-E_j) = O_{P(W_j)}(1)`.
    pub fn center_w_degree(&self, j: usize) -> i64 {
        -self.center_normal_degree(j)
    }

    /// Summand degrees of `W_j` for a summand center: `a_i - a_j` for `i ≠ j`.
    pub fn center_w_splitting(&self, j: usize) -> Option<Vec<i64>> {
        match self.centers[j] {
            BlowupCenter::Summand { index } => {
                let aj = self.twists[index - 1];
                Some(
                    self.twists
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != index - 1)
                        .map(|(_, &ai)| ai - aj)
                        .collect(),
                )
            }
            BlowupCenter::Curve { .. } => None,
        }
    }

    /// 0-based summand index of a summand center.
    pub fn center_summand(&self, j: usize) -> Option<usize> {
        match self.centers[j] {
            BlowupCenter::Summand { index } => Some(index - 1),
            BlowupCenter::Curve { .. } => None,
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let canonical = Self {
            name: None,
            ..self.clone()
        };
        hex::encode(Sha256::digest(canonical.to_json().as_bytes()))
    }

    /// The zero class with the right number of exceptional slots.
    pub fn zero_class(&self) -> DivisorClass {
        DivisorClass::new(Rational::zero(), Rational::zero(), vec![Rational::zero(); self.num_centers()])
    }

    /// The pulled-back fiber class `π*f`.
    pub fn fiber_class(&self) -> DivisorClass {
        DivisorClass::new(Rational::zero(), Rational::one(), vec![Rational::zero(); self.num_centers()])
    }

    /// `π*ξ`.
    pub fn xi_class(&self) -> DivisorClass {
        DivisorClass::new(Rational::one(), Rational::zero(), vec![Rational::zero(); self.num_centers()])
    }

    /// `E_j` as a class (stored coefficient `-1`).
    pub fn exceptional_class(&self, j: usize) -> DivisorClass {
        let mut e = vec![Rational::zero(); self.num_centers()];
        e[j] = -Rational::one();
        DivisorClass::new(Rational::zero(), Rational::zero(), e)
    }

    pub fn check_class(&self, class: &DivisorClass) -> Result<()> {
        if class.e.len() != self.num_centers() {
            return Err(Error::InvalidArgument(format!(
                "class has {} exceptional coefficients but the family has {} centers",
                class.e.len(),
                self.num_centers()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for FamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            write!(f, "{name}: ")?;
        }
        write!(f, "P(")?;
        for (i, a) in self.twists.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "O({a})")?;
        }
        write!(f, ")")?;
        if !self.centers.is_empty() {
            write!(f, " blown up along {} section(s)", self.centers.len())?;
        }
        Ok(())
    }
}

/// `xi·π*ξ + f·π*fiber − Σ e_j·E_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DivisorClass {
    #[serde(with = "serde_rational")]
    pub xi: Rational,
    #[serde(with = "serde_rational")]
    pub f: Rational,
    #[serde(with = "serde_rational::vec")]
    pub e: Vec<Rational>,
}

impl DivisorClass {
    pub fn new(xi: Rational, f: Rational, e: Vec<Rational>) -> Self {
        Self { xi, f, e }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            xi: &self.xi * c,
            f: &self.f * c,
            e: self.e.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.e.len(), other.e.len(), "classes on different models");
        Self {
            xi: &self.xi + &other.xi,
            f: &self.f + &other.f,
            e: self.e.iter().zip(&other.e).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn plus_fibers(&self, a: &Rational) -> Self {
        Self {
            f: &self.f + a,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.xi.is_zero() && self.f.is_zero() && self.e.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.xi.is_integer() && self.f.is_integer() && self.e.iter().all(|x| x.is_integer())
    }

    /// Parses `"xi,f,e1,...,ek"`; also accepts the shorthands `-K` and `fiber`.
    pub fn parse(s: &str, fam: &FamilyDescriptor) -> Result<Self> {
        match s.trim() {
            "-K" | "antican" | "anticanonical" => return Ok(anticanonical_class(fam)),
            "fiber" | "f" => return Ok(fam.fiber_class()),
            _ => {}
        }
        let parts = s
            .split(',')
            .map(crate::numeric::parse_rational)
            .collect::<Result<Vec<_>>>()?;
        if parts.len() != 2 + fam.num_centers() {
            return Err(Error::Parse(format!(
                "class {s:?}: expected xi,f followed by {} exceptional coefficients",
                fam.num_centers()
            )));
        }
        let mut it = parts.into_iter();
        let xi = it.next().unwrap();
        let f = it.next().unwrap();
        Ok(Self::new(xi, f, it.collect()))
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(Rational, String)> = vec![
            (self.xi.clone(), "ξ".into()),
            (self.f.clone(), "f".into()),
        ];
        for (j, e) in self.e.iter().enumerate() {
            terms.push((-e, format!("E{}", j + 1)));
        }
        let mut first = true;
        for (c, name) in terms {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if mag.is_one() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{mag}{name}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `−K_{X/T} = π*(rξ − deg V·f) − (r−2)·ΣE_j`.
///
/// The relative anticanonical class of `P(V) → T` is `rξ − deg V·f`, and a
/// section has codimension `r − 1` in `P(V)`, so each exceptional divisor
/// enters with discrepancy `r − 2`.
pub fn anticanonical_class(fam: &FamilyDescriptor) -> DivisorClass {
    let r = fam.rank() as i64;
    DivisorClass::new(
        int(r),
        int(-fam.deg_v()),
        vec![int(r - 2); fam.num_centers()],
    )
}

/// Base change along a degree-`e` cover of `P¹`: every degree scales by `e`.
pub fn pullback_cover(fam: &FamilyDescriptor, e: u32) -> FamilyDescriptor {
    let e = i64::from(e);
    FamilyDescriptor {
        name: fam.name.as_ref().map(|n| format!("{n} (cover of degree {e})")),
        base: fam.base.clone(),
        twists: fam.twists.iter().map(|a| a * e).collect(),
        centers: fam
            .centers
            .iter()
            .map(|c| match *c {
                BlowupCenter::Summand { index } => BlowupCenter::Summand { index },
                BlowupCenter::Curve {
                    xi_degree,
                    normal_degree,
                    base_degree,
                } => BlowupCenter::Curve {
                    xi_degree: xi_degree * e,
                    normal_degree: normal_degree * e,
                    base_degree,
                },
            })
            .collect(),
    }
}

/// Descriptors shipped with the crate, as `(name, json)`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("negative_degree", include_str!("../descriptors/negative_degree.json")),
    ("positive_and_big", include_str!("../descriptors/positive_and_big.json")),
    ("not_nef", include_str!("../descriptors/not_nef.json")),
    ("no_section_d1", include_str!("../descriptors/no_section_d1.json")),
    ("no_section_d2", include_str!("../descriptors/no_section_d2.json")),
    ("no_section_d3", include_str!("../descriptors/no_section_d3.json")),
    ("no_section_d4", include_str!("../descriptors/no_section_d4.json")),
    ("isotrivial_p2", include_str!("../descriptors/isotrivial_p2.json")),
];

pub fn bundled(name: &str) -> Option<FamilyDescriptor> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(n, text)| {
        FamilyDescriptor::from_json(text)
            .unwrap_or_else(|e| panic!("bundled descriptor {n} is invalid: {e}"))
    })
}

pub fn all_bundled() -> Vec<FamilyDescriptor> {
    BUNDLED.iter().map(|(n, _)| bundled(n).unwrap()).collect()
}
