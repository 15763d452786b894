//! Top intersection numbers on the model `X`, the CM degree, fiber
//! intersection numbers, and a one-sided nef test.
//!
//! Products are expanded multilinearly into monomials `π*ξ^a · π*f^b · E_j^k`
//! with `a + b + k = r = dim X`, and each monomial is evaluated by closed
//! rules valid over a curve base with disjoint section centers:
//!
//! | monomial                  | value                          |
//! |---------------------------|--------------------------------|
//! | `ξ^r`                     | `deg V`                        |
//! | `ξ^{r-1}·f`               | `1`                            |
//! | `f^b`, `b ≥ 2`            | `0`                            |
//! | `E_j^k`, `1 ≤ k ≤ r-2`    | `0`                            |
//! | `ξ·E_j^{r-1}`             | `(-1)^r · ξ·C_j`               |
//! | `f·E_j^{r-1}`             | `(-1)^r`                       |
//! | `E_j^r`                   | `(-1)^{r-1} · deg W_j`         |
//! | `E_i·E_j`, `i ≠ j`        | `0`                            |

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{anticanonical_class, DivisorClass, FamilyDescriptor};
use crate::numeric::{int, serde_rational, Rational};

/// `π*ξ^xi · π*f^f · E_center^exc`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Monomial {
    pub xi: u32,
    pub f: u32,
    /// `(center index, power)`, absent when no exceptional factor appears.
    pub exc: Option<(usize, u32)>,
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut push = |name: String, p: u32| match p {
            0 => {}
            1 => parts.push(name),
            _ => parts.push(format!("{name}^{p}")),
        };
        push("ξ".into(), self.xi);
        push("f".into(), self.f);
        if let Some((j, k)) = self.exc {
            push(format!("E{}", j + 1), k);
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

/// One line of a multilinear expansion: `coefficient × value(monomial)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub monomial: Monomial,
    #[serde(with = "serde_rational")]
    pub coefficient: Rational,
    #[serde(with = "serde_rational")]
    pub value: Rational,
}

impl LedgerEntry {
    pub fn contribution(&self) -> Rational {
        &self.coefficient * &self.value
    }
}

#[derive(Clone, Copy)]
enum Generator {
    Xi,
    Fiber,
    Exc(usize),
}

fn generators(class: &DivisorClass) -> Vec<(Generator, Rational)> {
    let mut out = Vec::with_capacity(2 + class.e.len());
    if !class.xi.is_zero() {
        out.push((Generator::Xi, class.xi.clone()));
    }
    if !class.f.is_zero() {
        out.push((Generator::Fiber, class.f.clone()));
    }
    for (j, e) in class.e.iter().enumerate() {
        if !e.is_zero() {
            out.push((Generator::Exc(j), -e));
        }
    }
    out
}

fn sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Value of a degree-`r` monomial on `X`.
pub fn monomial_value(fam: &FamilyDescriptor, m: &Monomial) -> Rational {
    let r = fam.rank();
    debug_assert_eq!(
        m.xi as usize + m.f as usize + m.exc.map_or(0, |(_, k)| k as usize),
        r
    );
    if m.f >= 2 {
        return Rational::zero();
    }
    match m.exc {
        None | Some((_, 0)) => {
            if m.f == 0 {
                int(fam.deg_v())
            } else {
                Rational::one()
            }
        }
        Some((j, k)) => {
            let k = k as usize;
            if k <= r - 2 {
                Rational::zero()
            } else if k == r - 1 {
                if m.xi == 1 {
                    int(sign(r) * fam.center_xi_degree(j))
                } else {
                    int(sign(r))
                }
            } else {
                int(sign(r - 1) * fam.center_w_degree(j))
            }
        }
    }
}

/// Multilinear expansion of `classes[0] ⋯ classes[r-1]`, grouped by monomial.
///
/// Monomials known to vanish before evaluation (two fiber factors, two
/// distinct exceptional divisors) are dropped.
pub fn expansion_ledger(fam: &FamilyDescriptor, classes: &[DivisorClass]) -> Result<Vec<LedgerEntry>> {
    let r = fam.rank();
    if classes.len() != r {
        return Err(Error::Arity {
            expected: r,
            got: classes.len(),
        });
    }
    for c in classes {
        fam.check_class(c)?;
    }
    let gens: Vec<_> = classes.iter().map(generators).collect();
    let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
    expand(&gens, 0, Monomial { xi: 0, f: 0, exc: None }, Rational::one(), &mut acc);
    Ok(acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(monomial, coefficient)| LedgerEntry {
            value: monomial_value(fam, &monomial),
            monomial,
            coefficient,
        })
        .collect())
}

fn expand(
    gens: &[Vec<(Generator, Rational)>],
    depth: usize,
    mono: Monomial,
    coeff: Rational,
    acc: &mut BTreeMap<Monomial, Rational>,
) {
    if depth == gens.len() {
        *acc.entry(mono).or_insert_with(Rational::zero) += coeff;
        return;
    }
    for (g, c) in &gens[depth] {
        let mut next = mono;
        match *g {
            Generator::Xi => next.xi += 1,
            Generator::Fiber => {
                if mono.f == 1 {
                    continue;
                }
                next.f += 1;
            }
            Generator::Exc(j) => match mono.exc {
                None => next.exc = Some((j, 1)),
                Some((i, k)) if i == j => next.exc = Some((j, k + 1)),
                Some(_) => continue,
            },
        }
        expand(gens, depth + 1, next, &coeff * c, acc);
    }
}

/// `classes[0] ⋯ classes[r-1]` on `X`, exactly.
pub fn top_intersection(fam: &FamilyDescriptor, classes: &[DivisorClass]) -> Result<Rational> {
    Ok(expansion_ledger(fam, classes)?
        .iter()
        .map(LedgerEntry::contribution)
        .sum())
}

/// `D^r`.
pub fn self_intersection(fam: &FamilyDescriptor, class: &DivisorClass) -> Rational {
    top_intersection(fam, &vec![class.clone(); fam.rank()]).expect("arity matches rank")
}

/// `deg λ_f = −(−K_{X/T})^{n+1}`.
pub fn cm_degree(fam: &FamilyDescriptor) -> Rational {
    -self_intersection(fam, &anticanonical_class(fam))
}

/// Ledger of the expansion of `(−K_{X/T})^{n+1}`.
pub fn cm_ledger(fam: &FamilyDescriptor) -> Vec<LedgerEntry> {
    expansion_ledger(fam, &vec![anticanonical_class(fam); fam.rank()]).expect("arity matches rank")
}

/// Intersection of `r − 1` classes restricted to a fiber `Bl_points P^{r-1}`.
///
/// The fiber class `f` restricts to zero, `ξ` to the hyperplane class `h`,
/// and `E_j` to the exceptional divisor over the point `C_j ∩ X_t`.
pub fn fiber_intersection(fam: &FamilyDescriptor, classes: &[DivisorClass]) -> Result<Rational> {
    let n = fam.fiber_dim();
    if classes.len() != n {
        return Err(Error::Arity {
            expected: n,
            got: classes.len(),
        });
    }
    for c in classes {
        fam.check_class(c)?;
    }
    // Only pure powers survive: h^n = 1 and E_j^n = (-1)^(n-1).
    let h_part: Rational = classes.iter().map(|c| c.xi.clone()).product();
    let e_part: Rational = (0..fam.num_centers())
        .map(|j| {
            let coeff: Rational = classes.iter().map(|c| -&c.e[j]).product();
            coeff * int(sign(n - 1))
        })
        .sum();
    Ok(h_part + e_part)
}

/// `μ_L = n·(−K_t·L_t^{n−1}) / L_t^n` from fiber intersection numbers.
pub fn mu_from_intersections(fam: &FamilyDescriptor, class: &DivisorClass) -> Result<Rational> {
    let n = fam.fiber_dim();
    let top = fiber_intersection(fam, &vec![class.clone(); n])?;
    if top.is_zero() {
        return Err(Error::InvalidArgument(
            "class has zero top self-intersection on the fiber".into(),
        ));
    }
    let mut mixed = vec![class.clone(); n];
    mixed[0] = anticanonical_class(fam);
    let num = fiber_intersection(fam, &mixed)?;
    Ok(int(n as i64) * num / top)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NefVerdict {
    NotNef,
    PassesTestSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NefWitness {
    pub description: String,
    #[serde(with = "serde_rational")]
    pub value: Rational,
}

/// One-sided nefness certificate: `NotNef` is a proof, `PassesTestSet` is not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NefCertificate {
    pub verdict: NefVerdict,
    pub witness: Option<NefWitness>,
    /// Every evaluated test, in order.
    pub checks: Vec<NefWitness>,
    /// Set when the exceptional-surface square test was unavailable (`r ≠ 3`).
    pub partial: bool,
}

/// Evaluates `class` against a fixed set of curves and, for threefolds, the
/// self-intersection of its restriction to each exceptional surface.
///
/// Tests, in order: a general line in a fiber; the strict transform of a
/// fiber line through each center; the ruling `F_j` of each `E_j`; for
/// `r = 3` the square `(D|_{E_j})^2`; the minimal section of each `E_j`
/// (summand centers); and the coordinate sections of `P(V)` away from the
/// centers. The first negative value is reported as the witness.
pub fn nef_test(fam: &FamilyDescriptor, class: &DivisorClass) -> Result<NefCertificate> {
    fam.check_class(class)?;
    let r = fam.rank();
    let mut checks = Vec::new();

    checks.push(NefWitness {
        description: "general line in a fiber".into(),
        value: class.xi.clone(),
    });
    for j in 0..fam.num_centers() {
        checks.push(NefWitness {
            description: format!("strict transform of a fiber line through C{}", j + 1),
            value: &class.xi - &class.e[j],
        });
    }
    for j in 0..fam.num_centers() {
        checks.push(NefWitness {
            description: format!("ruling F{} of E{}", j + 1, j + 1),
            value: class.e[j].clone(),
        });
    }
    let partial = r != 3;
    if r == 3 {
        for j in 0..fam.num_centers() {
            // D|_E = (xi·(ξ·C_j) + f)·F + e_j·h with h^2 = deg W_j, h·F = 1, F^2 = 0
            let along_f = &class.xi * int(fam.center_xi_degree(j)) + &class.f;
            let e = &class.e[j];
            let square = e * e * int(fam.center_w_degree(j)) + int(2) * e * along_f;
            checks.push(NefWitness {
                description: format!("(D|_E{})^2 on the exceptional surface", j + 1),
                value: square,
            });
        }
    }
    for j in 0..fam.num_centers() {
        if let Some(split) = fam.center_w_splitting(j) {
            let b_min = *split.iter().min().expect("rank at least 3");
            let along_f = &class.xi * int(fam.center_xi_degree(j)) + &class.f;
            checks.push(NefWitness {
                description: format!("minimal section of E{} = P(W{})", j + 1, j + 1),
                value: along_f + &class.e[j] * int(b_min),
            });
        }
    }
    for i in 0..r {
        let blown_up = (0..fam.num_centers()).any(|j| fam.center_summand(j) == Some(i));
        if !blown_up {
            checks.push(NefWitness {
                description: format!("coordinate section of P(V) onto O({})", fam.twists[i]),
                value: &class.xi * int(fam.twists[i]) + &class.f,
            });
        }
    }

    let witness = checks.iter().find(|w| w.value.is_negative()).cloned();
    Ok(NefCertificate {
        verdict: if witness.is_some() {
            NefVerdict::NotNef
        } else {
            NefVerdict::PassesTestSet
        },
        witness,
        checks,
        partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{bundled, BlowupCenter};
    use crate::numeric::rat;

    fn fam(name: &str) -> FamilyDescriptor {
        bundled(name).unwrap()
    }

    #[test]
    fn negative_degree_monomials() {
        let fam = fam("negative_degree");
        let o3 = fam.xi_class().scale(&int(3));
        let e = fam.exceptional_class(0);
        assert_eq!(top_intersection(&fam, &[o3.clone(), e.clone(), e.clone()]).unwrap(), int(6));
        assert_eq!(top_intersection(&fam, &[e.clone(), e.clone(), e.clone()]).unwrap(), int(6));
        assert_eq!(top_intersection(&fam, &[o3.clone(), o3.clone(), o3.clone()]).unwrap(), int(0));
        assert_eq!(top_intersection(&fam, &[o3.clone(), o3, e]).unwrap(), int(0));
    }

    #[test]
    fn two_fibers_vanish() {
        let fam = fam("not_nef");
        let f = fam.fiber_class();
        let k = anticanonical_class(&fam);
        assert_eq!(top_intersection(&fam, &[f.clone(), f, k]).unwrap(), int(0));
    }

    #[test]
    fn not_nef_monomials() {
        let fam = fam("not_nef");
        let cube = |j| {
            let e = fam.exceptional_class(j);
            top_intersection(&fam, &[e.clone(), e.clone(), e]).unwrap()
        };
        assert_eq!(cube(0), int(-6));
        assert_eq!(cube(1), int(3));
        assert_eq!(cube(2), int(3));
        let o3 = fam.xi_class().scale(&int(3));
        let e1 = fam.exceptional_class(0);
        let e2 = fam.exceptional_class(1);
        assert_eq!(top_intersection(&fam, &[o3.clone(), e1.clone(), e1.clone()]).unwrap(), int(-6));
        assert_eq!(top_intersection(&fam, &[o3, e2.clone(), e2.clone()]).unwrap(), int(3));
        assert_eq!(top_intersection(&fam, &[e1.clone(), e2, e1]).unwrap(), int(0));
    }

    #[test]
    fn arity_is_checked() {
        let fam = fam("not_nef");
        let k = anticanonical_class(&fam);
        assert!(matches!(
            top_intersection(&fam, &[k.clone(), k]),
            Err(Error::Arity { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn cm_degrees_of_examples() {
        assert_eq!(cm_degree(&fam("negative_degree")), int(-12));
        assert_eq!(cm_degree(&fam("positive_and_big")), int(12));
        assert_eq!(cm_degree(&fam("not_nef")), int(0));
        for d in 1..=4 {
            assert_eq!(cm_degree(&fam(&format!("no_section_d{d}"))), int(6 * d));
        }
    }

    #[test]
    fn ledger_reproduces_hand_expansion() {
        // -12 = -(0 - 3*0 + 3*6 - 6): ledger terms ξ^3, ξ^2E, ξE^2, E^3
        let ledger = cm_ledger(&fam("negative_degree"));
        let by: BTreeMap<String, (Rational, Rational)> = ledger
            .iter()
            .map(|e| (e.monomial.to_string(), (e.coefficient.clone(), e.value.clone())))
            .collect();
        assert_eq!(by["ξ^3"], (int(27), int(0)));
        assert_eq!(by["ξ^2·E1"], (int(-27), int(0)));
        assert_eq!(by["ξ·E1^2"], (int(9), int(2)));
        assert_eq!(by["E1^3"], (int(-1), int(6)));
    }

    #[test]
    fn fiber_intersections() {
        let dp6 = fam("not_nef");
        let k = anticanonical_class(&dp6);
        assert_eq!(fiber_intersection(&dp6, &[k.clone(), k.clone()]).unwrap(), int(6));
        let p2 = fam("isotrivial_p2");
        let h = p2.xi_class();
        assert_eq!(fiber_intersection(&p2, &[h.clone(), h]).unwrap(), int(1));
        let dp8 = fam("negative_degree");
        let k8 = anticanonical_class(&dp8);
        assert_eq!(fiber_intersection(&dp8, &[k8.clone(), k8]).unwrap(), int(8));
        assert_eq!(mu_from_intersections(&dp6, &k).unwrap(), int(2));
    }

    #[test]
    fn fiber_dp4_degree() {
        let dp4 = fam("no_section_d1");
        let k = anticanonical_class(&dp4);
        assert_eq!(fiber_intersection(&dp4, &[k.clone(), k]).unwrap(), int(4));
    }

    #[test]
    fn nef_witness_on_not_nef() {
        let fam = fam("not_nef");
        let cert = nef_test(&fam, &anticanonical_class(&fam)).unwrap();
        assert_eq!(cert.verdict, NefVerdict::NotNef);
        let w = cert.witness.unwrap();
        assert_eq!(w.value, int(-3));
        assert!(w.description.contains("E2"), "{}", w.description);
        assert!(!cert.partial);
    }

    #[test]
    fn nef_fiber_class_passes() {
        let fam = fam("not_nef");
        let cert = nef_test(&fam, &fam.fiber_class()).unwrap();
        assert_eq!(cert.verdict, NefVerdict::PassesTestSet);
        assert!(cert.witness.is_none());
    }

    #[test]
    fn twisting_by_fibers() {
        let fam = fam("not_nef");
        let k = anticanonical_class(&fam);
        // square on E2 is 2a - 3; the minimal section of E2 catches a in [3/2, 3)
        let at = |a: Rational| nef_test(&fam, &k.plus_fibers(&a)).unwrap();
        assert_eq!(at(int(1)).witness.unwrap().value, int(-1));
        let mid = at(int(2)).witness.unwrap();
        assert_eq!(mid.value, int(-1));
        assert!(mid.description.contains("minimal section"));
        assert_eq!(at(rat(5, 2)).witness.unwrap().value, rat(-1, 2));
        assert_eq!(at(int(3)).verdict, NefVerdict::PassesTestSet);
    }

    #[test]
    fn higher_rank_is_partial() {
        let fam = FamilyDescriptor::new(vec![0, 1, 1, 1], vec![BlowupCenter::summand(1)]).unwrap();
        let cert = nef_test(&fam, &fam.fiber_class()).unwrap();
        assert!(cert.partial);
    }

    #[test]
    fn center_free_cm_is_zero() {
        for twists in [vec![0, 0], vec![-3, 5], vec![1, 2, 4], vec![-5, 0, 2, 5], vec![1, -1, 3, 0, 2]] {
            let fam = FamilyDescriptor::new(twists, vec![]).unwrap();
            assert_eq!(cm_degree(&fam), int(0));
        }
    }
}
