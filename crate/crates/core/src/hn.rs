//! Harder–Narasimhan slope combinatorics of tensor and symmetric powers.
//!
//! For a bundle `E` on a curve of genus `g` with HN pieces of slopes
//! `μ_1 > … > μ_ℓ` and ranks `r_i`, the tensor power `E^{⊗m}` carries a
//! refined filtration whose graded pieces are indexed by sequences
//! `s ∈ {1..ℓ}^m`, with slope `Σ μ_{s_j}` and rank `Π r_{s_j}`. Pieces whose
//! slopes are at least `2g` are globally generated, so the rank fraction of
//! such pieces is what [`gg_fraction`] measures.
//!
//! Spectra are computed by convolution over the integer lattice obtained by
//! clearing slope denominators, with exact big-integer ranks.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{from_biguint, int, parse_rational, rat, serde_rational, to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HNPiece {
    #[serde(with = "serde_rational")]
    pub slope: Rational,
    pub rank: u64,
}

/// HN type of a bundle: pieces in strictly decreasing slope order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HNProfile {
    pieces: Vec<HNPiece>,
    pub genus: u32,
}

impl HNProfile {
    /// Builds a profile, sorting by slope and merging equal slopes.
    pub fn new(pieces: impl IntoIterator<Item = (Rational, u64)>, genus: u32) -> Result<Self> {
        let mut pieces: Vec<HNPiece> = pieces
            .into_iter()
            .map(|(slope, rank)| HNPiece { slope, rank })
            .collect();
        if pieces.iter().any(|p| p.rank == 0) {
            return Err(Error::Validation("HN piece ranks must be positive".into()));
        }
        if pieces.is_empty() {
            return Err(Error::Validation("an HN profile needs at least one piece".into()));
        }
        pieces.sort_by(|a, b| b.slope.cmp(&a.slope));
        pieces.dedup_by(|next, kept| {
            if next.slope == kept.slope {
                kept.rank += next.rank;
                true
            } else {
                false
            }
        });
        Ok(Self { pieces, genus })
    }

    /// On `P¹` a split bundle's HN pieces are its groups of equal degree.
    pub fn from_splitting(degrees: &[i64], genus: u32) -> Result<Self> {
        Self::new(degrees.iter().map(|&d| (int(d), 1)), genus)
    }

    /// Parses `"2:1,-1:1"` (slope:rank pairs; slopes may be `p/q`).
    pub fn parse(s: &str, genus: u32) -> Result<Self> {
        let pieces = s
            .split(',')
            .map(|item| {
                let (slope, rank) = item
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("expected slope:rank, got {item:?}")))?;
                let rank = rank
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("rank {rank:?}: {e}")))?;
                Ok((parse_rational(slope.trim())?, rank))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces, genus)
    }

    pub fn pieces(&self) -> &[HNPiece] {
        &self.pieces
    }

    pub fn rank(&self) -> u64 {
        self.pieces.iter().map(|p| p.rank).sum()
    }

    pub fn degree(&self) -> Rational {
        self.pieces.iter().map(|p| &p.slope * int(p.rank as i64)).sum()
    }

    pub fn slope(&self) -> Rational {
        self.degree() / int(self.rank() as i64)
    }

    /// Variance of the slope of a uniformly random rank-one direction.
    pub fn variance(&self) -> Rational {
        let mu = self.slope();
        let r = int(self.rank() as i64);
        self.pieces
            .iter()
            .map(|p| {
                let d = &p.slope - &mu;
                &d * &d * int(p.rank as i64)
            })
            .sum::<Rational>()
            / r
    }

    /// The default threshold `2g` for global generation.
    pub fn gg_threshold(&self) -> Rational {
        int(2 * self.genus as i64)
    }
}

impl fmt::Display for HNProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pieces.iter().map(|p| format!("{}:{}", p.slope, p.rank)).collect();
        write!(f, "{} (g = {})", parts.join(","), self.genus)
    }
}

fn biguint_as_string<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectrumPiece {
    #[serde(with = "serde_rational")]
    pub slope: Rational,
    #[serde(serialize_with = "biguint_as_string")]
    pub rank: BigUint,
}

/// Graded pieces of a power, strictly decreasing in slope.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradedSpectrum {
    pub pieces: Vec<SpectrumPiece>,
}

impl GradedSpectrum {
    pub fn total_rank(&self) -> BigUint {
        self.pieces.iter().map(|p| &p.rank).sum()
    }

    pub fn mean_slope(&self) -> Rational {
        let total: Rational = self
            .pieces
            .iter()
            .map(|p| &p.slope * from_biguint(&p.rank))
            .sum();
        total / from_biguint(&self.total_rank())
    }

    pub fn rank_at_least(&self, threshold: &Rational) -> BigUint {
        self.pieces
            .iter()
            .filter(|p| &p.slope >= threshold)
            .map(|p| &p.rank)
            .sum()
    }

    pub fn fraction_at_least(&self, threshold: &Rational) -> Rational {
        from_biguint(&self.rank_at_least(threshold)) / from_biguint(&self.total_rank())
    }
}

/// Integer lattice for a set of slopes: `slope = (offset + k) / denom`.
struct Lattice {
    denom: BigUint,
    min: Rational,
    steps: Vec<usize>,
}

impl Lattice {
    fn new(slopes: &[Rational]) -> Self {
        let denom = slopes
            .iter()
            .map(|s| s.denom().magnitude().clone())
            .fold(BigUint::one(), |acc, d| acc.lcm(&d));
        let min = slopes.iter().min().cloned().unwrap_or_else(Rational::zero);
        let d = from_biguint(&denom);
        let steps = slopes
            .iter()
            .map(|s| {
                ((s - &min) * &d)
                    .to_integer()
                    .to_usize()
                    .expect("slope spread fits the lattice")
            })
            .collect();
        Self { denom, min, steps }
    }

    fn slope_at(&self, m: u64, k: usize) -> Rational {
        &self.min * int(m as i64) + int(k as i64) / from_biguint(&self.denom)
    }
}

fn collect_spectrum(lattice: &Lattice, m: u64, table: Vec<BigUint>) -> GradedSpectrum {
    let pieces = table
        .into_iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, rank)| SpectrumPiece {
            slope: lattice.slope_at(m, k),
            rank,
        })
        .collect();
    GradedSpectrum { pieces }
}

/// Spectrum of `E^{⊗m}`: slope `Σ μ_{s_j}` with rank `Π r_{s_j}`, by convolution.
pub fn tensor_graded(profile: &HNProfile, m: u64) -> Result<GradedSpectrum> {
    if m == 0 {
        return Err(Error::InvalidArgument("tensor power m must be at least 1".into()));
    }
    let slopes: Vec<Rational> = profile.pieces.iter().map(|p| p.slope.clone()).collect();
    let lattice = Lattice::new(&slopes);
    let width = lattice.steps.iter().max().copied().unwrap_or(0);
    let mut table = vec![BigUint::zero(); width * m as usize + 1];
    table[0] = BigUint::one();
    let mut reach = 0usize;
    for _ in 0..m {
        let mut next = vec![BigUint::zero(); table.len()];
        for k in 0..=reach {
            if table[k].is_zero() {
                continue;
            }
            for (step, piece) in lattice.steps.iter().zip(&profile.pieces) {
                next[k + step] += &table[k] * piece.rank;
            }
        }
        table = next;
        reach += width;
    }
    Ok(collect_spectrum(&lattice, m, table))
}

/// Exponent-vector model of `Sym^m` of a split bundle: one rank-one summand of
/// degree `Σ k_i a_i` per `k` with `|k| = m`.
pub fn sym_spectrum(degrees: &[i64], m: u64) -> Result<GradedSpectrum> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("need at least one summand".into()));
    }
    let slopes: Vec<Rational> = degrees.iter().map(|&d| int(d)).collect();
    let lattice = Lattice::new(&slopes);
    let width = lattice.steps.iter().max().copied().unwrap_or(0);
    let m = m as usize;
    // table[j][k]: exponent vectors of total j over the summands seen so far
    let mut table = vec![vec![BigUint::zero(); width * m + 1]; m + 1];
    table[0][0] = BigUint::one();
    for &step in &lattice.steps {
        // unbounded knapsack: a summand can be used any number of times
        for j in 1..=m {
            for k in step..=width * m {
                if !table[j - 1][k - step].is_zero() {
                    let add = table[j - 1][k - step].clone();
                    table[j][k] += add;
                }
            }
        }
    }
    Ok(collect_spectrum(&lattice, m as u64, table.swap_remove(m)))
}

/// Fraction of `Sym^m` summands of degree at least `threshold`.
pub fn sym_fraction(degrees: &[i64], m: u64, threshold: &Rational) -> Result<Rational> {
    Ok(sym_spectrum(degrees, m)?.fraction_at_least(threshold))
}

/// Rank fraction of `E^{⊗m}` in pieces of slope `≥ 2g`.
pub fn gg_fraction(profile: &HNProfile, m: u64) -> Result<Rational> {
    gg_fraction_with_threshold(profile, m, &profile.gg_threshold())
}

pub fn gg_fraction_with_threshold(profile: &HNProfile, m: u64, threshold: &Rational) -> Result<Rational> {
    Ok(tensor_graded(profile, m)?.fraction_at_least(threshold))
}

/// `1 − m σ² / (m μ̄ − t)²` when `m μ̄ > t`, floored at 0; otherwise 0.
pub fn chebyshev_lower_bound(profile: &HNProfile, m: u64, threshold: &Rational) -> Rational {
    let mf = int(m as i64);
    let gap = &mf * profile.slope() - threshold;
    if !gap.is_positive() {
        return Rational::zero();
    }
    let bound = Rational::one() - &mf * profile.variance() / (&gap * &gap);
    bound.max(Rational::zero())
}

/// Normal approximation to the rank fraction at or above `threshold`.
///
/// Approximate. With `continuity` the threshold is replaced by the midpoint
/// between the achievable slope sums on either side of it, which matches the
/// discrete spectrum much better at moderate `m`.
pub fn clt_estimate(profile: &HNProfile, m: u64, threshold: &Rational, continuity: bool) -> f64 {
    let mean = to_f64(&profile.slope()) * m as f64;
    let var = to_f64(&profile.variance()) * m as f64;
    if var == 0.0 {
        return if profile.slope() * int(m as i64) >= *threshold { 1.0 } else { 0.0 };
    }
    let t = if continuity {
        to_f64(&continuity_point(profile, m, threshold))
    } else {
        to_f64(threshold)
    };
    0.5 * statrs::function::erf::erfc((t - mean) / (2.0 * var).sqrt())
}

/// Midpoint between the largest lattice sum below `threshold` and the least one at or above it.
///
/// Sums of `m` slopes lie on `m·μ_min + h·Z` with `h` the gcd of slope differences.
fn continuity_point(profile: &HNProfile, m: u64, threshold: &Rational) -> Rational {
    let slopes: Vec<Rational> = profile.pieces.iter().map(|p| p.slope.clone()).collect();
    let lattice = Lattice::new(&slopes);
    let g = lattice.steps.iter().fold(0usize, |acc, &s| acc.gcd(&s));
    let h = int(g as i64) / from_biguint(&lattice.denom);
    let base = &lattice.min * int(m as i64);
    let k = ((threshold - &base) / &h).ceil();
    base + (k - rat(1, 2)) * h
}

/// Least `m` with `gg_fraction(m) ≥ 1 − ε`.
///
/// The scan stops at the first `m` where the Chebyshev bound alone already
/// guarantees the target, so it terminates whenever the degree is positive.
pub fn min_m_for_fraction(profile: &HNProfile, epsilon: &Rational) -> Result<u64> {
    if !profile.degree().is_positive() {
        return Err(Error::Hypothesis(format!(
            "the fraction tends to 1 only for positive degree; {profile} has degree {}",
            profile.degree()
        )));
    }
    if !epsilon.is_positive() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let target = Rational::one() - epsilon;
    let threshold = profile.gg_threshold();
    let mut m = 1u64;
    loop {
        if gg_fraction(profile, m)? >= target {
            return Ok(m);
        }
        if chebyshev_lower_bound(profile, m, &threshold) >= target {
            // unreachable in exact arithmetic: the bound is a lower bound
            return Err(Error::Consistency(format!(
                "Chebyshev bound exceeds the exact fraction at m = {m}"
            )));
        }
        m += 1;
    }
}

/// The three profiles shipped with the tool.
pub fn bundled_profiles() -> Vec<(&'static str, HNProfile)> {
    vec![
        ("o(-1)+o(2)", HNProfile::parse("2:1,-1:1", 0).expect("valid")),
        ("genus1_3:1_-1:2", HNProfile::parse("3:1,-1:2", 1).expect("valid")),
        ("p1_1:2_0:1_-1:1", HNProfile::parse("1:2,0:1,-1:1", 0).expect("valid")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e() -> HNProfile {
        HNProfile::parse("2:1,-1:1", 0).unwrap()
    }

    fn pieces(spectrum: &GradedSpectrum) -> Vec<(Rational, u64)> {
        spectrum.pieces
            .iter()
            .map(|p| (p.slope.clone(), p.rank.to_u64().unwrap()))
            .collect()
    }

    #[test]
    fn from_splitting_groups_degrees() {
        let p = HNProfile::from_splitting(&[-1, 2], 0).unwrap();
        assert_eq!(p, e());
        let p = HNProfile::from_splitting(&[0, 0, 0], 0).unwrap();
        assert_eq!(p.pieces(), &[HNPiece { slope: int(0), rank: 3 }]);
    }

    #[test]
    fn tensor_square() {
        let s = tensor_graded(&e(), 2).unwrap();
        assert_eq!(pieces(&s), vec![(int(4), 1), (int(1), 2), (int(-2), 1)]);
        assert_eq!(s.mean_slope(), int(1));
        let s = tensor_graded(&HNProfile::parse("1:2", 0).unwrap(), 3).unwrap();
        assert_eq!(pieces(&s), vec![(int(3), 8)]);
        let s = tensor_graded(&e(), 1).unwrap();
        assert_eq!(pieces(&s), vec![(int(2), 1), (int(-1), 1)]);
    }

    #[test]
    fn fractions() {
        assert_eq!(gg_fraction(&e(), 1).unwrap(), rat(1, 2));
        assert_eq!(gg_fraction(&e(), 2).unwrap(), rat(3, 4));
        assert_eq!(e().slope(), rat(1, 2));
        assert_eq!(e().variance(), rat(9, 4));
        let all_big = HNProfile::parse("3:1,2:2", 1).unwrap();
        for m in 1..6 {
            assert_eq!(gg_fraction(&all_big, m).unwrap(), int(1));
        }
    }

    #[test]
    fn binomial_count_agrees() {
        // Σ_{2i-(m-i) ≥ 0} C(m,i) / 2^m
        for m in 1..=30u64 {
            let want: BigUint = (0..=m)
                .filter(|&i| 3 * i >= m)
                .map(|i| crate::numeric::binomial(m, i))
                .sum();
            let want = from_biguint(&want) / from_biguint(&(BigUint::one() << m));
            assert_eq!(gg_fraction(&e(), m).unwrap(), want);
        }
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_lower_bound(&e(), 100, &int(0)), rat(91, 100));
        let flat = HNProfile::parse("1:3", 2).unwrap();
        assert_eq!(chebyshev_lower_bound(&flat, 5, &int(4)), int(1));
        assert_eq!(chebyshev_lower_bound(&flat, 4, &int(4)), int(0));
    }

    #[test]
    fn chebyshev_is_a_lower_bound() {
        for (_, p) in bundled_profiles() {
            let t = p.gg_threshold();
            for m in 1..=200 {
                let exact = gg_fraction(&p, m).unwrap();
                assert!(exact >= chebyshev_lower_bound(&p, m, &t), "{p} m={m}");
            }
        }
    }

    #[test]
    fn clt_tracks_exact_fraction() {
        for (_, p) in bundled_profiles() {
            let t = p.gg_threshold();
            let exact = to_f64(&gg_fraction(&p, 400).unwrap());
            let approx = clt_estimate(&p, 400, &t, true);
            assert!((exact - approx).abs() < 0.02, "{p}: {exact} vs {approx}");
        }
    }

    #[test]
    fn continuity_point_brackets_threshold() {
        // sums of one slope from {2, -1} are -1 and 2; midpoint 1/2
        assert_eq!(continuity_point(&e(), 1, &int(0)), rat(1, 2));
        assert_eq!(continuity_point(&e(), 400, &int(0)), rat(1, 2));
        assert_eq!(continuity_point(&e(), 2, &int(1)), rat(-1, 2));
        let approx = clt_estimate(&e(), 1, &int(0), true);
        assert!((approx - 0.5).abs() < 1e-12);
    }

    #[test]
    fn min_m() {
        assert_eq!(min_m_for_fraction(&e(), &rat(1, 4)).unwrap(), 2);
        let big = HNProfile::parse("5:2", 1).unwrap();
        assert_eq!(min_m_for_fraction(&big, &rat(1, 10)).unwrap(), 1);
        let flat = HNProfile::parse("1:1,-1:1", 0).unwrap();
        assert!(matches!(min_m_for_fraction(&flat, &rat(1, 3)), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn sym_examples() {
        for q in 1..=20i64 {
            let got = sym_fraction(&[-1, 1], 2 * q as u64, &int(0)).unwrap();
            assert_eq!(got, rat(q + 1, 2 * q + 1));
        }
        assert_eq!(sym_fraction(&[-1, 2], 3, &int(0)).unwrap(), rat(3, 4));
        assert_eq!(sym_fraction(&[4], 7, &int(28)).unwrap(), int(1));
        let s = sym_spectrum(&[-1, 1], 4).unwrap();
        assert_eq!(
            pieces(&s),
            vec![(int(4), 1), (int(2), 1), (int(0), 1), (int(-2), 1), (int(-4), 1)]
        );
    }

    #[test]
    fn sym_matches_pushforward_splitting() {
        use crate::family::FamilyDescriptor;
        use crate::sections::pushforward_splitting;
        let fam = FamilyDescriptor::new(vec![-2, 1, 3], vec![]).unwrap();
        for m in 1..=6u64 {
            let split = pushforward_splitting(&fam, &fam.xi_class(), m).unwrap();
            let s = sym_spectrum(&[-2, 1, 3], m).unwrap();
            let from_split: Vec<(Rational, u64)> =
                split.degrees.iter().rev().map(|(&d, &c)| (int(d), c)).collect();
            assert_eq!(pieces(&s), from_split);
        }
    }

    fn brute(slopes: &[(i64, i64)], ranks: &[u64], m: u32) -> Vec<(Rational, u64)> {
        // enumerate every sequence s ∈ {0..ℓ}^m directly
        let l = slopes.len();
        let den: i64 = slopes.iter().fold(1, |a, &(_, d)| a.lcm(&d));
        let scaled: Vec<i64> = slopes.iter().map(|&(n, d)| n * (den / d)).collect();
        let mut acc = std::collections::BTreeMap::<i64, u64>::new();
        for code in 0..(l as u64).pow(m) {
            let (mut c, mut sum, mut rank) = (code, 0i64, 1u64);
            for _ in 0..m {
                let i = (c % l as u64) as usize;
                c /= l as u64;
                sum += scaled[i];
                rank *= ranks[i];
            }
            *acc.entry(sum).or_default() += rank;
        }
        acc.into_iter().rev().map(|(s, r)| (rat(s, den), r)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dp_matches_enumeration(
            raw in proptest::collection::btree_map((-12i64..12, 1i64..4), 1u64..4, 1..=4),
            m in 1u32..=7,
        ) {
            // distinct rational slopes; equal values after reduction are merged by both sides
            let slopes: Vec<(i64, i64)> = raw.keys().copied().collect();
            let ranks: Vec<u64> = raw.values().copied().collect();
            let profile = HNProfile::new(
                slopes.iter().zip(&ranks).map(|(&(n, d), &r)| (rat(n, d), r)),
                0,
            ).unwrap();
            let got = pieces(&tensor_graded(&profile, m as u64).unwrap());
            prop_assert_eq!(got, brute(&slopes, &ranks, m));
        }

        #[test]
        fn spectrum_totals(
            raw in proptest::collection::btree_map(-6i64..6, 1u64..4, 1..=4),
            m in 1u64..=12,
        ) {
            let profile = HNProfile::new(raw.iter().map(|(&s, &r)| (int(s), r)), 0).unwrap();
            let spectrum = tensor_graded(&profile, m).unwrap();
            prop_assert_eq!(spectrum.total_rank(), BigUint::from(profile.rank()).pow(m as u32));
            prop_assert_eq!(spectrum.mean_slope(), int(m as i64) * profile.slope());
        }

        #[test]
        fn fraction_monotone_in_threshold(m in 1u64..10, t1 in -20i64..20, dt in 0i64..10) {
            let p = HNProfile::parse("1:2,0:1,-1:1", 0).unwrap();
            let spectrum = tensor_graded(&p, m).unwrap();
            prop_assert!(spectrum.fraction_at_least(&int(t1)) >= spectrum.fraction_at_least(&int(t1 + dt)));
        }
    }
}
