use cmdeg_core::family::{anticanonical_class, pullback_cover, BlowupCenter, DivisorClass, FamilyDescriptor};
use cmdeg_core::intersect::{cm_degree, top_intersection};
use cmdeg_core::numeric::{binomial_sum, binomial_transform_solve, int, interpolate, Polynomial, Rational};
use cmdeg_core::sections::{h0, pushforward_splitting};
use proptest::prelude::*;

fn small_poly() -> impl Strategy<Value = Polynomial> {
    proptest::collection::vec((-20i64..20, 1i64..5), 0..6)
        .prop_map(|cs| Polynomial::new(cs.into_iter().map(|(n, d)| Rational::new(n.into(), d.into())).collect()))
}

/// Rank-3 families with summand centers, the setting of all section counts.
fn summand_family() -> impl Strategy<Value = FamilyDescriptor> {
    (
        proptest::collection::vec(-3i64..4, 3),
        proptest::sample::subsequence(vec![1usize, 2, 3], 0..=3),
    )
        .prop_map(|(twists, idx)| {
            FamilyDescriptor::new(twists, idx.into_iter().map(BlowupCenter::summand).collect()).unwrap()
        })
}

fn family_any_rank() -> impl Strategy<Value = FamilyDescriptor> {
    (3usize..6)
        .prop_flat_map(|r| {
            (
                proptest::collection::vec(-3i64..4, r),
                proptest::sample::subsequence((1..=r).collect::<Vec<_>>(), 0..=r.min(3)),
                proptest::collection::vec((-2i64..3, -4i64..5), 0..2),
            )
        })
        .prop_map(|(twists, idx, curves)| {
            let mut centers: Vec<BlowupCenter> = idx.into_iter().map(BlowupCenter::summand).collect();
            centers.extend(curves.into_iter().map(|(x, n)| BlowupCenter::curve(x, n)));
            FamilyDescriptor::new(twists, centers).unwrap()
        })
}

fn class_on(fam: &FamilyDescriptor) -> impl Strategy<Value = DivisorClass> {
    let k = fam.num_centers();
    (-3i64..4, -3i64..4, proptest::collection::vec(-2i64..3, k))
        .prop_map(|(x, f, e)| DivisorClass::new(int(x), int(f), e.into_iter().map(int).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_recovers_polynomials(p in small_poly(), start in -5i64..5) {
        let deg = p.degree().unwrap_or(0);
        let pts: Vec<_> = (0..=deg as i64).map(|i| (int(start + i), p.eval(&int(start + i)))).collect();
        prop_assert_eq!(interpolate(&pts).unwrap(), p);
    }

    #[test]
    fn binomial_transform_resums(values in proptest::collection::vec(-50i64..50, 1..8), q in 0i64..12) {
        let vals: Vec<Rational> = values.into_iter().map(int).collect();
        let coeffs = binomial_transform_solve(&vals);
        for (i, v) in vals.iter().enumerate() {
            prop_assert_eq!(&binomial_sum(&coeffs, &int(i as i64)), v);
        }
        // the re-summed function is the interpolating polynomial everywhere
        let pts: Vec<_> = vals.iter().enumerate().map(|(i, v)| (int(i as i64), v.clone())).collect();
        prop_assert_eq!(binomial_sum(&coeffs, &int(q)), interpolate(&pts).unwrap().eval(&int(q)));
    }

    #[test]
    fn top_intersection_is_symmetric_and_multilinear(
        (fam, a, b, c, d) in summand_family().prop_flat_map(|f| {
            let (a, b, c, d) = (class_on(&f), class_on(&f), class_on(&f), class_on(&f));
            (Just(f), a, b, c, d)
        }),
        t in -3i64..4,
    ) {
        let abc = top_intersection(&fam, &[a.clone(), b.clone(), c.clone()]).unwrap();
        prop_assert_eq!(&abc, &top_intersection(&fam, &[c.clone(), a.clone(), b.clone()]).unwrap());
        prop_assert_eq!(&abc, &top_intersection(&fam, &[b.clone(), a.clone(), c.clone()]).unwrap());
        let lhs = top_intersection(&fam, &[a.scale(&int(t)).add(&d), b.clone(), c.clone()]).unwrap();
        let dbc = top_intersection(&fam, &[d, b, c]).unwrap();
        prop_assert_eq!(lhs, int(t) * abc + dbc);
    }

    #[test]
    fn anticanonical_is_permutation_invariant(fam in family_any_rank(), seed in any::<u64>()) {
        // relabel summands by a permutation and move summand centers along
        let r = fam.rank();
        let mut perm: Vec<usize> = (0..r).collect();
        let mut s = seed;
        for i in (1..r).rev() {
            perm.swap(i, (s % (i as u64 + 1)) as usize);
            s /= i as u64 + 1;
        }
        let twists = perm.iter().map(|&p| fam.twists[p]).collect();
        let centers = fam.centers.iter().map(|c| match c {
            BlowupCenter::Summand { index } => BlowupCenter::summand(perm.iter().position(|&p| p == index - 1).unwrap() + 1),
            other => other.clone(),
        }).collect();
        let permuted = FamilyDescriptor::new(twists, centers).unwrap();
        prop_assert_eq!(anticanonical_class(&permuted), anticanonical_class(&fam));
        prop_assert_eq!(cm_degree(&permuted), cm_degree(&fam));
    }

    #[test]
    fn cm_degree_is_multiplicative_under_covers(fam in family_any_rank(), e in 1u32..=5) {
        prop_assert_eq!(cm_degree(&pullback_cover(&fam, e)), int(e as i64) * cm_degree(&fam));
    }

    #[test]
    fn h0_is_the_splitting_sum(
        (fam, class) in summand_family().prop_flat_map(|f| { let c = class_on(&f); (Just(f), c) }),
        m in 1u64..4,
    ) {
        let split = pushforward_splitting(&fam, &class, m).unwrap();
        let direct: u64 = split.degrees.iter().map(|(&d, &c)| (d + 1).max(0) as u64 * c).sum();
        prop_assert_eq!(h0(&fam, &class, m).unwrap(), direct);
    }

    #[test]
    fn top_power_of_anticanonical_matches_km_leading_term(fam in summand_family()) {
        // deg f_*O(q(-K)) grows like (-K)^3 q^3 / 3!
        let k = anticanonical_class(&fam);
        let km = cmdeg_core::sections::km_expansion(&fam, 1).unwrap();
        prop_assert!(km.all_hold(), "{:?}", km.checks);
        let top = top_intersection(&fam, &[k.clone(), k.clone(), k]).unwrap();
        prop_assert_eq!(km.pushforward_degree.coeff(3) * int(6), top);
    }
}
