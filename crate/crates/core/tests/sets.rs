use num_complex::Complex64;
use proptest::prelude::*;
use wermer_core::lattice::tail_delta_bound;
use wermer_core::wermer::{hausdorff_distance, sqrt_branch};
use wermer_core::{gauss_point, spiral_index, EpsilonSchedule, GaussPoint, PhiMode, SheetLabel, SpiralIndex, WermerSet};

fn set() -> WermerSet {
    WermerSet::new(EpsilonSchedule::default())
}

/// Points of the z-plane at distance at least 0.05 from the lattice.
fn off_lattice() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(x, y)| Complex64::new(x, y))
        .prop_filter("near a lattice point", |z| {
            (z.re - z.re.round()).hypot(z.im - z.im.round()) > 0.05
        })
}

fn w_point() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

proptest! {
    #[test]
    fn spiral_is_a_bijection(k in 1u64..1_000_000_000_000) {
        let idx = SpiralIndex::new(k).unwrap();
        prop_assert_eq!(spiral_index(gauss_point(idx)), idx);
    }

    #[test]
    fn spiral_inverse(re in -100_000i64..100_000, im in -100_000i64..100_000) {
        let p = GaussPoint::new(re, im);
        prop_assert_eq!(gauss_point(spiral_index(p)), p);
    }

    #[test]
    fn tail_bound_monotone(m in 1usize..30, r in 0.0..50.0f64) {
        let s = EpsilonSchedule::default();
        let here = tail_delta_bound(m, r, &s).unwrap();
        prop_assert!(tail_delta_bound(m + 1, r, &s).unwrap() <= here);
        prop_assert!(tail_delta_bound(m, r + 1.0, &s).unwrap() >= here);
    }

    #[test]
    fn recursive_phi_matches_direct_oracle(z in off_lattice(), w in w_point(), n in 2usize..=12) {
        let s = set();
        let a = s.phi_n(z, w, n, PhiMode::Recursive).unwrap();
        let b = s.phi_n(z, w, n, PhiMode::DirectOracle).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn phi_is_even_in_w(z in off_lattice(), w in w_point(), n in 1usize..=10) {
        let s = set();
        let a = s.phi_n(z, w, n, PhiMode::Recursive).unwrap();
        let b = s.phi_n(z, -w, n, PhiMode::Recursive).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn phi_vanishes_on_sheets(z in off_lattice(), bits in any::<u64>(), n in 1usize..=10) {
        let s = set();
        let sigma = SheetLabel::new(bits & ((1 << n) - 1), n).unwrap();
        let w = s.sheet_value(z, sigma).unwrap();
        prop_assert_eq!(s.phi_n(z, w, n, PhiMode::Recursive).unwrap(), f64::NEG_INFINITY);
        let (nearest, d) = s.nearest_sheet(z, w, n).unwrap();
        prop_assert!(d <= 1e-12);
        prop_assert_eq!(s.sheet_value(z, nearest).unwrap(), w);
    }

    #[test]
    fn slices_are_symmetric(z in off_lattice(), n in 1usize..=10) {
        let sl = set().slice_points(z, n).unwrap();
        prop_assert_eq!(sl.len(), 1 << n);
        prop_assert!(sl.is_symmetric());
    }

    #[test]
    fn hausdorff_telescoping(z in off_lattice(), n in 1usize..=8) {
        let s = set();
        let a = s.slice_points(z, n).unwrap();
        let b = s.slice_points(z, n + 1).unwrap();
        let d = hausdorff_distance(&a.points, &b.points).unwrap();
        let bound = s.schedule().epsilon(n + 1) * sqrt_branch(z, n + 1).unwrap().norm();
        prop_assert!(d <= bound + 1e-12);
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in prop::collection::vec(w_point(), 1..20),
        b in prop::collection::vec(w_point(), 1..20),
        c in prop::collection::vec(w_point(), 1..20),
    ) {
        let ab = hausdorff_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff_distance(&b, &a).unwrap());
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let ac = hausdorff_distance(&a, &c).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn sheet_labels_split_and_join(bits in any::<u64>(), len in 2usize..=40, k in 1usize..40) {
        let k = k % (len - 1) + 1;
        let sigma = SheetLabel::new(bits & ((1u64 << len) - 1), len).unwrap();
        prop_assert_eq!(sigma.head(k).concat(sigma.tail(k)).unwrap(), sigma);
        prop_assert_eq!(sigma.xor(sigma), SheetLabel::zeros(len).unwrap());
        prop_assert_eq!(sigma.negated().negated(), sigma);
    }
}

#[test]
fn gaussian_schedule_separates_at_low_levels() {
    let s = WermerSet::new(EpsilonSchedule::gaussian(1.0).unwrap());
    let z = Complex64::new(0.5, 0.5);
    for n in 1..=6 {
        assert!(s.cluster_certificate(z, n).unwrap().valid, "n = {n}");
        assert_eq!(s.slice_points(z, n).unwrap().distinct_count(), 1 << n);
    }
}
