use num_complex::Complex64;
use proptest::prelude::*;
use wermer_core::analysis::{fd_complex_hessian, lelong_ratio_profile, mc_volume, sample_directions, Box4};
use wermer_core::greenfn::{c1_estimate, cutoff_log, u_delta_k, CutoffProfile};
use wermer_core::potentials::RhoTildeProfile;
use wermer_core::{PhiMode, PointClass, Potential, PotentialParams, SheetLabel, WermerSet, C2};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn potential(level: usize) -> Potential {
    Potential::new(PotentialParams { level, ..Default::default() }).unwrap()
}

fn point4(half: f64) -> impl Strategy<Value = C2> {
    prop::array::uniform4(-half..half).prop_map(C2::from_reals)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_n_is_pluriharmonic_off_the_variety(p in point4(2.5), n in 1usize..=6) {
        let set = WermerSet::new(Default::default());
        let d = set.variety_distance(p.z, p.w, n).unwrap();
        let lattice = (p.z.re - p.z.re.round()).hypot(p.z.im - p.z.im.round());
        prop_assume!(d >= 0.2 && lattice >= 0.2);
        let est = fd_complex_hessian(|q| set.phi_n(q.z, q.w, n, PhiMode::Recursive), p, 1e-3, true).unwrap();
        prop_assert!(est.matrix.norm() <= 1e-5, "norm {}", est.matrix.norm());
    }

    #[test]
    fn sublevel_sets_are_nested(p in point4(3.0), t1 in -6.0..2.0f64, dt in 0.0..3.0f64) {
        let pot = potential(6);
        if pot.in_sublevel(p.z, p.w, t1).unwrap() {
            prop_assert!(pot.in_sublevel(p.z, p.w, t1 + dt).unwrap());
        }
    }

    #[test]
    fn a_lies_inside_u(p in point4(3.0)) {
        let pot = potential(6);
        let e = pot.evaluate(p).unwrap();
        match e.class {
            PointClass::InA | PointClass::InUNotA => prop_assert!(e.phi < pot.params().t_u),
            PointClass::OutsideU => prop_assert!(e.phi >= pot.params().t_u),
            PointClass::OnVariety => prop_assert_eq!(e.phi, f64::NEG_INFINITY),
        }
        if e.class == PointClass::InA {
            prop_assert!(e.phi_tilde.unwrap() < pot.params().t_a);
        }
    }

    #[test]
    fn phi_tilde_dominates_rho_tilde_near_boundary(phi in -1.0..-1e-9f64, norm_sqr in 0.0..10.0f64) {
        let pot = potential(4);
        let rho = RhoTildeProfile::default().eval(norm_sqr).value;
        prop_assert!(pot.tilde_from_phi(phi, norm_sqr).unwrap() >= rho);
    }

    #[test]
    fn rho_tilde_is_convex_increasing(t in 0.0..40.0f64, dt in 1e-3..5.0f64) {
        let r = RhoTildeProfile::default();
        let (a, b) = (r.eval(t), r.eval(t + dt));
        prop_assert!(a.d1 >= 1.0 && a.d2 >= 0.0);
        prop_assert!(b.value > a.value);
        prop_assert!(b.d1 >= a.d1);
    }

    #[test]
    fn comparison_function_stays_below_scaled_potential(
        p in point4(2.0),
        offset in point4(1.5),
        delta in 0.01..1.0f64,
    ) {
        let pot = potential(5);
        let k = p + offset;
        let Ok(phi_tilde) = pot.phi_tilde(p.z, p.w) else { return Ok(()) };
        let u = u_delta_k(&pot, p, delta, k, &CutoffProfile::default()).unwrap();
        prop_assert!(u <= delta * phi_tilde + 1e-12);
    }
}

#[test]
fn rho_tilde_derivative_is_unbounded() {
    let r = RhoTildeProfile::default();
    let d: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&t| r.eval(t).d1).collect();
    assert!(d[0] < d[1] && d[1] < d[2] && d[2] > 1e6, "{d:?}");
}

#[test]
fn hessian_of_radial_polynomial() {
    // F(t) = t^3 + sin t of t = |zeta|^2 has eigenvalues F'(t) and F'(t) + t F''(t).
    let f = |p: C2| Ok(p.norm_sqr().powi(3) + p.norm_sqr().sin());
    for p in [C2::new(c(0.3, -0.2), c(0.5, 0.1)), C2::new(c(-0.7, 0.0), c(0.0, 0.4))] {
        let t = p.norm_sqr();
        let d1 = 3.0 * t * t + t.cos();
        let d2 = 6.0 * t - t.sin();
        let (lo, hi) = fd_complex_hessian(f, p, 1e-2, true).unwrap().matrix.eigenvalues();
        let (elo, ehi) = (d1.min(d1 + t * d2), d1.max(d1 + t * d2));
        assert!((lo - elo).abs() < 1e-6 && (hi - ehi).abs() < 1e-6, "{lo} {hi} vs {elo} {ehi}");
    }
}

/// Smallest eigenvalue of the Hessian of `F(|zeta|^2)` with `F(t) = chi(sqrt t) ln t`,
/// from one-variable central differences of `F`.
fn radial_min_eig(profile: &CutoffProfile, lo: f64, hi: f64, samples: usize) -> f64 {
    let f = |t: f64| profile.radial(t.sqrt()) * t.ln();
    let h = 1e-4;
    (0..samples)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            let t = r * r;
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            d1.min(d1 + t * d2)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn c1_matches_one_variable_oracle() {
    let profile = CutoffProfile::default();
    let oracle = radial_min_eig(&profile, 0.25, 1.25, 20001);
    let est = c1_estimate(&profile, 401, 1e-3).unwrap();
    assert!(oracle < 0.0);
    assert!((est.min_eig - oracle).abs() <= 0.02 * oracle.abs(), "{} vs {}", est.min_eig, oracle);
    assert!((est.value - 1.1 * -oracle).abs() <= 0.02 * est.value);
}

#[test]
fn c1_is_stable_under_refinement() {
    let profile = CutoffProfile::default();
    let a = c1_estimate(&profile, 101, 1e-3).unwrap().value;
    let b = c1_estimate(&profile, 201, 1e-3).unwrap().value;
    assert!((a - b).abs() <= 0.05 * b, "{a} vs {b}");
}

#[test]
fn cutoff_log_is_log_inside_and_zero_outside() {
    let profile = CutoffProfile::default();
    let inside = C2::new(c(0.3, 0.0), c(0.0, 0.2));
    assert_eq!(cutoff_log(inside, &profile), inside.norm_sqr().ln());
    assert_eq!(cutoff_log(C2::new(c(1.0, 0.1), c(0.0, 0.0)), &profile), 0.0);
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let pot = potential(6);
    let bx = Box4::cube(1.5).unwrap();
    let pred = |p: C2| pot.in_sublevel(p.z, p.w, -1.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_volume(pred, &bx, 50_000, 9).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, mc_volume(pred, &bx, 50_000, 9).unwrap());
    assert_ne!(one.hits, mc_volume(pred, &bx, 50_000, 10).unwrap().hits);
}

#[test]
fn unit_ball_volume() {
    let bx = Box4::cube(1.0).unwrap();
    let est = mc_volume(|p| Ok(p.norm_sqr() < 1.0), &bx, 400_000, 3).unwrap();
    let exact = std::f64::consts::PI.powi(2) / 2.0;
    assert!((est.value - exact).abs() <= 4.0 * est.stderr, "{} vs {exact}", est.value);
}

#[test]
fn lelong_ratio_of_a_log_pole_is_one() {
    let center = C2::from_reals([0.3, 0.1, 0.2, -0.4]);
    let dirs = sample_directions(16, 4);
    let prof = lelong_ratio_profile(center, |p| Ok((p - center).norm().ln()), &[1e-2, 1e-4, 1e-6], &dirs).unwrap();
    assert!(prof.ratios.iter().all(|r| (r - 1.0).abs() < 1e-9), "{:?}", prof.ratios);
}

#[test]
fn lelong_ratio_of_phi_n_far_from_the_origin() {
    // Far out, the finite part of phi_n is negligible against 2^-n log r.
    let pot = potential(3);
    let z = c(160.0, 0.37);
    let set = pot.wermer();
    let w = set.sheet_value(z, SheetLabel::zeros(3).unwrap()).unwrap();
    let dirs = sample_directions(16, 4);
    let f = |p: C2| set.phi_n(p.z, p.w, 3, PhiMode::Recursive);
    let prof = lelong_ratio_profile(C2::new(z, w), f, &[1e-4, 1e-6, 1e-8], &dirs).unwrap();
    let last = *prof.ratios.last().unwrap();
    assert!((last - 0.125).abs() <= 0.1 * 0.125, "{:?}", prof.ratios);
}
