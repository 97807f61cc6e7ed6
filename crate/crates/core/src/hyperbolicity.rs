//! Probes for the largest affine holomorphic disks inside `U_t = {phi < t}`
//! and the Euclidean lower bound for the Kobayashi distance they imply.
//!
//! Only affine disks `r -> center + r e^{i theta} direction` are searched, so
//! the radii found are lower estimates of the true extremal radius.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::Box4;
use crate::error::{Error, Result};
use crate::point::C2;
use crate::potentials::Potential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskProbeOptions {
    pub angular_samples: usize,
    /// Interior rings at radii `j r / (rings + 1)`, `j = 1..=rings`.
    pub rings: usize,
    /// Absolute bisection tolerance on the radius.
    pub tol: f64,
    /// First trial radius of the doubling search.
    pub initial_radius: f64,
    /// Radii are not searched beyond this.
    pub max_radius: f64,
    /// Also probe each random centre along the tangent of its nearest sheet.
    pub tangent_probes: bool,
    /// Number of best probes improved by random local search.
    pub refine_top: usize,
    /// Proposals per refined probe.
    pub refine_iterations: usize,
}

impl Default for DiskProbeOptions {
    fn default() -> Self {
        Self {
            angular_samples: 64,
            rings: 8,
            tol: 1e-4,
            initial_radius: 1e-3,
            max_radius: 1e3,
            tangent_probes: true,
            refine_top: 3,
            refine_iterations: 96,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskProbeResult {
    pub center: C2,
    pub direction: C2,
    pub radius: f64,
    pub boundary_samples: usize,
    /// Angle of a sample outside `U_t` on the smallest failing radius seen.
    pub violating_angle: Option<f64>,
}

/// First sample angle at which the sampled disk of radius `r` leaves `U_t`.
fn first_violation(
    pot: &Potential,
    center: C2,
    direction: C2,
    r: f64,
    t: f64,
    angular: usize,
    rings: usize,
) -> Option<f64> {
    let fractions = (1..=rings).map(|j| j as f64 / (rings + 1) as f64).chain(std::iter::once(1.0));
    for frac in fractions.rev() {
        for i in 0..angular {
            let theta = std::f64::consts::TAU * i as f64 / angular as f64;
            let p = center + direction.scale(Complex64::from_polar(r * frac, theta));
            let inside = pot.phi_total(p.z, p.w).is_ok_and(|phi| phi < t);
            if !inside {
                return Some(theta);
            }
        }
    }
    None
}

/// Largest radius (to `opts.tol`) of the affine disk through `center` in
/// `direction` whose sampled points all lie in `U_t`.
pub fn affine_disk_radius(
    pot: &Potential,
    center: C2,
    direction: C2,
    t: f64,
    opts: &DiskProbeOptions,
) -> Result<DiskProbeResult> {
    let phi = pot.phi_total(center.z, center.w)?;
    if phi.is_nan() || phi >= t {
        return Err(Error::CenterOutside { phi });
    }
    let direction = direction
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("direction must be nonzero".into()))?;
    if opts.angular_samples == 0 || !(opts.tol > 0.0) || !(opts.initial_radius > 0.0) {
        return Err(Error::InvalidArgument("invalid disk probe options".into()));
    }
    let (n, k) = (opts.angular_samples, opts.rings);
    let violation = |r: f64, n: usize| first_violation(pot, center, direction, r, t, n, k);

    let mut lo = 0.0;
    let mut hi = opts.initial_radius;
    let mut angle = None;
    loop {
        match violation(hi, n) {
            Some(a) => {
                angle = Some(a);
                break;
            }
            None if hi >= opts.max_radius => break,
            None => {
                lo = hi;
                hi = (2.0 * hi).min(opts.max_radius);
            }
        }
    }
    if angle.is_some() {
        while hi - lo > opts.tol {
            let mid = 0.5 * (lo + hi);
            match violation(mid, n) {
                Some(a) => {
                    hi = mid;
                    angle = Some(a);
                }
                None => lo = mid,
            }
        }
    } else {
        lo = hi;
    }
    // the returned disk must also hold with four times the angular resolution
    while lo > 0.0 {
        match violation(lo, 4 * n) {
            None => break,
            Some(a) => {
                angle = Some(a);
                lo = if lo > opts.tol { lo - opts.tol } else { 0.0 };
            }
        }
    }
    Ok(DiskProbeResult { center, direction, radius: lo, boundary_samples: n, violating_angle: angle })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R0Estimate {
    pub r0_hat: f64,
    pub argmax: DiskProbeResult,
    /// Number of probes that contributed.
    pub probes: usize,
}

/// Uniform random direction on the unit sphere of C^2.
fn random_direction(rng: &mut ChaCha8Rng) -> C2 {
    loop {
        let p = C2::from_reals(std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0));
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p * (1.0 / n);
        }
    }
}

/// Seeded centres in `U_t ∩ search_box` with random directions.
pub fn probe_centers(
    pot: &Potential,
    t: f64,
    count: usize,
    search_box: &Box4,
    seed: u64,
) -> Result<Vec<(C2, C2)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = 10_000 * count.max(1);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let u: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        let c = search_box.at(u);
        let dir = random_direction(&mut rng);
        if pot.phi_total(c.z, c.w).is_ok_and(|phi| phi < t) {
            out.push((c, dir));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(out)
}

/// Unit tangent `(1, w_sigma'(z))` of the sheet of `E_n` nearest to `p`.
pub fn tangent_direction(pot: &Potential, p: C2) -> Result<C2> {
    let set = pot.wermer();
    let (sigma, _) = set.nearest_sheet(p.z, p.w, pot.level())?;
    let slope = set.window_derivative(p.z, 1, sigma)?;
    C2::new(Complex64::new(1.0, 0.0), slope)
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("degenerate tangent".into()))
}

/// Maximum probed radius over `centers` seeded random centres, each probed
/// in its random direction and, if enabled, along the nearest sheet.
pub fn empirical_r0(
    pot: &Potential,
    t: f64,
    centers: usize,
    search_box: &Box4,
    seed: u64,
    opts: &DiskProbeOptions,
) -> Result<R0Estimate> {
    if centers == 0 {
        return Err(Error::InvalidArgument("need at least one centre".into()));
    }
    let mut probes = probe_centers(pot, t, centers, search_box, seed)?;
    if opts.tangent_probes {
        let tangents = probes
            .iter()
            .map(|&(c, _)| Ok((c, tangent_direction(pot, c)?)))
            .collect::<Result<Vec<_>>>()?;
        probes.extend(tangents);
    }
    let mut results: Vec<DiskProbeResult> = probes
        .par_iter()
        .map(|&(c, d)| affine_disk_radius(pot, c, d, t, opts))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[b].radius.total_cmp(&results[a].radius).then(a.cmp(&b)));
    let refined: Vec<DiskProbeResult> = order
        .iter()
        .take(opts.refine_top)
        .enumerate()
        .map(|(i, &k)| (i as u64, results[k]))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, start)| refine_probe(pot, t, start, search_box, seed, i, opts))
        .collect::<Result<_>>()?;
    let probes_run = results.len() + opts.refine_top.min(results.len()) * opts.refine_iterations;
    results.extend(refined);
    let argmax = *results
        .iter()
        .reduce(|a, b| if b.radius > a.radius { b } else { a })
        .expect("at least one probe");
    Ok(R0Estimate { r0_hat: argmax.radius, argmax, probes: probes_run })
}

/// Random local search around one probe: perturbs centre and direction,
/// keeps improvements and shrinks the perturbation after each rejection.
fn refine_probe(
    pot: &Potential,
    t: f64,
    start: DiskProbeResult,
    search_box: &Box4,
    seed: u64,
    stream: u64,
    opts: &DiskProbeOptions,
) -> Result<DiskProbeResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + 1);
    let mut best = start;
    let (mut center_scale, mut dir_scale) = (0.5, 0.3);
    let jitter = |rng: &mut ChaCha8Rng, s: f64| {
        C2::from_reals(std::array::from_fn(|_| s * (2.0 * rng.random::<f64>() - 1.0)))
    };
    for _ in 0..opts.refine_iterations {
        let c = best.center + jitter(&mut rng, center_scale);
        let d = (best.direction + jitter(&mut rng, dir_scale)).normalized();
        let inside_box =
            c.to_reals().iter().enumerate().all(|(i, x)| (search_box.lo[i]..=search_box.hi[i]).contains(x));
        let candidate = match d {
            Some(d) if inside_box => match affine_disk_radius(pot, c, d, t, opts) {
                Ok(r) => Some(r),
                Err(Error::CenterOutside { .. }) => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
        match candidate {
            Some(r) if r.radius > best.radius => best = r,
            _ => {
                center_scale *= 0.85;
                dir_scale *= 0.85;
            }
        }
    }
    Ok(best)
}

/// `|zeta1 - zeta2| / r0`: a lower bound for the Kobayashi distance when no
/// holomorphic disk in the domain has radius above `r0`.
pub fn kobayashi_lower_bound(zeta1: C2, zeta2: C2, r0: f64) -> Result<f64> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("r0 must be > 0, got {r0}")));
    }
    Ok(zeta1.dist(zeta2) / r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialParams;
    use crate::wermer::SheetLabel;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pot() -> Potential {
        Potential::new(PotentialParams::default()).unwrap()
    }

    fn on_variety(p: &Potential, z: Complex64) -> C2 {
        C2::new(z, p.wermer().sheet_value(z, SheetLabel::zeros(p.level()).unwrap()).unwrap())
    }

    #[test]
    fn kobayashi_examples() {
        let a = C2::from_reals([1.0, 0.0, 0.0, 0.0]);
        let b = C2::from_reals([1.0, 3.0, 0.0, 0.0]);
        assert_eq!(kobayashi_lower_bound(a, a, 1.0).unwrap(), 0.0);
        assert_eq!(kobayashi_lower_bound(a, b, 1.5).unwrap(), 2.0);
        assert!(kobayashi_lower_bound(a, b, 0.0).is_err());
    }

    #[test]
    fn variety_center_has_positive_radius() {
        let p = pot();
        let center = on_variety(&p, c(0.3, 0.6));
        let r = affine_disk_radius(&p, center, C2::from_reals([0.0, 0.0, 1.0, 0.0]), -1.0, &Default::default())
            .unwrap();
        assert!(r.radius > 0.0 && r.radius < 1e3);
        assert!(r.violating_angle.is_some());
        assert!(first_violation(&p, center, r.direction, r.radius, -1.0, 256, 8).is_none());
    }

    #[test]
    fn radius_shrinks_with_threshold() {
        let p = pot();
        let center = on_variety(&p, c(0.3, 0.6));
        let dir = C2::from_reals([0.3, 0.1, 0.9, -0.2]);
        let radii: Vec<f64> = [-1.0, -2.0, -4.0, -8.0]
            .iter()
            .map(|&t| affine_disk_radius(&p, center, dir, t, &Default::default()).unwrap().radius)
            .collect();
        assert!(radii.windows(2).all(|w| w[1] <= w[0]), "{radii:?}");
    }

    #[test]
    fn center_outside_is_rejected() {
        let p = pot();
        let out = C2::from_reals([0.3, 0.6, 5.0, 0.0]);
        assert!(matches!(
            affine_disk_radius(&p, out, C2::from_reals([1.0, 0.0, 0.0, 0.0]), -1.0, &Default::default()),
            Err(Error::CenterOutside { .. })
        ));
    }

    #[test]
    fn single_center_equals_probe() {
        let p = pot();
        let bx = Box4::new([-3.0, -3.0, -1.0, -1.0], [3.0, 3.0, 1.0, 1.0]).unwrap();
        let opts = DiskProbeOptions { tangent_probes: false, refine_top: 0, ..Default::default() };
        let est = empirical_r0(&p, -1.0, 1, &bx, 5, &opts).unwrap();
        let (cen, dir) = probe_centers(&p, -1.0, 1, &bx, 5).unwrap()[0];
        let single = affine_disk_radius(&p, cen, dir, -1.0, &opts).unwrap();
        assert_eq!(est.r0_hat, single.radius);
    }

    #[test]
    fn refinement_never_decreases_estimate() {
        let p = pot();
        let bx = Box4::new([-3.0, -3.0, -1.0, -1.0], [3.0, 3.0, 1.0, 1.0]).unwrap();
        let plain = DiskProbeOptions { refine_top: 0, angular_samples: 32, rings: 4, tol: 1e-3, ..Default::default() };
        let refined = DiskProbeOptions { refine_top: 2, refine_iterations: 8, ..plain };
        let a = empirical_r0(&p, -1.0, 6, &bx, 3, &plain).unwrap();
        let b = empirical_r0(&p, -1.0, 6, &bx, 3, &refined).unwrap();
        assert!(b.r0_hat >= a.r0_hat);
        let again = empirical_r0(&p, -1.0, 6, &bx, 3, &refined).unwrap();
        assert_eq!(b, again);
    }
}
