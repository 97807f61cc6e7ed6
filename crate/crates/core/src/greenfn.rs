//! Comparison functions `u = delta * phi_tilde + chi(zeta - zeta_k) log|zeta - zeta_k|`
//! with a logarithmic pole, the constant bounding the negative part of the
//! Hessian of the cut-off logarithm, and sampled plurisubharmonicity checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::fd_complex_hessian;
use crate::error::{Error, Result};
use crate::point::C2;
use crate::potentials::Potential;
use crate::wermer::SheetLabel;

/// Radial cut-off: 1 for `|zeta| <= inner`, 0 for `|zeta| >= outer`, smooth
/// `exp(-1/x)` blend in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    inner: f64,
    outer: f64,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self { inner: 0.5, outer: 1.0 }
    }
}

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

impl CutoffProfile {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::InvalidProfile(format!("need 0 < inner < outer, got {inner}, {outer}")));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// `chi` as a function of the radius.
    pub fn radial(&self, r: f64) -> f64 {
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let x = (self.outer - r) / (self.outer - self.inner);
        let (a, b) = (psi(x), psi(1.0 - x));
        a / (a + b)
    }

    pub fn eval(&self, zeta: C2) -> f64 {
        self.radial(zeta.norm())
    }
}

/// `chi(zeta) log |zeta|^2`.
pub fn cutoff_log(zeta: C2, profile: &CutoffProfile) -> f64 {
    let chi = profile.eval(zeta);
    if chi == 0.0 {
        0.0
    } else {
        chi * zeta.norm_sqr().ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Estimate {
    /// `1.1 * max(0, -min lambda_min)`.
    pub value: f64,
    /// Smallest eigenvalue seen on the grid.
    pub min_eig: f64,
    pub points: usize,
    /// Grid points skipped because the stencil failed.
    pub excluded: usize,
}

/// Unit vectors used to place grid points on each sphere.
fn grid_directions() -> [C2; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        C2::from_reals([1.0, 0.0, 0.0, 0.0]),
        C2::from_reals([0.0, 0.0, 1.0, 0.0]),
        C2::from_reals([s, 0.0, s, 0.0]),
        C2::from_reals([s, 0.0, 0.0, s]),
    ]
}

/// Numeric `C_1` with `i dd^c(chi log|zeta|^2) >= -C_1 i dd^c |zeta|^2`,
/// from Hessians on `grid_density` radii in `[1/4, 5/4]`.
pub fn c1_estimate(profile: &CutoffProfile, grid_density: usize, h: f64) -> Result<C1Estimate> {
    if grid_density < 2 {
        return Err(Error::InvalidArgument("grid density must be >= 2".into()));
    }
    let (lo, hi) = (0.25, 1.25);
    let pts: Vec<C2> = (0..grid_density)
        .flat_map(|i| {
            let r = lo + (hi - lo) * i as f64 / (grid_density - 1) as f64;
            grid_directions().into_iter().map(move |u| u * r)
        })
        .collect();
    let eigs: Vec<Option<f64>> = pts
        .par_iter()
        .map(|&p| {
            fd_complex_hessian(|q| Ok(cutoff_log(q, profile)), p, h, true)
                .ok()
                .map(|e| e.matrix.min_eig())
        })
        .collect();
    let min_eig = eigs.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let excluded = eigs.iter().filter(|e| e.is_none()).count();
    Ok(C1Estimate { value: 1.1 * (-min_eig).max(0.0), min_eig, points: pts.len(), excluded })
}

/// `delta * phi_tilde(zeta) + chi(zeta - zeta_k) log |zeta - zeta_k|`.
pub fn u_delta_k(pot: &Potential, zeta: C2, delta: f64, zeta_k: C2, profile: &CutoffProfile) -> Result<f64> {
    let base = delta * pot.phi_tilde(zeta.z, zeta.w)?;
    let d = zeta - zeta_k;
    let chi = profile.eval(d);
    if chi == 0.0 {
        return Ok(base);
    }
    Ok(base + chi * d.norm().ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PshFailure {
    pub point: C2,
    pub min_eig: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PshCertificate {
    pub zeta_k: C2,
    pub delta: f64,
    pub c1: f64,
    pub tested: usize,
    /// Fraction with `lambda_min >= delta rho_tilde' - C_1 - tol`.
    pub pass_fraction: f64,
    /// Fraction with `lambda_min >= -tol`.
    pub psh_fraction: f64,
    /// Sampled points whose Hessian could not be formed.
    pub skipped: usize,
    pub failures: Vec<PshFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PshOptions {
    pub samples: usize,
    pub h: f64,
    pub tol: f64,
    pub seed: u64,
    /// Sample points closer than `exclusion * h` to the variety or to
    /// `zeta_k` are discarded.
    pub exclusion: f64,
}

impl Default for PshOptions {
    fn default() -> Self {
        Self { samples: 200, h: 1e-4, tol: 1e-2, seed: 0, exclusion: 10.0 }
    }
}

/// Samples `B(zeta_k, 1) ∩ U` (away from the variety and from `zeta_k`) and
/// checks the lower bound on the Hessian of `u_delta_k` at each point.
pub fn psh_certificate(
    pot: &Potential,
    delta: f64,
    zeta_k: C2,
    c1: f64,
    profile: &CutoffProfile,
    opts: &PshOptions,
) -> Result<PshCertificate> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    let points = sample_ball_in_u(pot, zeta_k, profile.outer(), opts)?;
    let results: Vec<Option<(f64, f64)>> = points
        .par_iter()
        .map(|&p| {
            let est = fd_complex_hessian(|q| u_delta_k(pot, q, delta, zeta_k, profile), p, opts.h, true).ok()?;
            let bound = delta * pot.params().rho_tilde.eval(p.norm_sqr()).d1 - c1;
            Some((est.matrix.min_eig(), bound))
        })
        .collect();
    let mut failures = Vec::new();
    let (mut pass, mut psh, mut tested) = (0usize, 0usize, 0usize);
    for (p, r) in points.iter().zip(&results) {
        let Some((min_eig, bound)) = *r else { continue };
        tested += 1;
        if min_eig >= bound - opts.tol {
            pass += 1;
        } else {
            failures.push(PshFailure { point: *p, min_eig, bound });
        }
        if min_eig >= -opts.tol {
            psh += 1;
        }
    }
    let frac = |k: usize| if tested == 0 { 0.0 } else { k as f64 / tested as f64 };
    Ok(PshCertificate {
        zeta_k,
        delta,
        c1,
        tested,
        pass_fraction: frac(pass),
        psh_fraction: frac(psh),
        skipped: points.len() - tested,
        failures,
    })
}

fn sample_ball_in_u(pot: &Potential, center: C2, radius: f64, opts: &PshOptions) -> Result<Vec<C2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let min_gap = opts.exclusion * opts.h;
    let mut out = Vec::with_capacity(opts.samples);
    let max_attempts = 2000 * opts.samples.max(1);
    for _ in 0..max_attempts {
        if out.len() == opts.samples {
            break;
        }
        let x: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let off = C2::from_reals(x);
        if off.norm_sqr() > 1.0 {
            continue;
        }
        let p = center + off * radius;
        if (p - center).norm() < min_gap {
            continue;
        }
        let Ok(phi) = pot.phi_total(p.z, p.w) else { continue };
        if !(phi < pot.params().t_u) {
            continue;
        }
        match pot.wermer().variety_distance(p.z, p.w, pot.level()) {
            Ok(d) if d >= min_gap => out.push(p),
            _ => {}
        }
    }
    Ok(out)
}

/// Centres on the all-plus sheet of `E_n` above the ray through `direction`
/// in the `z`-plane, at the given distances `|z|`.
pub fn scan_centers(pot: &Potential, direction: Complex64, distances: &[f64]) -> Result<Vec<C2>> {
    let u = direction / direction.norm();
    let sigma = SheetLabel::zeros(pot.level())?;
    distances
        .iter()
        .map(|&s| {
            let z = u * s;
            Ok(C2::new(z, pot.wermer().sheet_value(z, sigma)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub certificates: Vec<PshCertificate>,
    /// Smallest `|zeta_k|` from which on every scanned certificate reaches
    /// `required` pass fraction; `None` if the farthest one does not.
    pub threshold: Option<f64>,
    /// Same, for the fraction of points where `u_delta_k` is plurisubharmonic.
    pub psh_threshold: Option<f64>,
}

fn tail_threshold(certs: &[PshCertificate], ok: impl Fn(&PshCertificate) -> bool) -> Option<f64> {
    let mut threshold = None;
    for cert in certs.iter().rev() {
        if cert.tested > 0 && ok(cert) {
            threshold = Some(cert.zeta_k.norm());
        } else {
            break;
        }
    }
    threshold
}

/// Runs [`psh_certificate`] at each centre and reports the empirical
/// threshold on `|zeta_k|`.
pub fn threshold_scan(
    pot: &Potential,
    delta: f64,
    centers: &[C2],
    c1: f64,
    profile: &CutoffProfile,
    opts: &PshOptions,
    required: f64,
) -> Result<ThresholdScan> {
    let mut certificates = centers
        .iter()
        .map(|&zk| psh_certificate(pot, delta, zk, c1, profile, opts))
        .collect::<Result<Vec<_>>>()?;
    certificates.sort_by(|a, b| a.zeta_k.norm().total_cmp(&b.zeta_k.norm()));
    let threshold = tail_threshold(&certificates, |c| c.pass_fraction >= required);
    let psh_threshold = tail_threshold(&certificates, |c| c.psh_fraction >= required);
    Ok(ThresholdScan { certificates, threshold, psh_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialParams;

    #[test]
    fn cutoff_plateaus_and_monotone() {
        let p = CutoffProfile::default();
        assert_eq!(p.radial(0.3), 1.0);
        assert_eq!(p.radial(0.5), 1.0);
        assert_eq!(p.radial(1.2), 0.0);
        assert_eq!(p.radial(1.0), 0.0);
        let mid = p.radial(0.75);
        assert!((mid - 0.5).abs() < 1e-15);
        let vals: Vec<f64> = (0..=100).map(|i| p.radial(0.5 + 0.005 * i as f64)).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        assert!(CutoffProfile::new(1.0, 0.5).is_err());
    }

    #[test]
    fn u_is_scaled_phi_tilde_away_from_pole() {
        let pot = Potential::new(PotentialParams::default()).unwrap();
        let zk = C2::from_reals([0.05, 0.0, 0.0, 0.0]);
        let far = C2::from_reals([0.05, 0.0, 1.2, 0.0]);
        let p = C2::from_reals([0.02, 0.01, 0.01, -0.01]);
        let prof = CutoffProfile::default();
        if let Ok(t) = pot.phi_tilde(far.z, far.w) {
            assert_eq!(u_delta_k(&pot, far, 0.1, zk, &prof).unwrap(), 0.1 * t);
        }
        let t = pot.phi_tilde(p.z, p.w).unwrap();
        assert!(u_delta_k(&pot, p, 0.1, zk, &prof).unwrap() <= 0.1 * t);
        assert_eq!(u_delta_k(&pot, zk, 0.1, zk, &prof).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn c1_is_positive_and_stable() {
        let prof = CutoffProfile::default();
        let a = c1_estimate(&prof, 41, 1e-3).unwrap();
        let b = c1_estimate(&prof, 81, 1e-3).unwrap();
        assert!(a.value > 0.0);
        assert_eq!(a.excluded, 0);
        assert!((a.value - b.value).abs() < 0.05 * b.value);
    }
}
