//! Numerical checks: finite-difference complex Hessians and the Levi bound
//! for `phi_tilde`, Lelong ratio profiles, and Monte Carlo volumes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::point::C2;
use crate::potentials::{PointClass, Potential};

/// Samples per RNG stream in Monte Carlo loops. Part of the reproducibility
/// contract: changing it changes every estimate.
const MC_CHUNK: u64 = 4096;

/// Hermitian 2x2 matrix `[[h11, h12], [conj(h12), h22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian2 {
    pub h11: f64,
    pub h22: f64,
    pub h12: Complex64,
}

impl Hermitian2 {
    pub fn identity() -> Self {
        Self { h11: 1.0, h22: 1.0, h12: Complex64::new(0.0, 0.0) }
    }

    /// Entry `(i, j)` with 0-based indices.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match (i, j) {
            (0, 0) => self.h11.into(),
            (1, 1) => self.h22.into(),
            (0, 1) => self.h12,
            (1, 0) => self.h12.conj(),
            _ => panic!("index ({i}, {j}) out of range for a 2x2 matrix"),
        }
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.h11 + self.h22);
        let half = 0.5 * (self.h11 - self.h22);
        let r = half.hypot(self.h12.norm());
        (mean - r, mean + r)
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues().0
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let (a, b) = self.eigenvalues();
        a.abs().max(b.abs())
    }

    /// `v^* H v`-style Levi form `sum_ij H_ij v_i conj(v_j)`.
    pub fn form(&self, v: C2) -> f64 {
        self.h11 * v.z.norm_sqr()
            + self.h22 * v.w.norm_sqr()
            + 2.0 * (self.h12 * v.z * v.w.conj()).re
    }

    fn combine(self, other: Self, a: f64, b: f64) -> Self {
        Self {
            h11: a * self.h11 + b * other.h11,
            h22: a * self.h22 + b * other.h22,
            h12: a * self.h12 + b * other.h12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianEstimate {
    /// Entries `d^2 f / d zeta_i d conj(zeta_j)`.
    pub matrix: Hermitian2,
    pub step: f64,
    /// 2 for plain central differences, 4 after one Richardson step.
    pub richardson_order: u32,
}

const E1: C2 = C2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
const E2: C2 = C2::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
const E12: C2 = C2::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
const E1I2: C2 = C2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
const I: Complex64 = Complex64::new(0.0, 1.0);

fn stencil_value<F>(f: &F, at: C2) -> Result<f64>
where
    F: Fn(C2) -> Result<f64>,
{
    match f(at) {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::StencilHitsSingularity { at }),
    }
}

/// Central-difference complex Hessian at step `h`: the Levi form in direction
/// `v` is a discrete Laplacian along the complex line `zeta + t v`, and the
/// four directions `e1, e2, e1 + e2, e1 + i e2` determine the matrix.
fn hessian_at_step<F>(f: &F, zeta: C2, f0: f64, h: f64) -> Result<Hermitian2>
where
    F: Fn(C2) -> Result<f64>,
{
    let levi = |v: C2| -> Result<f64> {
        let hv = v * h;
        let ihv = hv.scale(I);
        let s = stencil_value(f, zeta + hv)?
            + stencil_value(f, zeta - hv)?
            + stencil_value(f, zeta + ihv)?
            + stencil_value(f, zeta - ihv)?;
        Ok((s - 4.0 * f0) / (4.0 * h * h))
    };
    let h11 = levi(E1)?;
    let h22 = levi(E2)?;
    let re = 0.5 * (levi(E12)? - h11 - h22);
    let im = 0.5 * (levi(E1I2)? - h11 - h22);
    Ok(Hermitian2 { h11, h22, h12: Complex64::new(re, im) })
}

/// Finite-difference complex Hessian of `f` at `zeta`, optionally improved by
/// one Richardson step with `h` and `h / 2`.
pub fn fd_complex_hessian<F>(f: F, zeta: C2, h: f64, richardson: bool) -> Result<HessianEstimate>
where
    F: Fn(C2) -> Result<f64>,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {h}")));
    }
    let f0 = stencil_value(&f, zeta)?;
    let coarse = hessian_at_step(&f, zeta, f0, h)?;
    if !richardson {
        return Ok(HessianEstimate { matrix: coarse, step: h, richardson_order: 2 });
    }
    let fine = hessian_at_step(&f, zeta, f0, 0.5 * h)?;
    Ok(HessianEstimate { matrix: fine.combine(coarse, 4.0 / 3.0, -1.0 / 3.0), step: h, richardson_order: 4 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeviCheck {
    pub min_eig: f64,
    /// `rho_tilde'(|zeta|^2)`.
    pub bound: f64,
    pub pass: bool,
    /// Estimated distance from the point to the finite-stage variety.
    pub variety_distance: f64,
}

/// Compares the smallest eigenvalue of the Hessian of `phi_tilde` with
/// `rho_tilde'(|zeta|^2)`.
pub fn levi_check(pot: &Potential, zeta: C2, h: f64, tol: f64) -> Result<LeviCheck> {
    let eval = pot.evaluate(zeta)?;
    match eval.class {
        PointClass::OnVariety => {
            return Err(Error::TooCloseToVariety { distance: 0.0, required: 10.0 * h })
        }
        PointClass::OutsideU => {
            return Err(Error::InvalidArgument(format!("point is outside U (phi = {})", eval.phi)))
        }
        PointClass::InA | PointClass::InUNotA => {}
    }
    let distance = pot.wermer().variety_distance(zeta.z, zeta.w, pot.level())?;
    if distance < 10.0 * h {
        return Err(Error::TooCloseToVariety { distance, required: 10.0 * h });
    }
    let est = fd_complex_hessian(|p| pot.phi_tilde(p.z, p.w), zeta, h, true)?;
    let bound = pot.params().rho_tilde.eval(zeta.norm_sqr()).d1;
    let min_eig = est.matrix.min_eig();
    let pass = tol == f64::INFINITY || min_eig >= bound - tol;
    Ok(LeviCheck { min_eig, bound, pass, variety_distance: distance })
}

/// Seeded points of `A` inside `bx` at estimated distance at least
/// `10 h` from the variety, suitable for [`levi_check`]. Stops after
/// `max_attempts` draws.
pub fn sample_levi_points(
    pot: &Potential,
    bx: &Box4,
    count: usize,
    h: f64,
    seed: u64,
    max_attempts: u64,
) -> Result<Vec<C2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let p = bx.at(std::array::from_fn(|_| rng.random::<f64>()));
        let Ok(e) = pot.evaluate(p) else { continue };
        if e.class != PointClass::InA {
            continue;
        }
        if pot.wermer().variety_distance(p.z, p.w, pot.level())? >= 10.0 * h {
            out.push(p);
        }
    }
    Ok(out)
}

/// Axis-aligned box in R^4 = C^2, coordinates `(Re z, Im z, Re w, Im w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box4 {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Box4 {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Result<Self> {
        if (0..4).any(|i| !(lo[i].is_finite() && hi[i].is_finite() && hi[i] > lo[i])) {
            return Err(Error::InvalidArgument(format!("degenerate box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-half, half]^4`.
    pub fn cube(half: f64) -> Result<Self> {
        Self::around(C2::default(), half)
    }

    /// Cube of half-width `half` centred at `center`.
    pub fn around(center: C2, half: f64) -> Result<Self> {
        let c = center.to_reals();
        Self::new(c.map(|x| x - half), c.map(|x| x + half))
    }

    pub fn volume(&self) -> f64 {
        (0..4).map(|i| self.hi[i] - self.lo[i]).product()
    }

    /// Point at relative coordinates `u in [0,1)^4`.
    pub fn at(&self, u: [f64; 4]) -> C2 {
        C2::from_reals(std::array::from_fn(|i| self.lo[i] + (self.hi[i] - self.lo[i]) * u[i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
    /// Samples where the predicate failed to evaluate; counted as misses.
    pub errors: u64,
}

impl VolumeEstimate {
    fn from_counts(hits: u64, errors: u64, samples: u64, seed: u64, volume: f64) -> Self {
        let p = hits as f64 / samples as f64;
        Self {
            value: p * volume,
            stderr: volume * (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            seed,
            hits,
            errors,
        }
    }
}

/// Deterministic uniform points in `bx`: sample `i` comes from stream
/// `i / 4096` of a ChaCha8 generator keyed by `seed`, so the sequence does not
/// depend on thread count.
fn for_each_sample<T, F, R>(bx: &Box4, n: u64, seed: u64, init: T, visit: F, reduce: R) -> T
where
    T: Clone + Send + Sync,
    F: Fn(&mut T, C2) + Sync,
    R: Fn(T, T) -> T + Sync,
{
    let chunks = n.div_ceil(MC_CHUNK);
    // Collect per-chunk results in order, then fold serially: the reduction
    // order is fixed, so floating-point accumulators stay reproducible too.
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut acc = init.clone();
            let end = ((c + 1) * MC_CHUNK).min(n);
            for _ in c * MC_CHUNK..end {
                let u: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                visit(&mut acc, bx.at(u));
            }
            acc
        })
        .collect();
    parts.into_iter().fold(init, reduce)
}

/// Monte Carlo volume of `{pred}` inside `bx`.
pub fn mc_volume<P>(pred: P, bx: &Box4, n: u64, seed: u64) -> Result<VolumeEstimate>
where
    P: Fn(C2) -> Result<bool> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let (hits, errors) = for_each_sample(
        bx,
        n,
        seed,
        (0u64, 0u64),
        |acc, p| match pred(p) {
            Ok(true) => acc.0 += 1,
            Ok(false) => {}
            Err(_) => acc.1 += 1,
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    Ok(VolumeEstimate::from_counts(hits, errors, n, seed, bx.volume()))
}

/// Monte Carlo volumes of `{value(p) is Some(v) and v <= t}` for several
/// thresholds `t`, sharing one sample stream.
pub fn mc_sublevel_volumes<V>(
    value: V,
    thresholds: &[f64],
    bx: &Box4,
    n: u64,
    seed: u64,
) -> Result<Vec<VolumeEstimate>>
where
    V: Fn(C2) -> Result<Option<f64>> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let k = thresholds.len();
    let (hits, errors) = for_each_sample(
        bx,
        n,
        seed,
        (vec![0u64; k], 0u64),
        |acc, p| match value(p) {
            Ok(Some(v)) => {
                for (h, &t) in acc.0.iter_mut().zip(thresholds) {
                    if v <= t {
                        *h += 1;
                    }
                }
            }
            Ok(None) => {}
            Err(_) => acc.1 += 1,
        },
        |mut a, b| {
            for (x, y) in a.0.iter_mut().zip(b.0) {
                *x += y;
            }
            (a.0, a.1 + b.1)
        },
    );
    Ok(hits
        .into_iter()
        .map(|h| VolumeEstimate::from_counts(h, errors, n, seed, bx.volume()))
        .collect())
}

/// Volumes of `{zeta in K ∩ A : phi_tilde(zeta) <= -a / delta}` for each delta.
pub fn sublevel_decay_profile(
    pot: &Potential,
    k: &Box4,
    a: f64,
    deltas: &[f64],
    n: u64,
    seed: u64,
) -> Result<Vec<VolumeEstimate>> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!("a must be > 0, got {a}")));
    }
    if deltas.is_empty()
        || deltas.iter().any(|d| !(d.is_finite() && *d > 0.0))
        || deltas.windows(2).any(|d| !(d[1] < d[0]))
    {
        return Err(Error::InvalidArgument("deltas must be positive and strictly decreasing".into()));
    }
    let thresholds: Vec<f64> = deltas.iter().map(|d| -a / d).collect();
    mc_sublevel_volumes(
        |p| {
            let e = pot.evaluate(p)?;
            Ok(match e.class {
                PointClass::InA | PointClass::OnVariety => e.phi_tilde,
                _ => None,
            })
        },
        &thresholds,
        k,
        n,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioProfile {
    pub radii: Vec<f64>,
    /// `min_u f(zeta0 + r u) / log r` per radius; `NaN` when no direction
    /// produced a finite value.
    pub ratios: Vec<f64>,
    /// Directions that failed to evaluate, per radius.
    pub failures: Vec<usize>,
}

/// Unit directions for Lelong sampling: the four real coordinate directions
/// followed by `count` uniformly distributed ones.
pub fn sample_directions(count: usize, seed: u64) -> Vec<C2> {
    let mut dirs = vec![
        C2::from_reals([1.0, 0.0, 0.0, 0.0]),
        C2::from_reals([0.0, 1.0, 0.0, 0.0]),
        C2::from_reals([0.0, 0.0, 1.0, 0.0]),
        C2::from_reals([0.0, 0.0, 0.0, 1.0]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < count + 4 {
        let x: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let p = C2::from_reals(x);
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            dirs.push(p * (1.0 / n));
        }
    }
    dirs
}

/// Lelong-type ratio profile of `f` at `zeta0`.
pub fn lelong_ratio_profile<F>(zeta0: C2, f: F, radii: &[f64], directions: &[C2]) -> Result<RatioProfile>
where
    F: Fn(C2) -> Result<f64> + Sync,
{
    if radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) || radii.windows(2).any(|r| !(r[1] < r[0])) {
        return Err(Error::InvalidArgument("radii must lie in (0,1) and strictly decrease".into()));
    }
    if directions.is_empty() {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    let rows: Vec<(f64, usize)> = radii
        .par_iter()
        .map(|&r| {
            let lr = r.ln();
            let mut best = f64::INFINITY;
            let mut fails = 0;
            for &u in directions {
                match f(zeta0 + u * r) {
                    Ok(v) if v.is_finite() => best = best.min(v / lr),
                    Ok(v) if v == f64::NEG_INFINITY => {}
                    _ => fails += 1,
                }
            }
            (if best.is_finite() { best } else { f64::NAN }, fails)
        })
        .collect();
    Ok(RatioProfile {
        radii: radii.to_vec(),
        ratios: rows.iter().map(|r| r.0).collect(),
        failures: rows.iter().map(|r| r.1).collect(),
    })
}
