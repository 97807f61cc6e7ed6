//! Branches of the multivalued sum `sum_k eps_k sqrt(z - a_k)`, the finite
//! stage varieties `E_n`, their vertical slices and the potentials
//! `phi_n = 2^{-n} log |P_n|`.
//!
//! Square roots use the principal branch (cut along the nonpositive real axis
//! of the radicand, `Im >= 0` on the cut). A [`SheetLabel`] then names one
//! value of the sum canonically: bit `k - 1` set means `sigma_k = -1`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{pole, EpsilonSchedule};

pub const DEFAULT_N_MAX: usize = 22;

/// Relative size below which a linear factor `w - w_sigma` counts as zero.
const ON_VARIETY_REL: f64 = 8.0 * f64::EPSILON;

/// Principal square root with `Re >= 0` and `Im >= 0` on the cut.
pub fn principal_sqrt(c: Complex64) -> Complex64 {
    if c.im == 0.0 {
        if c.re >= 0.0 {
            Complex64::new(c.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-c.re).sqrt())
        }
    } else {
        c.sqrt()
    }
}

/// `s_k(z) = sqrt(z - a_k)` on the principal branch.
pub fn sqrt_branch(z: Complex64, k: usize) -> Result<Complex64> {
    let a = pole(k);
    if z == a {
        return Err(Error::PoleHit { z, index: k });
    }
    Ok(principal_sqrt(z - a))
}

/// Sign vector `sigma in {+1,-1}^len` packed into a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SheetLabel {
    bits: u64,
    len: u8,
}

impl SheetLabel {
    pub const MAX_LEN: usize = 64;

    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len > Self::MAX_LEN {
            return Err(Error::InvalidArgument(format!("sheet label length {len} exceeds 64")));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidArgument(format!("bits {bits:#x} do not fit in {len} signs")));
        }
        Ok(Self { bits, len: len as u8 })
    }

    /// The all-plus label.
    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << i,
                _ => return Err(Error::InvalidArgument(format!("sign must be +-1, got {s}"))),
            }
        }
        Self::new(bits, signs.len())
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    fn mask(self) -> u64 {
        if self.len == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        }
    }

    /// Sign at 1-based position `i` within the label.
    pub fn sign(self, i: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.len());
        if self.bits >> (i - 1) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn signs(self) -> impl Iterator<Item = f64> {
        (1..=self.len()).map(move |i| self.sign(i))
    }

    /// Label with the sign at 1-based position `i` flipped.
    pub fn flipped(self, i: usize) -> Self {
        debug_assert!(i >= 1 && i <= self.len());
        Self { bits: self.bits ^ (1 << (i - 1)), len: self.len }
    }

    /// `-sigma`.
    pub fn negated(self) -> Self {
        Self { bits: !self.bits & self.mask(), len: self.len }
    }

    pub fn xor(self, other: Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        Self { bits: self.bits ^ other.bits, len: self.len }
    }

    /// 1-based positions where the two labels differ.
    pub fn differing_positions(self, other: Self) -> Vec<usize> {
        let d = self.bits ^ other.bits;
        (1..=self.len()).filter(|&i| d >> (i - 1) & 1 == 1).collect()
    }

    /// First `k` signs.
    pub fn head(self, k: usize) -> Self {
        let k = k.min(self.len());
        let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        Self { bits: self.bits & mask, len: k as u8 }
    }

    /// Signs after the first `k`.
    pub fn tail(self, k: usize) -> Self {
        let k = k.min(self.len());
        let bits = if k == 64 { 0 } else { self.bits >> k };
        Self { bits, len: (self.len() - k) as u8 }
    }

    /// Concatenation `(self, rest)`.
    pub fn concat(self, rest: Self) -> Result<Self> {
        let len = self.len() + rest.len();
        if len > Self::MAX_LEN {
            return Err(Error::InvalidArgument("concatenated label longer than 64".into()));
        }
        let shifted = if self.len() == 64 { 0 } else { rest.bits << self.len };
        Self::new(self.bits | shifted, len)
    }
}

impl fmt::Display for SheetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.signs() {
            f.write_str(if s > 0.0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// How [`WermerSet::phi_n`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMode {
    /// `phi_n(w) = (phi_{n-1}(w - c_n) + phi_{n-1}(w + c_n)) / 2`, O(n) memory.
    Recursive,
    /// Materialise all `2^n` roots and average `log |w - root|`.
    DirectOracle,
}

/// All values of `sum_{k=first}^{last} sigma_k eps_k s_k(z0)`.
#[derive(Debug, Clone)]
pub struct SliceSet {
    pub z0: Complex64,
    pub first: usize,
    pub last: usize,
    /// Indexed by `SheetLabel::bits()`.
    pub points: Vec<Complex64>,
    /// Lower bound on the distance between the two child clusters at each
    /// prefix depth `d = 0..len`: `2|c_{d+1}| - 2 sum_{j>d+1} |c_j|`.
    pub cluster_gap: Vec<f64>,
}

impl SliceSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn width(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn point(&self, sigma: SheetLabel) -> Complex64 {
        self.points[sigma.bits() as usize]
    }

    /// Number of pairwise distinct values (exact comparison).
    pub fn distinct_count(&self) -> usize {
        let mut keys: Vec<(u64, u64)> =
            self.points.iter().map(|p| (canonical_bits(p.re), canonical_bits(p.im))).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }

    /// True when the point set equals its negation exactly, as a multiset.
    pub fn is_symmetric(&self) -> bool {
        let mut a: Vec<(u64, u64)> =
            self.points.iter().map(|p| (canonical_bits(p.re), canonical_bits(p.im))).collect();
        let mut b: Vec<(u64, u64)> =
            self.points.iter().map(|p| (canonical_bits(-p.re), canonical_bits(-p.im))).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

fn canonical_bits(x: f64) -> u64 {
    // identify +0.0 and -0.0
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

/// Separation certificate for the Cantor-like structure of a slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCertificate {
    pub valid: bool,
    /// Depth `d` (number of fixed leading signs) with the smallest gap.
    pub worst_depth: usize,
    /// Smallest gap over all depths.
    pub margin: f64,
}

/// The finite-stage varieties `E_n` for one epsilon schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct WermerSet {
    sched: EpsilonSchedule,
    n_max: usize,
}

impl Default for WermerSet {
    fn default() -> Self {
        Self::new(EpsilonSchedule::default())
    }
}

impl WermerSet {
    pub fn new(sched: EpsilonSchedule) -> Self {
        Self { sched, n_max: DEFAULT_N_MAX }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn schedule(&self) -> &EpsilonSchedule {
        &self.sched
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn check_window(&self, first: usize, last: usize) -> Result<()> {
        if first == 0 || last < first {
            return Err(Error::InvalidArgument(format!("bad level window {first}..={last}")));
        }
        let width = last + 1 - first;
        if width > self.n_max || width > SheetLabel::MAX_LEN {
            return Err(Error::LevelTooLarge { level: width, max: self.n_max.min(64) });
        }
        Ok(())
    }

    /// `c_k = eps_k s_k(z)` for `k = first..=last`.
    pub fn radicals(&self, z: Complex64, first: usize, last: usize) -> Result<Vec<Complex64>> {
        (first..=last).map(|k| Ok(self.sched.epsilon(k) * sqrt_branch(z, k)?)).collect()
    }

    /// `sum_{k=1}^{n} sigma_k eps_k s_k(z)` with `n = sigma.len()`.
    pub fn sheet_value(&self, z: Complex64, sigma: SheetLabel) -> Result<Complex64> {
        self.window_value(z, 1, sigma)
    }

    /// `sum_{k=first}^{first+len-1} sigma_k eps_k s_k(z)`.
    pub fn window_value(&self, z: Complex64, first: usize, sigma: SheetLabel) -> Result<Complex64> {
        if sigma.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let c = self.radicals(z, first, first + sigma.len() - 1)?;
        Ok(signed_sum(&c, sigma))
    }

    /// Derivative in `z` of the sheet `sigma` of the window starting at `first`.
    pub fn window_derivative(
        &self,
        z: Complex64,
        first: usize,
        sigma: SheetLabel,
    ) -> Result<Complex64> {
        let mut d = Complex64::new(0.0, 0.0);
        for (i, s) in sigma.signs().enumerate() {
            let k = first + i;
            let c = self.sched.epsilon(k) * sqrt_branch(z, k)?;
            d += s * c / (2.0 * (z - pole(k)));
        }
        Ok(d)
    }

    /// The slice `E_n(z0)`: all `2^n` sheet values.
    pub fn slice_points(&self, z0: Complex64, n: usize) -> Result<SliceSet> {
        self.window_slice(z0, 1, n)
    }

    /// All values of the window sum over `first..=last` at `z0`.
    pub fn window_slice(&self, z0: Complex64, first: usize, last: usize) -> Result<SliceSet> {
        self.check_window(first, last)?;
        let c = self.radicals(z0, first, last)?;
        let mut points = Vec::with_capacity(1 << c.len());
        points.push(Complex64::new(0.0, 0.0));
        for &ck in &c {
            let len = points.len();
            for i in 0..len {
                let v = points[i];
                points[i] = v + ck;
                points.push(v - ck);
            }
        }
        Ok(SliceSet { z0, first, last, points, cluster_gap: cluster_gaps(&c) })
    }

    /// Checks that at every prefix depth the two child clusters of the slice
    /// `E_n(z0)` are separated.
    pub fn cluster_certificate(&self, z0: Complex64, n: usize) -> Result<ClusterCertificate> {
        self.check_window(1, n)?;
        let gaps = cluster_gaps(&self.radicals(z0, 1, n)?);
        let (worst_depth, margin) = gaps
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n >= 1");
        Ok(ClusterCertificate { valid: margin > 0.0, worst_depth, margin })
    }

    /// `phi_n(z, w) = 2^{-n} log |P_n(z, w)|`; `-inf` on `E_n`.
    pub fn phi_n(&self, z: Complex64, w: Complex64, n: usize, mode: PhiMode) -> Result<f64> {
        self.check_window(1, n)?;
        let c = self.radicals(z, 1, n)?;
        let scale = w.norm() + c.iter().map(|x| x.norm()).sum::<f64>();
        let zero = ON_VARIETY_REL * scale;
        Ok(match mode {
            PhiMode::Recursive => phi_recursive(w, &c, zero),
            PhiMode::DirectOracle => {
                let slice = self.slice_points(z, n)?;
                let mut sum = 0.0;
                for r in &slice.points {
                    let d = (w - r).norm();
                    if d <= zero {
                        return Ok(f64::NEG_INFINITY);
                    }
                    sum += d.ln();
                }
                sum / slice.len() as f64
            }
        })
    }

    /// Nearest sheet of `E_n` above `z` and its vertical distance to `w`.
    ///
    /// Branch and bound over the cluster tree: a prefix with partial sum `v`
    /// and remaining radius `T` cannot get closer than `|w - v| - T`.
    pub fn nearest_sheet(&self, z: Complex64, w: Complex64, n: usize) -> Result<(SheetLabel, f64)> {
        self.check_window(1, n)?;
        let c = self.radicals(z, 1, n)?;
        let mut rest = vec![0.0; n + 1];
        for k in (0..n).rev() {
            rest[k] = rest[k + 1] + c[k].norm();
        }
        let mut best = (0u64, f64::INFINITY);
        let mut stack = vec![(Complex64::new(0.0, 0.0), 0usize, 0u64)];
        while let Some((v, depth, bits)) = stack.pop() {
            if (w - v).norm() - rest[depth] >= best.1 {
                continue;
            }
            if depth == n {
                best = (bits, (w - v).norm());
                continue;
            }
            let plus = v + c[depth];
            let minus = v - c[depth];
            let nb = bits | 1 << depth;
            // push the farther child first so the nearer one is explored first
            if (w - plus).norm() <= (w - minus).norm() {
                stack.push((minus, depth + 1, nb));
                stack.push((plus, depth + 1, bits));
            } else {
                stack.push((plus, depth + 1, bits));
                stack.push((minus, depth + 1, nb));
            }
        }
        Ok((SheetLabel::new(best.0, n)?, best.1))
    }

    /// Estimated Euclidean distance from `(z, w)` to `E_n`: the vertical gap to
    /// the nearest sheet divided by `sqrt(1 + |w_sigma'(z)|^2)`.
    pub fn variety_distance(&self, z: Complex64, w: Complex64, n: usize) -> Result<f64> {
        let (sigma, dv) = self.nearest_sheet(z, w, n)?;
        let slope = self.window_derivative(z, 1, sigma)?.norm();
        Ok(dv / (1.0 + slope * slope).sqrt())
    }
}

fn signed_sum(c: &[Complex64], sigma: SheetLabel) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (ck, s) in c.iter().zip(sigma.signs()) {
        acc = if s > 0.0 { acc + ck } else { acc - ck };
    }
    acc
}

fn cluster_gaps(c: &[Complex64]) -> Vec<f64> {
    let n = c.len();
    let mut rest = vec![0.0; n + 1];
    for k in (0..n).rev() {
        rest[k] = rest[k + 1] + c[k].norm();
    }
    (0..n).map(|d| 2.0 * c[d].norm() - 2.0 * rest[d + 1]).collect()
}

fn phi_recursive(w: Complex64, c: &[Complex64], zero: f64) -> f64 {
    match c.len() {
        0 => leaf_log(w, zero),
        1 => {
            let a = w - c[0];
            let b = w + c[0];
            let (na, nb) = (a.norm(), b.norm());
            if na <= zero || nb <= zero {
                return f64::NEG_INFINITY;
            }
            0.5 * (na * nb).ln()
        }
        k => {
            let ck = c[k - 1];
            let rest = &c[..k - 1];
            0.5 * (phi_recursive(w - ck, rest, zero) + phi_recursive(w + ck, rest, zero))
        }
    }
}

fn leaf_log(w: Complex64, zero: f64) -> f64 {
    let n = w.norm();
    if n <= zero {
        f64::NEG_INFINITY
    } else {
        n.ln()
    }
}

/// `max(sup_a d(a, B), sup_b d(b, A))` for finite point sets in C.
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.par_iter()
        .map(|p| b.iter().map(|q| (p - q).norm_sqr()).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_level() -> WermerSet {
        WermerSet::new(EpsilonSchedule::custom(vec![0.5, 1.0 / 16.0], 1.0 / 16.0).unwrap())
    }

    #[test]
    fn sqrt_branch_examples() {
        assert_eq!(sqrt_branch(c(1.0, 0.0), 1).unwrap(), c(1.0, 0.0));
        assert_eq!(sqrt_branch(c(-1.0, 0.0), 1).unwrap(), c(0.0, 1.0));
        assert_eq!(sqrt_branch(c(2.0, 0.0), 2).unwrap(), c(1.0, 0.0));
        // -0.0 imaginary part stays on the Im >= 0 side of the cut
        assert_eq!(sqrt_branch(c(-4.0, -0.0), 1).unwrap(), c(0.0, 2.0));
        assert!(matches!(sqrt_branch(c(1.0, 1.0), 3), Err(Error::PoleHit { index: 3, .. })));
    }

    #[test]
    fn sqrt_branch_squares_back() {
        for (re, im) in [(0.3, 0.7), (-2.0, 1e-9), (-2.0, -1e-9), (5.0, -3.0), (-0.25, 0.0)] {
            let z = c(re, im);
            let s = sqrt_branch(z, 1).unwrap();
            assert!(s.re >= 0.0);
            assert!((s * s - z).norm() <= 4.0 * f64::EPSILON * z.norm());
        }
    }

    #[test]
    fn sheet_value_example() {
        let ws = two_level();
        let plus = SheetLabel::zeros(2).unwrap();
        let v = ws.sheet_value(c(2.0, 0.0), plus).unwrap();
        let expected = 2f64.sqrt() / 2.0 + 1.0 / 16.0;
        assert!((v - c(expected, 0.0)).norm() < 1e-15);
        assert!((v.re - 0.769_607).abs() < 1e-6);
        let neg = ws.sheet_value(c(2.0, 0.0), plus.negated()).unwrap();
        assert_eq!(neg, -v);
    }

    #[test]
    fn sheet_value_vanishes_at_pole() {
        let ws = two_level();
        let s = SheetLabel::zeros(1).unwrap();
        let v = ws.sheet_value(c(1e-12, 0.0), s).unwrap();
        assert!((v.re - 0.5e-6).abs() < 1e-18);
    }

    #[test]
    fn slice_example() {
        let ws = two_level();
        let s = ws.slice_points(c(2.0, 0.0), 2).unwrap();
        let mut re: Vec<f64> = s.points.iter().map(|p| p.re).collect();
        re.sort_by(f64::total_cmp);
        let h = 2f64.sqrt() / 2.0;
        let expected = [-h - 0.0625, -h + 0.0625, h - 0.0625, h + 0.0625];
        for (a, b) in re.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((expected[3] - 0.769_607).abs() < 1e-6 && (expected[2] - 0.644_607).abs() < 1e-6);
        assert!(s.is_symmetric());
        let one = ws.slice_points(c(2.0, 0.0), 1).unwrap();
        assert_eq!(one.points, vec![c(h, 0.0), c(-h, 0.0)]);
    }

    #[test]
    fn slice_indices_match_sheet_values() {
        let ws = WermerSet::default();
        let z = c(0.3, -1.7);
        let s = ws.slice_points(z, 6).unwrap();
        for bits in 0..64 {
            let sigma = SheetLabel::new(bits, 6).unwrap();
            assert_eq!(s.point(sigma), ws.sheet_value(z, sigma).unwrap());
        }
    }

    #[test]
    fn level_limit() {
        let ws = WermerSet::default().with_n_max(4);
        assert!(matches!(
            ws.slice_points(c(0.5, 0.5), 5),
            Err(Error::LevelTooLarge { level: 5, max: 4 })
        ));
    }

    #[test]
    fn phi_far_from_pole_is_log_w() {
        let ws = WermerSet::default();
        let w = c(3.0, 1.0);
        let p = ws.phi_n(c(1e-9, 0.0), w, 1, PhiMode::Recursive).unwrap();
        assert!((p - w.norm().ln()).abs() < 1e-9);
    }

    #[test]
    fn phi_on_variety_is_neg_infinity() {
        let ws = WermerSet::default();
        let z = c(0.4, 0.2);
        for bits in [0, 5, 63, 17] {
            let sigma = SheetLabel::new(bits, 6).unwrap();
            let w = ws.sheet_value(z, sigma).unwrap();
            for mode in [PhiMode::Recursive, PhiMode::DirectOracle] {
                assert_eq!(ws.phi_n(z, w, 6, mode).unwrap(), f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn phi_modes_agree_example() {
        let ws = WermerSet::default();
        let (z, w) = (c(2.0, 0.0), c(5.0, 0.0));
        let a = ws.phi_n(z, w, 10, PhiMode::Recursive).unwrap();
        let b = ws.phi_n(z, w, 10, PhiMode::DirectOracle).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn hausdorff_examples() {
        let a = [c(0.0, 0.0)];
        let b = [c(3.0, 0.0)];
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), 3.0);
        let s = [c(1.0, 2.0), c(-1.0, 0.5)];
        assert_eq!(hausdorff_distance(&s, &s).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[], &s), Err(Error::EmptySet));
    }

    #[test]
    fn telescoping_small_levels_brute_force() {
        let ws = WermerSet::default();
        for z in [c(0.5, 0.5), c(2.3, -0.7), c(-1.2, 3.1)] {
            for n in 1..8 {
                let a = ws.slice_points(z, n).unwrap();
                let b = ws.slice_points(z, n + 1).unwrap();
                let shift = (ws.schedule().epsilon(n + 1) * sqrt_branch(z, n + 1).unwrap()).norm();
                let d = hausdorff_distance(&a.points, &b.points).unwrap();
                assert!(d <= shift + 1e-15);
                // disjoint clusters: every level-(n+1) point is exactly `shift` from its parent
                assert!((d - shift).abs() < 1e-14, "z={z} n={n} d={d} shift={shift}");
            }
        }
    }

    #[test]
    fn certificate_examples() {
        let g = WermerSet::new(EpsilonSchedule::gaussian(1.0).unwrap());
        let cert = g.cluster_certificate(c(0.5, 0.5), 12).unwrap();
        assert!(cert.valid, "{cert:?}");
        let d = WermerSet::default();
        for z in [c(0.5, 0.5), c(2.3, -0.7)] {
            let cert = d.cluster_certificate(z, 12).unwrap();
            assert!(cert.valid);
            assert_eq!(d.slice_points(z, 12).unwrap().distinct_count(), 4096);
        }
    }

    #[test]
    fn nearest_sheet_matches_brute_force() {
        let ws = WermerSet::default();
        let z = c(-0.7, 0.35);
        let slice = ws.slice_points(z, 9).unwrap();
        for w in [c(0.0, 0.0), c(0.1, -0.05), c(0.3, 0.3), c(-2.0, 1.0)] {
            let (label, d) = ws.nearest_sheet(z, w, 9).unwrap();
            let brute = slice.points.iter().map(|p| (w - p).norm()).fold(f64::INFINITY, f64::min);
            assert!((d - brute).abs() < 1e-15);
            assert!(((w - slice.point(label)).norm() - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn label_operations() {
        let s = SheetLabel::from_signs(&[1, -1, -1, 1]).unwrap();
        assert_eq!(s.to_string(), "+--+");
        assert_eq!(s.negated().to_string(), "-++-");
        assert_eq!(s.flipped(1).to_string(), "---+");
        assert_eq!(s.head(2).to_string(), "+-");
        assert_eq!(s.tail(2).to_string(), "-+");
        assert_eq!(s.head(2).concat(s.tail(2)).unwrap(), s);
        assert_eq!(s.differing_positions(s.flipped(3).flipped(4)), vec![3, 4]);
        assert!(SheetLabel::new(0b100, 2).is_err());
        assert!(SheetLabel::from_signs(&[1, 0]).is_err());
    }
}
