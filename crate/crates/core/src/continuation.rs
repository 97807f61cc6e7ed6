//! Analytic continuation of the square-root branches along planar curves:
//! lifting, monodromy, connecting sheets, the level split
//! `E_n = E_m ⊕ E_{m+1,n}` and the approximation walk between points of `E_N`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{gauss_point, pole, tail_delta_bound, EpsilonSchedule, SpiralIndex};
use crate::point::C2;
use crate::wermer::{principal_sqrt, SheetLabel, WermerSet};

/// Sheets of `sum_{k=first}^{last} sigma_k eps_k s_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelWindow {
    first: usize,
    last: usize,
}

impl LevelWindow {
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if first == 0 || last < first {
            return Err(Error::InvalidArgument(format!("bad level window {first}..={last}")));
        }
        if last + 1 - first > SheetLabel::MAX_LEN {
            return Err(Error::InvalidArgument("level window wider than 64".into()));
        }
        Ok(Self { first, last })
    }

    pub fn first(self) -> usize {
        self.first
    }

    pub fn last(self) -> usize {
        self.last
    }

    pub fn width(self) -> usize {
        self.last + 1 - self.first
    }

    pub fn contains(self, k: usize) -> bool {
        (self.first..=self.last).contains(&k)
    }
}

/// Distance from the segment `[a, b]` to the lattice `Z + iZ`.
pub fn segment_lattice_distance(a: Complex64, b: Complex64) -> f64 {
    let x0 = a.re.min(b.re).floor() as i64 - 1;
    let x1 = a.re.max(b.re).ceil() as i64 + 1;
    let y0 = a.im.min(b.im).floor() as i64 - 1;
    let y1 = a.im.max(b.im).ceil() as i64 + 1;
    let d = b - a;
    let len2 = d.norm_sqr();
    let mut best = f64::INFINITY;
    for x in x0..=x1 {
        for y in y0..=y1 {
            let p = Complex64::new(x as f64, y as f64);
            let t = if len2 > 0.0 { ((p - a) * d.conj()).re / len2 } else { 0.0 };
            let q = a + d * t.clamp(0.0, 1.0);
            best = best.min((p - q).norm());
        }
    }
    best
}

/// Polyline in the `z`-plane that avoids `Z + iZ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCurve {
    vertices: Vec<Complex64>,
    clearance: f64,
}

impl PlanarCurve {
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("curve needs at least one vertex".into()));
        }
        if vertices.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidArgument("curve vertices must be finite".into()));
        }
        let clearance = if vertices.len() == 1 {
            segment_lattice_distance(vertices[0], vertices[0])
        } else {
            vertices
                .windows(2)
                .map(|s| segment_lattice_distance(s[0], s[1]))
                .fold(f64::INFINITY, f64::min)
        };
        if clearance <= 0.0 {
            return Err(Error::ClearanceViolation { clearance });
        }
        Ok(Self { vertices, clearance })
    }

    pub fn constant(z: Complex64) -> Result<Self> {
        Self::new(vec![z])
    }

    /// Closed regular polygon approximating the circle `|z - center| = radius`,
    /// traversed counterclockwise `turns` times from angle `start_angle`.
    pub fn circle(center: Complex64, radius: f64, start_angle: f64, sides: usize, turns: u32) -> Result<Self> {
        let total = sides * turns as usize;
        let v = (0..=total)
            .map(|i| {
                let t = start_angle + std::f64::consts::TAU * i as f64 / sides as f64;
                center + Complex64::from_polar(radius, t)
            })
            .collect();
        Self::new(v)
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().unwrap()
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|s| (s[1] - s[0]).norm()).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.start() == self.end()
    }

    /// This curve followed by `other`, joined by a segment if the endpoints differ.
    pub fn then(&self, other: &Self) -> Result<Self> {
        let mut v = self.vertices.clone();
        let skip = usize::from(other.start() == self.end());
        v.extend_from_slice(&other.vertices[skip..]);
        Self::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    /// Upper bound on a single continuation step in `z`.
    pub max_step: f64,
    /// Steps are at most this fraction of the distance to the nearest window pole.
    pub pole_fraction: f64,
    pub min_step: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self { max_step: 0.25, pole_fraction: 0.25, min_step: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    pub end_sheet: SheetLabel,
    pub end_point: C2,
    pub path: Vec<C2>,
    pub steps: usize,
    /// Smallest distance to a window pole met along the way.
    pub min_clearance_used: f64,
}

/// Lifts `curve` to the sheets of the window sum starting on `start_sheet`.
///
/// Each radical is carried as `tau_k * s_k(z)` with `tau_k = +-1`; after every
/// step the sign is re-chosen so the new value is the one nearest the old.
/// A step is rejected and halved when the two candidates are not clearly
/// separated.
pub fn lift_curve(
    set: &WermerSet,
    curve: &PlanarCurve,
    start_sheet: SheetLabel,
    window: LevelWindow,
    opts: &LiftOptions,
) -> Result<LiftResult> {
    if start_sheet.len() != window.width() {
        return Err(Error::InvalidArgument(format!(
            "sheet label has {} signs, window needs {}",
            start_sheet.len(),
            window.width()
        )));
    }
    let poles: Vec<Complex64> = (window.first..=window.last).map(pole).collect();
    let eps: Vec<f64> = (window.first..=window.last).map(|k| set.schedule().epsilon(k)).collect();
    let pole_dist = |z: Complex64| poles.iter().map(|a| (z - a).norm()).fold(f64::INFINITY, f64::min);

    let mut z = curve.start();
    let mut min_clearance = pole_dist(z);
    if min_clearance == 0.0 {
        return Err(Error::ClearanceViolation { clearance: 0.0 });
    }
    let mut tau: Vec<f64> = start_sheet.signs().collect();
    let mut tracked: Vec<Complex64> =
        poles.iter().zip(&tau).map(|(a, t)| *t * principal_sqrt(z - a)).collect();
    let point = |z: Complex64, tracked: &[Complex64]| {
        let w = tracked.iter().zip(&eps).fold(Complex64::new(0.0, 0.0), |acc, (s, e)| acc + *e * s);
        C2::new(z, w)
    };
    let mut path = vec![point(z, &tracked)];
    let mut steps = 0;
    let mut candidate = vec![Complex64::new(0.0, 0.0); poles.len()];

    for &target in &curve.vertices[1..] {
        while z != target {
            let remaining = (target - z).norm();
            let mut h = opts.max_step.min(opts.pole_fraction * pole_dist(z)).min(remaining);
            loop {
                if h < opts.min_step && h < remaining {
                    return Err(Error::StepCollapse { step: h, z });
                }
                let next = if h >= remaining { target } else { z + (target - z) * (h / remaining) };
                let mut ok = true;
                for (i, a) in poles.iter().enumerate() {
                    let p = principal_sqrt(next - a);
                    let (d_plus, d_minus) = ((p - tracked[i]).norm(), (p + tracked[i]).norm());
                    if d_plus.min(d_minus) > 0.25 * d_plus.max(d_minus) {
                        ok = false;
                        break;
                    }
                    candidate[i] = if d_plus <= d_minus { p } else { -p };
                }
                if ok {
                    for (i, a) in poles.iter().enumerate() {
                        let p = principal_sqrt(next - a);
                        tau[i] = if candidate[i] == p { 1.0 } else { -1.0 };
                    }
                    tracked.copy_from_slice(&candidate);
                    z = next;
                    min_clearance = min_clearance.min(pole_dist(z));
                    steps += 1;
                    path.push(point(z, &tracked));
                    break;
                }
                h *= 0.5;
            }
        }
    }
    let signs: Vec<i8> = tau.iter().map(|&t| if t > 0.0 { 1 } else { -1 }).collect();
    let end_sheet = SheetLabel::from_signs(&signs)?;
    let end_point = *path.last().unwrap();
    Ok(LiftResult { end_sheet, end_point, path, steps, min_clearance_used: min_clearance })
}

/// Sheet permutation induced by a closed loop: XOR with `flip`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monodromy {
    pub window: LevelWindow,
    pub flip: SheetLabel,
}

impl Monodromy {
    pub fn apply(&self, sigma: SheetLabel) -> SheetLabel {
        sigma.xor(self.flip)
    }

    pub fn is_identity(&self) -> bool {
        self.flip.bits() == 0
    }

    /// 1-based pole indices whose bit is flipped.
    pub fn flipped_poles(&self) -> Vec<usize> {
        (1..=self.window.width())
            .filter(|&i| self.flip.sign(i) < 0.0)
            .map(|i| self.window.first + i - 1)
            .collect()
    }
}

/// Loop based at `base`: out to the circle of `radius` around `a_j`, `turns`
/// times around it counterclockwise, and back along the same segment.
pub fn monodromy_curve(j: usize, base: Complex64, radius: f64, turns: u32) -> Result<PlanarCurve> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("loop radius must be > 0, got {radius}")));
    }
    if radius >= 0.5 {
        return Err(Error::MultiplePolesEnclosed { index: j, radius });
    }
    let a = pole(j);
    if base == a {
        return Err(Error::PoleHit { z: base, index: j });
    }
    let start_angle = (base - a).arg();
    let circle = PlanarCurve::circle(a, radius, start_angle, 64, turns)?;
    let tether = PlanarCurve::new(vec![base, circle.start()])?;
    let back = PlanarCurve::new(vec![circle.end(), base])?;
    tether.then(&circle)?.then(&back)
}

/// Monodromy of the loop from [`monodromy_curve`] on the sheets of `window`.
///
/// Each radical is continued independently of the others, so lifting the
/// all-plus sheet determines the permutation of every sheet.
pub fn monodromy_loop(
    set: &WermerSet,
    j: usize,
    base: Complex64,
    radius: f64,
    turns: u32,
    window: LevelWindow,
    opts: &LiftOptions,
) -> Result<Monodromy> {
    let curve = monodromy_curve(j, base, radius, turns)?;
    let lift = lift_curve(set, &curve, SheetLabel::zeros(window.width())?, window, opts)?;
    Ok(Monodromy { window, flip: lift.end_sheet })
}

fn cell_center(z: Complex64) -> Complex64 {
    Complex64::new(z.re.floor() + 0.5, z.im.floor() + 0.5)
}

/// Dual-grid route between two cell centres: horizontal first, then vertical.
fn dual_route(from: Complex64, to: Complex64) -> Vec<Complex64> {
    let corner = Complex64::new(to.re, from.im);
    let mut v = vec![from];
    if corner != from {
        v.push(corner);
    }
    if to != corner {
        v.push(to);
    }
    v
}

/// Square through the four dual nodes around `a_k`, starting and ending at
/// its lower-left node, counterclockwise.
fn pole_square(k: usize) -> [Complex64; 5] {
    let g = gauss_point(SpiralIndex::new(k as u64).expect("k >= 1"));
    let (x, y) = (g.re as f64, g.im as f64);
    [
        Complex64::new(x - 0.5, y - 0.5),
        Complex64::new(x + 0.5, y - 0.5),
        Complex64::new(x + 0.5, y + 0.5),
        Complex64::new(x - 0.5, y + 0.5),
        Complex64::new(x - 0.5, y - 0.5),
    ]
}

/// Appends, for each pole index in `poles`, a detour from `hub` (a cell
/// centre) along the dual grid to a square around that pole and back.
fn push_loops(v: &mut Vec<Complex64>, hub: Complex64, poles: &[usize]) {
    for &k in poles {
        let sq = pole_square(k);
        let out = dual_route(hub, sq[0]);
        v.extend_from_slice(&out[1..]);
        v.extend_from_slice(&sq[1..]);
        let mut back = out;
        back.reverse();
        v.extend_from_slice(&back[1..]);
    }
}

/// Closed curve at `z0` whose lift on `window` carries `from` to `to`.
pub fn connect_sheets(
    set: &WermerSet,
    z0: Complex64,
    from: SheetLabel,
    to: SheetLabel,
    window: LevelWindow,
    opts: &LiftOptions,
) -> Result<PlanarCurve> {
    if from.len() != to.len() || from.len() != window.width() {
        return Err(Error::InvalidArgument("sheet labels must match the window width".into()));
    }
    if from == to {
        return PlanarCurve::constant(z0);
    }
    let poles: Vec<usize> = from.differing_positions(to).into_iter().map(|i| window.first + i - 1).collect();
    let hub = cell_center(z0);
    let mut v = vec![z0, hub];
    push_loops(&mut v, hub, &poles);
    v.push(z0);
    let curve = PlanarCurve::new(v)?;
    verify_lift(set, &curve, from, to, window, opts)?;
    Ok(curve)
}

fn verify_lift(
    set: &WermerSet,
    curve: &PlanarCurve,
    from: SheetLabel,
    to: SheetLabel,
    window: LevelWindow,
    opts: &LiftOptions,
) -> Result<LiftResult> {
    let lift = lift_curve(set, curve, from, window, opts)?;
    if lift.end_sheet != to {
        return Err(Error::InvalidArgument(format!(
            "lift ended on sheet {} instead of {}",
            lift.end_sheet, to
        )));
    }
    Ok(lift)
}

/// Outcome of checking `E_n(z) = E_m(z) ⊕ E_{m+1,n}(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub n: usize,
    pub m: usize,
    /// Largest `|w_1 + w_2 - w|` over matched triples.
    pub max_discrepancy: f64,
}

/// Matches every `w` in `E_n(z)` with the pair `(w_1, w_2)` carrying the
/// same signs (first `m` and last `n - m`), which is a bijection between the
/// two multisets.
pub fn decompose_levels(set: &WermerSet, z: Complex64, n: usize, m: usize) -> Result<Decomposition> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= m < n, got m = {m}, n = {n}")));
    }
    let full = set.slice_points(z, n)?;
    let head = set.slice_points(z, m)?;
    let tail = set.window_slice(z, m + 1, n)?;
    let mut worst = 0.0f64;
    for bits in 0..full.len() as u64 {
        let sigma = SheetLabel::new(bits, n)?;
        let w = head.point(sigma.head(m)) + tail.point(sigma.tail(m));
        worst = worst.max((w - full.point(sigma)).norm());
    }
    Ok(Decomposition { n, m, max_discrepancy: worst })
}

/// Greedy nearest-neighbour matching between two equal-size multisets;
/// returns the largest matched distance. Quadratic, for small sets.
pub fn multiset_discrepancy(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("multisets differ in size".into()));
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for p in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, q)| (j, (p - q).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .ok_or(Error::EmptySet)?;
        used[j] = true;
        worst = worst.max(d);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkParams {
    pub sched: EpsilonSchedule,
    /// Level `N` of the variety `E_N` the endpoints lie on.
    pub level: usize,
    pub lift: LiftOptions,
    /// Relative tolerance for recognising the endpoints as points of `E_N`.
    pub on_variety_tol: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self { sched: EpsilonSchedule::default(), level: 16, lift: LiftOptions::default(), on_variety_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    /// Split level: sheets up to `m_n` are connected exactly, the rest follow.
    pub split: usize,
    /// `tail_delta_bound(split + 1, R)`.
    pub tail_bound: f64,
    pub p_sheet: SheetLabel,
    pub q_sheet: SheetLabel,
    /// Poles looped around to reach the head sheet of `q`.
    pub correction_poles: Vec<usize>,
    pub tail_end_sheet: SheetLabel,
    pub curve_vertices: usize,
    pub lift_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkResult {
    pub q_star: C2,
    pub error: f64,
    pub trace: WalkTrace,
}

fn label_of(set: &WermerSet, p: C2, level: usize, tol: f64) -> Result<SheetLabel> {
    let (sigma, d) = set.nearest_sheet(p.z, p.w, level)?;
    let scale = 1.0 + p.w.norm();
    if d > tol * scale {
        return Err(Error::NotOnVariety { residual: d });
    }
    Ok(sigma)
}

/// Walks from `p` to the fibre over `z_q` inside `E_N`, following the head
/// sheets exactly and carrying the tail sheets along, and reports how far the
/// arrival point is from `q`.
pub fn walk_to_point(p: C2, q: C2, n: u32, params: &WalkParams) -> Result<WalkResult> {
    let set = WermerSet::new(params.sched.clone()).with_n_max(params.level.max(1));
    let big_n = params.level;
    let target = 0.5f64.powi(n as i32);
    let radius = p.z.norm().max(q.z.norm());
    let mut split = 1;
    let tail_bound = loop {
        if split >= big_n {
            return Err(Error::TailTooLarge { level: big_n, target });
        }
        let b = tail_delta_bound(split + 1, radius, &params.sched)?;
        if b < target {
            break b;
        }
        split += 1;
    };
    let p_sheet = label_of(&set, p, big_n, params.on_variety_tol)?;
    let q_sheet = label_of(&set, q, big_n, params.on_variety_tol)?;
    let head = LevelWindow::new(1, split)?;
    let tail = LevelWindow::new(split + 1, big_n)?;

    // z_p -> its cell centre -> q's cell centre -> z_q
    let (hp, hq) = (cell_center(p.z), cell_center(q.z));
    let mut v = vec![p.z, hp];
    v.extend_from_slice(&dual_route(hp, hq)[1..]);
    let plain = {
        let mut w = v.clone();
        w.push(q.z);
        PlanarCurve::new(w)?
    };
    let arrived = lift_curve(&set, &plain, p_sheet.head(split), head, &params.lift)?.end_sheet;
    let correction_poles: Vec<usize> = arrived.differing_positions(q_sheet.head(split));
    push_loops(&mut v, hq, &correction_poles);
    v.push(q.z);
    let curve = PlanarCurve::new(v)?;
    let head_lift = verify_lift(&set, &curve, p_sheet.head(split), q_sheet.head(split), head, &params.lift)?;
    let tail_lift = lift_curve(&set, &curve, p_sheet.tail(split), tail, &params.lift)?;

    let star_sheet = q_sheet.head(split).concat(tail_lift.end_sheet)?;
    let q_star = C2::new(q.z, set.sheet_value(q.z, star_sheet)?);
    let error = q.dist(q_star);
    Ok(WalkResult {
        q_star,
        error,
        trace: WalkTrace {
            split,
            tail_bound,
            p_sheet,
            q_sheet,
            correction_poles,
            tail_end_sheet: tail_lift.end_sheet,
            curve_vertices: curve.vertices().len(),
            lift_steps: head_lift.steps + tail_lift.steps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn set() -> WermerSet {
        WermerSet::default()
    }

    #[test]
    fn segment_distance_examples() {
        assert!((segment_lattice_distance(c(0.5, 0.5), c(0.5, 0.5)) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((segment_lattice_distance(c(-3.0, 0.5), c(4.0, 0.5)) - 0.5).abs() < 1e-15);
        assert_eq!(segment_lattice_distance(c(-1.0, -1.0), c(1.0, 1.0)), 0.0);
        assert!(matches!(
            PlanarCurve::new(vec![c(-0.5, 0.0), c(0.5, 0.0)]),
            Err(Error::ClearanceViolation { .. })
        ));
    }

    #[test]
    fn constant_curve_is_identity() {
        let w = LevelWindow::new(1, 5).unwrap();
        let sigma = SheetLabel::new(0b10110, 5).unwrap();
        let z = c(0.3, 0.6);
        let r = lift_curve(&set(), &PlanarCurve::constant(z).unwrap(), sigma, w, &LiftOptions::default()).unwrap();
        assert_eq!(r.end_sheet, sigma);
        assert_eq!(r.end_point, C2::new(z, set().window_value(z, 1, sigma).unwrap()));
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn single_chart_curve_keeps_sheet() {
        let w = LevelWindow::new(1, 4).unwrap();
        let sigma = SheetLabel::new(0b0101, 4).unwrap();
        let curve = PlanarCurve::new(vec![c(0.3, 0.6), c(0.7, 0.4), c(0.6, 0.2)]).unwrap();
        let r = lift_curve(&set(), &curve, sigma, w, &LiftOptions::default()).unwrap();
        assert_eq!(r.end_sheet, sigma);
    }

    #[test]
    fn circle_around_second_pole_flips_bit_two() {
        let w = LevelWindow::new(1, 5).unwrap();
        let sigma = SheetLabel::new(0b01001, 5).unwrap();
        let curve = PlanarCurve::circle(c(1.0, 0.0), 0.4, 0.3, 64, 1).unwrap();
        for max_step in [0.25, 0.125, 0.0625] {
            let opts = LiftOptions { max_step, ..Default::default() };
            let r = lift_curve(&set(), &curve, sigma, w, &opts).unwrap();
            assert_eq!(r.end_sheet, sigma.flipped(2));
            let expected = set().window_value(r.end_point.z, 1, r.end_sheet).unwrap();
            assert!((expected - r.end_point.w).norm() < 1e-10);
        }
    }

    #[test]
    fn monodromy_examples() {
        let opts = LiftOptions::default();
        let w = LevelWindow::new(1, 4).unwrap();
        let m = monodromy_loop(&set(), 3, c(0.5, 0.5), 0.3, 1, w, &opts).unwrap();
        assert_eq!(m.flipped_poles(), vec![3]);
        let twice = monodromy_loop(&set(), 3, c(0.5, 0.5), 0.3, 2, w, &opts).unwrap();
        assert!(twice.is_identity());
        let outside = monodromy_loop(&set(), 7, c(0.3, 0.6), 0.3, 1, w, &opts).unwrap();
        assert!(outside.is_identity());
        let shifted = LevelWindow::new(3, 6).unwrap();
        let m = monodromy_loop(&set(), 3, c(0.5, 0.5), 0.3, 1, shifted, &opts).unwrap();
        assert_eq!(m.flipped_poles(), vec![3]);
        assert!(matches!(
            monodromy_curve(3, c(0.5, 0.5), 0.5, 1),
            Err(Error::MultiplePolesEnclosed { index: 3, .. })
        ));
    }

    #[test]
    fn connect_sheets_examples() {
        let opts = LiftOptions::default();
        let w = LevelWindow::new(1, 4).unwrap();
        let z0 = c(0.3, 0.7);
        let from = SheetLabel::new(0b0000, 4).unwrap();
        let same = connect_sheets(&set(), z0, from, from, w, &opts).unwrap();
        assert_eq!(same.vertices(), &[z0]);
        for to_bits in [0b0010, 0b0101, 0b1111] {
            let to = SheetLabel::new(to_bits, 4).unwrap();
            let curve = connect_sheets(&set(), z0, from, to, w, &opts).unwrap();
            assert!(curve.is_closed());
            let lift = lift_curve(&set(), &curve, from, w, &opts).unwrap();
            assert_eq!(lift.end_sheet, to);
            let expected = set().window_value(z0, 1, to).unwrap();
            assert!((lift.end_point.w - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn decomposition_small_levels() {
        let ws = set();
        let z = c(0.4, -1.3);
        for n in 2..=8 {
            for m in 1..n {
                let d = decompose_levels(&ws, z, n, m).unwrap();
                assert!(d.max_discrepancy <= 1e-12);
                let head = ws.slice_points(z, m).unwrap();
                let tail = ws.window_slice(z, m + 1, n).unwrap();
                let sums: Vec<Complex64> =
                    head.points.iter().flat_map(|a| tail.points.iter().map(move |b| a + b)).collect();
                let full = ws.slice_points(z, n).unwrap();
                assert!(multiset_discrepancy(&sums, &full.points).unwrap() <= 1e-12);
            }
        }
        assert!(decompose_levels(&ws, z, 1, 1).is_err());
    }

    #[test]
    fn walk_identity_and_coarse() {
        let ws = set();
        let params = WalkParams::default();
        let z = c(0.5, 0.5);
        let sigma = SheetLabel::new(0xBEEF, 16).unwrap();
        let p = C2::new(z, ws.sheet_value(z, sigma).unwrap());
        let r = walk_to_point(p, p, 3, &params).unwrap();
        assert_eq!(r.q_star, p);
        assert_eq!(r.error, 0.0);

        let z2 = c(2.3, -0.7);
        let q = C2::new(z2, ws.sheet_value(z2, SheetLabel::new(0x1234, 16).unwrap()).unwrap());
        for n in 1..=8 {
            let r = walk_to_point(p, q, n, &params).unwrap();
            assert!(r.error < 2.0 * r.trace.tail_bound, "n={n} {r:?}");
            assert!(r.error < 0.5f64.powi(n as i32 - 1));
        }
    }

    #[test]
    fn walk_rejects_off_variety_points() {
        let p = C2::new(c(0.5, 0.5), c(3.0, 0.0));
        assert!(matches!(walk_to_point(p, p, 2, &WalkParams::default()), Err(Error::NotOnVariety { .. })));
    }

    #[test]
    fn walk_reports_unreachable_split() {
        let params = WalkParams { level: 3, ..Default::default() };
        let ws = set();
        let z = c(0.5, 0.5);
        let p = C2::new(z, ws.sheet_value(z, SheetLabel::zeros(3).unwrap()).unwrap());
        assert!(matches!(walk_to_point(p, p, 20, &params), Err(Error::TailTooLarge { .. })));
    }
}
