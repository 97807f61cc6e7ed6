//! The pole sequence `a_n` running through Z + iZ and the epsilon schedule.
//!
//! Poles are enumerated along the counterclockwise square spiral
//! `(0,0) -> (1,0) -> (1,1) -> (0,1) -> (-1,1) -> (-1,0) -> ...`.
//! Ring `r >= 1` holds the indices `(2r-1)^2 + 1 ..= (2r+1)^2` and starts at
//! `(r, 1-r)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 1-based index into the pole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpiralIndex(u64);

impl SpiralIndex {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("spiral index must be >= 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// A point of Z + iZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussPoint {
    pub re: i64,
    pub im: i64,
}

impl GaussPoint {
    pub const fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }

    /// Chebyshev norm, i.e. the spiral ring the point lies on.
    pub fn ring(self) -> u64 {
        self.re.unsigned_abs().max(self.im.unsigned_abs())
    }
}

impl fmt::Display for GaussPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.re, self.im)
    }
}

/// The `n`-th point of the spiral.
pub fn gauss_point(n: SpiralIndex) -> GaussPoint {
    let n = n.get();
    if n == 1 {
        return GaussPoint::new(0, 0);
    }
    // smallest r with (2r+1)^2 >= n
    let root = (n - 1).isqrt();
    let mut r = root.div_ceil(2).max(1);
    while (2 * r + 1) * (2 * r + 1) < n {
        r += 1;
    }
    while r > 1 && (2 * r - 1) * (2 * r - 1) >= n {
        r -= 1;
    }
    let k = (n - (2 * r - 1) * (2 * r - 1) - 1) as i64;
    let r = r as i64;
    if k < 2 * r {
        GaussPoint::new(r, 1 - r + k)
    } else if k < 4 * r {
        GaussPoint::new(r - (k - 2 * r + 1), r)
    } else if k < 6 * r {
        GaussPoint::new(-r, r - (k - 4 * r + 1))
    } else {
        GaussPoint::new(-r + (k - 6 * r + 1), -r)
    }
}

/// Inverse of [`gauss_point`].
pub fn spiral_index(p: GaussPoint) -> SpiralIndex {
    let r = p.ring() as i64;
    if r == 0 {
        return SpiralIndex(1);
    }
    let base = ((2 * r - 1) * (2 * r - 1) + 1) as u64;
    let (x, y) = (p.re, p.im);
    let k = if x == r && y > -r {
        y - (1 - r)
    } else if y == r {
        2 * r + (r - 1 - x)
    } else if x == -r {
        4 * r + (r - 1 - y)
    } else {
        6 * r + (x + r - 1)
    };
    SpiralIndex(base + k as u64)
}

/// The pole `a_k` as a complex number (`k` is 1-based).
pub fn pole(k: usize) -> Complex64 {
    gauss_point(SpiralIndex(k.max(1) as u64)).to_complex()
}

/// Rule generating the decreasing sequence `eps_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// `eps_k = exp(-rate * k^2)`.
    Gaussian { rate: f64 },
    /// `eps_k = first * ratio^(k-1)`.
    Geometric { first: f64, ratio: f64 },
    /// Explicit leading values, continued by `eps_{k+1} = decay * eps_k`.
    Custom { values: Vec<f64>, decay: f64 },
}

/// A validated, strictly decreasing, positive epsilon schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    kind: ScheduleKind,
}

impl Default for EpsilonSchedule {
    /// `eps_k = 8^{-k}`.
    fn default() -> Self {
        Self::geometric(0.125, 0.125).expect("default schedule is valid")
    }
}

impl EpsilonSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        match &kind {
            ScheduleKind::Gaussian { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("gaussian rate must be positive, got {rate}"));
                }
            }
            ScheduleKind::Geometric { first, ratio } => {
                if !(first.is_finite() && *first > 0.0) {
                    return bad(format!("geometric first term must be positive, got {first}"));
                }
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return bad(format!("geometric ratio must lie in (0,1), got {ratio}"));
                }
            }
            ScheduleKind::Custom { values, decay } => {
                if values.is_empty() {
                    return bad("custom schedule needs at least one value".into());
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return bad(format!("custom values must be positive and finite, got {v}"));
                }
                if let Some(i) = values.windows(2).position(|p| p[1] >= p[0]) {
                    return bad(format!(
                        "custom values must strictly decrease: eps_{} = {} >= eps_{} = {}",
                        i + 2,
                        values[i + 1],
                        i + 1,
                        values[i]
                    ));
                }
                if !(*decay > 0.0 && *decay < 1.0) {
                    return bad(format!("custom decay must lie in (0,1), got {decay}"));
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn gaussian(rate: f64) -> Result<Self> {
        Self::new(ScheduleKind::Gaussian { rate })
    }

    pub fn geometric(first: f64, ratio: f64) -> Result<Self> {
        Self::new(ScheduleKind::Geometric { first, ratio })
    }

    pub fn custom(values: Vec<f64>, decay: f64) -> Result<Self> {
        Self::new(ScheduleKind::Custom { values, decay })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    /// `eps_k` for `k >= 1`. Panics on `k == 0`.
    pub fn epsilon(&self, k: usize) -> f64 {
        assert!(k >= 1, "epsilon index is 1-based");
        match &self.kind {
            ScheduleKind::Gaussian { rate } => (-rate * (k as f64) * (k as f64)).exp(),
            ScheduleKind::Geometric { first, ratio } => first * ratio.powi(k as i32 - 1),
            ScheduleKind::Custom { values, decay } => {
                if k <= values.len() {
                    values[k - 1]
                } else {
                    values[values.len() - 1] * decay.powi((k - values.len()) as i32)
                }
            }
        }
    }
}

impl fmt::Display for EpsilonSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScheduleKind::Gaussian { rate } => write!(f, "gaussian:{rate}"),
            ScheduleKind::Geometric { first, ratio } => write!(f, "geometric:{first},{ratio}"),
            ScheduleKind::Custom { values, decay } => {
                let vals: Vec<String> = values.iter().map(f64::to_string).collect();
                write!(f, "custom:{};decay={decay}", vals.join(","))
            }
        }
    }
}

impl FromStr for EpsilonSchedule {
    type Err = Error;

    /// Parses `gaussian:RATE`, `geometric:FIRST,RATIO` or
    /// `custom:V1,V2,...;decay=D`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSchedule(format!("cannot parse schedule `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (head, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match head.trim() {
            "gaussian" => Self::gaussian(num(rest)?),
            "geometric" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Self::geometric(num(a)?, num(b)?)
            }
            "custom" => {
                let (vals, decay) = rest.split_once(';').ok_or_else(bad)?;
                let decay = decay.trim().strip_prefix("decay=").ok_or_else(bad)?;
                let values = vals.split(',').map(num).collect::<Result<Vec<_>>>()?;
                Self::custom(values, num(decay)?)
            }
            _ => Err(bad()),
        }
    }
}

/// Stopping rule for [`tail_delta_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailOptions {
    /// Stop once a term falls below this absolute value.
    pub abs_floor: f64,
    /// Stop once a term falls below this fraction of the running sum.
    pub rel_floor: f64,
    /// Give up (divergent) after this many terms.
    pub max_terms: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { abs_floor: 1e-300, rel_floor: 1e-17, max_terms: 1_000_000 }
    }
}

/// Upper bound `sum_{k >= m} eps_k sqrt(R + |a_k|)` for the largest tail value
/// `max_{|z| <= R} max_{w in E_m(z)} |w|`.
pub fn tail_delta_bound(m: usize, radius: f64, sched: &EpsilonSchedule) -> Result<f64> {
    tail_delta_bound_with(m, radius, sched, TailOptions::default())
}

pub fn tail_delta_bound_with(
    m: usize,
    radius: f64,
    sched: &EpsilonSchedule,
    opts: TailOptions,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("tail start m must be >= 1".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut sum = 0.0;
    for (i, k) in (m..).enumerate() {
        if i >= opts.max_terms {
            return Err(Error::DivergentTail { start: m, terms: i });
        }
        let term = sched.epsilon(k) * (radius + pole(k).norm()).sqrt();
        sum += term;
        if term == 0.0 || term < opts.abs_floor || term < opts.rel_floor * sum {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(n: u64) -> GaussPoint {
        gauss_point(SpiralIndex::new(n).unwrap())
    }

    #[test]
    fn listed_prefix() {
        let expected = [
            (0, 0),
            (1, 0),
            (1, 1),
            (0, 1),
            (-1, 1),
            (-1, 0),
            (-1, -1),
            (0, -1),
            (1, -1),
            (2, -1),
            (2, 0),
        ];
        for (i, (re, im)) in expected.into_iter().enumerate() {
            assert_eq!(gp(i as u64 + 1), GaussPoint::new(re, im), "n = {}", i + 1);
        }
    }

    #[test]
    fn ring_boundaries() {
        // last point of ring r is (r, -r) at index (2r+1)^2
        for r in 1..50i64 {
            let n = ((2 * r + 1) * (2 * r + 1)) as u64;
            assert_eq!(gp(n), GaussPoint::new(r, -r));
            assert_eq!(gp(n + 1), GaussPoint::new(r + 1, -r));
        }
    }

    #[test]
    fn zero_index_rejected() {
        assert!(SpiralIndex::new(0).is_err());
    }

    #[test]
    fn inverse_matches() {
        for n in 1..5000 {
            let p = gp(n);
            assert_eq!(spiral_index(p).get(), n);
        }
    }

    #[test]
    fn schedule_examples() {
        let g = EpsilonSchedule::gaussian(1.0).unwrap();
        assert!((g.epsilon(1) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((g.epsilon(3) - 1.234_098_040_866_795_5e-4).abs() < 1e-18);
        let c = EpsilonSchedule::custom(vec![0.5, 1.0 / 16.0, 1.0 / 256.0], 1.0 / 16.0).unwrap();
        assert_eq!(c.epsilon(2), 1.0 / 16.0);
        assert_eq!(c.epsilon(4), 1.0 / 4096.0);
    }

    #[test]
    fn non_decreasing_schedules_rejected() {
        assert!(EpsilonSchedule::custom(vec![0.5, 0.5], 0.5).is_err());
        assert!(EpsilonSchedule::custom(vec![0.5, 0.6], 0.5).is_err());
        assert!(EpsilonSchedule::custom(vec![0.5], 1.0).is_err());
        assert!(EpsilonSchedule::geometric(0.5, 1.0).is_err());
        assert!(EpsilonSchedule::gaussian(0.0).is_err());
        assert!(EpsilonSchedule::custom(vec![], 0.5).is_err());
    }

    #[test]
    fn schedule_string_round_trip() {
        for s in ["gaussian:1", "geometric:0.125,0.125", "custom:0.5,0.0625,0.00390625;decay=0.0625"] {
            let sched: EpsilonSchedule = s.parse().unwrap();
            assert_eq!(sched.to_string(), s);
        }
        assert!("linear:1".parse::<EpsilonSchedule>().is_err());
        assert!("custom:0.5,0.7;decay=0.5".parse::<EpsilonSchedule>().is_err());
    }

    #[test]
    fn tail_bound_example() {
        // m = 3, R = 2 with eps_k = e^{-k^2}: summed directly, term by term.
        let g = EpsilonSchedule::gaussian(1.0).unwrap();
        let direct: f64 = (3..30)
            .map(|k| (-(k as f64).powi(2)).exp() * (2.0 + pole(k).norm()).sqrt())
            .sum();
        let b = tail_delta_bound(3, 2.0, &g).unwrap();
        assert!((b - direct).abs() <= 1e-15 * direct);
        assert!((b - 2.3e-4).abs() < 0.05e-4, "{b}");
        assert!(tail_delta_bound(1, 2.0, &g).unwrap() >= tail_delta_bound(2, 2.0, &g).unwrap());
        assert!(tail_delta_bound(20, 2.0, &g).unwrap() < 1e-150);
    }

    #[test]
    fn tail_divergence_reported() {
        let slow = EpsilonSchedule::geometric(1.0, 1.0 - 1e-9).unwrap();
        let opts = TailOptions { max_terms: 1000, ..TailOptions::default() };
        assert!(matches!(
            tail_delta_bound_with(1, 1.0, &slow, opts),
            Err(Error::DivergentTail { .. })
        ));
    }
}
