//! The exhaustion-type potential `phi = phi_n + rho(|Re z|) + rho(|Im z|)`,
//! its rescaling `phi_tilde = -log(-phi) + rho_tilde(|zeta|^2)` and the
//! membership predicates for `U = {phi < -1}` and `A = {phi_tilde < -1} ∩ U`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::EpsilonSchedule;
use crate::point::C2;
use crate::wermer::{PhiMode, WermerSet};

/// Value and right derivative of a one-variable profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub d1: f64,
}

/// Value, first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Convex nondecreasing growth term applied to `|Re z|` and `|Im z|`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoProfile {
    /// `c t^2`
    Quadratic { c: f64 },
    /// `e^{lambda t} - 1`
    Exponential { lambda: f64 },
    /// Piecewise linear through `(ts[i], values[i])`, extended affinely past the
    /// last knot with the last slope.
    Custom { ts: Vec<f64>, values: Vec<f64> },
}

impl Default for RhoProfile {
    fn default() -> Self {
        Self::Quadratic { c: 0.01 }
    }
}

impl RhoProfile {
    pub fn quadratic(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidProfile(format!("quadratic coefficient must be >= 0, got {c}")));
        }
        Ok(Self::Quadratic { c })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidProfile(format!("exponential rate must be > 0, got {lambda}")));
        }
        Ok(Self::Exponential { lambda })
    }

    pub fn custom(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() < 2 || ts.len() != values.len() {
            return Err(Error::InvalidProfile("custom table needs >= 2 matching knots".into()));
        }
        if ts[0] != 0.0 {
            return Err(Error::InvalidProfile("custom table must start at t = 0".into()));
        }
        if ts.windows(2).any(|p| !(p[1] > p[0])) || ts.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile("knots must be finite and strictly increasing".into()));
        }
        if values[0] < 0.0 {
            return Err(Error::InvalidProfile("rho(0) must be >= 0".into()));
        }
        let slopes: Vec<f64> =
            ts.windows(2).zip(values.windows(2)).map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0])).collect();
        if slopes.windows(2).any(|s| s[1] < s[0] - 1e-12) {
            return Err(Error::InvalidProfile("custom table is not convex".into()));
        }
        if slopes[0] < 0.0 || *slopes.last().unwrap() <= 0.0 {
            return Err(Error::InvalidProfile("custom table must be nondecreasing and unbounded".into()));
        }
        Ok(Self::Custom { ts, values })
    }

    /// Value and right derivative at `t >= 0`.
    pub fn eval(&self, t: f64) -> Jet1 {
        debug_assert!(t >= 0.0);
        match self {
            Self::Quadratic { c } => Jet1 { value: c * t * t, d1: 2.0 * c * t },
            Self::Exponential { lambda } => {
                Jet1 { value: (lambda * t).exp_m1(), d1: lambda * (lambda * t).exp() }
            }
            Self::Custom { ts, values } => {
                let i = match ts.partition_point(|&x| x <= t) {
                    0 => 0,
                    p => (p - 1).min(ts.len() - 2),
                };
                let slope = (values[i + 1] - values[i]) / (ts[i + 1] - ts[i]);
                Jet1 { value: values[i] + slope * (t - ts[i]), d1: slope }
            }
        }
    }
}

impl fmt::Display for RhoProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic { c } => write!(f, "quadratic:{c}"),
            Self::Exponential { lambda } => write!(f, "exponential:{lambda}"),
            Self::Custom { ts, values } => {
                f.write_str("custom:")?;
                for (i, (t, v)) in ts.iter().zip(values).enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{t},{v}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for RhoProfile {
    type Err = Error;

    /// `quadratic:C`, `exponential:L` or `custom:t0,v0;t1,v1;...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidProfile(format!("cannot parse rho profile '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        match kind.trim() {
            "quadratic" => Self::quadratic(num(rest)?),
            "exponential" => Self::exponential(num(rest)?),
            "custom" => {
                let mut ts = Vec::new();
                let mut vs = Vec::new();
                for pair in rest.split(';') {
                    let (t, v) = pair.split_once(',').ok_or_else(bad)?;
                    ts.push(num(t)?);
                    vs.push(num(v)?);
                }
                Self::custom(ts, vs)
            }
            _ => Err(bad()),
        }
    }
}

/// `rho_tilde(t) = t` on `[0, t0]`, then `t + growth * u^3 exp(-1/u)` with
/// `u = t - t0`. Smooth, increasing, convex, with unbounded derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoTildeProfile {
    t0: f64,
    growth: f64,
}

impl Default for RhoTildeProfile {
    fn default() -> Self {
        Self { t0: 1.0, growth: 1.0 }
    }
}

impl RhoTildeProfile {
    pub fn new(t0: f64, growth: f64) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::InvalidProfile(format!("t0 must be > 0, got {t0}")));
        }
        if !(growth.is_finite() && growth > 0.0) {
            return Err(Error::InvalidProfile(format!("growth must be > 0, got {growth}")));
        }
        Ok(Self { t0, growth })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn eval(&self, t: f64) -> Jet2 {
        if t <= self.t0 {
            return Jet2 { value: t, d1: 1.0, d2: 0.0 };
        }
        let u = t - self.t0;
        let e = (-1.0 / u).exp();
        if e == 0.0 {
            return Jet2 { value: t, d1: 1.0, d2: 0.0 };
        }
        let b = self.growth * e;
        Jet2 {
            value: t + b * u * u * u,
            d1: 1.0 + b * (3.0 * u * u + u),
            d2: b * (6.0 * u + 4.0 + 1.0 / u),
        }
    }
}

impl fmt::Display for RhoTildeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.t0, self.growth)
    }
}

impl FromStr for RhoTildeProfile {
    type Err = Error;

    /// `T0,GROWTH`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidProfile(format!("cannot parse rho_tilde profile '{s}'"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let t0 = a.trim().parse().map_err(|_| bad())?;
        let g = b.trim().parse().map_err(|_| bad())?;
        Self::new(t0, g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialParams {
    pub sched: EpsilonSchedule,
    pub rho: RhoProfile,
    pub rho_tilde: RhoTildeProfile,
    pub level: usize,
    /// `U = {phi < t_u}`.
    pub t_u: f64,
    /// `A = {phi_tilde < t_a} ∩ U`.
    pub t_a: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            sched: EpsilonSchedule::default(),
            rho: RhoProfile::default(),
            rho_tilde: RhoTildeProfile::default(),
            level: 8,
            t_u: -1.0,
            t_a: -1.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if self.level == 0 {
            return Err(Error::InvalidArgument("level must be >= 1".into()));
        }
        if !self.t_u.is_finite() || !self.t_a.is_finite() {
            return Err(Error::InvalidArgument("thresholds must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    OutsideU,
    InUNotA,
    InA,
    OnVariety,
}

impl PointClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::OutsideU => "outside_u",
            Self::InUNotA => "in_u_not_a",
            Self::InA => "in_a",
            Self::OnVariety => "on_variety",
        }
    }
}

/// Everything known about the potentials at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub phi: f64,
    /// `None` where `phi >= 0`.
    pub phi_tilde: Option<f64>,
    pub class: PointClass,
}

/// The potentials for a fixed parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    params: PotentialParams,
    set: WermerSet,
}

impl Potential {
    pub fn new(params: PotentialParams) -> Result<Self> {
        params.validate()?;
        let set = WermerSet::new(params.sched.clone());
        Ok(Self { params, set })
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn wermer(&self) -> &WermerSet {
        &self.set
    }

    pub fn level(&self) -> usize {
        self.params.level
    }

    /// `phi_n(z, w) + rho(|Re z|) + rho(|Im z|)`.
    pub fn phi_total(&self, z: Complex64, w: Complex64) -> Result<f64> {
        let base = self.set.phi_n(z, w, self.params.level, PhiMode::Recursive)?;
        Ok(base + self.rho_part(z))
    }

    /// `rho(|Re z|) + rho(|Im z|)`.
    pub fn rho_part(&self, z: Complex64) -> f64 {
        self.params.rho.eval(z.re.abs()).value + self.params.rho.eval(z.im.abs()).value
    }

    /// `-log(-phi) + rho_tilde(|z|^2 + |w|^2)`.
    pub fn phi_tilde(&self, z: Complex64, w: Complex64) -> Result<f64> {
        let phi = self.phi_total(z, w)?;
        self.tilde_from_phi(phi, z.norm_sqr() + w.norm_sqr())
    }

    /// Rescales an already computed `phi` at a point with `|zeta|^2 = norm_sqr`.
    pub fn tilde_from_phi(&self, phi: f64, norm_sqr: f64) -> Result<f64> {
        if phi.is_nan() || phi >= 0.0 {
            return Err(Error::OutsideDomainOfDefinition { phi });
        }
        Ok(-(-phi).ln() + self.params.rho_tilde.eval(norm_sqr).value)
    }

    pub fn evaluate(&self, p: C2) -> Result<Evaluation> {
        let phi = self.phi_total(p.z, p.w)?;
        let phi_tilde = self.tilde_from_phi(phi, p.norm_sqr()).ok();
        let class = if phi == f64::NEG_INFINITY {
            PointClass::OnVariety
        } else if phi >= self.params.t_u {
            PointClass::OutsideU
        } else if phi_tilde.is_some_and(|t| t < self.params.t_a) {
            PointClass::InA
        } else {
            PointClass::InUNotA
        };
        Ok(Evaluation { phi, phi_tilde, class })
    }

    pub fn classify(&self, z: Complex64, w: Complex64) -> Result<PointClass> {
        Ok(self.evaluate(C2::new(z, w))?.class)
    }

    /// `phi < t`.
    pub fn in_sublevel(&self, z: Complex64, w: Complex64, t: f64) -> Result<bool> {
        Ok(self.phi_total(z, w)? < t)
    }
}
