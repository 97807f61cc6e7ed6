//! Points of C^2 = C_z x C_w.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// A point `(z, w)` of C^2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct C2 {
    pub z: Complex64,
    pub w: Complex64,
}

impl C2 {
    pub const fn new(z: Complex64, w: Complex64) -> Self {
        Self { z, w }
    }

    /// Builds a point from real coordinates `(Re z, Im z, Re w, Im w)`.
    pub fn from_reals(x: [f64; 4]) -> Self {
        Self::new(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))
    }

    pub fn to_reals(self) -> [f64; 4] {
        [self.z.re, self.z.im, self.w.re, self.w.im]
    }

    /// `|z|^2 + |w|^2`.
    pub fn norm_sqr(self) -> f64 {
        self.z.norm_sqr() + self.w.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Complex scalar multiple `lambda * self`.
    pub fn scale(self, lambda: Complex64) -> Self {
        Self::new(lambda * self.z, lambda * self.w)
    }

    /// Unit vector in the direction of `self`; `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }
}

impl Add for C2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.z + rhs.z, self.w + rhs.w)
    }
}

impl Sub for C2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.z - rhs.z, self.w - rhs.w)
    }
}

impl Mul<f64> for C2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.z * rhs, self.w * rhs)
    }
}
