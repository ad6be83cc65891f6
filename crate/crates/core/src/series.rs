//! Truncated complex power series Σ_{n≤N} c_n zⁿ.

use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series is singular: constant term {0:.3e} cannot be inverted")]
    Singular(f64),
    #[error("square root needs constant term 1, found {0}")]
    SqrtConstant(C64),
    #[error("division by z needs vanishing constant term, found |c0| = {0:.3e}")]
    Branch(f64),
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
}

/// Coefficients `coeffs[n]` of zⁿ for n = 0..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<C64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Series { coeffs: vec![ZERO; order + 1] }
    }

    pub fn constant(v: C64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = v;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(C64::new(1.0, 0.0), order)
    }

    /// The series z.
    pub fn z(order: usize) -> Self {
        Self::monomial(C64::new(1.0, 0.0), 1, order)
    }

    /// v·z^k.
    pub fn monomial(v: C64, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = v;
        }
        s
    }

    /// From leading coefficients; missing ones are zero, extra ones dropped.
    pub fn from_coeffs(c: &[C64], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (dst, src) in s.coeffs.iter_mut().zip(c) {
            *dst = *src;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(&self.coeffs, order)
    }

    pub fn scale(&self, s: C64) -> Self {
        Series { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add_const(&self, v: C64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += v;
        s
    }

    fn check(&self, other: &Series) -> Result<(), SeriesError> {
        if self.order() != other.order() {
            return Err(SeriesError::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check(other)?;
        Ok(Series { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn try_sub(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check(other)?;
        Ok(Series { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }

    pub fn try_mul(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check(other)?;
        let n = self.order();
        let mut out = vec![ZERO; n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Series { coeffs: out })
    }

    /// 1/f, requiring |f_0| > 1e-14.
    pub fn invert(&self) -> Result<Series, SeriesError> {
        let f0 = self.coeffs[0];
        if !(f0.norm() > 1e-14) {
            return Err(SeriesError::Singular(f0.norm()));
        }
        let n = self.order();
        let inv0 = 1.0 / f0;
        let mut g = vec![ZERO; n + 1];
        g[0] = inv0;
        for k in 1..=n {
            let s: C64 = (1..=k).map(|i| self.coeffs[i] * g[k - i]).sum();
            g[k] = -s * inv0;
        }
        Ok(Series { coeffs: g })
    }

    /// √f for f with constant term exactly 1 (to 1e-14), choosing √1 = 1.
    pub fn sqrt(&self) -> Result<Series, SeriesError> {
        let f0 = self.coeffs[0];
        if (f0 - 1.0).norm() > 1e-14 {
            return Err(SeriesError::SqrtConstant(f0));
        }
        let n = self.order();
        let mut s = vec![ZERO; n + 1];
        s[0] = C64::new(1.0, 0.0);
        for k in 1..=n {
            let cross: C64 = (1..k).map(|i| s[i] * s[k - i]).sum();
            s[k] = (self.coeffs[k] - cross) / 2.0;
        }
        Ok(Series { coeffs: s })
    }

    /// Multiply by z^k, dropping terms beyond the order.
    pub fn shift_up(&self, k: usize) -> Series {
        let n = self.order();
        let mut out = vec![ZERO; n + 1];
        for i in 0..=n.saturating_sub(k) {
            if i + k <= n {
                out[i + k] = self.coeffs[i];
            }
        }
        Series { coeffs: out }
    }

    /// Divide by z; the constant term must vanish (to `tol`). The top
    /// coefficient is unknown after division, so the order drops by one.
    pub fn div_z(&self, tol: f64) -> Result<Series, SeriesError> {
        let c0 = self.coeffs[0].norm();
        if c0 > tol {
            return Err(SeriesError::Branch(c0));
        }
        Ok(Series { coeffs: self.coeffs[1..].to_vec() })
    }

    pub fn powi(&self, n: usize) -> Series {
        let mut acc = Series::one(self.order());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Horner evaluation of the truncated polynomial at z.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.try_add(rhs).expect("series orders must match")
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.try_sub(rhs).expect("series orders must match")
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.try_mul(rhs).expect("series orders must match")
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale_re(-1.0)
    }
}
