//! Interval arithmetic on scalars, vectors and matrices.
//!
//! Endpoints are computed in round-to-nearest floating point; there is no
//! outward rounding, so enclosure guarantees hold up to the rounding error of
//! the endpoint evaluations themselves.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonempty compact interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Products where one factor is zero and the other infinite are zero.
fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::DomainViolation(format!("interval [{lo}, {hi}] has lo > hi")))
        }
    }

    /// Builds `[min(a,b), max(a,b)]`.
    pub fn spanning(a: f64, b: f64) -> Self {
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    /// The symmetric interval `[-1, 1]`.
    pub fn unit() -> Self {
        Interval { lo: -1.0, hi: 1.0 }
    }

    pub fn entire() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.hi + self.lo)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    /// Largest absolute value attained in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// `self > other` in the certain sense: every element of `self` exceeds every element of `other`.
    pub fn gt(&self, other: &Interval) -> bool {
        self.lo > other.hi
    }

    pub fn ge(&self, other: &Interval) -> bool {
        self.lo >= other.hi
    }

    pub fn lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    pub fn scale(&self, s: f64) -> Interval {
        Interval::spanning(mul_ext(s, self.lo), mul_ext(s, self.hi))
    }

    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::DivByIntervalContainingZero);
        }
        Ok(*self * Interval::spanning(1.0 / rhs.lo, 1.0 / rhs.hi))
    }

    pub fn sqr(&self) -> Interval {
        self.powi(2)
    }

    /// Integer power for `n >= 0`.
    pub fn powi(&self, n: u32) -> Interval {
        let n_i = n as i32;
        match n {
            0 => Interval::point(1.0),
            _ if n % 2 == 1 => Interval {
                lo: self.lo.powi(n_i),
                hi: self.hi.powi(n_i),
            },
            _ => {
                let a = self.abs();
                Interval {
                    lo: a.lo.powi(n_i),
                    hi: a.hi.powi(n_i),
                }
            }
        }
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::DomainViolation(format!("sqrt of [{}, {}]", self.lo, self.hi)));
        }
        Ok(Interval {
            lo: self.lo.sqrt(),
            hi: self.hi.sqrt(),
        })
    }

    pub fn exp(&self) -> Interval {
        Interval {
            lo: self.lo.exp(),
            hi: self.hi.exp(),
        }
    }

    pub fn ln(&self) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::DomainViolation(format!("log of [{}, {}]", self.lo, self.hi)));
        }
        Ok(Interval {
            lo: self.lo.ln(),
            hi: self.hi.ln(),
        })
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            Interval {
                lo: -self.hi,
                hi: -self.lo,
            }
        } else {
            Interval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    /// Scans the multiples of π/2 inside the interval; `at_multiple(k)` gives
    /// the extremum value (if any) attained at kπ/2.
    fn trig_range(&self, f: fn(f64) -> f64, at_multiple: fn(i64) -> Option<f64>) -> Interval {
        if !self.is_bounded() || self.diam() >= 2.0 * PI {
            return Interval::unit();
        }
        let (fa, fb) = (f(self.lo), f(self.hi));
        let mut lo = fa.min(fb);
        let mut hi = fa.max(fb);
        let k0 = (self.lo / FRAC_PI_2).ceil() as i64;
        let k1 = (self.hi / FRAC_PI_2).floor() as i64;
        for k in k0..=k1 {
            if let Some(v) = at_multiple(k) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Interval { lo, hi }
    }

    pub fn sin(&self) -> Interval {
        self.trig_range(f64::sin, |k| match k.rem_euclid(4) {
            1 => Some(1.0),
            3 => Some(-1.0),
            _ => None,
        })
    }

    pub fn cos(&self) -> Interval {
        self.trig_range(f64::cos, |k| match k.rem_euclid(4) {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        })
    }

    pub fn tan(&self) -> Result<Interval> {
        if !self.is_bounded() {
            return Err(Error::DomainViolation("tan of an unbounded interval".into()));
        }
        // Poles sit at π/2 + mπ.
        let m = ((self.lo - FRAC_PI_2) / PI).ceil();
        let pole = FRAC_PI_2 + m * PI;
        if pole <= self.hi {
            return Err(Error::DomainViolation(format!(
                "tan of [{}, {}] crosses a pole",
                self.lo, self.hi
            )));
        }
        Ok(Interval {
            lo: self.lo.tan(),
            hi: self.hi.tan(),
        })
    }

    /// Uniform draw from the interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_point() {
            self.lo
        } else {
            let t: f64 = rng.random();
            (self.lo + t * self.diam()).clamp(self.lo, self.hi)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            mul_ext(self.lo, rhs.lo),
            mul_ext(self.lo, rhs.hi),
            mul_ext(self.hi, rhs.lo),
            mul_ext(self.hi, rhs.hi),
        ];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval {
            lo: self.lo + rhs,
            hi: self.hi + rhs,
        }
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sqr,
    Pow(u32),
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Abs,
}

impl UnaryFn {
    pub fn apply(self, x: Interval) -> Result<Interval> {
        Ok(match self {
            UnaryFn::Sqr => x.sqr(),
            UnaryFn::Pow(n) => x.powi(n),
            UnaryFn::Sqrt => x.sqrt()?,
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => x.ln()?,
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Tan => x.tan()?,
            UnaryFn::Abs => x.abs(),
        })
    }

    pub fn apply_real(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sqr => x * x,
            UnaryFn::Pow(n) => x.powi(n as i32),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => x.ln(),
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Tan => x.tan(),
            UnaryFn::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleDistribution {
    #[default]
    Uniform,
    /// Uniform over the corners of the box.
    Vertices,
}

/// A box in ℝⁿ stored as lower and upper endpoint vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    #[serde(with = "crate::serde_util::vector")]
    lo: DVector<f64>,
    #[serde(with = "crate::serde_util::vector")]
    hi: DVector<f64>,
}

impl IntervalVector {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::DomainViolation(format!(
                "component {i}: lo {} > hi {}",
                lo[i], hi[i]
            )));
        }
        Ok(IntervalVector { lo, hi })
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(lo), DVector::from_row_slice(hi))
    }

    pub fn from_intervals(items: &[Interval]) -> Self {
        IntervalVector {
            lo: DVector::from_iterator(items.len(), items.iter().map(|i| i.lo)),
            hi: DVector::from_iterator(items.len(), items.iter().map(|i| i.hi)),
        }
    }

    pub fn point(x: &DVector<f64>) -> Self {
        IntervalVector {
            lo: x.clone(),
            hi: x.clone(),
        }
    }

    /// `mid ± rad` componentwise; `rad` must be nonnegative.
    pub fn from_mid_rad(mid: &DVector<f64>, rad: &DVector<f64>) -> Self {
        IntervalVector {
            lo: mid - rad,
            hi: mid + rad,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<f64> {
        &self.hi
    }

    pub fn get(&self, i: usize) -> Interval {
        Interval {
            lo: self.lo[i],
            hi: self.hi[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Interval> + '_ {
        (0..self.dim()).map(|i| self.get(i))
    }

    pub fn to_intervals(&self) -> Vec<Interval> {
        self.iter().collect()
    }

    pub fn mid(&self) -> DVector<f64> {
        (&self.hi + &self.lo) * 0.5
    }

    pub fn rad(&self) -> DVector<f64> {
        (&self.hi - &self.lo) * 0.5
    }

    pub fn diam(&self) -> DVector<f64> {
        &self.hi - &self.lo
    }

    /// `(mid, rad, diam)` in one call.
    pub fn mid_rad_diam(&self) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        (self.mid(), self.rad(), self.diam())
    }

    /// Componentwise magnitude `max(|lo|, |hi|)`.
    pub fn mag(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.iter().map(|i| i.mag()))
    }

    pub fn is_bounded(&self) -> bool {
        self.iter().all(|i| i.is_bounded())
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other,
            })
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        self.check_dim(x.len())?;
        Ok((0..self.dim()).all(|i| self.lo[i] <= x[i] && x[i] <= self.hi[i]))
    }

    pub fn is_subset_of(&self, other: &IntervalVector) -> Result<bool> {
        self.check_dim(other.dim())?;
        Ok(self.iter().zip(other.iter()).all(|(a, b)| a.is_subset_of(&b)))
    }

    /// Componentwise intersection; `None` when any component is disjoint.
    pub fn intersect(&self, other: &IntervalVector) -> Result<Option<IntervalVector>> {
        self.check_dim(other.dim())?;
        let parts: Option<Vec<Interval>> = self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| a.intersect(&b))
            .collect();
        Ok(parts.map(|p| IntervalVector::from_intervals(&p)))
    }

    pub fn hull(&self, other: &IntervalVector) -> Result<IntervalVector> {
        self.check_dim(other.dim())?;
        Ok(self.zip_map(other, |a, b| a.hull(&b)))
    }

    fn zip_map(&self, other: &IntervalVector, f: impl Fn(Interval, Interval) -> Interval) -> IntervalVector {
        let v: Vec<Interval> = self.iter().zip(other.iter()).map(|(a, b)| f(a, b)).collect();
        IntervalVector::from_intervals(&v)
    }

    pub fn binary(&self, other: &IntervalVector, op: BinaryOp) -> Result<IntervalVector> {
        self.check_dim(other.dim())?;
        let v: Result<Vec<Interval>> = self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| match op {
                BinaryOp::Add => Ok(a + b),
                BinaryOp::Sub => Ok(a - b),
                BinaryOp::Mul => Ok(a * b),
                BinaryOp::Div => a.checked_div(&b),
            })
            .collect();
        Ok(IntervalVector::from_intervals(&v?))
    }

    pub fn unary(&self, f: UnaryFn) -> Result<IntervalVector> {
        let v: Result<Vec<Interval>> = self.iter().map(|a| f.apply(a)).collect();
        Ok(IntervalVector::from_intervals(&v?))
    }

    /// Exact range of ‖x‖₁ over the box.
    pub fn norm1(&self) -> Interval {
        self.iter().fold(Interval::point(0.0), |acc, x| acc + x.abs())
    }

    /// Exact range of ‖x‖₂ over the box.
    pub fn norm2(&self) -> Interval {
        let s = self.iter().fold(Interval::point(0.0), |acc, x| acc + x.abs().sqr());
        s.sqrt().expect("sum of squares is nonnegative")
    }

    pub fn norm(&self, p: u8) -> Result<Interval> {
        match p {
            1 => Ok(self.norm1()),
            2 => Ok(self.norm2()),
            _ => Err(Error::DomainViolation(format!("interval norm {p} not supported"))),
        }
    }

    /// Certain comparisons: true iff the relation holds for every component pair.
    pub fn gt(&self, other: &IntervalVector) -> Result<bool> {
        self.check_dim(other.dim())?;
        Ok(self.iter().zip(other.iter()).all(|(a, b)| a.gt(&b)))
    }

    pub fn ge(&self, other: &IntervalVector) -> Result<bool> {
        self.check_dim(other.dim())?;
        Ok(self.iter().zip(other.iter()).all(|(a, b)| a.ge(&b)))
    }

    pub fn lt(&self, other: &IntervalVector) -> Result<bool> {
        other.gt(self)
    }

    pub fn le(&self, other: &IntervalVector) -> Result<bool> {
        other.ge(self)
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        dist: SampleDistribution,
        rng: &mut R,
    ) -> Vec<DVector<f64>> {
        (0..n)
            .map(|_| {
                DVector::from_iterator(
                    self.dim(),
                    self.iter().map(|i| match dist {
                        SampleDistribution::Uniform => i.sample(rng),
                        SampleDistribution::Vertices => {
                            if rng.random_bool(0.5) {
                                i.lo
                            } else {
                                i.hi
                            }
                        }
                    }),
                )
            })
            .collect()
    }

    /// Concatenation `[self; other]`.
    pub fn stack(&self, other: &IntervalVector) -> IntervalVector {
        let mut v = self.to_intervals();
        v.extend(other.iter());
        IntervalVector::from_intervals(&v)
    }
}

/// A box of matrices `[lo, hi]`, elementwise.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    lo: DMatrix<f64>,
    hi: DMatrix<f64>,
}

impl IntervalMatrix {
    pub fn new(lo: DMatrix<f64>, hi: DMatrix<f64>) -> Result<Self> {
        if lo.shape() != hi.shape() {
            return Err(Error::ShapeMismatch(format!(
                "interval matrix endpoints {:?} vs {:?}",
                lo.shape(),
                hi.shape()
            )));
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| !(a <= b)) {
            return Err(Error::DomainViolation("interval matrix has lo > hi".into()));
        }
        Ok(IntervalMatrix { lo, hi })
    }

    pub fn point(m: &DMatrix<f64>) -> Self {
        IntervalMatrix {
            lo: m.clone(),
            hi: m.clone(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Interval) -> Self {
        let mut lo = DMatrix::zeros(rows, cols);
        let mut hi = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                lo[(i, j)] = v.lo;
                hi[(i, j)] = v.hi;
            }
        }
        IntervalMatrix { lo, hi }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.lo.shape()
    }

    pub fn nrows(&self) -> usize {
        self.lo.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.lo.ncols()
    }

    pub fn lo(&self) -> &DMatrix<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DMatrix<f64> {
        &self.hi
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        Interval {
            lo: self.lo[(i, j)],
            hi: self.hi[(i, j)],
        }
    }

    pub fn mid(&self) -> DMatrix<f64> {
        (&self.hi + &self.lo) * 0.5
    }

    pub fn rad(&self) -> DMatrix<f64> {
        (&self.hi - &self.lo) * 0.5
    }

    pub fn transpose(&self) -> IntervalMatrix {
        IntervalMatrix {
            lo: self.lo.transpose(),
            hi: self.hi.transpose(),
        }
    }

    pub fn contains(&self, m: &DMatrix<f64>) -> bool {
        m.shape() == self.shape()
            && m
                .iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn mul_vec(&self, x: &IntervalVector) -> Result<IntervalVector> {
        if self.ncols() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                got: x.dim(),
            });
        }
        let out: Vec<Interval> = (0..self.nrows())
            .map(|i| {
                (0..self.ncols()).fold(Interval::point(0.0), |acc, j| acc + self.get(i, j) * x.get(j))
            })
            .collect();
        Ok(IntervalVector::from_intervals(&out))
    }

    /// Product with a real matrix on the right: `[M]·R`.
    pub fn mul_real_right(&self, r: &DMatrix<f64>) -> Result<IntervalMatrix> {
        if self.ncols() != r.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "interval matrix {:?} times {:?}",
                self.shape(),
                r.shape()
            )));
        }
        Ok(IntervalMatrix::from_fn(self.nrows(), r.ncols(), |i, k| {
            (0..self.ncols()).fold(Interval::point(0.0), |acc, j| acc + self.get(i, j) * r[(j, k)])
        }))
    }

    /// Product with a real matrix on the left: `L·[M]`.
    pub fn mul_real_left(&self, l: &DMatrix<f64>) -> Result<IntervalMatrix> {
        Ok(self.transpose().mul_real_right(&l.transpose())?.transpose())
    }
}
