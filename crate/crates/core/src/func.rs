//! Time-dependent matrices, vectors and two-argument kernels.
//!
//! Each function carries its domain and checks it on every evaluation; values
//! are checked for finiteness so a blown-up composition surfaces as an error
//! rather than propagating NaNs through the index chain.

use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid("interval bounds must be finite with lo <= hi"));
        }
        Ok(Interval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    fn slop(&self) -> f64 {
        1e-12 * 1f64.max(self.lo.abs()).max(self.hi.abs())
    }

    pub fn contains(&self, t: f64) -> bool {
        let e = self.slop();
        t >= self.lo - e && t <= self.hi + e
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain { t, lo: self.lo, hi: self.hi })
        }
    }

    /// `n` equally spaced points including both ends (`n >= 2`), or the left end when `n == 1`.
    pub fn uniform_grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => alloc::vec![self.lo],
            _ => (0..n)
                .map(|i| if i + 1 == n { self.hi } else { self.lo + self.length() * i as f64 / (n - 1) as f64 })
                .collect(),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

/// Default finite-difference step for the 4th-order stencils.
pub fn default_step(t: f64) -> f64 {
    1e-4 * 1f64.max(t.abs())
}

/// Values that can be linearly combined by a difference stencil.
pub trait Linear: Clone {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
}

impl Linear for Mat {
    fn zero_like(&self) -> Self {
        Mat::zeros(self.rows(), self.cols())
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        Mat::axpy(self, a, x)
    }
}

impl Linear for Vec<f64> {
    fn zero_like(&self) -> Self {
        alloc::vec![0.0; self.len()]
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, xi) in self.iter_mut().zip(x) {
            *y += a * xi;
        }
    }
}

const CENTRAL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const FORWARD: [(f64, f64); 5] = [(0.0, -25.0), (1.0, 48.0), (2.0, -36.0), (3.0, 16.0), (4.0, -3.0)];
const BACKWARD: [(f64, f64); 5] = [(0.0, 25.0), (-1.0, -48.0), (-2.0, 36.0), (-3.0, -16.0), (-4.0, 3.0)];

/// Fourth-order finite-difference derivative of `f` at `t`.
///
/// Uses the central five-point stencil when `[t − 2h, t + 2h]` fits in `domain`,
/// otherwise a one-sided five-point stencil pointing into the domain.
pub fn fd_derivative<T: Linear>(f: impl Fn(f64) -> Result<T>, t: f64, step: f64, domain: Interval) -> Result<T> {
    if !(step > 0.0) {
        return Err(Error::invalid("difference step must be positive"));
    }
    domain.check(t)?;
    let mut h = step;
    if domain.length() > 0.0 {
        h = h.min(domain.length() / 4.0);
    }
    let fits = |a: f64, b: f64| domain.contains(t + a * h) && domain.contains(t + b * h);
    let stencil: &[(f64, f64)] = if fits(-2.0, 2.0) {
        &CENTRAL
    } else if fits(0.0, 4.0) {
        &FORWARD
    } else if fits(-4.0, 0.0) {
        &BACKWARD
    } else {
        return Err(Error::Domain { t, lo: domain.lo, hi: domain.hi });
    };
    if stencil.len() == CENTRAL.len() {
        // pairwise differences first: exact zero for functions constant in t
        let mut d1 = f(t + h)?;
        d1.axpy(-1.0, &f(t - h)?);
        let mut d2 = f(t + 2.0 * h)?;
        d2.axpy(-1.0, &f(t - 2.0 * h)?);
        let mut out = d1.zero_like();
        out.axpy(8.0 / (12.0 * h), &d1);
        out.axpy(-1.0 / (12.0 * h), &d2);
        return Ok(out);
    }
    // weights sum to zero, so differences against f(t) keep constants exact
    let f0 = f(t)?;
    let mut acc = f0.zero_like();
    for &(offset, w) in &stencil[1..] {
        let mut v = f(t + offset * h)?;
        v.axpy(-1.0, &f0);
        acc.axpy(w / (12.0 * h), &v);
    }
    Ok(acc)
}

type MatFn = Arc<dyn Fn(f64) -> Result<Mat> + Send + Sync>;
type VecFn = Arc<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;
type KerFn = Arc<dyn Fn(f64, f64) -> Result<Mat> + Send + Sync>;

/// `t ↦ M(t)` on a closed interval, optionally with an analytic derivative.
#[derive(Clone)]
pub struct MatrixFunction {
    f: MatFn,
    derivative: Option<MatFn>,
    /// Declared continuity class `C^p`.
    pub smoothness: u32,
    domain: Interval,
    rows: usize,
    cols: usize,
}

impl MatrixFunction {
    pub fn new(domain: Interval, rows: usize, cols: usize, f: impl Fn(f64) -> Mat + Send + Sync + 'static) -> Self {
        Self::try_new(domain, rows, cols, move |t| Ok(f(t)))
    }

    pub fn try_new(
        domain: Interval,
        rows: usize,
        cols: usize,
        f: impl Fn(f64) -> Result<Mat> + Send + Sync + 'static,
    ) -> Self {
        MatrixFunction { f: Arc::new(f), derivative: None, smoothness: u32::MAX, domain, rows, cols }
    }

    pub fn square(domain: Interval, n: usize, f: impl Fn(f64) -> Mat + Send + Sync + 'static) -> Self {
        Self::new(domain, n, n, f)
    }

    pub fn constant(m: Mat, domain: Interval) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let zero = Mat::zeros(rows, cols);
        Self::new(domain, rows, cols, move |_| m.clone()).with_derivative(move |_| zero.clone())
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> Mat + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(move |t| Ok(d(t))));
        self
    }

    pub fn with_smoothness(mut self, p: u32) -> Self {
        self.smoothness = p;
        self
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn eval(&self, t: f64) -> Result<Mat> {
        self.domain.check(t)?;
        let m = (self.f)(t)?;
        if (m.rows(), m.cols()) != (self.rows, self.cols) {
            return Err(Error::Dimension { expected: self.rows * self.cols, got: m.rows() * m.cols() });
        }
        m.check_finite("matrix function")?;
        Ok(m)
    }

    /// `dM/dt` at `t`: the analytic derivative when present, otherwise a
    /// 4th-order difference with the given step (default `1e-4·max(1,|t|)`).
    pub fn derivative(&self, t: f64, step: Option<f64>) -> Result<Mat> {
        self.domain.check(t)?;
        match &self.derivative {
            Some(d) => {
                let m = d(t)?;
                m.check_finite("matrix derivative")?;
                Ok(m)
            }
            None => fd_derivative(|x| self.eval(x), t, step.unwrap_or_else(|| default_step(t)), self.domain),
        }
    }

    /// The same function on a sub-interval of its domain.
    pub fn restrict(&self, domain: Interval) -> Result<MatrixFunction> {
        if !(self.domain.contains(domain.lo) && self.domain.contains(domain.hi)) {
            return Err(Error::Domain { t: domain.lo, lo: self.domain.lo, hi: self.domain.hi });
        }
        let mut out = self.clone();
        out.domain = domain;
        Ok(out)
    }

    /// Returns `t ↦ dM/dt` as a new matrix function.
    pub fn derivative_fn(&self, step: Option<f64>) -> MatrixFunction {
        let this = self.clone();
        MatrixFunction::try_new(self.domain, self.rows, self.cols, move |t| this.derivative(t, step))
            .with_smoothness(self.smoothness.saturating_sub(1))
    }
}

impl core::fmt::Debug for MatrixFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "MatrixFunction({}x{} on [{}, {}])", self.rows, self.cols, self.domain.lo, self.domain.hi)
    }
}

/// Finite-difference or analytic derivative of a matrix function.
pub fn matfn_derivative(f: &MatrixFunction, t: f64, step: f64) -> Result<Mat> {
    f.derivative(t, Some(step))
}

/// `t ↦ v(t) ∈ Rʳ` on a closed interval.
#[derive(Clone)]
pub struct VectorFunction {
    f: VecFn,
    domain: Interval,
    dim: usize,
}

impl VectorFunction {
    pub fn new(domain: Interval, dim: usize, f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::try_new(domain, dim, move |t| Ok(f(t)))
    }

    pub fn try_new(domain: Interval, dim: usize, f: impl Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        VectorFunction { f: Arc::new(f), domain, dim }
    }

    pub fn zero(domain: Interval, dim: usize) -> Self {
        Self::new(domain, dim, move |_| alloc::vec![0.0; dim])
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        self.domain.check(t)?;
        let v = (self.f)(t)?;
        if v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: v.len() });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Evaluation("vector function".into()));
        }
        Ok(v)
    }

    pub fn derivative(&self, t: f64, step: Option<f64>) -> Result<Vec<f64>> {
        fd_derivative(|x| self.eval(x), t, step.unwrap_or_else(|| default_step(t)), self.domain)
    }
}

impl core::fmt::Debug for VectorFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "VectorFunction({} on [{}, {}])", self.dim, self.domain.lo, self.domain.hi)
    }
}

/// `(t, s) ↦ k(t, s)` for `s, t` in the domain interval.
#[derive(Clone)]
pub struct Kernel {
    f: KerFn,
    domain: Interval,
    dim: usize,
}

impl Kernel {
    pub fn new(domain: Interval, dim: usize, f: impl Fn(f64, f64) -> Mat + Send + Sync + 'static) -> Self {
        Self::try_new(domain, dim, move |t, s| Ok(f(t, s)))
    }

    pub fn try_new(domain: Interval, dim: usize, f: impl Fn(f64, f64) -> Result<Mat> + Send + Sync + 'static) -> Self {
        Kernel { f: Arc::new(f), domain, dim }
    }

    pub fn constant(m: Mat, domain: Interval) -> Self {
        let dim = m.rows();
        Self::new(domain, dim, move |_, _| m.clone())
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<Mat> {
        self.domain.check(t)?;
        self.domain.check(s)?;
        let m = (self.f)(t, s)?;
        if (m.rows(), m.cols()) != (self.dim, self.dim) {
            return Err(Error::Dimension { expected: self.dim * self.dim, got: m.rows() * m.cols() });
        }
        m.check_finite("kernel")?;
        Ok(m)
    }

    pub fn restrict(&self, domain: Interval) -> Result<Kernel> {
        if !(self.domain.contains(domain.lo) && self.domain.contains(domain.hi)) {
            return Err(Error::Domain { t: domain.lo, lo: self.domain.lo, hi: self.domain.hi });
        }
        let mut out = self.clone();
        out.domain = domain;
        Ok(out)
    }

    /// The diagonal `t ↦ k(t, t)`.
    pub fn diagonal(&self) -> MatrixFunction {
        let k = self.clone();
        MatrixFunction::try_new(self.domain, self.dim, self.dim, move |t| k.eval(t, t))
    }
}

impl core::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Kernel({}x{} on [{}, {}])", self.dim, self.dim, self.domain.lo, self.domain.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn constant_has_zero_derivative() {
        let f = MatrixFunction::new(unit(), 2, 2, |_| Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
        for t in [0.0, 0.3, 1.0] {
            assert!(f.derivative(t, None).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn linear_function_derivative_is_identity() {
        let f = MatrixFunction::square(unit(), 2, |t| Mat::identity(2).scale(t));
        let d = matfn_derivative(&f, 0.5, 1e-4).unwrap();
        assert!((&d - &Mat::identity(2)).max_abs() < 1e-8);
    }

    #[test]
    fn sine_derivative_at_left_endpoint_uses_one_sided_stencil() {
        let f = MatrixFunction::square(unit(), 2, |t| Mat::from_rows(&[[math::sin(t), 0.0], [0.0, 0.0]]));
        let d = f.derivative(0.0, None).unwrap();
        assert!((&d - &Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]])).max_abs() < 1e-8);
        let d1 = f.derivative(1.0, None).unwrap();
        assert!((d1[(0, 0)] - math::cos(1.0)).abs() < 1e-8);
    }

    #[test]
    fn analytic_derivative_takes_precedence() {
        let f = MatrixFunction::square(unit(), 1, |t| Mat::from_rows(&[[t * t]]))
            .with_derivative(|_| Mat::from_rows(&[[42.0]]));
        assert_eq!(f.derivative(0.5, None).unwrap()[(0, 0)], 42.0);
    }

    #[test]
    fn evaluation_outside_domain_is_an_error() {
        let f = MatrixFunction::constant(Mat::identity(2), unit());
        assert!(matches!(f.eval(1.5), Err(Error::Domain { .. })));
        assert!(matches!(f.derivative(-0.1, None), Err(Error::Domain { .. })));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let f = MatrixFunction::square(unit(), 1, |t| Mat::from_rows(&[[1.0 / (t - 0.5)]]));
        assert!(matches!(f.eval(0.5), Err(Error::Evaluation(_))));
    }

    #[test]
    fn uniform_grid_hits_both_ends() {
        let g = Interval::new(1.0, 2.0).unwrap().uniform_grid(33);
        assert_eq!(g.len(), 33);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[32], 2.0);
    }
}
