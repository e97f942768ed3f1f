//! The four problem classes:
//!
//! * linear IAE `A(t)y(t) + ∫ k(t,s)y(s)ds = f(t)`
//! * linear DAE `A(t)y'(t) + B(t)y(t) = q(t)`
//! * semi-nonlinear DAE `A(t)y'(t) + F(t, y(t)) = f(t)`
//! * semi-nonlinear IAE `A(t)y(t) + ∫ κ(t, s, y(s))ds = f(t)`
//!
//! Integrals run from the problem's integration origin (usually 0) to `t`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::func::{Interval, Kernel, MatrixFunction, VectorFunction};
use crate::mat::{self, Mat, DEFAULT_RANK_TOL};
use crate::quad;

pub type StateMap = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type StateJacobian = Arc<dyn Fn(f64, &[f64]) -> Mat + Send + Sync>;
pub type KernelMap = Arc<dyn Fn(f64, f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type KernelJacobian = Arc<dyn Fn(f64, f64, &[f64]) -> Mat + Send + Sync>;

/// Quadrature tolerance used when a right-hand side is defined through an integral.
pub const QUAD_TOL: f64 = 1e-12;

/// A scalar function of `(t, y)` whose zeros mark a critical condition.
#[derive(Clone)]
pub struct CriticalCondition {
    pub id: String,
    g: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
}

impl CriticalCondition {
    pub fn new(id: impl Into<String>, g: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CriticalCondition { id: id.into(), g: Arc::new(g) }
    }

    /// The condition `y_i = 0` (zero-based component index), labelled `y{i+1}`.
    pub fn component(i: usize) -> Self {
        Self::new(alloc::format!("y{}", i + 1), move |_, y| y[i])
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> f64 {
        (self.g)(t, y)
    }
}

impl core::fmt::Debug for CriticalCondition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "CriticalCondition({})", self.id)
    }
}

/// Central-difference Jacobian of `g(t, ·)` at `y`; column `j` perturbs `y_j`
/// by `±step·max(1, |y_j|)`.
pub fn fd_jacobian(g: impl Fn(f64, &[f64]) -> Result<Vec<f64>>, t: f64, y: &[f64], step: f64) -> Result<Mat> {
    if !(step > 0.0) {
        return Err(Error::invalid("jacobian step must be positive"));
    }
    let n = y.len();
    let mut jac: Option<Mat> = None;
    let mut yp = y.to_vec();
    for j in 0..n {
        let dj = step * 1f64.max(y[j].abs());
        yp[j] = y[j] + dj;
        let plus = g(t, &yp)?;
        yp[j] = y[j] - dj;
        let minus = g(t, &yp)?;
        yp[j] = y[j];
        let m = jac.get_or_insert_with(|| Mat::zeros(plus.len(), n));
        for i in 0..plus.len() {
            let d = (plus[i] - minus[i]) / (2.0 * dj);
            if !d.is_finite() {
                return Err(Error::Evaluation("jacobian column".into()));
            }
            m[(i, j)] = d;
        }
    }
    jac.ok_or_else(|| Error::invalid("empty state vector"))
}

/// Default relative perturbation for [`fd_jacobian`].
pub const JACOBIAN_STEP: f64 = 1e-6;

fn finite_vec(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Evaluation(what.into()))
    }
}

/// `A(t)y(t) + ∫_{origin}^t k(t,s)y(s)ds = f(t)`.
#[derive(Clone, Debug)]
pub struct LinearIae {
    pub a: MatrixFunction,
    pub k: Kernel,
    pub f: VectorFunction,
    pub origin: f64,
}

impl LinearIae {
    pub fn new(a: MatrixFunction, k: Kernel, f: VectorFunction) -> Result<Self> {
        let origin = a.domain().lo;
        Self::with_origin(a, k, f, origin)
    }

    pub fn with_origin(a: MatrixFunction, k: Kernel, f: VectorFunction, origin: f64) -> Result<Self> {
        let r = a.rows();
        if !a.domain().contains(origin) {
            return Err(Error::invalid("integration origin outside the domain"));
        }
        if a.cols() != r || k.dim() != r || f.dim() != r {
            return Err(Error::Dimension { expected: r, got: k.dim().max(f.dim()) });
        }
        Ok(LinearIae { a, k, f, origin })
    }

    /// The linear IAE whose solution is `y`: `f(t) = A(t)y(t) + ∫ k(t,s)y(s)ds`.
    pub fn manufactured(a: MatrixFunction, k: Kernel, y: VectorFunction, origin: f64) -> Result<Self> {
        let (aa, kk, yy) = (a.clone(), k.clone(), y.clone());
        let r = a.rows();
        let f = VectorFunction::try_new(a.domain(), r, move |t| {
            let mut v = aa.eval(t)?.mul_vec(&yy.eval(t)?);
            let integral =
                quad::integrate_adaptive(origin, t, r, QUAD_TOL, |s| Ok(kk.eval(t, s)?.mul_vec(&yy.eval(s)?)))?;
            v.iter_mut().zip(&integral).for_each(|(x, i)| *x += i);
            Ok(v)
        });
        Self::with_origin(a, k, f, origin)
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn domain(&self) -> Interval {
        self.a.domain()
    }
}

/// `A(t)y'(t) + B(t)y(t) = q(t)`, `y(t_start) = y0`.
#[derive(Clone, Debug)]
pub struct LinearDae {
    pub a: MatrixFunction,
    pub b: MatrixFunction,
    pub q: VectorFunction,
    pub y0: Vec<f64>,
    pub t_start: f64,
}

impl LinearDae {
    pub fn new(a: MatrixFunction, b: MatrixFunction, q: VectorFunction, y0: Vec<f64>) -> Result<Self> {
        let r = a.rows();
        if b.rows() != r || b.cols() != r || q.dim() != r || y0.len() != r {
            return Err(Error::Dimension { expected: r, got: y0.len() });
        }
        let t_start = a.domain().lo;
        Ok(LinearDae { a, b, q, y0, t_start })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn domain(&self) -> Interval {
        self.a.domain()
    }
}

/// `A(t)y'(t) + F(t, y(t)) = f(t)`.
#[derive(Clone)]
pub struct SemiNonlinearDae {
    pub name: String,
    pub a: MatrixFunction,
    pub f_map: StateMap,
    pub f_jac: Option<StateJacobian>,
    pub rhs: VectorFunction,
    pub y0: Vec<f64>,
    pub exact: Option<VectorFunction>,
    pub critical: Vec<CriticalCondition>,
    pub t_start: f64,
}

impl SemiNonlinearDae {
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn domain(&self) -> Interval {
        self.a.domain()
    }

    pub fn eval_f(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        finite_vec((self.f_map)(t, y), "F(t, y)")
    }

    /// `F_y(t, y)`, analytic when registered, otherwise by central differences.
    pub fn jacobian(&self, t: f64, y: &[f64]) -> Result<Mat> {
        match &self.f_jac {
            Some(j) => {
                let m = j(t, y);
                m.check_finite("F_y")?;
                Ok(m)
            }
            None => self.fd_jacobian(t, y),
        }
    }

    pub fn fd_jacobian(&self, t: f64, y: &[f64]) -> Result<Mat> {
        fd_jacobian(|t, y| self.eval_f(t, y), t, y, JACOBIAN_STEP)
    }

    /// `‖V(t)(F(t, y) − f(t))‖₂`, the violation of the algebraic rows at `(t, y)`.
    pub fn algebraic_residual(&self, t: f64, y: &[f64]) -> Result<f64> {
        let v = mat::projector(&self.a.eval(t)?, DEFAULT_RANK_TOL)?;
        let r = mat::sub_vec(&self.eval_f(t, y)?, &self.rhs.eval(t)?);
        Ok(mat::norm2(&v.mul_vec(&r)))
    }

    pub fn check_consistent(&self, t: f64, y: &[f64], tol: f64) -> Result<()> {
        let res = self.algebraic_residual(t, y)?;
        if res <= tol {
            Ok(())
        } else {
            Err(Error::InconsistentInitialValue(res))
        }
    }

    /// Initial value for a solve starting at `t`: the exact solution when one is
    /// registered, otherwise `y0` (which must then be posed at `t_start`).
    pub fn initial_value(&self, t: f64) -> Result<Vec<f64>> {
        if let Some(ex) = &self.exact {
            return ex.eval(t);
        }
        if (t - self.t_start).abs() > 1e-12 * 1f64.max(t.abs()) {
            return Err(Error::invalid("no initial value known away from t_start"));
        }
        Ok(self.y0.clone())
    }
}

impl SemiNonlinearDae {
    /// The equivalent IAE `A(t)y(t) + ∫_{t0}^t (F(s, y) − A'(s)y)ds = A(t0)y0 + ∫_{t0}^t f`.
    pub fn to_iae(&self) -> Result<SemiNonlinearIae> {
        let dom = self.domain();
        let r = self.dim();
        let t0 = self.t_start;
        let (f_map, a) = (self.f_map.clone(), self.a.clone());
        let kappa: KernelMap = Arc::new(move |_t, s, y| {
            let mut v = f_map(s, y);
            match a.derivative(s, None) {
                Ok(da) => {
                    let dy = da.mul_vec(y);
                    v.iter_mut().zip(&dy).for_each(|(x, d)| *x -= d);
                    v
                }
                Err(_) => vec![f64::NAN; v.len()],
            }
        });
        let base = self.a.eval(t0)?.mul_vec(&self.initial_value(t0)?);
        let rhs_fn = self.rhs.clone();
        let rhs = VectorFunction::try_new(dom, r, move |t| {
            let mut v = quad::integrate_adaptive(t0, t, r, QUAD_TOL, |s| rhs_fn.eval(s))?;
            v.iter_mut().zip(&base).for_each(|(x, b)| *x += b);
            Ok(v)
        });
        Ok(SemiNonlinearIae {
            name: alloc::format!("{}-iae", self.name),
            a: self.a.clone(),
            kappa,
            kappa_y: None,
            rhs,
            exact: self.exact.clone(),
            critical: self.critical.clone(),
            origin: t0,
        })
    }
}

impl core::fmt::Debug for SemiNonlinearDae {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SemiNonlinearDae").field("name", &self.name).field("a", &self.a).finish()
    }
}

/// `A(t)y(t) + ∫_{origin}^t κ(t, s, y(s))ds = f(t)`.
#[derive(Clone)]
pub struct SemiNonlinearIae {
    pub name: String,
    pub a: MatrixFunction,
    pub kappa: KernelMap,
    pub kappa_y: Option<KernelJacobian>,
    pub rhs: VectorFunction,
    pub exact: Option<VectorFunction>,
    pub critical: Vec<CriticalCondition>,
    pub origin: f64,
}

impl SemiNonlinearIae {
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn domain(&self) -> Interval {
        self.a.domain()
    }

    pub fn eval_kappa(&self, t: f64, s: f64, y: &[f64]) -> Result<Vec<f64>> {
        finite_vec((self.kappa)(t, s, y), "kappa(t, s, y)")
    }

    pub fn jacobian(&self, t: f64, s: f64, y: &[f64]) -> Result<Mat> {
        match &self.kappa_y {
            Some(j) => {
                let m = j(t, s, y);
                m.check_finite("kappa_y")?;
                Ok(m)
            }
            None => self.fd_jacobian(t, s, y),
        }
    }

    pub fn fd_jacobian(&self, t: f64, s: f64, y: &[f64]) -> Result<Mat> {
        fd_jacobian(|s, y| self.eval_kappa(t, s, y), s, y, JACOBIAN_STEP)
    }
}

impl core::fmt::Debug for SemiNonlinearIae {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SemiNonlinearIae").field("name", &self.name).field("origin", &self.origin).finish()
    }
}

#[derive(Clone, Debug)]
pub enum Problem {
    LinearIae(LinearIae),
    LinearDae(LinearDae),
    Dae(SemiNonlinearDae),
    Iae(SemiNonlinearIae),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::LinearIae(p) => p.dim(),
            Problem::LinearDae(p) => p.dim(),
            Problem::Dae(p) => p.dim(),
            Problem::Iae(p) => p.dim(),
        }
    }

    pub fn domain(&self) -> Interval {
        match self {
            Problem::LinearIae(p) => p.domain(),
            Problem::LinearDae(p) => p.domain(),
            Problem::Dae(p) => p.domain(),
            Problem::Iae(p) => p.domain(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Problem::LinearIae(_) => "linear-iae",
            Problem::LinearDae(_) => "linear-dae",
            Problem::Dae(_) => "dae",
            Problem::Iae(_) => "iae",
        }
    }

    pub fn exact(&self) -> Option<&VectorFunction> {
        match self {
            Problem::Dae(p) => p.exact.as_ref(),
            Problem::Iae(p) => p.exact.as_ref(),
            _ => None,
        }
    }

    pub fn critical_conditions(&self) -> &[CriticalCondition] {
        match self {
            Problem::Dae(p) => &p.critical,
            Problem::Iae(p) => &p.critical,
            _ => &[],
        }
    }
}

/// Samples `(t_i, y_i)` of a trajectory, linearly interpolated in between.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TrajectorySample {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TrajectorySample {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid("trajectory needs matching, non-empty times and values"));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        let r = values[0].len();
        if values.iter().any(|v| v.len() != r || !v.iter().all(|x| x.is_finite())) {
            return Err(Error::invalid("trajectory values must be finite vectors of equal length"));
        }
        Ok(TrajectorySample { times, values })
    }

    pub fn from_fn(y: &VectorFunction, times: Vec<f64>) -> Result<Self> {
        let values = times.iter().map(|&t| y.eval(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, values)
    }

    /// A trajectory that stays at `y` over `span`.
    pub fn constant(y: Vec<f64>, span: Interval) -> Result<Self> {
        if span.length() == 0.0 {
            return Self::new(vec![span.lo], vec![y]);
        }
        Self::new(vec![span.lo, span.hi], vec![y.clone(), y])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn span(&self) -> Interval {
        Interval { lo: self.times[0], hi: *self.times.last().expect("non-empty") }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation; an error outside the sampled span.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>> {
        let span = self.span();
        span.check(t)?;
        let t = t.clamp(span.lo, span.hi);
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            return Ok(self.values[0].clone());
        }
        if idx >= self.times.len() {
            return Ok(self.values[self.times.len() - 1].clone());
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values[idx - 1].iter().zip(&self.values[idx]).map(|(a, b)| a + w * (b - a)).collect())
    }
}

/// Plugs the registered exact solution into the defining equation at every
/// grid point and returns the largest residual (max-norm). Integrals use
/// adaptive quadrature to `quad_tol`, derivatives the 4th-order stencil.
pub fn verify_exact(problem: &Problem, grid: &[f64], quad_tol: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    match problem {
        Problem::Dae(p) => {
            let ex = p.exact.as_ref().ok_or(Error::MissingExact)?;
            for &t in grid {
                let y = ex.eval(t)?;
                let dy = ex.derivative(t, None)?;
                let mut r = p.a.eval(t)?.mul_vec(&dy);
                let f = p.eval_f(t, &y)?;
                let rhs = p.rhs.eval(t)?;
                for i in 0..r.len() {
                    r[i] += f[i] - rhs[i];
                }
                worst = worst.max(mat::norm_inf(&r));
            }
        }
        Problem::Iae(p) => {
            let ex = p.exact.as_ref().ok_or(Error::MissingExact)?;
            let r = p.dim();
            for &t in grid {
                let mut res = p.a.eval(t)?.mul_vec(&ex.eval(t)?);
                let integral =
                    quad::integrate_adaptive(p.origin, t, r, quad_tol, |s| p.eval_kappa(t, s, &ex.eval(s)?))?;
                let rhs = p.rhs.eval(t)?;
                for i in 0..r {
                    res[i] += integral[i] - rhs[i];
                }
                worst = worst.max(mat::norm_inf(&res));
            }
        }
        Problem::LinearIae(_) | Problem::LinearDae(_) => return Err(Error::MissingExact),
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_jacobian_of_identity_map() {
        let j = fd_jacobian(|_, y| Ok(y.to_vec()), 0.3, &[1.0, -2.0, 5.0], JACOBIAN_STEP).unwrap();
        assert!((&j - &Mat::identity(3)).max_abs() < 1e-9);
    }

    #[test]
    fn fd_jacobian_rejects_nonfinite() {
        let r = fd_jacobian(|_, y| Ok(vec![1.0 / y[0]]), 0.0, &[0.0], 1e-300);
        assert!(r.is_err());
    }

    #[test]
    fn trajectory_interpolates_and_refuses_extrapolation() {
        let tr = TrajectorySample::new(vec![0.0, 1.0, 2.0], vec![vec![0.0], vec![2.0], vec![0.0]]).unwrap();
        assert_eq!(tr.interpolate(0.5).unwrap(), vec![1.0]);
        assert_eq!(tr.interpolate(1.5).unwrap(), vec![1.0]);
        assert_eq!(tr.interpolate(2.0).unwrap(), vec![0.0]);
        assert!(matches!(tr.interpolate(2.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn trajectory_validation() {
        assert!(TrajectorySample::new(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(TrajectorySample::new(vec![0.0, 1.0], vec![vec![1.0], vec![f64::NAN]]).is_err());
        assert!(TrajectorySample::new(vec![], vec![]).is_err());
    }

    #[test]
    fn manufactured_linear_iae_has_prescribed_solution() {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let a = MatrixFunction::constant(Mat::identity(1), dom);
        let k = Kernel::constant(Mat::identity(1), dom);
        let y = VectorFunction::new(dom, 1, |t| vec![crate::math::exp(-t)]);
        let p = LinearIae::manufactured(a, k, y, 0.0).unwrap();
        // y + ∫y = e^{-t} + 1 - e^{-t} = 1
        for t in [0.0, 0.4, 1.0] {
            assert!((p.f.eval(t).unwrap()[0] - 1.0).abs() < 1e-12);
        }
    }
}
