//! Piecewise-polynomial collocation for Volterra IAEs
//! `A(t)y(t) + ∫_{t₀}^t κ(t, s, y(s))ds = f(t)`.
//!
//! On each mesh interval `[t_n, t_n + h]` the approximation is the Lagrange
//! interpolant of its values at `t_n + c_i h`. When `c₁ = 0` the left nodal value
//! is inherited from the previous interval's right end (a continuous
//! approximation) and the equation is collocated at `c₂..c_m`; otherwise all
//! `m` nodes are collocation points. Integrals over past intervals and over the
//! partial current interval use Gauss–Legendre quadrature of the interpolants.

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::{Interval, VectorFunction};
use crate::mat::{self, Lu, Mat, Svd, DEFAULT_RANK_TOL};
use crate::math;
use crate::problem::{LinearIae, SemiNonlinearIae};
use crate::quad::GaussLegendre;

/// The pieces of an IAE the collocation solver needs.
pub trait IaeModel {
    fn dim(&self) -> usize;
    fn domain(&self) -> Interval;
    fn origin(&self) -> f64;
    fn leading(&self, t: f64) -> Result<Mat>;
    fn kappa(&self, t: f64, s: f64, y: &[f64]) -> Result<Vec<f64>>;
    fn kappa_y(&self, t: f64, s: f64, y: &[f64]) -> Result<Mat>;
    fn rhs(&self, t: f64) -> Result<Vec<f64>>;
    fn exact(&self) -> Option<&VectorFunction>;
    fn is_linear(&self) -> bool;
}

impl IaeModel for LinearIae {
    fn dim(&self) -> usize {
        LinearIae::dim(self)
    }
    fn domain(&self) -> Interval {
        LinearIae::domain(self)
    }
    fn origin(&self) -> f64 {
        self.origin
    }
    fn leading(&self, t: f64) -> Result<Mat> {
        self.a.eval(t)
    }
    fn kappa(&self, t: f64, s: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.k.eval(t, s)?.mul_vec(y))
    }
    fn kappa_y(&self, t: f64, s: f64, _y: &[f64]) -> Result<Mat> {
        self.k.eval(t, s)
    }
    fn rhs(&self, t: f64) -> Result<Vec<f64>> {
        self.f.eval(t)
    }
    fn exact(&self) -> Option<&VectorFunction> {
        None
    }
    fn is_linear(&self) -> bool {
        true
    }
}

impl IaeModel for SemiNonlinearIae {
    fn dim(&self) -> usize {
        SemiNonlinearIae::dim(self)
    }
    fn domain(&self) -> Interval {
        SemiNonlinearIae::domain(self)
    }
    fn origin(&self) -> f64 {
        self.origin
    }
    fn leading(&self, t: f64) -> Result<Mat> {
        self.a.eval(t)
    }
    fn kappa(&self, t: f64, s: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.eval_kappa(t, s, y)
    }
    fn kappa_y(&self, t: f64, s: f64, y: &[f64]) -> Result<Mat> {
        self.jacobian(t, s, y)
    }
    fn rhs(&self, t: f64) -> Result<Vec<f64>> {
        self.rhs.eval(t)
    }
    fn exact(&self) -> Option<&VectorFunction> {
        self.exact.as_ref()
    }
    fn is_linear(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CollocationConfig {
    pub c: Vec<f64>,
    pub h: f64,
    pub quad_order: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl CollocationConfig {
    pub fn new(c: Vec<f64>, h: f64) -> Self {
        CollocationConfig { c, h, quad_order: 8, newton_tol: 1e-12, newton_max_iter: 25 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.is_empty() {
            return Err(Error::invalid("at least one collocation parameter is required"));
        }
        if !self.c.iter().all(|&x| (0.0..=1.0).contains(&x)) || !self.c.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("collocation parameters must satisfy 0 <= c1 < ... < cm <= 1"));
        }
        if self.c.len() == 1 && self.c[0] == 0.0 {
            return Err(Error::invalid("c = [0] leaves no collocation point"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("step size must be positive"));
        }
        if self.quad_order == 0 || self.newton_max_iter == 0 || !(self.newton_tol > 0.0) {
            return Err(Error::invalid("quadrature order, Newton tolerance and iteration limit must be positive"));
        }
        Ok(())
    }

    fn inherits_left(&self) -> bool {
        self.c[0] == 0.0
    }
}

fn lagrange(nodes: &[f64], tau: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .fold(1.0, |acc, (_, &ck)| acc * (tau - ck) / (nodes[j] - ck))
        })
        .collect()
}

fn combine(weights: &[f64], values: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; values[0].len()];
    for (w, v) in weights.iter().zip(values) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

/// Piecewise polynomial on the uniform mesh `t_n = origin + n·h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewiseSolution {
    pub origin: f64,
    pub h: f64,
    pub c: Vec<f64>,
    /// `nodal[n][i]` is the value at `t_n + c_i h`.
    pub nodal: Vec<Vec<Vec<f64>>>,
}

impl PiecewiseSolution {
    /// Interpolant of `y` sampled at the collocation nodes of `intervals` steps.
    pub fn from_fn(y: &VectorFunction, origin: f64, h: f64, c: &[f64], intervals: usize) -> Result<Self> {
        let mut nodal = Vec::with_capacity(intervals);
        for n in 0..intervals {
            let tn = origin + n as f64 * h;
            nodal.push(c.iter().map(|ci| y.eval(tn + ci * h)).collect::<Result<Vec<_>>>()?);
        }
        Ok(PiecewiseSolution { origin, h, c: c.to_vec(), nodal })
    }

    pub fn intervals(&self) -> usize {
        self.nodal.len()
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn mesh_point(&self, n: usize) -> f64 {
        self.origin + n as f64 * self.h
    }

    pub fn span(&self) -> Interval {
        Interval { lo: self.origin, hi: self.mesh_point(self.intervals()) }
    }

    /// Every node `(t, value)` in time order.
    pub fn nodes(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::new();
        for (n, vals) in self.nodal.iter().enumerate() {
            let tn = self.mesh_point(n);
            for (ci, v) in self.c.iter().zip(vals) {
                out.push((tn + ci * self.h, v.clone()));
            }
        }
        out
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if self.nodal.is_empty() {
            return Err(Error::invalid("empty solution"));
        }
        self.span().check(t)?;
        let x = (t - self.origin) / self.h;
        let mut n = math::floor(x + 1e-9) as isize;
        n = n.clamp(0, self.intervals() as isize - 1);
        let n = n as usize;
        Ok((n, (t - self.mesh_point(n)) / self.h))
    }

    /// Value at `t`: the interpolant of the interval containing `t` (left-closed).
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let (n, tau) = self.locate(t)?;
        Ok(combine(&lagrange(&self.c, tau), &self.nodal[n]))
    }

    fn eval_local(&self, n: usize, tau: f64) -> Vec<f64> {
        combine(&lagrange(&self.c, tau), &self.nodal[n])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepDiagnostic {
    pub n: usize,
    pub t: f64,
    pub newton_iters: usize,
    /// Max-norm of the collocation residual after the last iterate.
    pub residual: f64,
    /// 2-norm condition number of the final Newton matrix.
    pub cond: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepFailure {
    pub n: usize,
    pub t: f64,
    pub reason: alloc::string::String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IaeSolveResult {
    pub interval: Interval,
    pub solution: PiecewiseSolution,
    pub steps: Vec<StepDiagnostic>,
    pub failure: Option<StepFailure>,
}

impl IaeSolveResult {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Largest collocation residual over all accepted steps.
    pub fn max_residual(&self) -> f64 {
        self.steps.iter().fold(0.0, |m, s| m.max(s.residual))
    }
}

/// Value at the integration origin used for an inherited first node: the exact
/// solution when known, otherwise the minimum-norm solution of `A(t₀)y = f(t₀)`.
fn initial_value(p: &dyn IaeModel) -> Result<Vec<f64>> {
    let t0 = p.origin();
    if let Some(ex) = p.exact() {
        return ex.eval(t0);
    }
    let a = p.leading(t0)?;
    Ok(Svd::new(&a)?.pseudo_inverse(DEFAULT_RANK_TOL).mul_vec(&p.rhs(t0)?))
}

struct Stepper<'a> {
    p: &'a dyn IaeModel,
    cfg: &'a CollocationConfig,
    gauss: GaussLegendre,
    /// Lagrange weights at the Gauss nodes of a full interval.
    full: Vec<Vec<f64>>,
    /// Per collocation node: Lagrange weights at the mapped Gauss nodes of `[0, c_i]`.
    partial: Vec<Vec<Vec<f64>>>,
}

impl<'a> Stepper<'a> {
    fn new(p: &'a dyn IaeModel, cfg: &'a CollocationConfig) -> Result<Self> {
        let gauss = GaussLegendre::new(cfg.quad_order)?;
        let full = gauss.nodes.iter().map(|&x| lagrange(&cfg.c, x)).collect();
        let partial = cfg.c.iter().map(|&ci| gauss.nodes.iter().map(|&x| lagrange(&cfg.c, ci * x)).collect()).collect();
        Ok(Stepper { p, cfg, gauss, full, partial })
    }

    /// `∫` over completed intervals `0..upto` of `κ(t, s, u(s))`.
    fn history(&self, sol: &PiecewiseSolution, t: f64, upto: usize) -> Result<Vec<f64>> {
        let r = self.p.dim();
        let h = self.cfg.h;
        let mut acc = vec![0.0; r];
        for n in 0..upto {
            let tn = sol.mesh_point(n);
            for (q, (&x, &w)) in self.gauss.nodes.iter().zip(&self.gauss.weights).enumerate() {
                let u = combine(&self.full[q], &sol.nodal[n]);
                let k = self.p.kappa(t, tn + x * h, &u)?;
                for (a, v) in acc.iter_mut().zip(&k) {
                    *a += h * w * v;
                }
            }
        }
        Ok(acc)
    }

    /// Collocation residuals at the active nodes and, optionally, the Jacobian
    /// with respect to the free nodal values.
    fn residual(
        &self,
        tn: f64,
        nodes: &[Vec<f64>],
        hist: &[Vec<f64>],
        active: &[usize],
        free: &[usize],
        want_jac: bool,
    ) -> Result<(Vec<f64>, Option<Mat>)> {
        let r = self.p.dim();
        let h = self.cfg.h;
        let mut res = vec![0.0; active.len() * r];
        let mut jac = want_jac.then(|| Mat::zeros(active.len() * r, free.len() * r));
        for (row, &i) in active.iter().enumerate() {
            let ci = self.cfg.c[i];
            let ti = tn + ci * h;
            let ai = self.p.leading(ti)?;
            let mut v = ai.mul_vec(&nodes[i]);
            for d in 0..r {
                v[d] += hist[i][d];
            }
            if let Some(j) = jac.as_mut() {
                if let Some(col) = free.iter().position(|&f| f == i) {
                    j.set_block(row * r, col * r, &ai);
                }
            }
            for (q, (&x, &w)) in self.gauss.nodes.iter().zip(&self.gauss.weights).enumerate() {
                let lw = &self.partial[i][q];
                let u = combine(lw, nodes);
                let s = tn + ci * x * h;
                let k = self.p.kappa(ti, s, &u)?;
                let scale = ci * h * w;
                for d in 0..r {
                    v[d] += scale * k[d];
                }
                if let Some(j) = jac.as_mut() {
                    let ky = self.p.kappa_y(ti, s, &u)?;
                    for (col, &f) in free.iter().enumerate() {
                        let coef = scale * lw[f];
                        for a in 0..r {
                            for b in 0..r {
                                j[(row * r + a, col * r + b)] += coef * ky[(a, b)];
                            }
                        }
                    }
                }
            }
            let f = self.p.rhs(ti)?;
            for d in 0..r {
                res[row * r + d] = v[d] - f[d];
            }
        }
        Ok((res, jac))
    }
}

/// Solves on `[origin, b]` and reports on `interval = [a, b]`.
pub fn solve_iae(p: &dyn IaeModel, cfg: &CollocationConfig, interval: Interval) -> Result<IaeSolveResult> {
    cfg.validate()?;
    let dom = p.domain();
    let origin = p.origin();
    if interval.lo < origin - 1e-12 || !dom.contains(interval.hi) {
        return Err(Error::invalid("solve interval must lie between the integration origin and the domain end"));
    }
    let steps_f = (interval.hi - origin) / cfg.h;
    let n_steps = math::round(steps_f) as usize;
    if n_steps == 0 || (steps_f - n_steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::invalid("(b - origin)/h must be a positive integer"));
    }
    let r = p.dim();
    let m = cfg.c.len();
    let h = cfg.h;
    let stepper = Stepper::new(p, cfg)?;
    let inherit = cfg.inherits_left();
    let active: Vec<usize> = if inherit { (1..m).collect() } else { (0..m).collect() };
    let free = active.clone();

    let mut sol = PiecewiseSolution { origin, h, c: cfg.c.clone(), nodal: Vec::with_capacity(n_steps) };
    let mut steps = Vec::with_capacity(n_steps);
    let mut failure = None;
    let mut left = initial_value(p)?;
    let right_weights = lagrange(&cfg.c, 1.0);

    for n in 0..n_steps {
        let tn = sol.mesh_point(n);
        let hist = cfg.c.iter().map(|ci| stepper.history(&sol, tn + ci * h, n)).collect::<Result<Vec<_>>>();
        let hist = match hist {
            Ok(v) => v,
            Err(e) => {
                failure = Some(StepFailure { n, t: tn, reason: alloc::format!("{e}") });
                break;
            }
        };
        let mut nodes: Vec<Vec<f64>> = match (n, p.exact()) {
            (0, Some(ex)) => match cfg.c.iter().map(|ci| ex.eval(tn + ci * h)).collect::<Result<Vec<_>>>() {
                Ok(v) => v,
                Err(_) => vec![left.clone(); m],
            },
            _ => vec![left.clone(); m],
        };
        if inherit {
            nodes[0] = left.clone();
        }

        let mut iters = 0;
        let mut converged = false;
        let mut cond = f64::NAN;
        let mut res_norm = f64::INFINITY;
        let mut err = None;
        while iters < cfg.newton_max_iter {
            let (res, jac) = match stepper.residual(tn, &nodes, &hist, &active, &free, true) {
                Ok(x) => x,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            };
            let jac = jac.expect("jacobian requested");
            cond = mat::condition_number(&jac).unwrap_or(f64::INFINITY);
            res_norm = mat::norm_inf(&res);
            // ill-conditioned (higher-index) steps stall in the update norm at rounding level
            if iters > 0 && res_norm <= cfg.newton_tol {
                converged = true;
                break;
            }
            let neg: Vec<f64> = res.iter().map(|x| -x).collect();
            let delta = match Lu::factor(&jac).and_then(|lu| lu.solve(&neg)) {
                Ok(d) => d,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            };
            iters += 1;
            for (k, &f) in free.iter().enumerate() {
                for d in 0..r {
                    nodes[f][d] += delta[k * r + d];
                }
            }
            let scale = 1.0 + free.iter().map(|&f| mat::norm_inf(&nodes[f])).fold(0.0, f64::max);
            if p.is_linear() || mat::norm_inf(&delta) <= cfg.newton_tol * scale || res_norm == 0.0 {
                converged = true;
                break;
            }
        }
        if converged {
            match stepper.residual(tn, &nodes, &hist, &active, &free, false) {
                Ok((res, _)) => res_norm = mat::norm_inf(&res),
                Err(e) => {
                    err = Some(e);
                    converged = false;
                }
            }
            if !res_norm.is_finite() {
                converged = false;
            }
        }
        steps.push(StepDiagnostic { n, t: tn, newton_iters: iters, residual: res_norm, cond, converged });
        if !converged {
            let reason = match err {
                Some(e) => alloc::format!("{e}"),
                None => alloc::format!("Newton did not converge in {} iterations", cfg.newton_max_iter),
            };
            failure = Some(StepFailure { n, t: tn, reason });
            break;
        }
        left = combine(&right_weights, &nodes);
        sol.nodal.push(nodes);
    }
    Ok(IaeSolveResult { interval, solution: sol, steps, failure })
}

/// `A(t)u(t) + ∫_{t₀}^t κ(t, s, u(s))ds − f(t)` at each probe point (max-norm),
/// with the integral split and integrated exactly as in [`solve_iae`].
pub fn residual(p: &dyn IaeModel, sol: &PiecewiseSolution, probe: &[f64], quad_order: usize) -> Result<Vec<f64>> {
    let gauss = GaussLegendre::new(quad_order)?;
    let r = p.dim();
    let h = sol.h;
    let mut out = Vec::with_capacity(probe.len());
    for &t in probe {
        let (n, tau) = sol.locate(t)?;
        let mut acc = p.leading(t)?.mul_vec(&sol.eval_local(n, tau));
        let mut add = |lo: f64, len: f64, k: usize, tau_max: f64| -> Result<()> {
            for (&x, &w) in gauss.nodes.iter().zip(&gauss.weights) {
                let u = sol.eval_local(k, tau_max * x);
                let kv = p.kappa(t, lo + x * len, &u)?;
                for d in 0..r {
                    acc[d] += len * w * kv[d];
                }
            }
            Ok(())
        };
        for k in 0..n {
            add(sol.mesh_point(k), h, k, 1.0)?;
        }
        if tau > 0.0 {
            add(sol.mesh_point(n), tau * h, n, tau)?;
        }
        let f = p.rhs(t)?;
        out.push(mat::norm_inf(&mat::sub_vec(&acc, &f)));
    }
    Ok(out)
}
