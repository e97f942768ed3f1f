//! Fixed-step BDF1/BDF2 for `A(t)y' + F(t, y) = f(t)` with Newton iteration and
//! monitoring of critical conditions along the accepted trajectory.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::{Interval, VectorFunction};
use crate::mat::{self, Lu};
use crate::math;
use crate::problem::{CriticalCondition, SemiNonlinearDae};

/// Tolerance on `‖V(t₀)(F(t₀, y₀) − f(t₀))‖` for an initial value to count as consistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct DaeSolveConfig {
    pub h: f64,
    pub order: u8,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub monitor: Vec<CriticalCondition>,
    pub warn_threshold: f64,
    /// Number of times a failed step is retried with half the step size.
    pub max_halvings: u32,
}

impl DaeSolveConfig {
    pub fn new(h: f64, order: u8) -> Self {
        DaeSolveConfig {
            h,
            order,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            monitor: Vec::new(),
            warn_threshold: 1e-2,
            max_halvings: 3,
        }
    }

    pub fn with_monitor(mut self, conditions: Vec<CriticalCondition>) -> Self {
        self.monitor = conditions;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("step size must be positive"));
        }
        if !(self.order == 1 || self.order == 2) {
            return Err(Error::invalid("BDF order must be 1 or 2"));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 || !(self.warn_threshold >= 0.0) {
            return Err(Error::invalid("Newton tolerance, iteration limit and warn threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub newton_iters: usize,
    /// Number of BDF1 substeps used after a failed full step (1 when the full step succeeded).
    pub substeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningKind {
    Proximity,
    SignChange,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonitorWarning {
    pub t: f64,
    pub id: String,
    pub value: f64,
    pub kind: WarningKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub h: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DaeFailure {
    /// Time the failed step was aiming for.
    pub t: f64,
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    pub interval: Interval,
    pub h: f64,
    pub order: u8,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub steps: Vec<StepRecord>,
    pub warnings: Vec<MonitorWarning>,
    pub failure: Option<DaeFailure>,
}

impl SolveResult {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Max-norm error against `exact` at every accepted time.
    pub fn errors(&self, exact: &VectorFunction) -> Result<Vec<f64>> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, y)| Ok(mat::norm_inf(&mat::sub_vec(y, &exact.eval(t)?))))
            .collect()
    }

    /// Largest error over accepted times in `[lo, hi]` (zero when none fall inside).
    pub fn max_error_on(&self, exact: &VectorFunction, lo: f64, hi: f64) -> Result<f64> {
        let errs = self.errors(exact)?;
        Ok(self
            .times
            .iter()
            .zip(errs)
            .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
            .fold(0.0, |m, (_, e)| m.max(e)))
    }
}

struct Newton<'a> {
    p: &'a SemiNonlinearDae,
    cfg: &'a DaeSolveConfig,
}

impl Newton<'_> {
    /// Solves `A(t)(α z − β)/h + F(t, z) = f(t)` for `z`, starting from `guess`.
    fn solve(
        &self,
        t: f64,
        h: f64,
        alpha: f64,
        beta: &[f64],
        guess: &[f64],
    ) -> core::result::Result<(Vec<f64>, usize), String> {
        let a = self.p.a.eval(t).map_err(|e| format!("{e}"))?;
        let f = self.p.rhs.eval(t).map_err(|e| format!("{e}"))?;
        let mut z = guess.to_vec();
        for it in 1..=self.cfg.newton_max_iter {
            let fz = self.p.eval_f(t, &z).map_err(|e| format!("{e}"))?;
            let dz: Vec<f64> = z.iter().zip(beta).map(|(zi, bi)| (alpha * zi - bi) / h).collect();
            let az = a.mul_vec(&dz);
            let res: Vec<f64> = (0..z.len()).map(|i| -(az[i] + fz[i] - f[i])).collect();
            let mut jac = self.p.jacobian(t, &z).map_err(|e| format!("{e}"))?;
            jac.axpy(alpha / h, &a);
            let d = Lu::factor(&jac).and_then(|lu| lu.solve(&res)).map_err(|e| format!("{e}"))?;
            for (zi, di) in z.iter_mut().zip(&d) {
                *zi += di;
            }
            if !z.iter().all(|x| x.is_finite()) {
                return Err("Newton iterate is not finite".into());
            }
            if mat::norm_inf(&d) <= self.cfg.newton_tol * (1.0 + mat::norm_inf(&z)) {
                return Ok((z, it));
            }
        }
        Err(format!("Newton did not converge in {} iterations", self.cfg.newton_max_iter))
    }

    fn bdf1(&self, t: f64, h: f64, y: &[f64]) -> core::result::Result<(Vec<f64>, usize), String> {
        self.solve(t, h, 1.0, y, y)
    }

    fn bdf2(&self, t: f64, h: f64, y: &[f64], y_prev: &[f64]) -> core::result::Result<(Vec<f64>, usize), String> {
        let beta: Vec<f64> = y.iter().zip(y_prev).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        self.solve(t, h, 1.5, &beta, y)
    }
}

fn monitor(cfg: &DaeSolveConfig, t: f64, y: &[f64], prev: &mut [Option<f64>], out: &mut Vec<MonitorWarning>) {
    for (c, last) in cfg.monitor.iter().zip(prev.iter_mut()) {
        let g = c.eval(t, y);
        if let Some(g0) = *last {
            if (g0 < 0.0 && g > 0.0) || (g0 > 0.0 && g < 0.0) {
                out.push(MonitorWarning { t, id: c.id.clone(), value: g, kind: WarningKind::SignChange });
            }
        }
        if g.abs() < cfg.warn_threshold {
            out.push(MonitorWarning { t, id: c.id.clone(), value: g, kind: WarningKind::Proximity });
        }
        *last = Some(g);
    }
}

/// Integrates over `interval` from the problem's initial value at `interval.lo`.
pub fn solve_dae(p: &SemiNonlinearDae, cfg: &DaeSolveConfig, interval: Interval) -> Result<SolveResult> {
    cfg.validate()?;
    let dom = p.domain();
    dom.check(interval.lo)?;
    dom.check(interval.hi)?;
    let steps_f = interval.length() / cfg.h;
    let n_steps = math::round(steps_f) as usize;
    if n_steps == 0 || (steps_f - n_steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::invalid("(b - a)/h must be a positive integer"));
    }
    let y0 = p.initial_value(interval.lo)?;
    p.check_consistent(interval.lo, &y0, CONSISTENCY_TOL)?;

    let newton = Newton { p, cfg };
    let mut times = vec![interval.lo];
    let mut values = vec![y0.clone()];
    let mut steps = Vec::with_capacity(n_steps);
    let mut warnings = Vec::new();
    let mut last = vec![None; cfg.monitor.len()];
    monitor(cfg, interval.lo, &y0, &mut last, &mut warnings);
    let mut failure = None;

    for n in 0..n_steps {
        let t = if n + 1 == n_steps { interval.hi } else { interval.lo + (n + 1) as f64 * cfg.h };
        let y = values[n].clone();
        let full =
            if cfg.order == 2 && n > 0 { newton.bdf2(t, cfg.h, &y, &values[n - 1]) } else { newton.bdf1(t, cfg.h, &y) };
        let accepted = match full {
            Ok((z, it)) => Some((z, it, 1)),
            Err(reason) => {
                let mut attempts = vec![Attempt { h: cfg.h, reason }];
                let mut ok = None;
                for k in 1..=cfg.max_halvings {
                    let subs = 1usize << k;
                    let hk = cfg.h / subs as f64;
                    let mut yk = y.clone();
                    let mut iters = 0;
                    let mut err = None;
                    for j in 1..=subs {
                        let tj = if j == subs { t } else { times[n] + j as f64 * hk };
                        match newton.bdf1(tj, hk, &yk) {
                            Ok((z, it)) => {
                                yk = z;
                                iters += it;
                            }
                            Err(e) => {
                                err = Some(e);
                                break;
                            }
                        }
                    }
                    match err {
                        None => {
                            ok = Some((yk, iters, subs));
                            break;
                        }
                        Some(reason) => attempts.push(Attempt { h: hk, reason }),
                    }
                }
                if ok.is_none() {
                    failure = Some(DaeFailure { t, attempts });
                }
                ok
            }
        };
        match accepted {
            Some((z, it, subs)) => {
                monitor(cfg, t, &z, &mut last, &mut warnings);
                steps.push(StepRecord { t, newton_iters: it, substeps: subs });
                times.push(t);
                values.push(z);
            }
            None => break,
        }
    }
    Ok(SolveResult { interval, h: cfg.h, order: cfg.order, times, values, steps, warnings, failure })
}

fn cubic_weights(nodes: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let m = nodes.len();
    let mut w = vec![0.0; m];
    let mut dw = vec![0.0; m];
    for j in 0..m {
        let denom: f64 = (0..m).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
        w[j] = (0..m).filter(|&k| k != j).map(|k| t - nodes[k]).product::<f64>() / denom;
        let mut d = 0.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            d += (0..m).filter(|&k| k != j && k != l).map(|k| t - nodes[k]).product::<f64>();
        }
        dw[j] = d / denom;
    }
    (w, dw)
}

/// `‖A(t)u'(t) + F(t, u(t)) − f(t)‖∞` at each probe time, where `u` is the cubic
/// interpolant through the four samples nearest `t`.
pub fn dae_residual(p: &SemiNonlinearDae, times: &[f64], values: &[Vec<f64>], probe: &[f64]) -> Result<Vec<f64>> {
    if times.len() < 4 || times.len() != values.len() {
        return Err(Error::invalid("need at least four solution samples"));
    }
    let span = Interval::new(times[0], times[times.len() - 1])?;
    let r = p.dim();
    let mut out = Vec::with_capacity(probe.len());
    for &t in probe {
        span.check(t)?;
        let i = times.partition_point(|&x| x < t);
        let start = i.saturating_sub(2).min(times.len() - 4);
        let nodes = &times[start..start + 4];
        let (w, dw) = cubic_weights(nodes, t);
        let mut u = vec![0.0; r];
        let mut du = vec![0.0; r];
        for k in 0..4 {
            for d in 0..r {
                u[d] += w[k] * values[start + k][d];
                du[d] += dw[k] * values[start + k][d];
            }
        }
        let mut res = p.a.eval(t)?.mul_vec(&du);
        let fu = p.eval_f(t, &u)?;
        let rhs = p.rhs.eval(t)?;
        for d in 0..r {
            res[d] += fu[d] - rhs[d];
        }
        out.push(mat::norm_inf(&res));
    }
    Ok(out)
}

/// Least-squares slope of `log e` against `log h`.
pub fn empirical_order(hs: &[f64], errs: &[f64]) -> Result<f64> {
    if hs.len() != errs.len() || hs.len() < 2 || errs.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("need at least two positive errors"));
    }
    let xs: Vec<f64> = hs.iter().map(|&h| math::ln(h)).collect();
    let ys: Vec<f64> = errs.iter().map(|&e| math::ln(e)).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::MatrixFunction;
    use crate::mat::Mat;
    use crate::math::{exp, sin};
    use alloc::sync::Arc;

    /// `y₁' + y₁ − y₂ = 0`, `y₂ = g(t)`, with `g = sin`.
    fn index_one() -> SemiNonlinearDae {
        let dom = Interval::new(0.0, 1.0).unwrap();
        SemiNonlinearDae {
            name: "lin1".into(),
            a: MatrixFunction::constant(Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]]), dom),
            f_map: Arc::new(|t, y| vec![y[0] - y[1], y[1] - sin(t)]),
            f_jac: None,
            rhs: VectorFunction::zero(dom, 2),
            y0: vec![1.0, 0.0],
            exact: None,
            critical: Vec::new(),
            t_start: 0.0,
        }
    }

    #[test]
    fn algebraic_component_is_enforced_exactly() {
        let p = index_one();
        let res = solve_dae(&p, &DaeSolveConfig::new(0.01, 1), Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert!(res.completed());
        for (t, y) in res.times.iter().zip(&res.values).skip(1) {
            assert!((y[1] - sin(*t)).abs() < 1e-9);
        }
    }

    #[test]
    fn orders_one_and_two() {
        let p = index_one();
        // y1 = (3/2)e^{-t} + (sin t − cos t)/2
        let ex = |t: f64| 1.5 * exp(-t) + 0.5 * (sin(t) - crate::math::cos(t));
        let hs = [4e-3, 2e-3, 1e-3, 5e-4];
        for order in [1u8, 2] {
            let errs: Vec<f64> = hs
                .iter()
                .map(|&h| {
                    let r = solve_dae(&p, &DaeSolveConfig::new(h, order), Interval::new(0.0, 1.0).unwrap()).unwrap();
                    r.times.iter().zip(&r.values).fold(0.0f64, |m, (t, y)| m.max((y[0] - ex(*t)).abs()))
                })
                .collect();
            let q = empirical_order(&hs, &errs).unwrap();
            assert!((q - order as f64).abs() <= 0.1 * order as f64, "order {order}: {q}");
        }
    }

    #[test]
    fn inconsistent_start_is_rejected() {
        let mut p = index_one();
        p.y0 = vec![1.0, 0.5];
        let r = solve_dae(&p, &DaeSolveConfig::new(0.01, 1), Interval::new(0.0, 1.0).unwrap());
        assert!(matches!(r, Err(Error::InconsistentInitialValue(_))));
    }

    #[test]
    fn bad_config() {
        assert!(DaeSolveConfig::new(0.0, 1).validate().is_err());
        assert!(DaeSolveConfig::new(0.1, 3).validate().is_err());
    }

    #[test]
    fn cubic_derivative_is_exact_for_cubics() {
        let nodes = [0.0, 0.3, 0.5, 1.0];
        let (w, dw) = cubic_weights(&nodes, 0.4);
        let f = |x: f64| x * x * x - 2.0 * x;
        let v: f64 = w.iter().zip(&nodes).map(|(a, x)| a * f(*x)).sum();
        let d: f64 = dw.iter().zip(&nodes).map(|(a, x)| a * f(*x)).sum();
        assert!((v - f(0.4)).abs() < 1e-14);
        assert!((d - (3.0 * 0.16 - 2.0)).abs() < 1e-13);
    }
}
