//! The rank-degree index chain for a linear pair `(A, k)`.
//!
//! Starting from `A₀ = A`, `k₀ = k`, each level applies
//!
//! ```text
//! A_{i+1}(t)   = A_i(t) + V_i(t) k_i(t, t)
//! k_{i+1}(t,s) = ∂/∂t [V_i(t) k_i(t, s)] + k_i(t, s)
//! ```
//!
//! with `V_i = E − A_i A_i⁻`, until `A_ν` is nonsingular. Levels are evaluated
//! lazily; each evaluation recomputes the projectors it needs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::{default_step, fd_derivative, Interval, Kernel, MatrixFunction, VectorFunction};
use crate::mat::{self, Lu, Mat, DEFAULT_RANK_TOL};
use crate::problem::{LinearDae, LinearIae, QUAD_TOL};
use crate::quad;

pub const DEFAULT_NU_MAX: usize = 4;
pub const DEFAULT_GRID_POINTS: usize = 33;

/// Which semi-inverse the projectors are built from.
#[derive(Clone, Debug, Default)]
pub enum SemiInverseRule {
    #[default]
    MoorePenrose,
    /// `A⁺ + W − A⁺ A W A A⁺`, using `ws[level % ws.len()]` at each level.
    Generalized(Vec<Mat>),
}

#[derive(Clone, Debug)]
pub struct ChainOptions {
    pub tol: f64,
    /// Finite-difference step; `None` means `1e-4·max(1, |t|)`.
    pub step: Option<f64>,
    pub nu_max: usize,
    pub rule: SemiInverseRule,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { tol: DEFAULT_RANK_TOL, step: None, nu_max: DEFAULT_NU_MAX, rule: SemiInverseRule::MoorePenrose }
    }
}

impl ChainOptions {
    fn step_at(&self, t: f64) -> f64 {
        self.step.unwrap_or_else(|| default_step(t))
    }
}

/// `t ↦ V(t) = E − A(t)A⁻(t)` for the semi-inverse selected by `opts.rule`.
pub fn projector_fn(a: &MatrixFunction, level: usize, opts: &ChainOptions) -> MatrixFunction {
    let a = a.clone();
    let tol = opts.tol;
    let w = match &opts.rule {
        SemiInverseRule::MoorePenrose => None,
        SemiInverseRule::Generalized(ws) if !ws.is_empty() => Some(ws[level % ws.len()].clone()),
        SemiInverseRule::Generalized(_) => None,
    };
    let n = a.rows();
    MatrixFunction::try_new(a.domain(), n, n, move |t| {
        let at = a.eval(t)?;
        match &w {
            None => mat::projector(&at, tol),
            Some(w) => Ok(mat::semi_inverse_with(&at, tol, w)?.projector),
        }
    })
}

/// One step of the chain: `(A_i, k_i) ↦ (A_{i+1}, k_{i+1})`.
pub fn chain_step(
    a: &MatrixFunction,
    k: &Kernel,
    level: usize,
    opts: &ChainOptions,
) -> Result<(MatrixFunction, Kernel)> {
    let n = a.rows();
    if a.cols() != n || k.dim() != n {
        return Err(Error::Dimension { expected: n, got: k.dim() });
    }
    let v = projector_fn(a, level, opts);
    let domain = a.domain();

    let (a_next, vv, kk) = (a.clone(), v.clone(), k.clone());
    let a_next =
        MatrixFunction::try_new(domain, n, n, move |t| Ok(&a_next.eval(t)? + &(&vv.eval(t)? * &kk.eval(t, t)?)));

    let (vv, kk, o) = (v, k.clone(), opts.clone());
    let k_next = Kernel::try_new(domain, n, move |t, s| {
        let d = fd_derivative(|x| Ok(&vv.eval(x)? * &kk.eval(x, s)?), t, o.step_at(t), domain)?;
        Ok(&d + &kk.eval(t, s)?)
    });
    Ok((a_next, k_next))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainLevel {
    pub level: usize,
    #[serde(skip)]
    pub a: MatrixFunction,
    #[serde(skip)]
    pub k: Kernel,
    #[serde(skip)]
    pub projector: MatrixFunction,
    pub rank: usize,
    /// `(t, det A_i(t))` at every grid point.
    pub det_sample: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChainStatus {
    Ok,
    NonConstantRank { level: usize, t: f64 },
    ExceededMaxLevel,
    EvaluationFailed { level: usize, t: f64, message: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub nu: Option<usize>,
    pub levels: Vec<ChainLevel>,
    pub grid: Vec<f64>,
    pub status: ChainStatus,
    pub tol: f64,
}

impl IndexReport {
    pub fn is_ok(&self) -> bool {
        self.status == ChainStatus::Ok
    }

    /// `det A_ν` at the first grid point, when the chain terminated.
    pub fn terminal_det(&self) -> Option<f64> {
        let nu = self.nu?;
        self.levels.get(nu)?.det_sample.first().map(|&(_, d)| d)
    }
}

fn check_grid(grid: &[f64], domain: Interval) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("index grid is empty"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("index grid must be strictly increasing"));
    }
    for &t in grid {
        domain.check(t)?;
    }
    Ok(())
}

enum Sampled {
    Level(usize, Vec<(f64, f64)>),
    NonConstant(f64),
    Failed(f64, Error),
}

fn sample_level(a: &MatrixFunction, grid: &[f64], tol: f64) -> Sampled {
    let mut rank = None;
    let mut dets = Vec::with_capacity(grid.len());
    for &t in grid {
        let at = match a.eval(t) {
            Ok(m) => m,
            Err(e) => return Sampled::Failed(t, e),
        };
        let r = match mat::numerical_rank(&at, tol) {
            Ok(r) => r,
            Err(e) => return Sampled::Failed(t, e),
        };
        match rank {
            None => rank = Some(r),
            Some(r0) if r0 != r => return Sampled::NonConstant(t),
            _ => {}
        }
        let d = match Lu::factor(&at) {
            Ok(lu) => lu.det(),
            Err(e) => return Sampled::Failed(t, e),
        };
        dets.push((t, d));
    }
    Sampled::Level(rank.unwrap_or(0), dets)
}

/// Runs the chain on `grid` and returns the first level whose leading matrix
/// has full numerical rank at every grid point.
pub fn rank_degree_index(a: &MatrixFunction, k: &Kernel, grid: &[f64], opts: &ChainOptions) -> Result<IndexReport> {
    let n = a.rows();
    if a.cols() != n || k.dim() != n {
        return Err(Error::Dimension { expected: n, got: k.dim() });
    }
    if opts.nu_max < 1 {
        return Err(Error::invalid("nu_max must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("rank tolerance must be positive"));
    }
    check_grid(grid, a.domain())?;

    let mut levels = Vec::new();
    let (mut ai, mut ki) = (a.clone(), k.clone());
    let finish = |levels, nu, status| IndexReport { nu, levels, grid: grid.to_vec(), status, tol: opts.tol };
    for level in 0..=opts.nu_max {
        let (rank, dets) = match sample_level(&ai, grid, opts.tol) {
            Sampled::Level(r, d) => (r, d),
            Sampled::NonConstant(t) => return Ok(finish(levels, None, ChainStatus::NonConstantRank { level, t })),
            Sampled::Failed(t, e) => {
                let status = ChainStatus::EvaluationFailed { level, t, message: format!("{e}") };
                return Ok(finish(levels, None, status));
            }
        };
        let projector = projector_fn(&ai, level, opts);
        levels.push(ChainLevel { level, a: ai.clone(), k: ki.clone(), projector, rank, det_sample: dets });
        if rank == n {
            return Ok(finish(levels, Some(level), ChainStatus::Ok));
        }
        if level == opts.nu_max {
            break;
        }
        let (an, kn) = chain_step(&ai, &ki, level, opts)?;
        ai = an;
        ki = kn;
    }
    Ok(finish(levels, None, ChainStatus::ExceededMaxLevel))
}

/// `F₀ = f`, `F_{i+1}(t) = d/dt[V_i(t) F_i(t)] + F_i(t)` for every level below the last.
pub fn rhs_chain(f: &VectorFunction, levels: &[ChainLevel], step: Option<f64>) -> Vec<VectorFunction> {
    let mut out = Vec::with_capacity(levels.len().max(1));
    out.push(f.clone());
    for lvl in levels.iter().take(levels.len().saturating_sub(1)) {
        let prev = out.last().expect("non-empty").clone();
        let v = lvl.projector.clone();
        let domain = prev.domain();
        let dim = prev.dim();
        out.push(VectorFunction::try_new(domain, dim, move |t| {
            let h = step.unwrap_or_else(|| default_step(t));
            let d = fd_derivative(|x| Ok(v.eval(x)?.mul_vec(&prev.eval(x)?)), t, h, domain)?;
            let p = prev.eval(t)?;
            Ok(d.iter().zip(&p).map(|(a, b)| a + b).collect())
        }));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResult {
    pub level: usize,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub t0: f64,
    pub conditions: Vec<ConditionResult>,
    pub pass: bool,
    pub cond_a_nu: f64,
    pub warning: Option<String>,
}

/// Condition numbers of `A_ν(t₀)` above this are reported as a warning.
pub const ILL_CONDITIONED: f64 = 1e8;

/// Checks `A_i(t₀) A_ν(t₀)⁻¹ F_ν(t₀) = F_i(t₀)` for `i < ν`.
pub fn consistency_check(
    report: &IndexReport,
    f: &VectorFunction,
    t0: f64,
    tol: f64,
    step: Option<f64>,
) -> Result<ConsistencyReport> {
    let nu = match (report.nu, &report.status) {
        (Some(nu), ChainStatus::Ok) => nu,
        _ => return Err(Error::InconsistentChain),
    };
    let levels = &report.levels[..=nu];
    let fs = rhs_chain(f, levels, step);
    let a_nu = levels[nu].a.eval(t0)?;
    let lu = Lu::factor(&a_nu)?;
    let cond = mat::condition_number(&a_nu)?;
    if !cond.is_finite() {
        return Err(Error::InconsistentChain);
    }
    let x = lu.solve(&fs[nu].eval(t0)?).map_err(|_| Error::InconsistentChain)?;
    let mut conditions = Vec::with_capacity(nu);
    for i in 0..nu {
        let lhs = levels[i].a.eval(t0)?.mul_vec(&x);
        let residual = mat::norm_inf(&mat::sub_vec(&lhs, &fs[i].eval(t0)?));
        conditions.push(ConditionResult { level: i, residual, pass: residual <= tol });
    }
    let warning = (cond > ILL_CONDITIONED).then(|| format!("A_nu(t0) is ill-conditioned (cond = {cond:.3e})"));
    Ok(ConsistencyReport { t0, pass: conditions.iter().all(|c| c.pass), conditions, cond_a_nu: cond, warning })
}

/// Integrates `A y' + B y = q` once: `A(t)x(t) + ∫_{t0}^t (B(s) − A'(s))x(s)ds = A(t0)y0 + ∫_{t0}^t q`.
pub fn dae_to_iae(p: &LinearDae) -> Result<LinearIae> {
    let domain = p.domain();
    let r = p.dim();
    let t0 = p.t_start;
    let (a, b) = (p.a.clone(), p.b.clone());
    let kernel = Kernel::try_new(domain, r, move |_t, s| Ok(&b.eval(s)? - &a.derivative(s, None)?));
    let q = p.q.clone();
    let base = p.a.eval(t0)?.mul_vec(&p.y0);
    let f = VectorFunction::try_new(domain, r, move |t| {
        let mut v = quad::integrate_adaptive(t0, t, r, QUAD_TOL, |s| q.eval(s))?;
        v.iter_mut().zip(&base).for_each(|(x, b)| *x += b);
        Ok(v)
    });
    LinearIae::with_origin(p.a.clone(), kernel, f, t0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum HessenbergVerdict {
    Confirmed { nu: usize },
    Violated { t: f64, cond: f64 },
}

/// Structural criterion for Hessenberg-type IAEs with block sizes `blocks`:
/// `diag_jacobians[i-1]` is `k_{i, y_{ν+1−i}}` along the trajectory, and the
/// product of all of them must be invertible (condition number below `1/tol`)
/// at every grid point.
pub fn hessenberg_index(
    blocks: &[usize],
    diag_jacobians: &[MatrixFunction],
    grid: &[f64],
    tol: f64,
) -> Result<HessenbergVerdict> {
    let nu = blocks.len();
    if nu == 0 || diag_jacobians.len() != nu {
        return Err(Error::invalid("need one diagonal Jacobian per block row"));
    }
    for (i, j) in diag_jacobians.iter().enumerate() {
        let (rows, cols) = (blocks[i], blocks[nu - 1 - i]);
        if (j.rows(), j.cols()) != (rows, cols) {
            return Err(Error::Dimension { expected: rows * cols, got: j.rows() * j.cols() });
        }
    }
    for w in diag_jacobians.windows(2) {
        if w[0].cols() != w[1].rows() {
            return Err(Error::invalid("diagonal Jacobians cannot be multiplied in order"));
        }
    }
    if diag_jacobians[0].rows() != diag_jacobians[nu - 1].cols() {
        return Err(Error::invalid("product of diagonal Jacobians is not square"));
    }
    for &t in grid {
        let mut prod = diag_jacobians[0].eval(t)?;
        for j in &diag_jacobians[1..] {
            prod = &prod * &j.eval(t)?;
        }
        let cond = mat::condition_number(&prod)?;
        if !(cond < 1.0 / tol) {
            return Ok(HessenbergVerdict::Violated { t, cond });
        }
    }
    Ok(HessenbergVerdict::Confirmed { nu })
}
