//! Linearization of semi-nonlinear problems along a trajectory, pointwise index,
//! structure classification and critical points.
//!
//! Jacobians are evaluated at `η = traj`. For the pointwise index `η` is frozen
//! at `traj(t)` over the local window, so the chain sees the linear problem the
//! state `η` induces. Structure is decided by sampling `η` from a small ball
//! around the trajectory and from a wide box around the origin: the index is
//! state-dependent when two samples disagree, or when `det A_ν` takes both signs
//! at the same level (a continuous determinant of opposite signs must vanish
//! somewhere in between).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::{Interval, Kernel, MatrixFunction, VectorFunction};
use crate::index::{dae_to_iae, rank_degree_index, ChainOptions, ChainStatus};
use crate::mat::Mat;
use crate::problem::{
    CriticalCondition, LinearDae, LinearIae, Problem, SemiNonlinearDae, SemiNonlinearIae, TrajectorySample,
};

fn common_span(domain: Interval, traj: &TrajectorySample) -> Result<Interval> {
    domain.intersect(&traj.span()).ok_or_else(|| Error::invalid("trajectory does not overlap the problem domain"))
}

/// `(A, B̃)` with `B̃(t) = F_y(t, η(t))`, `η` the linear interpolant of `traj`.
pub fn linearize_dae(p: &SemiNonlinearDae, traj: &TrajectorySample) -> Result<LinearDae> {
    let span = common_span(p.domain(), traj)?;
    let r = p.dim();
    let (pp, tr) = (p.clone(), traj.clone());
    let b = MatrixFunction::try_new(span, r, r, move |t| pp.jacobian(t, &tr.interpolate(t)?));
    Ok(LinearDae { a: p.a.restrict(span)?, b, q: VectorFunction::zero(span, r), y0: vec![0.0; r], t_start: span.lo })
}

/// The linear IAE with kernel `κ_y(t, s, η(s))` and zero right-hand side.
pub fn linearize_iae(p: &SemiNonlinearIae, traj: &TrajectorySample) -> Result<LinearIae> {
    let span = common_span(p.domain(), traj)?;
    let r = p.dim();
    let (pp, tr) = (p.clone(), traj.clone());
    let k = Kernel::try_new(span, r, move |t, s| pp.jacobian(t, s, &tr.interpolate(s)?));
    let origin = if span.contains(p.origin) { p.origin } else { span.lo };
    LinearIae::with_origin(p.a.restrict(span)?, k, VectorFunction::zero(span, r), origin)
}

/// The linear pair `(A, k)` on `window` obtained by freezing the state at `eta`.
fn frozen_pair(p: &Problem, eta: &[f64], window: Interval) -> Result<(MatrixFunction, Kernel)> {
    let eta = eta.to_vec();
    match p {
        Problem::Dae(d) => {
            let r = d.dim();
            let dd = d.clone();
            let b = MatrixFunction::try_new(window, r, r, move |t| dd.jacobian(t, &eta));
            let lin = LinearDae {
                a: d.a.restrict(window)?,
                b,
                q: VectorFunction::zero(window, r),
                y0: vec![0.0; r],
                t_start: window.lo,
            };
            let iae = dae_to_iae(&lin)?;
            Ok((iae.a, iae.k))
        }
        Problem::Iae(q) => {
            let qq = q.clone();
            let k = Kernel::try_new(window, q.dim(), move |t, s| qq.jacobian(t, s, &eta));
            Ok((q.a.restrict(window)?, k))
        }
        Problem::LinearIae(l) => Ok((l.a.restrict(window)?, l.k.restrict(window)?)),
        Problem::LinearDae(l) => {
            let iae = dae_to_iae(l)?;
            Ok((iae.a.restrict(window)?, iae.k.restrict(window)?))
        }
    }
}

#[derive(Clone, Debug)]
pub struct PointwiseOptions {
    /// Half-width of the local window.
    pub window: f64,
    pub window_points: usize,
    pub chain: ChainOptions,
}

impl Default for PointwiseOptions {
    fn default() -> Self {
        PointwiseOptions { window: 0.05, window_points: 5, chain: ChainOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointwiseIndex {
    pub t: f64,
    pub nu: Option<usize>,
    /// `det A_ν` at `t` (absent when the index is undefined).
    pub det: Option<f64>,
    pub status: ChainStatus,
}

impl PointwiseIndex {
    fn state(&self) -> (Option<usize>, i8) {
        let sign = match self.det {
            Some(d) if d > 0.0 => 1,
            Some(d) if d < 0.0 => -1,
            _ => 0,
        };
        (self.nu, sign)
    }
}

/// Index of the linearization frozen at state `eta`, over the window around `t`.
pub fn pointwise_index_at(p: &Problem, t: f64, eta: &[f64], opts: &PointwiseOptions) -> Result<PointwiseIndex> {
    if eta.len() != p.dim() {
        return Err(Error::Dimension { expected: p.dim(), got: eta.len() });
    }
    let dom = p.domain();
    dom.check(t)?;
    let t = t.clamp(dom.lo, dom.hi);
    let window = Interval::new(t - opts.window, t + opts.window)?
        .intersect(&dom)
        .ok_or_else(|| Error::invalid("empty index window"))?;
    let (a, k) = frozen_pair(p, eta, window)?;
    let mut grid = window.uniform_grid(opts.window_points.max(1));
    if !grid.iter().any(|&x| x == t) {
        grid.push(t);
        grid.sort_by(|x, y| x.partial_cmp(y).expect("finite grid"));
        grid.dedup();
    }
    let rep = rank_degree_index(&a, &k, &grid, &opts.chain)?;
    let det = match rep.nu {
        Some(nu) => rep.levels[nu].det_sample.iter().find(|&&(s, _)| s == t).map(|&(_, d)| d),
        None => None,
    };
    Ok(PointwiseIndex { t, nu: rep.nu, det, status: rep.status })
}

/// Pointwise index along `traj` at `t` (Jacobians frozen at `traj(t)`).
pub fn pointwise_index(
    p: &Problem,
    traj: &TrajectorySample,
    t: f64,
    opts: &PointwiseOptions,
) -> Result<PointwiseIndex> {
    pointwise_index_at(p, t, &traj.interpolate(t)?, opts)
}

/// The exact solution sampled on `n` points of `span`, or the constant initial
/// value for a DAE without a registered solution.
pub fn reference_trajectory(p: &Problem, span: Interval, n: usize) -> Result<TrajectorySample> {
    if let Some(ex) = p.exact() {
        return TrajectorySample::from_fn(ex, span.uniform_grid(n.max(2)));
    }
    match p {
        Problem::Dae(d) => TrajectorySample::constant(d.y0.clone(), span),
        Problem::LinearDae(d) => TrajectorySample::constant(d.y0.clone(), span),
        _ => TrajectorySample::constant(vec![0.0; p.dim()], span),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    WellStructure,
    FreeStructureIndependent,
    FreeStructureDependent,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::WellStructure => "well-structure",
            Classification::FreeStructureIndependent => "free-structure-independent",
            Classification::FreeStructureDependent => "free-structure-dependent",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyConfig {
    pub eps: f64,
    /// Samples per grid point from the ball of radius `eps` around the trajectory.
    pub n_perturb: usize,
    /// Samples per grid point from the box `[−R, R]^r`, `R = max(1, 2·max|traj|)`.
    pub n_wide: usize,
    pub seed: u64,
    /// Bisection stops once the bracket is below `resolution·max(1, |t|)`.
    pub resolution: f64,
    /// Largest tolerated fraction of samples with undefined index.
    pub max_undefined: f64,
    pub pointwise: PointwiseOptions,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            eps: 0.1,
            n_perturb: 8,
            n_wide: 8,
            seed: 0,
            resolution: 1e-12,
            max_undefined: 0.2,
            pointwise: PointwiseOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureSample {
    pub t: f64,
    pub eta: Vec<f64>,
    pub nu: Option<usize>,
    pub det: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexProfile {
    pub times: Vec<f64>,
    pub nu_at: Vec<Option<usize>>,
    pub classification: Classification,
    pub critical_points: Vec<f64>,
    /// Index along the trajectory away from critical points, when constant.
    pub index: Option<usize>,
    pub neighborhood_eps: f64,
    pub wide_radius: f64,
    pub samples_per_point: usize,
    pub undefined_samples: usize,
    /// First pair of samples showing the index depends on the state.
    pub evidence: Option<(StructureSample, StructureSample)>,
}

fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let d: Vec<f64> = center.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
        if d.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return center.iter().zip(&d).map(|(c, x)| c + radius * x).collect();
        }
    }
}

fn sample_box(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-radius..=radius)).collect()
}

fn conflicting(a: &StructureSample, b: &StructureSample) -> bool {
    match (a.nu, b.nu) {
        (Some(x), Some(y)) if x != y => true,
        (Some(_), Some(_)) => matches!((a.det, b.det), (Some(p), Some(q)) if p * q < 0.0),
        _ => false,
    }
}

/// Locates the point between `lo` and `hi` where the pointwise state changes.
fn bisect_transition(
    p: &Problem,
    traj: &TrajectorySample,
    lo: f64,
    hi: f64,
    cfg: &ClassifyConfig,
) -> Result<PointwiseIndex> {
    let at = |t: f64| pointwise_index(p, traj, t, &cfg.pointwise);
    let (mut a, mut b) = (lo, hi);
    let left = at(a)?.state();
    let right = at(b)?.state();
    loop {
        let mid = 0.5 * (a + b);
        let pm = at(mid)?;
        let s = pm.state();
        if (b - a) <= cfg.resolution * 1f64.max(mid.abs()) || (s != left && s != right) {
            return Ok(pm);
        }
        if s == left {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Classifies the problem along `traj` on `grid` and locates critical points.
pub fn classify(p: &Problem, traj: &TrajectorySample, grid: &[f64], cfg: &ClassifyConfig) -> Result<IndexProfile> {
    if !(cfg.eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if grid.is_empty() || !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("classification grid must be non-empty and increasing"));
    }
    let r = p.dim();
    let radius = traj.values().iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let wide = 1f64.max(2.0 * radius);

    let mut along = Vec::with_capacity(grid.len());
    let mut undefined = 0usize;
    let mut total = 0usize;
    let mut evidence: Option<(StructureSample, StructureSample)> = None;

    for (i, &t) in grid.iter().enumerate() {
        let center = traj.interpolate(t)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut etas = Vec::with_capacity(1 + cfg.n_perturb + cfg.n_wide);
        etas.push(center.clone());
        for _ in 0..cfg.n_perturb {
            etas.push(sample_ball(&mut rng, &center, cfg.eps));
        }
        for _ in 0..cfg.n_wide {
            etas.push(sample_box(&mut rng, r, wide));
        }
        let mut samples: Vec<StructureSample> = Vec::with_capacity(etas.len());
        for eta in etas {
            let pi = pointwise_index_at(p, t, &eta, &cfg.pointwise)?;
            total += 1;
            if pi.nu.is_none() {
                undefined += 1;
            }
            samples.push(StructureSample { t, eta, nu: pi.nu, det: pi.det });
        }
        along.push(pointwise_index_at(p, t, &center, &cfg.pointwise)?);
        if evidence.is_none() {
            if let Some(bad) = samples.iter().find(|s| s.nu.is_none()) {
                evidence = Some((samples[0].clone(), bad.clone()));
            } else {
                'outer: for a in 0..samples.len() {
                    for b in a + 1..samples.len() {
                        if conflicting(&samples[a], &samples[b]) {
                            evidence = Some((samples[a].clone(), samples[b].clone()));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    if (undefined as f64) > cfg.max_undefined * total as f64 {
        return Err(Error::ClassificationUnreliable { undefined, total });
    }

    let mut times = grid.to_vec();
    let mut nu_at: Vec<Option<usize>> = along.iter().map(|a| a.nu).collect();
    let mut critical = Vec::new();
    let mut crit_nu = Vec::new();
    for (i, w) in along.windows(2).enumerate() {
        if w[0].state() != w[1].state() {
            let pm = bisect_transition(p, traj, grid[i], grid[i + 1], cfg)?;
            critical.push(pm.t);
            crit_nu.push(pm.nu);
        }
    }
    for (t, nu) in critical.iter().zip(crit_nu) {
        let pos = times.partition_point(|&x| x < *t);
        times.insert(pos, *t);
        nu_at.insert(pos, nu);
    }

    let away: Vec<Option<usize>> = along.iter().map(|a| a.nu).collect();
    let index = match away.first() {
        Some(&first) if first.is_some() && away.iter().all(|&x| x == first) => first,
        _ => None,
    };

    // well structure needs the along-trajectory states to agree with the samples too
    let along_conflict = along.windows(2).any(|w| w[0].state() != w[1].state());
    let classification = if evidence.is_none() && !along_conflict {
        Classification::WellStructure
    } else if critical.is_empty() {
        Classification::FreeStructureIndependent
    } else {
        Classification::FreeStructureDependent
    };

    Ok(IndexProfile {
        times,
        nu_at,
        classification,
        critical_points: critical,
        index,
        neighborhood_eps: cfg.eps,
        wide_radius: wide,
        samples_per_point: 1 + cfg.n_perturb + cfg.n_wide,
        undefined_samples: undefined,
        evidence,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub id: String,
}

/// Values of `|g|` below this count as touching zero.
pub const TOUCH_TOL: f64 = 1e-8;
/// Time resolution of refined crossings.
pub const REFINE_TOL: f64 = 1e-6;

/// Zeros of each condition along the linearly interpolated trajectory.
pub fn detect_critical_points(
    traj: &TrajectorySample,
    conditions: &[CriticalCondition],
    refine: bool,
) -> Result<Vec<Crossing>> {
    let mut out = Vec::new();
    let (ts, ys) = (traj.times(), traj.values());
    for c in conditions {
        let g: Vec<f64> = ts.iter().zip(ys).map(|(&t, y)| c.eval(t, y)).collect();
        let mut last_touch: Option<usize> = None;
        for i in 0..ts.len() {
            if g[i].abs() < TOUCH_TOL {
                if last_touch.map_or(true, |j| j + 1 != i) {
                    out.push(Crossing { t: ts[i], id: c.id.clone() });
                }
                last_touch = Some(i);
                continue;
            }
            if i + 1 < ts.len() && g[i + 1].abs() >= TOUCH_TOL && g[i] * g[i + 1] < 0.0 {
                let t = if refine {
                    refine_crossing(traj, c, ts[i], ts[i + 1], g[i])?
                } else {
                    ts[i] - g[i] * (ts[i + 1] - ts[i]) / (g[i + 1] - g[i])
                };
                out.push(Crossing { t, id: c.id.clone() });
            }
        }
    }
    out.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite crossing times"));
    Ok(out)
}

fn refine_crossing(traj: &TrajectorySample, c: &CriticalCondition, mut a: f64, mut b: f64, ga: f64) -> Result<f64> {
    let sa = ga.signum();
    while b - a > REFINE_TOL {
        let m = 0.5 * (a + b);
        let gm = c.eval(m, &traj.interpolate(m)?);
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Convenience: the leading matrix and Jacobian at `(t, y)` as a pair.
pub fn jacobian_pair(p: &Problem, t: f64, y: &[f64]) -> Result<(Mat, Mat)> {
    match p {
        Problem::Dae(d) => Ok((d.a.eval(t)?, d.jacobian(t, y)?)),
        Problem::Iae(q) => Ok((q.a.eval(t)?, q.jacobian(t, t, y)?)),
        Problem::LinearDae(l) => Ok((l.a.eval(t)?, l.b.eval(t)?)),
        Problem::LinearIae(l) => Ok((l.a.eval(t)?, l.k.eval(t, t)?)),
    }
}
