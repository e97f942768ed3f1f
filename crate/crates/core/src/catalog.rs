//! Built-in examples: three semi-nonlinear DAEs and two semi-nonlinear IAEs,
//! all with the leading matrix `diag(1, 0)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::func::{Interval, MatrixFunction, VectorFunction};
use crate::mat::Mat;
use crate::math::{cos, exp, sin};
use crate::problem::{CriticalCondition, Problem, SemiNonlinearDae, SemiNonlinearIae};

pub const NAMES: [&str; 5] = ["ex31", "ex32", "ex33", "ex34", "ex35"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "ex31" => "DAE y' = y^2 + e^y + z, 0 = e^y + sin t; well structure, index 2",
        "ex32" => "DAE with exact solution (cos t, t); index 1, rising to 2 where y1 = 0",
        "ex33" => "DAE with exact solution (e^t, t); index 1 on every bounded interval",
        "ex34" => "IAE with exact solution (e^t, t); index 2 while y1 != 0",
        "ex35" => "IAE with exact solution (cos t, t) from t = 1; index changes at pi/2",
        _ => return None,
    })
}

fn leading() -> Mat {
    Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]])
}

fn interval(lo: f64, hi: f64) -> Interval {
    Interval { lo, hi }
}

fn dae_32_33(name: &str, rhs: VectorFunction, exact: VectorFunction) -> SemiNonlinearDae {
    let dom = rhs.domain();
    let y0 = exact.eval(dom.lo).expect("exact solution defined at the left end");
    SemiNonlinearDae {
        name: name.into(),
        a: MatrixFunction::constant(leading(), dom),
        f_map: Arc::new(|_, y| vec![-y[0] * y[0] - exp(y[1]), -y[0] * y[1]]),
        f_jac: Some(Arc::new(|_, y| Mat::from_rows(&[[-2.0 * y[0], -exp(y[1])], [-y[1], -y[0]]]))),
        rhs,
        y0,
        exact: Some(exact),
        critical: vec![CriticalCondition::component(0)],
        t_start: dom.lo,
    }
}

pub fn ex31() -> SemiNonlinearDae {
    let dom = interval(0.0, 1.0);
    SemiNonlinearDae {
        name: "ex31".into(),
        a: MatrixFunction::constant(leading(), dom),
        f_map: Arc::new(|_, y| vec![-(y[0] * y[0] + exp(y[0]) + y[1]), exp(y[0])]),
        f_jac: Some(Arc::new(|_, y| {
            let e = exp(y[0]);
            Mat::from_rows(&[[-2.0 * y[0] - e, -1.0], [e, 0.0]])
        })),
        rhs: VectorFunction::new(dom, 2, |t| vec![0.0, -sin(t)]),
        y0: vec![0.0, 0.0],
        exact: None,
        critical: Vec::new(),
        t_start: dom.lo,
    }
}

pub fn ex32() -> SemiNonlinearDae {
    let dom = interval(0.0, 2.0);
    let rhs = VectorFunction::new(dom, 2, |t| {
        let c = cos(t);
        vec![-c * c - exp(t) - sin(t), -t * c]
    });
    let exact = VectorFunction::new(dom, 2, |t| vec![cos(t), t]);
    dae_32_33("ex32", rhs, exact)
}

pub fn ex33() -> SemiNonlinearDae {
    let dom = interval(0.0, 2.0);
    let rhs = VectorFunction::new(dom, 2, |t| vec![-exp(2.0 * t), -t * exp(t)]);
    let exact = VectorFunction::new(dom, 2, |t| vec![exp(t), t]);
    dae_32_33("ex33", rhs, exact)
}

fn iae_34_35(name: &str, rhs: VectorFunction, exact: VectorFunction, origin: f64) -> SemiNonlinearIae {
    SemiNonlinearIae {
        name: name.into(),
        a: MatrixFunction::constant(leading(), rhs.domain()),
        kappa: Arc::new(|_, _, y| vec![(y[0] * y[0] + 2.0) * y[1] + exp(y[1]), y[0] * y[0]]),
        kappa_y: Some(Arc::new(|_, _, y| {
            Mat::from_rows(&[[2.0 * y[0] * y[1], y[0] * y[0] + 2.0 + exp(y[1])], [2.0 * y[0], 0.0]])
        })),
        rhs,
        exact: Some(exact),
        critical: vec![CriticalCondition::component(0)],
        origin,
    }
}

pub fn ex34() -> SemiNonlinearIae {
    let dom = interval(0.0, 2.0);
    // f = A y + ∫_0^t κ(y(s)) ds with y = (e^t, t), integrated in closed form
    let rhs = VectorFunction::new(dom, 2, |t| {
        let (e, e2) = (exp(t), exp(2.0 * t));
        vec![e + e2 * (t / 2.0 - 0.25) + 0.25 + t * t + e - 1.0, (e2 - 1.0) / 2.0]
    });
    let exact = VectorFunction::new(dom, 2, |t| vec![exp(t), t]);
    iae_34_35("ex34", rhs, exact, 0.0)
}

pub fn ex35() -> SemiNonlinearIae {
    let dom = interval(1.0, 2.0);
    let rhs = VectorFunction::new(dom, 2, |t| {
        let (s1, s2, st) = (sin(1.0), sin(2.0), sin(t));
        vec![
            cos(t) - s2 / 4.0 - core::f64::consts::E + exp(t) + t * sin(2.0 * t) / 4.0 - st * st / 4.0
                + s1 * s1 / 4.0
                + 5.0 * t * t / 4.0
                - 5.0 / 4.0,
            t / 2.0 + sin(2.0 * t) / 4.0 - s2 / 4.0 - 0.5,
        ]
    });
    let exact = VectorFunction::new(dom, 2, |t| vec![cos(t), t]);
    iae_34_35("ex35", rhs, exact, 1.0)
}

/// Looks up a built-in example by name.
pub fn example(name: &str) -> Result<Problem> {
    Ok(match name {
        "ex31" => Problem::Dae(ex31()),
        "ex32" => Problem::Dae(ex32()),
        "ex33" => Problem::Dae(ex33()),
        "ex34" => Problem::Iae(ex34()),
        "ex35" => Problem::Iae(ex35()),
        other => return Err(Error::NotFound(String::from(other))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::verify_exact;

    #[test]
    fn unknown_name_is_not_found() {
        assert!(matches!(example("ex99"), Err(Error::NotFound(_))));
        assert!(describe("ex99").is_none());
    }

    #[test]
    fn every_name_resolves() {
        for n in NAMES {
            assert!(example(n).is_ok());
            assert!(describe(n).is_some());
        }
    }

    #[test]
    fn registered_solutions_satisfy_their_equations() {
        let dae_grid = interval(0.0, 2.0).uniform_grid(101);
        assert!(verify_exact(&example("ex33").unwrap(), &dae_grid, 1e-12).unwrap() <= 1e-8);
        let g = interval(0.5, 1.0).uniform_grid(51);
        assert!(verify_exact(&example("ex32").unwrap(), &g, 1e-12).unwrap() <= 1e-8);
        let g = interval(1.0, 2.0).uniform_grid(41);
        assert!(verify_exact(&example("ex34").unwrap(), &g, 1e-12).unwrap() <= 1e-8);
        assert!(verify_exact(&example("ex35").unwrap(), &g, 1e-12).unwrap() <= 1e-6);
    }

    #[test]
    fn ex31_has_no_registered_solution() {
        assert!(matches!(verify_exact(&example("ex31").unwrap(), &[0.5], 1e-12), Err(Error::MissingExact)));
    }

    #[test]
    fn jacobians_at_sample_points() {
        let p = ex32();
        let j = p.fd_jacobian(0.3, &[1.0, 0.0]).unwrap();
        assert!((&j - &Mat::from_rows(&[[-2.0, -1.0], [0.0, -1.0]])).max_abs() < 1e-6);
        let q = ex34();
        let j = q.fd_jacobian(0.5, 0.2, &[0.0, 1.0]).unwrap();
        let e = core::f64::consts::E;
        assert!((&j - &Mat::from_rows(&[[0.0, 2.0 + e], [0.0, 0.0]])).max_abs() < 1e-6);
    }
}
