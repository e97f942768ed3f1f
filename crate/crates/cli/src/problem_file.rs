//! JSON problem definitions.
//!
//! ```json
//! {
//!   "name": "pair",
//!   "kind": "linear-iae",
//!   "domain": [0, 1],
//!   "A": [[1, 0], [0, 0]],
//!   "k": [[0, 1], [1, 0]],
//!   "f": [0, 0]
//! }
//! ```
//!
//! Entries are numbers or expression strings. Which fields are read depends on
//! `kind`:
//!
//! | kind         | fields                                                |
//! |--------------|-------------------------------------------------------|
//! | `linear-iae` | `A(t)`, `k(t,s)`, `f(t)`, optional `origin`           |
//! | `linear-dae` | `A(t)`, `B(t)`, `f(t)`, `y0`                          |
//! | `dae`        | `A(t)`, `F(t,y)`, `f(t)`, `y0`                        |
//! | `iae`        | `A(t)`, `kappa(t,s,y)`, `f(t)`, optional `origin`     |
//!
//! `dae` and `iae` also accept `exact` (in `t`) and `critical`, a list of
//! expressions in `t, y` whose zeros are monitored.

use std::path::Path;
use std::sync::Arc;

use rdindex_core::func::{Interval, Kernel, MatrixFunction, VectorFunction};
use rdindex_core::problem::{CriticalCondition, LinearDae, LinearIae, Problem, SemiNonlinearDae, SemiNonlinearIae};
use rdindex_core::Mat;
use serde::Deserialize;
use thiserror::Error;

use crate::expr::{Env, Expr, ParseError};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {source}")]
    Expr { field: String, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] rdindex_core::Error),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Num(f64),
    Text(String),
}

#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    LinearIae,
    LinearDae,
    Dae,
    Iae,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub kind: Kind,
    pub domain: [f64; 2],
    #[serde(rename = "A")]
    pub a: Vec<Vec<Entry>>,
    #[serde(rename = "B")]
    pub b: Option<Vec<Vec<Entry>>>,
    pub k: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "F")]
    pub big_f: Option<Vec<Entry>>,
    pub kappa: Option<Vec<Entry>>,
    pub f: Option<Vec<Entry>>,
    pub y0: Option<Vec<f64>>,
    pub origin: Option<f64>,
    pub exact: Option<Vec<Entry>>,
    #[serde(default)]
    pub critical: Vec<String>,
}

fn compile(field: &str, e: &Entry) -> Result<Expr, FileError> {
    match e {
        Entry::Num(v) => Ok(Expr::constant(*v)),
        Entry::Text(s) => Expr::parse(s).map_err(|source| FileError::Expr { field: field.to_string(), source }),
    }
}

fn compile_vec(field: &str, v: &[Entry], r: usize) -> Result<Vec<Expr>, FileError> {
    if v.len() != r {
        return Err(FileError::Invalid(format!("`{field}` has {} entries, expected {r}", v.len())));
    }
    v.iter().map(|e| compile(field, e)).collect()
}

fn compile_mat(field: &str, m: &[Vec<Entry>], r: usize) -> Result<Vec<Expr>, FileError> {
    if m.len() != r || m.iter().any(|row| row.len() != r) {
        return Err(FileError::Invalid(format!("`{field}` must be {r}x{r}")));
    }
    m.iter().flatten().map(|e| compile(field, e)).collect()
}

fn check_vars(field: &str, exprs: &[Expr], r: usize, allow_s: bool, allow_y: bool) -> Result<(), FileError> {
    for e in exprs {
        let yi = e.max_state_index();
        if (yi > 0 && !allow_y) || yi > r {
            return Err(FileError::Invalid(format!("`{field}` entry `{e}` uses an unavailable state variable")));
        }
        if e.uses_s() && !allow_s {
            return Err(FileError::Invalid(format!("`{field}` entry `{e}` may not depend on s")));
        }
    }
    Ok(())
}

fn required<'a, T>(field: &str, v: &'a Option<T>) -> Result<&'a T, FileError> {
    v.as_ref().ok_or_else(|| FileError::Invalid(format!("missing field `{field}`")))
}

fn mat_fn(exprs: Vec<Expr>, r: usize, dom: Interval) -> MatrixFunction {
    MatrixFunction::square(dom, r, move |t| {
        let env = Env { t, s: 0.0, y: &[] };
        Mat::from_fn(r, r, |i, j| exprs[i * r + j].eval(&env))
    })
}

fn vec_fn(exprs: Vec<Expr>, dom: Interval) -> VectorFunction {
    let r = exprs.len();
    VectorFunction::new(dom, r, move |t| exprs.iter().map(|e| e.eval(&Env { t, s: 0.0, y: &[] })).collect())
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ProblemFile, FileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn build(&self) -> Result<Problem, FileError> {
        let dom = Interval::new(self.domain[0], self.domain[1])?;
        let r = self.a.len();
        if r == 0 {
            return Err(FileError::Invalid("`A` must not be empty".into()));
        }
        let name = self.name.clone().unwrap_or_else(|| "problem".into());
        let a_ex = compile_mat("A", &self.a, r)?;
        check_vars("A", &a_ex, r, false, false)?;
        let a = mat_fn(a_ex, r, dom);
        let f_ex = compile_vec("f", required("f", &self.f)?, r)?;
        check_vars("f", &f_ex, r, false, false)?;
        let f = vec_fn(f_ex, dom);
        let exact = match &self.exact {
            Some(v) => {
                let ex = compile_vec("exact", v, r)?;
                check_vars("exact", &ex, r, false, false)?;
                Some(vec_fn(ex, dom))
            }
            None => None,
        };
        let critical = self
            .critical
            .iter()
            .map(|src| {
                let e = Expr::parse(src).map_err(|source| FileError::Expr { field: "critical".into(), source })?;
                check_vars("critical", std::slice::from_ref(&e), r, false, true)?;
                Ok(CriticalCondition::new(src.clone(), move |t, y| e.eval(&Env { t, s: 0.0, y })))
            })
            .collect::<Result<Vec<_>, FileError>>()?;
        let y0 = |kind: &str| -> Result<Vec<f64>, FileError> {
            let y0 = required("y0", &self.y0)?.clone();
            if y0.len() != r {
                return Err(FileError::Invalid(format!("`y0` of a {kind} must have {r} entries")));
            }
            Ok(y0)
        };
        let origin = self.origin.unwrap_or(dom.lo);
        match self.kind {
            Kind::LinearIae => {
                let k_ex = compile_mat("k", required("k", &self.k)?, r)?;
                check_vars("k", &k_ex, r, true, false)?;
                let k = Kernel::new(dom, r, move |t, s| {
                    let env = Env { t, s, y: &[] };
                    Mat::from_fn(r, r, |i, j| k_ex[i * r + j].eval(&env))
                });
                Ok(Problem::LinearIae(LinearIae::with_origin(a, k, f, origin)?))
            }
            Kind::LinearDae => {
                let b_ex = compile_mat("B", required("B", &self.b)?, r)?;
                check_vars("B", &b_ex, r, false, false)?;
                Ok(Problem::LinearDae(LinearDae::new(a, mat_fn(b_ex, r, dom), f, y0("linear DAE")?)?))
            }
            Kind::Dae => {
                let big = compile_vec("F", required("F", &self.big_f)?, r)?;
                check_vars("F", &big, r, false, true)?;
                Ok(Problem::Dae(SemiNonlinearDae {
                    name,
                    a,
                    f_map: Arc::new(move |t, y| big.iter().map(|e| e.eval(&Env { t, s: 0.0, y })).collect()),
                    f_jac: None,
                    rhs: f,
                    y0: y0("DAE")?,
                    exact,
                    critical,
                    t_start: dom.lo,
                }))
            }
            Kind::Iae => {
                let kap = compile_vec("kappa", required("kappa", &self.kappa)?, r)?;
                check_vars("kappa", &kap, r, true, true)?;
                Ok(Problem::Iae(SemiNonlinearIae {
                    name,
                    a,
                    kappa: Arc::new(move |t, s, y| kap.iter().map(|e| e.eval(&Env { t, s, y })).collect()),
                    kappa_y: None,
                    rhs: f,
                    exact,
                    critical,
                    origin,
                }))
            }
        }
    }
}
