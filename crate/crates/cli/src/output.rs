//! Solution CSV and JSON helpers.
//!
//! CSV columns are `t, y1..yr`, then `exact1..exactr` and `error` (max-norm)
//! when an exact solution is known. Every number is written with 17
//! significant digits.

use std::fmt::Write as _;
use std::path::Path;

use rdindex_core::func::VectorFunction;
use serde::Serialize;

use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus one row per sample.
pub fn solution_csv(times: &[f64], values: &[Vec<f64>], exact: Option<&VectorFunction>) -> Result<String, CliError> {
    let r = values.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=r {
        write!(out, ",y{i}").unwrap();
    }
    if exact.is_some() {
        for i in 1..=r {
            write!(out, ",exact{i}").unwrap();
        }
        out.push_str(",error");
    }
    out.push('\n');
    for (&t, y) in times.iter().zip(values) {
        out.push_str(&num(t));
        for v in y {
            out.push(',');
            out.push_str(&num(*v));
        }
        if let Some(ex) = exact {
            let z = ex.eval(t)?;
            for v in &z {
                out.push(',');
                out.push_str(&num(*v));
            }
            let err = y.iter().zip(&z).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            out.push(',');
            out.push_str(&num(err));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write(dir: &Path, file: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdindex_core::func::Interval;

    #[test]
    fn header_and_precision() {
        let ex = VectorFunction::new(Interval::new(0.0, 1.0).unwrap(), 1, |t| vec![t]);
        let csv = solution_csv(&[0.0, 0.1], &[vec![0.0], vec![0.1 + 1e-3]], Some(&ex)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,y1,exact1,error");
        assert_eq!(lines[2].split(',').count(), 4);
        let err: f64 = lines[2].split(',').last().unwrap().parse().unwrap();
        assert!((err - 1e-3).abs() < 1e-15);
        let back: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
        assert_eq!(solution_csv(&[0.5], &[vec![1.0, 2.0]], None).unwrap().lines().next(), Some("t,y1,y2"));
    }
}
