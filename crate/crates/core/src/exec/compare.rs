use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    /// (row, column) of the largest difference.
    pub worst: (usize, usize),
    pub tolerance: f64,
    pub pass: bool,
}

/// Elementwise |a - b| statistics; fails iff the maximum exceeds `tol`.
pub fn compare_outputs(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> Result<ErrorReport> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("{} rows vs {}", a.len(), b.len())));
    }
    let (mut max_abs, mut sum, mut n, mut worst) = (0.0f64, 0.0, 0usize, (0, 0));
    for (r, (x, y)) in a.iter().zip(b).enumerate() {
        if x.len() != y.len() {
            return Err(Error::shape(format!("row {r}: {} columns vs {}", x.len(), y.len())));
        }
        for (c, (p, q)) in x.iter().zip(y).enumerate() {
            let d = (p - q).abs();
            if d > max_abs {
                max_abs = d;
                worst = (r, c);
            }
            sum += d;
            n += 1;
        }
    }
    let mean_abs = if n == 0 { 0.0 } else { sum / n as f64 };
    Ok(ErrorReport { max_abs, mean_abs, worst, tolerance: tol, pass: max_abs <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_compare_is_zero() {
        let x = vec![vec![1.0, -2.0], vec![0.5, 0.0]];
        let r = compare_outputs(&x, &x, 0.0).unwrap();
        assert_eq!((r.max_abs, r.mean_abs, r.pass), (0.0, 0.0, true));
    }

    #[test]
    fn constant_offset() {
        let x = vec![vec![1.0, -2.0, 3.0]];
        let d = 2f64.powi(-12);
        let y = vec![x[0].iter().map(|v| v + d).collect()];
        let r = compare_outputs(&x, &y, d / 2.0).unwrap();
        assert_eq!(r.max_abs, d);
        assert!(!r.pass && r.max_abs >= r.mean_abs);
        assert!(compare_outputs(&x, &[], 1.0).is_err());
    }
}
