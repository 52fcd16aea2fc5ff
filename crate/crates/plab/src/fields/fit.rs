use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::sample::Sampler;

use super::{BivectorField, PointBivector};

pub const DEFAULT_FIT_TOL: f64 = 1e-8;

/// Where to sample when fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleGrid {
    /// Tensor grid with 4 points per axis for `n <= 4`, else 200 random points.
    Auto {
        seed: u64,
    },
    Tensor {
        per_axis: usize,
    },
    Random {
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub degree: usize,
    /// Relative max residual of the least-squares fit for each degree `0..=max_degree`.
    pub residuals: Vec<f64>,
    pub scale: f64,
    pub samples: usize,
}

fn monomials(n: usize, d: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d as u32, &mut Vec::new(), &mut out);
    out
}

fn grid_points(n: usize, grid: SampleGrid) -> Vec<Vector> {
    let tensor = |per_axis: usize| -> Vec<Vector> {
        let axis: Vec<f64> =
            (0..per_axis).map(|i| if per_axis == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64 }).collect();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                Vector::from_fn(n, |_, _| {
                    let v = axis[idx % per_axis];
                    idx /= per_axis;
                    v
                })
            })
            .collect()
    };
    match grid {
        SampleGrid::Tensor { per_axis } => tensor(per_axis),
        SampleGrid::Auto { .. } if n <= 4 => tensor(4),
        SampleGrid::Auto { seed } => {
            let mut s = Sampler::new(seed);
            (0..200).map(|_| s.ball(n, 1.0)).collect()
        }
        SampleGrid::Random { count, seed } => {
            let mut s = Sampler::new(seed);
            (0..count).map(|_| s.ball(n, 1.0)).collect()
        }
    }
}

/// Smallest total degree `d <= max_degree` whose least-squares fit of every
/// component reproduces the samples within `tol` (relative to the largest
/// sampled magnitude).
pub fn fit_polynomial_degree(
    f: &PointBivector,
    center: &Vector,
    radius: f64,
    max_degree: usize,
    grid: SampleGrid,
    tol: f64,
) -> Result<FitReport> {
    let n = f.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    let unit = grid_points(n, grid);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut values = Mat::zeros(unit.len(), pairs.len());
    for (s, y) in unit.iter().enumerate() {
        let m = f.value(&(center + y * radius))?;
        for (c, &(i, j)) in pairs.iter().enumerate() {
            values[(s, c)] = m[(i, j)];
        }
    }
    let scale = linalg::max_abs(&values);
    let mut residuals = Vec::with_capacity(max_degree + 1);
    for d in 0..=max_degree {
        if scale == 0.0 {
            residuals.push(0.0);
            continue;
        }
        let mons = monomials(n, d);
        let design =
            Mat::from_fn(unit.len(), mons.len(), |s, m| mons[m].iter().enumerate().map(|(i, &k)| unit[s][i].powi(k as i32)).product());
        let (_, resid) = linalg::lstsq(&design, &values)?;
        residuals.push(resid / scale);
    }
    match residuals.iter().position(|&r| r <= tol) {
        Some(degree) => Ok(FitReport { degree, residuals, scale, samples: unit.len() }),
        None => Err(Error::NoFit { max_degree, best_residual: residuals.iter().copied().fold(f64::INFINITY, f64::min) }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieAlgebra;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(2, 2).len(), 6);
        assert_eq!(monomials(3, 3).len(), 20);
        assert_eq!(monomials(1, 0), vec![vec![0]]);
    }

    #[test]
    fn constant_and_linear_fields() {
        let c = PointBivector::new(2, |_| Ok(Mat::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0])));
        let r = fit_polynomial_degree(&c, &Vector::zeros(2), 1.0, 3, SampleGrid::Auto { seed: 1 }, DEFAULT_FIT_TOL).unwrap();
        assert_eq!(r.degree, 0);
        let alg = LieAlgebra::sl2();
        let lin = PointBivector::new(3, move |p| alg.poisson_matrix(p));
        let r = fit_polynomial_degree(&lin, &Vector::from_vec(vec![1.0, 0.0, 0.0]), 0.3, 3, SampleGrid::Auto { seed: 1 }, DEFAULT_FIT_TOL)
            .unwrap();
        assert_eq!(r.degree, 1);
    }

    #[test]
    fn cubic_needs_degree_three() {
        let f = PointBivector::new(2, |p| {
            let v = p[0].powi(3) + p[1];
            Ok(Mat::from_row_slice(2, 2, &[0.0, v, -v, 0.0]))
        });
        let r = fit_polynomial_degree(&f, &Vector::zeros(2), 1.0, 3, SampleGrid::Auto { seed: 1 }, DEFAULT_FIT_TOL).unwrap();
        assert_eq!(r.degree, 3);
        assert!(matches!(
            fit_polynomial_degree(&f, &Vector::zeros(2), 1.0, 2, SampleGrid::Auto { seed: 1 }, DEFAULT_FIT_TOL),
            Err(Error::NoFit { .. })
        ));
    }
}
