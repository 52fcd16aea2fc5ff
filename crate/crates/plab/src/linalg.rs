//! Small dense linear algebra on top of nalgebra.
//!
//! Every rank decision goes through [`rank_threshold`]: a singular value counts
//! as zero when it is below `rtol` times the largest one. Helpers accept empty
//! (0-row or 0-column) matrices, which show up for point transversals and
//! codimension-zero cases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative threshold for rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

pub fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

pub fn antisymmetry_defect(m: &Mat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(m + m.transpose()))
}

pub fn require_antisymmetric(m: &Mat, tol: f64) -> Result<()> {
    let defect = antisymmetry_defect(m);
    if defect > tol * (1.0 + max_abs(m)) {
        return Err(Error::NotAntisymmetric { defect });
    }
    Ok(())
}

/// Singular values in decreasing order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value of a square matrix; `+inf` for the empty matrix.
pub fn min_singular_value(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    let s = singular_values(m);
    if s.len() < m.nrows().max(m.ncols()) {
        return 0.0;
    }
    *s.last().unwrap()
}

pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn condition_number(m: &Mat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if s.len() == m.nrows().min(m.ncols()) => {
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        _ => 1.0,
    }
}

pub fn rank_threshold(s: &[f64], rtol: f64) -> f64 {
    rtol * s.first().copied().unwrap_or(0.0)
}

pub fn rank(m: &Mat, rtol: f64) -> usize {
    let s = singular_values(m);
    let thr = rank_threshold(&s, rtol);
    s.iter().filter(|&&x| x > thr && x > 0.0).count()
}

/// Rank with an absolute threshold; right for blocks of orthonormal bases.
pub fn rank_abs(m: &Mat, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&x| x > tol).count()
}

/// Orthonormal basis (columns) of the null space of `m`.
pub fn kernel(m: &Mat, rtol: f64) -> Mat {
    let (r, c) = m.shape();
    if c == 0 {
        return Mat::zeros(0, 0);
    }
    if r == 0 {
        return Mat::identity(c, c);
    }
    let padded = if r < c {
        let mut p = Mat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd with v_t");
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    let thr = rtol * smax;
    let cols: Vec<Vector> = (0..s.len()).filter(|&i| s[i] <= thr).map(|i| v_t.row(i).transpose()).collect();
    columns_to_mat(c, &cols)
}

/// Orthonormal basis (columns) of the column span of `m`.
pub fn orth(m: &Mat, rtol: f64) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Mat::zeros(r, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u");
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    let thr = rtol * smax;
    let cols: Vec<Vector> = (0..s.len()).filter(|&i| s[i] > thr && s[i] > 0.0).map(|i| u.column(i).into_owned()).collect();
    columns_to_mat(r, &cols)
}

pub fn columns_to_mat(nrows: usize, cols: &[Vector]) -> Mat {
    let mut out = Mat::zeros(nrows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        out.set_column(j, col);
    }
    out
}

/// Sine of the largest principal angle between two column spans.
/// Spans of different dimension are at distance `+inf`.
pub fn span_distance(a: &Mat, b: &Mat, rtol: f64) -> f64 {
    let qa = orth(a, rtol);
    let qb = orth(b, rtol);
    if qa.ncols() != qb.ncols() {
        return f64::INFINITY;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let resid = &qb - &qa * (qa.transpose() * &qb);
    spectral_norm(&resid)
}

/// How far the columns of `sub` stick out of span(`sup`), as a sine.
pub fn containment_defect(sub: &Mat, sup: &Mat, rtol: f64) -> f64 {
    let qs = orth(sub, rtol);
    if qs.ncols() == 0 {
        return 0.0;
    }
    let qp = orth(sup, rtol);
    let resid = if qp.ncols() == 0 { qs.clone() } else { &qs - &qp * (qp.transpose() * &qs) };
    spectral_norm(&resid)
}

/// Minimum-norm least-squares solution of `a x = b` and the residual max-abs.
pub fn lstsq(a: &Mat, b: &Mat) -> Result<(Mat, f64)> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    if a.ncols() == 0 {
        return Ok((Mat::zeros(0, b.ncols()), max_abs(b)));
    }
    if a.nrows() == 0 {
        return Ok((Mat::zeros(a.ncols(), b.ncols()), 0.0));
    }
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0_f64, |x, &y| x.max(y));
    let eps = (RANK_RTOL * smax).max(f64::MIN_POSITIVE);
    let x = svd.solve(b, eps).map_err(|e| Error::Invalid(format!("least squares failed: {e}")))?;
    let resid = max_abs(&(a * &x - b));
    Ok((x, resid))
}

pub fn lstsq_vec(a: &Mat, b: &Vector) -> Result<(Vector, f64)> {
    let bm = Mat::from_column_slice(b.len(), 1, b.as_slice());
    let (x, r) = lstsq(a, &bm)?;
    Ok((x.column(0).into_owned(), r))
}

/// Inverse of a square matrix, refusing numerically singular input.
pub fn inverse(m: &Mat) -> Option<Mat> {
    if m.nrows() != m.ncols() {
        return None;
    }
    if m.nrows() == 0 {
        return Some(Mat::zeros(0, 0));
    }
    let s = singular_values(m);
    if *s.last().unwrap() <= RANK_RTOL * s[0] || s[0] == 0.0 {
        return None;
    }
    m.clone().try_inverse()
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let r = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let mut j = 0;
    for b in blocks {
        assert_eq!(b.nrows(), r, "hstack row mismatch");
        out.view_mut((0, j), b.shape()).copy_from(*b);
        j += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&Mat]) -> Mat {
    let c = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(r, c);
    let mut i = 0;
    for b in blocks {
        assert_eq!(b.ncols(), c, "vstack column mismatch");
        out.view_mut((i, 0), b.shape()).copy_from(*b);
        i += b.nrows();
    }
    out
}

pub fn concat(parts: &[&Vector]) -> Vector {
    let data: Vec<f64> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    Vector::from_vec(data)
}

fn one_norm(m: &Mat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

const TAYLOR_ORDER: usize = 12;
const SCALED_NORM: f64 = 0.25;

/// Matrix exponential by scaling and squaring a degree-12 Taylor polynomial.
pub fn expm(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence("non-finite matrix entry".into()));
    }
    let norm = one_norm(a);
    let squarings = if norm > SCALED_NORM { (norm / SCALED_NORM).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(Error::NonConvergence(format!("norm {norm:e} too large")));
    }
    let scaled = a * 2f64.powi(-squarings);
    // Horner: I + A(I + A/2(I + A/3(...)))
    let id = Mat::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        acc = &id + (&scaled * &acc) / k as f64;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence("overflow while squaring".into()));
    }
    Ok(acc)
}

/// `phi1(A) = sum_k A^k/(k+1)!`, read off the top-right block of exp([[A, I], [0, 0]]).
pub fn phi1(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut big = Mat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).fill_with_identity();
    let e = expm(&big)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_exp(a: &Mat, terms: usize) -> Mat {
        let n = a.nrows();
        let mut term = Mat::identity(n, n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_matches_long_series() {
        let a = Mat::from_row_slice(3, 3, &[0.1, -0.7, 0.3, 0.7, 0.0, -0.2, -0.3, 0.2, 0.05]);
        let e = expm(&a).unwrap();
        assert!(max_abs(&(e - series_exp(&a, 40))) < 1e-14);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 2.5_f64;
        let a = Mat::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a).unwrap();
        let r = Mat::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!(max_abs(&(e - r)) < 1e-13);
    }

    #[test]
    fn expm_rejects_nan() {
        let a = Mat::from_element(2, 2, f64::NAN);
        assert!(matches!(expm(&a), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn phi1_identity() {
        let a = Mat::from_row_slice(2, 2, &[0.3, 1.1, -0.4, 0.2]);
        let p = phi1(&a).unwrap();
        let lhs = &a * &p;
        let rhs = expm(&a).unwrap() - Mat::identity(2, 2);
        assert!(max_abs(&(lhs - rhs)) < 1e-14);
        assert!(max_abs(&(phi1(&Mat::zeros(3, 3)).unwrap() - Mat::identity(3, 3))) < 1e-16);
    }

    #[test]
    fn kernel_and_orth_of_wide_matrix() {
        let m = Mat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = kernel(&m, RANK_RTOL);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-14);
        assert_eq!(orth(&m.transpose(), RANK_RTOL).ncols(), 1);
    }

    #[test]
    fn empty_shapes() {
        assert_eq!(kernel(&Mat::zeros(0, 3), RANK_RTOL).ncols(), 3);
        assert_eq!(kernel(&Mat::zeros(2, 0), RANK_RTOL).ncols(), 0);
        assert_eq!(orth(&Mat::zeros(4, 0), RANK_RTOL).shape(), (4, 0));
        assert_eq!(min_singular_value(&Mat::zeros(0, 0)), f64::INFINITY);
        assert_eq!(rank(&Mat::zeros(3, 3), RANK_RTOL), 0);
    }

    #[test]
    fn span_distance_detects_tilt() {
        let a = Mat::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = Mat::from_row_slice(3, 1, &[2.0, 0.0, 0.0]);
        let c = Mat::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert!(span_distance(&a, &b, RANK_RTOL) < 1e-15);
        assert!((span_distance(&a, &c, RANK_RTOL) - 0.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lstsq_reports_inconsistency() {
        let a = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        let b = Mat::from_row_slice(2, 1, &[1.0, 1.0]);
        let (x, r) = lstsq(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((r - 1.0).abs() < 1e-14);
    }
}
