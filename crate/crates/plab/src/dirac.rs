//! Linear Dirac structures: Lagrangian subspaces of `V + V*` for the pairing
//! `<(u, a), (v, b)> = a(v) + b(u)`.
//!
//! Conventions: `graph(Pi) = {(Pi a, a)}`, `graph(w) = {(v, w v)}` and the
//! gauge transform by `s` is `(v, a) -> (v, a + s v)`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, RANK_RTOL};

pub const ISOTROPY_TOL: f64 = 1e-10;
/// Spans closer than this (sine of the largest principal angle) are equal.
pub const SPAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiracSpace {
    n: usize,
    /// `2n x n`, orthonormal columns; top half vectors, bottom half covectors.
    basis: Mat,
}

fn pairing_matrix(b: &Mat, n: usize) -> Mat {
    let top = b.rows(0, n);
    let bot = b.rows(n, n);
    bot.transpose() * top + top.transpose() * bot
}

impl DiracSpace {
    /// Spans the columns of `spanning` (`2n` rows, any number of columns).
    pub fn from_spanning(n: usize, spanning: &Mat) -> Result<Self> {
        if spanning.nrows() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: spanning.nrows() });
        }
        let basis = linalg::orth(spanning, RANK_RTOL);
        if basis.ncols() != n {
            return Err(Error::DimensionDrop { expected: n, got: basis.ncols() });
        }
        let defect = linalg::max_abs(&pairing_matrix(&basis, n));
        if defect > ISOTROPY_TOL {
            return Err(Error::NotIsotropic { defect });
        }
        Ok(Self { n, basis })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn vector_part(&self) -> Mat {
        self.basis.rows(0, self.n).into_owned()
    }

    pub fn covector_part(&self) -> Mat {
        self.basis.rows(self.n, self.n).into_owned()
    }

    pub fn isotropy_defect(&self) -> f64 {
        linalg::max_abs(&pairing_matrix(&self.basis, self.n))
    }

    /// Sine of the largest principal angle to `other`.
    pub fn distance(&self, other: &DiracSpace) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        linalg::span_distance(&self.basis, &other.basis, RANK_RTOL)
    }

    pub fn same_as(&self, other: &DiracSpace) -> bool {
        self.distance(other) <= SPAN_TOL
    }

    /// Membership of `(v, a)`, relative to its norm.
    pub fn contains(&self, va: &Vector, tol: f64) -> bool {
        let r = va - &self.basis * (self.basis.transpose() * va);
        r.norm() <= tol * va.norm().max(f64::MIN_POSITIVE)
    }
}

pub fn graph_of_bivector(pi: &Mat) -> Result<DiracSpace> {
    linalg::require_antisymmetric(pi, 1e-12)?;
    let n = pi.nrows();
    DiracSpace::from_spanning(n, &linalg::vstack(&[pi, &Mat::identity(n, n)]))
}

pub fn graph_of_twoform(omega: &Mat) -> Result<DiracSpace> {
    linalg::require_antisymmetric(omega, 1e-12)?;
    let n = omega.nrows();
    DiracSpace::from_spanning(n, &linalg::vstack(&[&Mat::identity(n, n), omega]))
}

pub fn gauge(l: &DiracSpace, sigma: &Mat) -> Result<DiracSpace> {
    let n = l.n;
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.nrows() });
    }
    linalg::require_antisymmetric(sigma, 1e-12)?;
    let v = l.vector_part();
    let a = l.covector_part() + sigma * &v;
    DiracSpace::from_spanning(n, &linalg::vstack(&[&v, &a]))
}

/// `f^! L = {(v, f^T b) : (f v, b) in L}` for `f: V -> W` (a `dim W x dim V` matrix).
pub fn backward_image(f: &Mat, l: &DiracSpace) -> Result<DiracSpace> {
    let (m, n) = f.shape();
    if l.n != m {
        return Err(Error::DimensionMismatch { expected: m, got: l.n });
    }
    // unknowns (v, c): f v = U c, image (v, f^T B c)
    let u = l.vector_part();
    let b = l.covector_part();
    let system = linalg::hstack(&[f, &(-&u)]);
    let k = linalg::kernel(&system, RANK_RTOL);
    let v = k.rows(0, n).into_owned();
    let c = k.rows(n, m).into_owned();
    let alpha = f.transpose() * (&b * c);
    DiracSpace::from_spanning(n, &linalg::vstack(&[&v, &alpha]))
}

/// `f_! L = {(f v, b) : (v, f^T b) in L}` for `f: V -> W`.
pub fn forward_image(f: &Mat, l: &DiracSpace) -> Result<DiracSpace> {
    let (m, n) = f.shape();
    if l.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: l.n });
    }
    // unknowns (c, b): A c = f^T b, image (f V c, b)
    let v = l.vector_part();
    let a = l.covector_part();
    let system = linalg::hstack(&[&a, &(-f.transpose())]);
    let k = linalg::kernel(&system, RANK_RTOL);
    let c = k.rows(0, n).into_owned();
    let beta = k.rows(n, m).into_owned();
    let w = f * (&v * c);
    DiracSpace::from_spanning(m, &linalg::vstack(&[&w, &beta]))
}

/// The bivector whose graph is `l`, or `NotGraph` with `dim(l ∩ (V + 0))`.
pub fn as_bivector(l: &DiracSpace) -> Result<Mat> {
    let a = l.covector_part();
    let r = linalg::rank_abs(&a, RANK_RTOL);
    if r < l.n {
        return Err(Error::NotGraph { intersection_dim: l.n - r });
    }
    let inv = a.clone().try_inverse().ok_or(Error::NotGraph { intersection_dim: 1 })?;
    let pi = l.vector_part() * inv;
    Ok((&pi - pi.transpose()) * 0.5)
}

/// The two-form whose graph is `l`, or `NotTwoFormGraph` with `dim(l ∩ (0 + V*))`.
pub fn as_twoform(l: &DiracSpace) -> Result<Mat> {
    let v = l.vector_part();
    let r = linalg::rank_abs(&v, RANK_RTOL);
    if r < l.n {
        return Err(Error::NotTwoFormGraph { intersection_dim: l.n - r });
    }
    let inv = v.clone().try_inverse().ok_or(Error::NotTwoFormGraph { intersection_dim: 1 })?;
    let w = l.covector_part() * inv;
    Ok((&w - w.transpose()) * 0.5)
}
