//! Bivectors, two-forms and maps on coordinate spaces.
//!
//! Polynomial fields are differentiated exactly. Pointwise fields wrap an
//! evaluator closure and are differentiated by central differences.

mod fit;
mod poly;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

pub use fit::{fit_polynomial_degree, FitReport, SampleGrid, DEFAULT_FIT_TOL};
pub use poly::{lie_poisson_field, schouten_poly, PolyBivectorField, PolyTrivectorField, Polynomial};

/// Antisymmetry tolerance for tensors returned by this module.
pub const TENSOR_ANTISYMMETRY_TOL: f64 = 1e-13;

/// Step for central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdStep {
    /// `h = c * (1 + |p|)`.
    Relative(f64),
    Absolute(f64),
}

impl Default for FdStep {
    fn default() -> Self {
        FdStep::Relative(1e-5)
    }
}

impl FdStep {
    pub fn at(&self, p: &Vector) -> f64 {
        match *self {
            FdStep::Relative(c) => c * (1.0 + p.norm()),
            FdStep::Absolute(h) => h,
        }
    }

    pub fn halved(&self) -> Self {
        match *self {
            FdStep::Relative(c) => FdStep::Relative(c / 2.0),
            FdStep::Absolute(h) => FdStep::Absolute(h / 2.0),
        }
    }
}

/// Fully antisymmetric 3-tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Trivector {
    pub n: usize,
    data: Vec<f64>,
}

impl Trivector {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        self.data[(i * n + j) * n + k] = v;
    }

    /// Sets all six permutations of `(i, j, k)` with signs.
    pub fn set_antisymmetric(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.set(i, j, k, v);
        self.set(j, k, i, v);
        self.set(k, i, j, v);
        self.set(j, i, k, -v);
        self.set(i, k, j, -v);
        self.set(k, j, i, -v);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = self.get(i, j, k);
                    d = d.max((t + self.get(j, i, k)).abs()).max((t + self.get(i, k, j)).abs());
                }
            }
        }
        d
    }

    /// `T'(a, b, c) = sum T_{ijk} K_{ia} K_{jb} K_{kc}`.
    pub fn pull_back(&self, k: &Mat) -> Trivector {
        assert_eq!(k.nrows(), self.n);
        let (n, m) = (self.n, k.ncols());
        // contract one index at a time
        let mut t1 = vec![0.0; m * n * n];
        for a in 0..m {
            for i in 0..n {
                let kia = k[(i, a)];
                if kia == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for l in 0..n {
                        t1[(a * n + j) * n + l] += kia * self.get(i, j, l);
                    }
                }
            }
        }
        let mut t2 = vec![0.0; m * m * n];
        for a in 0..m {
            for b in 0..m {
                for j in 0..n {
                    let kjb = k[(j, b)];
                    for l in 0..n {
                        t2[(a * m + b) * n + l] += kjb * t1[(a * n + j) * n + l];
                    }
                }
            }
        }
        let mut out = Trivector::zeros(m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += k[(l, c)] * t2[(a * m + b) * n + l];
                    }
                    out.set(a, b, c, s);
                }
            }
        }
        out
    }
}

impl std::ops::Sub for &Trivector {
    type Output = Trivector;
    fn sub(self, rhs: &Trivector) -> Trivector {
        assert_eq!(self.n, rhs.n);
        Trivector { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Anything that can report a bivector and its first partial derivatives.
pub trait BivectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &Vector) -> Result<Mat>;
    /// `partials[l] = d_l Pi` at `p`.
    fn partials(&self, p: &Vector) -> Result<Vec<Mat>>;
}

type MatFn = Arc<dyn Fn(&Vector) -> Result<Mat> + Send + Sync>;
type VecFn = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;

/// Central-difference partials of a matrix-valued function.
pub fn fd_partials(f: &dyn Fn(&Vector) -> Result<Mat>, p: &Vector, h: f64) -> Result<Vec<Mat>> {
    let mut out = Vec::with_capacity(p.len());
    for l in 0..p.len() {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[l] += h;
        minus[l] -= h;
        out.push((f(&plus)? - f(&minus)?) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference Jacobian `J[i][l] = d f_i / d p_l`.
pub fn fd_jacobian(f: &dyn Fn(&Vector) -> Result<Vector>, p: &Vector, h: f64) -> Result<Mat> {
    let mut cols = Vec::with_capacity(p.len());
    for l in 0..p.len() {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[l] += h;
        minus[l] -= h;
        cols.push((f(&plus)? - f(&minus)?) / (2.0 * h));
    }
    let rows = match cols.first() {
        Some(c) => c.len(),
        None => f(p)?.len(),
    };
    Ok(linalg::columns_to_mat(rows, &cols))
}

fn check_tensor(m: &Mat, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    linalg::require_antisymmetric(m, TENSOR_ANTISYMMETRY_TOL)
}

/// Bivector field known only through pointwise evaluation.
#[derive(Clone)]
pub struct PointBivector {
    n: usize,
    eval: MatFn,
    pub fd: FdStep,
}

impl PointBivector {
    pub fn new(n: usize, eval: impl Fn(&Vector) -> Result<Mat> + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(eval), fd: FdStep::default() }
    }

    pub fn with_step(mut self, fd: FdStep) -> Self {
        self.fd = fd;
        self
    }
}

impl BivectorField for PointBivector {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, p: &Vector) -> Result<Mat> {
        let m = (self.eval)(p)?;
        check_tensor(&m, self.n)?;
        Ok(m)
    }

    fn partials(&self, p: &Vector) -> Result<Vec<Mat>> {
        fd_partials(&|q: &Vector| (self.eval)(q), p, self.fd.at(p))
    }
}

/// Two-form field known only through pointwise evaluation.
#[derive(Clone)]
pub struct PointTwoForm {
    n: usize,
    eval: MatFn,
    pub fd: FdStep,
}

impl PointTwoForm {
    pub fn new(n: usize, eval: impl Fn(&Vector) -> Result<Mat> + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(eval), fd: FdStep::default() }
    }

    pub fn with_step(mut self, fd: FdStep) -> Self {
        self.fd = fd;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn value(&self, p: &Vector) -> Result<Mat> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: p.len() });
        }
        let m = (self.eval)(p)?;
        check_tensor(&m, self.n)?;
        Ok(m)
    }

    pub fn scaled(&self, s: f64) -> PointTwoForm {
        let inner = self.eval.clone();
        PointTwoForm { n: self.n, eval: Arc::new(move |p| Ok(inner(p)? * s)), fd: self.fd }
    }
}

/// Smooth map between coordinate spaces, known pointwise.
#[derive(Clone)]
pub struct PointMap {
    n_in: usize,
    n_out: usize,
    eval: VecFn,
    pub fd: FdStep,
    /// Jacobians with a larger condition number are rejected by pushforwards.
    pub max_condition: f64,
}

impl PointMap {
    pub fn new(n_in: usize, n_out: usize, eval: impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static) -> Self {
        Self { n_in, n_out, eval: Arc::new(eval), fd: FdStep::default(), max_condition: 1e10 }
    }

    pub fn linear(a: Mat) -> Self {
        let (r, c) = a.shape();
        Self::new(c, r, move |p| Ok(&a * p))
    }

    pub fn with_step(mut self, fd: FdStep) -> Self {
        self.fd = fd;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_in, self.n_out)
    }

    pub fn apply(&self, p: &Vector) -> Result<Vector> {
        if p.len() != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, got: p.len() });
        }
        (self.eval)(p)
    }

    pub fn jacobian(&self, p: &Vector) -> Result<Mat> {
        fd_jacobian(&|q: &Vector| self.apply(q), p, self.fd.at(p))
    }
}

/// Schouten bracket at a point, with the convention
/// `[pi,rho]^{ijk} = sum_l (pi^{li} d_l rho^{jk} + rho^{li} d_l pi^{jk}) + cyclic`.
pub fn schouten(pi: &dyn BivectorField, rho: &dyn BivectorField, p: &Vector) -> Result<Trivector> {
    let n = pi.dim();
    if rho.dim() != n {
        return Err(Error::MixedDimensions { left: n, right: rho.dim() });
    }
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let (pv, rv) = (pi.value(p)?, rho.value(p)?);
    let (dp, dr) = (pi.partials(p)?, rho.partials(p)?);
    let term = |i: usize, j: usize, k: usize| -> f64 { (0..n).map(|l| pv[(l, i)] * dr[l][(j, k)] + rv[(l, i)] * dp[l][(j, k)]).sum() };
    let mut t = Trivector::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                t.set_antisymmetric(i, j, k, term(i, j, k) + term(j, k, i) + term(k, i, j));
            }
        }
    }
    Ok(t)
}

/// `(d omega)_{ijk} = d_i omega_{jk} - d_j omega_{ik} + d_k omega_{ij}`.
pub fn exterior_derivative(omega: &PointTwoForm, p: &Vector) -> Result<Trivector> {
    let n = omega.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let d = fd_partials(&|q: &Vector| omega.value(q), p, omega.fd.at(p))?;
    let mut t = Trivector::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                t.set(i, j, k, d[i][(j, k)] - d[j][(i, k)] + d[k][(i, j)]);
            }
        }
    }
    Ok(t)
}

/// `J Pi J^T` with `J` the finite-difference Jacobian of `map` at `p`.
pub fn pushforward_matrix(map: &PointMap, p: &Vector, pi_at_p: &Mat) -> Result<Mat> {
    if pi_at_p.nrows() != map.n_in {
        return Err(Error::DimensionMismatch { expected: map.n_in, got: pi_at_p.nrows() });
    }
    let j = map.jacobian(p)?;
    let condition = linalg::condition_number(&j);
    if condition.is_nan() || condition > map.max_condition {
        return Err(Error::JacobianIllConditioned { condition });
    }
    let out = &j * pi_at_p * j.transpose();
    Ok((&out - out.transpose()) * 0.5)
}

pub fn pushforward_bivector(map: &PointMap, pi: &dyn BivectorField, p: &Vector) -> Result<Mat> {
    if pi.dim() != map.n_in {
        return Err(Error::MixedDimensions { left: map.n_in, right: pi.dim() });
    }
    pushforward_matrix(map, p, &pi.value(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieAlgebra;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    #[test]
    fn schouten_point_mode_agrees_with_polynomial_mode() {
        let alg = LieAlgebra::sl2();
        let poly = lie_poisson_field(&alg);
        let a2 = alg.clone();
        let point = PointBivector::new(3, move |p| a2.poisson_matrix(p));
        let p = v(&[0.3, -0.7, 1.1]);
        let exact = schouten(&poly, &poly, &p).unwrap();
        let fd = schouten(&point, &point, &p).unwrap();
        assert!(exact.max_abs() == 0.0);
        assert!((&exact - &fd).max_abs() < 1e-6);
    }

    #[test]
    fn schouten_detects_broken_table() {
        let broken = LieAlgebra::from_brackets(3, &[(0, 1, 2, 1.0), (1, 2, 1, 1.0)], None).unwrap();
        let f = lie_poisson_field(&broken);
        let t = schouten(&f, &f, &v(&[0.0, 0.0, 1.0])).unwrap();
        assert!(t.max_abs() > 0.5);
        assert!(!schouten_poly(&f, &f).unwrap().is_zero());
    }

    #[test]
    fn exterior_derivative_of_linear_form() {
        // omega_{12} = xi_3
        let w = PointTwoForm::new(3, |p| {
            let mut m = Mat::zeros(3, 3);
            m[(0, 1)] = p[2];
            m[(1, 0)] = -p[2];
            Ok(m)
        });
        let t = exterior_derivative(&w, &v(&[0.4, 0.1, -0.2])).unwrap();
        assert!((t.get(0, 1, 2) - 1.0).abs() < 1e-8);
        assert!(t.antisymmetry_defect() < 1e-13);
        let c = PointTwoForm::new(2, |_| Ok(Mat::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0])));
        assert_eq!(exterior_derivative(&c, &v(&[1.0, 2.0])).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn pushforward_along_linear_map() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let pi = Mat::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]);
        let map = PointMap::linear(a.clone());
        let got = pushforward_matrix(&map, &v(&[0.3, 0.2]), &pi).unwrap();
        assert!(linalg::max_abs(&(got - &a * &pi * a.transpose())) < 1e-9);
    }

    #[test]
    fn pushforward_rejects_singular_jacobian() {
        let map = PointMap::new(2, 2, |p| Ok(v(&[p[0], 0.0])));
        let pi = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(pushforward_matrix(&map, &v(&[0.0, 0.0]), &pi), Err(Error::JacobianIllConditioned { .. })));
    }

    #[test]
    fn trivector_pull_back_by_identity() {
        let mut t = Trivector::zeros(3);
        t.set_antisymmetric(0, 1, 2, 2.0);
        let p = t.pull_back(&Mat::identity(3, 3));
        assert_eq!(p, t);
        let k = Mat::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(t.pull_back(&k).get(0, 1, 2), 4.0);
    }
}
