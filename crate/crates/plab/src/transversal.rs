//! Affine Poisson transversals `X = lambda + L` in `g*`.
//!
//! Points of `X` are written `lambda + B u` with `B` an orthonormal basis of
//! `L`; conormal directions are `x = A a` with `A` an orthonormal basis of the
//! annihilator `L°` in `g`. The conormal chart uses `e = (a, u)`.

use crate::algebra::{LieAlgebra, LinearSubspace};
use crate::dirac;
use crate::error::{Error, Result};
use crate::fields::PointTwoForm;
use crate::linalg::{self, Mat, Vector, RANK_RTOL};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransversal {
    algebra: LieAlgebra,
    base: Vector,
    tangent: Mat,
    conormal: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityTest {
    pub transversal: bool,
    /// Smallest singular value of `B_mu(x, y) = mu([x, y])` on `L°` (`+inf` when `L = g*`).
    pub min_singular_value: f64,
    /// Smallest singular value of the frame `[L | Pi(mu) L°]`.
    pub direct_sum_min_singular_value: f64,
    pub criteria_agree: bool,
}

/// `pi_g(mu) = pi_X + w_X` in the frame `(L, Pi(mu) L°)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBivector {
    /// `k x k`, in the coordinates `u` of `X`.
    pub tangential: Mat,
    /// `(n-k) x (n-k)`, in the frame `Pi(mu) A`.
    pub normal: Mat,
    pub frame_tangent: Mat,
    pub frame_normal: Mat,
    pub mixed_max: f64,
    pub reassembly_residual: f64,
    /// `A^T Pi(mu) A`, i.e. `w_X` evaluated on conormal covectors.
    pub conormal_pairing: Mat,
}

impl SplitBivector {
    /// `w_X` as a bilinear form on `N*X` in chart coordinates `a`.
    pub fn normal_on_conormal(&self) -> Mat {
        &self.conormal_pairing * &self.normal * self.conormal_pairing.transpose()
    }
}

/// Rank threshold for transversality at `mu`. Scaled by `|Pi(mu)|`, with a
/// floor from the bracket size at the base point so that roundoff near
/// `mu = 0` is not mistaken for a nondegenerate form.
fn transversal_tol(alg: &LieAlgebra, pi: &Mat, base: &Vector) -> f64 {
    let mut c_max = 0.0_f64;
    let n = alg.dim();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                c_max = c_max.max(alg.c(k, i, j).abs());
            }
        }
    }
    RANK_RTOL * linalg::spectral_norm(pi).max(c_max * base.norm()).max(f64::MIN_POSITIVE)
}

impl AffineTransversal {
    /// `directions` holds the spanning covectors of `L` as columns.
    pub fn new(algebra: LieAlgebra, base: Vector, directions: &Mat) -> Result<Self> {
        let n = algebra.dim();
        if base.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: base.len() });
        }
        if directions.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: directions.nrows() });
        }
        let l = LinearSubspace::new(directions)?;
        let conormal = l.annihilator().basis().clone();
        let t = Self { algebra, base, tangent: l.basis().clone(), conormal };
        if t.codim() % 2 == 1 {
            return Err(Error::NotTransversal { min_sv: 0.0 });
        }
        let test = t.is_transversal_at(&t.base)?;
        if !test.transversal {
            return Err(Error::NotTransversal { min_sv: test.min_singular_value });
        }
        Ok(t)
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn base(&self) -> &Vector {
        &self.base
    }

    /// Orthonormal basis of `L` (columns).
    pub fn tangent_basis(&self) -> &Mat {
        &self.tangent
    }

    /// Orthonormal basis of `L°` (columns).
    pub fn conormal_basis(&self) -> &Mat {
        &self.conormal
    }

    pub fn dim(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn codim(&self) -> usize {
        self.conormal.ncols()
    }

    pub fn point(&self, u: &Vector) -> Vector {
        &self.base + &self.tangent * u
    }

    pub fn coords(&self, mu: &Vector) -> Vector {
        self.tangent.transpose() * (mu - &self.base)
    }

    pub fn distance(&self, mu: &Vector) -> f64 {
        (self.conormal.transpose() * (mu - &self.base)).norm()
    }

    pub fn snap_tol(&self) -> f64 {
        1e-9 * (1.0 + self.base.norm())
    }

    /// Projects `mu` onto `X`, refusing points further than the snap tolerance.
    pub fn snap(&self, mu: &Vector) -> Result<Vector> {
        if mu.len() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), got: mu.len() });
        }
        let distance = self.distance(mu);
        if distance > self.snap_tol() {
            return Err(Error::PointNotOnX { distance });
        }
        Ok(self.point(&self.coords(mu)))
    }

    pub fn is_transversal_at(&self, mu: &Vector) -> Result<TransversalityTest> {
        let mu = self.snap(mu)?;
        let pi = self.algebra.poisson_matrix(&mu)?;
        if self.codim() == 0 {
            return Ok(TransversalityTest {
                transversal: true,
                min_singular_value: f64::INFINITY,
                direct_sum_min_singular_value: 1.0,
                criteria_agree: true,
            });
        }
        let b_mu = self.conormal.transpose() * &pi * &self.conormal;
        let min_sv = linalg::min_singular_value(&b_mu);
        let tol = transversal_tol(&self.algebra, &pi, &self.base);
        let first = min_sv > tol;
        let frame = linalg::hstack(&[&self.tangent, &(&pi * &self.conormal)]);
        let frame_sv = linalg::min_singular_value(&frame);
        let second = frame_sv > tol.max(RANK_RTOL);
        Ok(TransversalityTest {
            transversal: first,
            min_singular_value: min_sv,
            direct_sum_min_singular_value: frame_sv,
            criteria_agree: first == second,
        })
    }

    pub fn split_at(&self, mu: &Vector) -> Result<SplitBivector> {
        let test = self.is_transversal_at(mu)?;
        if !test.transversal {
            return Err(Error::NotTransversal { min_sv: test.min_singular_value });
        }
        let mu = self.snap(mu)?;
        let pi = self.algebra.poisson_matrix(&mu)?;
        let k = self.dim();
        let frame_normal = &pi * &self.conormal;
        let frame = linalg::hstack(&[&self.tangent, &frame_normal]);
        let inv = linalg::inverse(&frame).ok_or(Error::NotTransversal { min_sv: test.min_singular_value })?;
        let q = &inv * &pi * inv.transpose();
        let m = q.nrows() - k;
        let tangential = q.view((0, 0), (k, k)).into_owned();
        let normal = q.view((k, k), (m, m)).into_owned();
        let mixed_max = linalg::max_abs(&q.view((0, k), (k, m)).into_owned());
        let block = linalg::block_diag(&[&tangential, &normal]);
        let reassembly_residual = linalg::max_abs(&(&frame * block * frame.transpose() - &pi));
        if mixed_max > 1e-10 * linalg::max_abs(&pi).max(1.0) {
            return Err(Error::MixedBlockNonzero { residual: mixed_max });
        }
        let antisym = |m: Mat| (&m - m.transpose()) * 0.5;
        Ok(SplitBivector {
            tangential: antisym(tangential),
            normal: antisym(normal),
            frame_tangent: self.tangent.clone(),
            frame_normal,
            mixed_max,
            reassembly_residual,
            conormal_pairing: self.conormal.transpose() * &pi * &self.conormal,
        })
    }

    /// The transverse Poisson structure `pi_X` in the coordinates `u`.
    pub fn tangential_bivector(&self, u: &Vector) -> Result<Mat> {
        Ok(self.split_at(&self.point(u))?.tangential)
    }

    pub fn conormal_chart(&self) -> ConormalChart {
        ConormalChart { fiber: self.conormal.clone(), base_dirs: self.tangent.clone(), base_point: self.base.clone() }
    }

    /// The Dirac-recipe model bivector at the chart point `e`: pull `pi_X`
    /// back along the projection, gauge by `sigma(e)`, and read off the graph.
    pub fn local_model(&self, sigma: &PointTwoForm, e: &Vector) -> Result<Mat> {
        let chart = self.conormal_chart();
        if e.len() != chart.dim() || sigma.dim() != chart.dim() {
            return Err(Error::DimensionMismatch { expected: chart.dim(), got: e.len() });
        }
        let u = chart.project(e);
        let pi_x = self.tangential_bivector(&u)?;
        dirac_local_model(&pi_x, chart.fiber_dim(), &sigma.value(e)?)
    }
}

/// Coordinates `e = (a, u)` on `N*X ≅ L° × X`, embedded in `g × g*` as
/// `(A a, lambda + B u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConormalChart {
    pub fiber: Mat,
    pub base_dirs: Mat,
    pub base_point: Vector,
}

impl ConormalChart {
    pub fn fiber_dim(&self) -> usize {
        self.fiber.ncols()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dirs.ncols()
    }

    pub fn dim(&self) -> usize {
        self.fiber_dim() + self.base_dim()
    }

    pub fn split(&self, e: &Vector) -> (Vector, Vector) {
        let m = self.fiber_dim();
        (e.rows(0, m).into_owned(), e.rows(m, self.base_dim()).into_owned())
    }

    pub fn embed(&self, e: &Vector) -> (Vector, Vector) {
        let (a, u) = self.split(e);
        (&self.fiber * a, &self.base_point + &self.base_dirs * u)
    }

    pub fn project(&self, e: &Vector) -> Vector {
        self.split(e).1
    }

    pub fn zero_section(&self, u: &Vector) -> Vector {
        linalg::concat(&[&Vector::zeros(self.fiber_dim()), u])
    }

    /// Differential of [`ConormalChart::embed`]: `blockdiag(A, B)`.
    pub fn embedding_matrix(&self) -> Mat {
        linalg::block_diag(&[&self.fiber, &self.base_dirs])
    }
}

/// Local model on `E = R^m × X`: `as_bivector(gauge(dp^! graph(pi_X), sigma))`
/// with `dp = [0 | I]`.
pub fn dirac_local_model(pi_x: &Mat, fiber_dim: usize, sigma: &Mat) -> Result<Mat> {
    let k = pi_x.nrows();
    let n = fiber_dim + k;
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.nrows() });
    }
    let dp = linalg::hstack(&[&Mat::zeros(k, fiber_dim), &Mat::identity(k, k)]);
    let pulled = dirac::backward_image(&dp, &dirac::graph_of_bivector(pi_x)?)?;
    dirac::as_bivector(&dirac::gauge(&pulled, sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    fn so3_line() -> AffineTransversal {
        AffineTransversal::new(LieAlgebra::so3(), v(&[0.0, 0.0, 1.0]), &Mat::from_row_slice(3, 1, &[0.0, 0.0, 1.0])).unwrap()
    }

    #[test]
    fn so3_line_is_transversal_with_unit_gap() {
        let t = so3_line();
        let test = t.is_transversal_at(&v(&[0.0, 0.0, 1.0])).unwrap();
        assert!(test.transversal && test.criteria_agree);
        assert!((test.min_singular_value - 1.0).abs() < 1e-14);
        assert!(matches!(t.is_transversal_at(&v(&[0.1, 0.0, 1.0])), Err(Error::PointNotOnX { .. })));
    }

    #[test]
    fn origin_is_not_transversal() {
        let r = AffineTransversal::new(LieAlgebra::so3(), v(&[0.0, 0.0, 0.0]), &Mat::from_row_slice(3, 1, &[0.0, 0.0, 1.0]));
        assert!(matches!(r, Err(Error::NotTransversal { .. })));
        let t = so3_line();
        let at0 = t.is_transversal_at(&v(&[0.0, 0.0, 0.0])).unwrap();
        assert!(!at0.transversal && at0.criteria_agree, "{at0:?}");
    }

    #[test]
    fn abelian_needs_full_space() {
        let ab = LieAlgebra::abelian(2);
        let r = AffineTransversal::new(ab.clone(), v(&[1.0, 0.0]), &Mat::zeros(2, 0));
        assert!(matches!(r, Err(Error::NotTransversal { .. })));
        let full = AffineTransversal::new(ab, v(&[1.0, 0.0]), &Mat::identity(2, 2)).unwrap();
        let s = full.split_at(&v(&[0.3, 0.2])).unwrap();
        assert_eq!(s.tangential, Mat::zeros(2, 2));
        assert_eq!(s.normal.shape(), (0, 0));
    }

    #[test]
    fn so3_split_at_e3() {
        let s = so3_line().split_at(&v(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.tangential.shape(), (1, 1));
        assert_eq!(s.tangential[(0, 0)], 0.0);
        assert!(s.mixed_max < 1e-15);
        assert!(s.reassembly_residual < 1e-14);
        assert!((s.normal_on_conormal()[(0, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sl2_semisimple_transversal_dimensions() {
        let t = AffineTransversal::new(LieAlgebra::sl2(), v(&[1.0, 0.0, 0.0]), &Mat::from_row_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        assert_eq!((t.dim(), t.codim()), (1, 2));
        let s = t.split_at(&v(&[1.3, 0.0, 0.0])).unwrap();
        assert!(linalg::min_singular_value(&s.normal) > 0.1);
    }

    #[test]
    fn chart_round_trip() {
        let c = so3_line().conormal_chart();
        assert_eq!(c.dim(), 3);
        let u = v(&[0.25]);
        let e = c.zero_section(&u);
        let (x, xi) = c.embed(&e);
        assert_eq!(x.norm(), 0.0);
        assert!((xi[2] - 1.25).abs() < 1e-15);
        assert_eq!(c.project(&e), u);
    }

    #[test]
    fn abelian_model_is_block_diagonal() {
        // pi_X = 0 on a 2-dim base, sigma the canonical form on a 2-dim fiber
        let mut sigma = Mat::zeros(4, 4);
        sigma[(0, 1)] = 1.0;
        sigma[(1, 0)] = -1.0;
        let m = dirac_local_model(&Mat::zeros(2, 2), 2, &sigma).unwrap();
        let fiber_inv = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let want = linalg::block_diag(&[&fiber_inv, &Mat::zeros(2, 2)]);
        assert!(linalg::max_abs(&(m - want)) < 1e-12);
    }

    #[test]
    fn no_fiber_means_nothing_to_gauge() {
        let pi = Mat::from_row_slice(2, 2, &[0.0, 0.4, -0.4, 0.0]);
        let m = dirac_local_model(&pi, 0, &Mat::zeros(2, 2)).unwrap();
        assert!(linalg::max_abs(&(m - pi)) < 1e-12);
    }

    #[test]
    fn degenerate_sigma_gives_not_graph() {
        let r = dirac_local_model(&Mat::zeros(1, 1), 2, &Mat::zeros(3, 3));
        assert!(matches!(r, Err(Error::NotGraph { intersection_dim: 2 })));
    }
}
