//! The canonical spray on `g*`, its exponential map, the two-form `Omega_g`,
//! and verifiers for the dual pair, the transversal normal form and
//! Poisson-map normal forms.
//!
//! Tangent vectors to `T*g* = g × g*` are ordered `[x; xi]`. With the sign
//! conventions of [`crate::algebra`]:
//!
//! * spray: `V(x, xi) = (0, ad_x^T xi)`, flow `(x, xi) -> (x, coad_exp(t x, xi))`;
//! * `Omega_g((x,xi),(y,eta)) = xi(Xi y) - eta(Xi x) + xi0([Xi x, Xi y])` at `(x0, xi0)`;
//! * `pr` pushes `Omega_g^{-1}` to `+pi_g` and `exp` pushes it to `-pi_g`.

use serde::Serialize;

use crate::algebra::{is_morphism, LieAlgebra};
use crate::error::{Error, Result};
use crate::fields::{exterior_derivative, fd_jacobian, pushforward_matrix, FdStep, PointMap, PointTwoForm};
use crate::linalg::{self, Mat, Vector};
use crate::report::{evaluate, VerificationReport};
use crate::sample::Sampler;
use crate::transversal::AffineTransversal;

/// Below this smallest singular value `Xi_{x0}` is treated as singular.
pub const XI_SINGULAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SprayPoint {
    pub x: Vector,
    pub xi: Vector,
}

impl SprayPoint {
    pub fn new(x: Vector, xi: Vector) -> Self {
        Self { x, xi }
    }

    pub fn stacked(&self) -> Vector {
        linalg::concat(&[&self.x, &self.xi])
    }

    pub fn from_stacked(v: &Vector) -> Self {
        let n = v.len() / 2;
        Self { x: v.rows(0, n).into_owned(), xi: v.rows(n, n).into_owned() }
    }
}

/// Shared knobs for the sampled verifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub fd: FdStep,
    /// Sampling radius; each verifier has its own default.
    pub radius: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { samples: 100, tol: 1e-6, seed: 42, fd: FdStep::default(), radius: None }
    }
}

pub fn spray_vector(alg: &LieAlgebra, p: &SprayPoint) -> Result<SprayPoint> {
    let v = alg.ad_matrix(&p.x)?.transpose() * &p.xi;
    Ok(SprayPoint::new(Vector::zeros(alg.dim()), v))
}

pub fn spray_flow(alg: &LieAlgebra, t: f64, p: &SprayPoint) -> Result<SprayPoint> {
    Ok(SprayPoint::new(p.x.clone(), alg.coad_exp(&(&p.x * t), &p.xi)?))
}

pub fn spray_exp(alg: &LieAlgebra, p: &SprayPoint) -> Result<Vector> {
    Ok(spray_flow(alg, 1.0, p)?.xi)
}

/// `2n x 2n` matrix of `Omega_g` at `base`, so that `Omega(u, v) = u^T W v`.
pub fn omega_g_matrix(alg: &LieAlgebra, base: &SprayPoint) -> Result<Mat> {
    let n = alg.dim();
    let xi_op = alg.xi_operator(&base.x)?;
    let pi = alg.poisson_matrix(&base.xi)?;
    let mut w = Mat::zeros(2 * n, 2 * n);
    let xx = xi_op.transpose() * &pi * &xi_op;
    w.view_mut((0, 0), (n, n)).copy_from(&((&xx - xx.transpose()) * 0.5));
    w.view_mut((n, 0), (n, n)).copy_from(&xi_op);
    w.view_mut((0, n), (n, n)).copy_from(&(-xi_op.transpose()));
    Ok(w)
}

pub fn omega_g(alg: &LieAlgebra, base: &SprayPoint, u: &SprayPoint, v: &SprayPoint) -> Result<f64> {
    let xi_op = alg.xi_operator(&base.x)?;
    let (xu, xv) = (&xi_op * &u.x, &xi_op * &v.x);
    Ok(u.xi.dot(&xv) - v.xi.dot(&xu) + base.xi.dot(&alg.bracket(&xu, &xv)?))
}

/// `Omega_g` as a two-form field on `R^{2n}`.
pub fn omega_g_field(alg: &LieAlgebra) -> PointTwoForm {
    let a = alg.clone();
    PointTwoForm::new(2 * alg.dim(), move |p| omega_g_matrix(&a, &SprayPoint::from_stacked(p)))
}

/// `omega_V = -Omega_g` restricted to `N*X`, in conormal chart coordinates.
pub fn omega_v_on_conormal(t: &AffineTransversal) -> PointTwoForm {
    let chart = t.conormal_chart();
    let alg = t.algebra().clone();
    let d = chart.embedding_matrix();
    PointTwoForm::new(chart.dim(), move |e| {
        let (x, xi) = chart.embed(e);
        let w = omega_g_matrix(&alg, &SprayPoint::new(x, xi))?;
        Ok(-(d.transpose() * w * &d))
    })
}

/// The chart map `e -> exp(A a, lambda + B u)`.
pub fn chart_exp_map(t: &AffineTransversal, fd: FdStep) -> PointMap {
    let chart = t.conormal_chart();
    let alg = t.algebra().clone();
    PointMap::new(chart.dim(), alg.dim(), move |e| {
        let (x, xi) = chart.embed(e);
        alg.coad_exp(&x, &xi)
    })
    .with_step(fd)
}

pub fn default_chart_radius(t: &AffineTransversal) -> f64 {
    0.1 * (1.0 + t.base().norm())
}

/// Residual of the normal form at one chart point for a given gauge form.
pub fn normal_form_residual(t: &AffineTransversal, sigma: &PointTwoForm, map: &PointMap, e: &Vector) -> Result<f64> {
    let model = t.local_model(sigma, e)?;
    let pushed = pushforward_matrix(map, e, &model)?;
    let want = t.algebra().poisson_matrix(&map.apply(e)?)?;
    Ok(linalg::max_abs(&(pushed - want)))
}

pub fn verify_normal_form(t: &AffineTransversal, opts: &VerifyOptions) -> VerificationReport {
    verify_normal_form_with(t, &omega_v_on_conormal(t).with_step(opts.fd), opts, "normal_form")
}

/// Same as [`verify_normal_form`] with an arbitrary gauge form; used for
/// negative controls.
pub fn verify_normal_form_with(t: &AffineTransversal, sigma: &PointTwoForm, opts: &VerifyOptions, name: &str) -> VerificationReport {
    let radius = opts.radius.unwrap_or_else(|| default_chart_radius(t));
    let mut s = Sampler::new(opts.seed);
    let dim = t.conormal_chart().dim();
    let points: Vec<Vector> = (0..opts.samples).map(|_| s.ball(dim, radius)).collect();
    let map = chart_exp_map(t, opts.fd);
    let outcomes = evaluate(&points, |e| normal_form_residual(t, sigma, &map, e));
    VerificationReport::from_outcomes(name, opts.tol, Some(opts.seed), &outcomes).with_note(format!("chart ball radius {radius}"))
}

/// `max |d omega_V|` over chart samples.
pub fn verify_omega_v_closed(t: &AffineTransversal, opts: &VerifyOptions) -> VerificationReport {
    let radius = opts.radius.unwrap_or_else(|| default_chart_radius(t));
    let omega = omega_v_on_conormal(t).with_step(opts.fd);
    let mut s = Sampler::new(opts.seed ^ 0x5eed);
    let points: Vec<Vector> = (0..opts.samples).map(|_| s.ball(omega.dim(), radius)).collect();
    let outcomes = evaluate(&points, |e| Ok(exterior_derivative(&omega, e)?.max_abs()));
    VerificationReport::from_outcomes("omega_v_closed", opts.tol, Some(opts.seed), &outcomes)
}

/// `max |d Omega_g|` at samples with `|x0|, |xi0| <= 1`.
pub fn verify_omega_g_closed(alg: &LieAlgebra, opts: &VerifyOptions) -> VerificationReport {
    let radius = opts.radius.unwrap_or(1.0);
    let omega = omega_g_field(alg).with_step(opts.fd);
    let n = alg.dim();
    let mut s = Sampler::new(opts.seed ^ 0xc105ed);
    let points: Vec<Vector> = (0..opts.samples).map(|_| linalg::concat(&[&s.ball(n, radius), &s.ball(n, radius)])).collect();
    let outcomes = evaluate(&points, |p| Ok(exterior_derivative(&omega, p)?.max_abs()));
    VerificationReport::from_outcomes("omega_g_closed", opts.tol, Some(opts.seed), &outcomes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPairResiduals {
    pub omega_min_singular_value: f64,
    /// `|pr_* Omega^{-1} - pi_g(xi0)|`
    pub source: f64,
    /// `|exp_* Omega^{-1} + pi_g(exp)|`
    pub target: f64,
    /// `|Omega^{-1}(pr^* a, exp^* b)|`
    pub orthogonality: f64,
}

impl DualPairResiduals {
    pub fn max(&self) -> f64 {
        self.source.max(self.target).max(self.orthogonality)
    }
}

pub fn dual_pair_residuals(alg: &LieAlgebra, base: &SprayPoint, fd: FdStep) -> Result<DualPairResiduals> {
    let n = alg.dim();
    let xi_op = alg.xi_operator(&base.x)?;
    let xi_sv = linalg::min_singular_value(&xi_op);
    if xi_sv <= XI_SINGULAR_TOL {
        return Err(Error::SingularBase { min_sv: xi_sv });
    }
    let w = omega_g_matrix(alg, base)?;
    let omega_min_singular_value = linalg::min_singular_value(&w);
    let p = linalg::inverse(&w).ok_or(Error::SingularBase { min_sv: omega_min_singular_value })?;
    let j_pr = linalg::hstack(&[&Mat::zeros(n, n), &Mat::identity(n, n)]);
    let a = alg.clone();
    let exp_map = move |q: &Vector| {
        let sp = SprayPoint::from_stacked(q);
        a.coad_exp(&sp.x, &sp.xi)
    };
    let stacked = base.stacked();
    let j_exp = fd_jacobian(&exp_map, &stacked, fd.at(&stacked))?;
    let pi_src = alg.poisson_matrix(&base.xi)?;
    let pi_tgt = alg.poisson_matrix(&exp_map(&stacked)?)?;
    Ok(DualPairResiduals {
        omega_min_singular_value,
        source: linalg::max_abs(&(&j_pr * &p * j_pr.transpose() - pi_src)),
        target: linalg::max_abs(&(&j_exp * &p * j_exp.transpose() + pi_tgt)),
        orthogonality: linalg::max_abs(&(&j_pr * &p * j_exp.transpose())),
    })
}

pub fn verify_dual_pair(alg: &LieAlgebra, opts: &VerifyOptions) -> VerificationReport {
    let radius = opts.radius.unwrap_or(1.0);
    let n = alg.dim();
    let mut s = Sampler::new(opts.seed);
    let points: Vec<SprayPoint> = (0..opts.samples).map(|_| SprayPoint::new(s.ball(n, radius), s.ball(n, radius))).collect();
    let details: Vec<Result<DualPairResiduals>> = points.iter().map(|p| dual_pair_residuals(alg, p, opts.fd)).collect();
    let outcomes = evaluate(&details, |d| d.as_ref().map(DualPairResiduals::max).map_err(Clone::clone));
    let min_sv = details.iter().filter_map(|d| d.as_ref().ok()).map(|d| d.omega_min_singular_value).fold(f64::INFINITY, f64::min);
    VerificationReport::from_outcomes("dual_pair", opts.tol, Some(opts.seed), &outcomes)
        .with_note(format!("min singular value of Omega_g over samples: {min_sv:e}"))
}

/// Result of [`poisson_map_normal_form`].
#[derive(Debug, Clone)]
pub struct PoissonMapCheck {
    /// `Y = (f^T)^{-1}(X)` in the codomain dual.
    pub preimage: AffineTransversal,
    /// Conormal fiber map: `c_X = G c_Y`.
    pub fiber_map: Mat,
    /// Commuting square, pullback of forms, Poisson property on the base.
    pub reports: Vec<VerificationReport>,
}

impl PoissonMapCheck {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// For a Lie algebra map `f: a -> b` (a `dim b x dim a` matrix) and a
/// transversal `X` in `a*`, builds `Y = (f^T)^{-1}(X)` in `b*` and the conormal
/// map `F`, then checks `exp_a o F = f^T o exp_b`, `F^* omega_{V,X} = omega_{V,Y}`
/// and that `f^T: Y -> X` is Poisson.
pub fn poisson_map_normal_form(
    domain: &LieAlgebra,
    codomain: &LieAlgebra,
    f: &Mat,
    x: &AffineTransversal,
    opts: &VerifyOptions,
) -> Result<PoissonMapCheck> {
    let residual = is_morphism(domain, codomain, f)?;
    if residual > 1e-12 {
        return Err(Error::NotMorphism { residual });
    }
    if x.algebra() != domain {
        return Err(Error::Invalid("transversal must live in the dual of the domain algebra".into()));
    }
    let ft = f.transpose();
    let (a_x, b_x, lambda) = (x.conormal_basis(), x.tangent_basis(), x.base());
    let constraint = a_x.transpose() * &ft;
    let rhs = a_x.transpose() * lambda;
    let (mu0, resid) = linalg::lstsq_vec(&constraint, &rhs)?;
    if resid > 1e-10 * (1.0 + lambda.norm()) {
        return Err(Error::EmptyPreimage { residual: resid });
    }
    let dirs = linalg::kernel(&constraint, linalg::RANK_RTOL);
    let y = match AffineTransversal::new(codomain.clone(), mu0.clone(), &dirs) {
        Err(Error::NotTransversal { min_sv }) => return Err(Error::PreimageNotTransversal { min_sv }),
        other => other?,
    };
    let (a_y, b_y) = (y.conormal_basis().clone(), y.tangent_basis().clone());
    if a_y.ncols() != a_x.ncols() {
        return Err(Error::BlockDimensionMismatch(format!(
            "conormal ranks differ: {} in the domain, {} in the codomain",
            a_x.ncols(),
            a_y.ncols()
        )));
    }
    let (g_map, g_resid) = linalg::lstsq(&(f * a_x), &a_y)?;
    if g_resid > 1e-10 {
        return Err(Error::BlockDimensionMismatch(format!("f does not map L_X° onto L_Y° (residual {g_resid:e})")));
    }
    let base_map = b_x.transpose() * &ft * &b_y;
    let d_f = linalg::block_diag(&[&g_map, &base_map]);
    let sigma_x = omega_v_on_conormal(x);
    let sigma_y = omega_v_on_conormal(&y);
    let chart_y = y.conormal_chart();
    let m = chart_y.fiber_dim();

    let radius = opts.radius.unwrap_or_else(|| default_chart_radius(&y));
    let mut s = Sampler::new(opts.seed);
    let points: Vec<Vector> = (0..opts.samples).map(|_| s.ball(chart_y.dim(), radius)).collect();
    let to_x = |e: &Vector| -> Vector {
        let (c, u) = chart_y.split(e);
        let mu = y.point(&u);
        linalg::concat(&[&(&g_map * c), &x.coords(&(&ft * mu))])
    };

    let commute = evaluate(&points, |e| {
        let (c, u) = chart_y.split(e);
        let mu = y.point(&u);
        let lhs = domain.coad_exp(&(a_x * (&g_map * &c)), &(&ft * &mu))?;
        let rhs = &ft * codomain.coad_exp(&(&a_y * &c), &mu)?;
        Ok(linalg::max_abs_vec(&(lhs - rhs)))
    });
    let forms = evaluate(&points, |e| {
        let pulled = d_f.transpose() * sigma_x.value(&to_x(e))? * &d_f;
        Ok(linalg::max_abs(&(pulled - sigma_y.value(e)?)))
    });
    let base = evaluate(&points, |e| {
        let u = chart_y.project(e);
        let u_x = to_x(e).rows(m, x.dim()).into_owned();
        let pi_y = y.tangential_bivector(&u)?;
        let pi_x = x.tangential_bivector(&u_x)?;
        Ok(linalg::max_abs(&(&base_map * pi_y * base_map.transpose() - pi_x)))
    });
    let seed = Some(opts.seed);
    Ok(PoissonMapCheck {
        preimage: y,
        fiber_map: g_map,
        reports: vec![
            VerificationReport::from_outcomes("poisson_map_commutes", opts.tol, seed, &commute),
            VerificationReport::from_outcomes("poisson_map_forms", opts.tol, seed, &forms),
            VerificationReport::from_outcomes("poisson_map_base", opts.tol, seed, &base),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    fn so3_line() -> AffineTransversal {
        AffineTransversal::new(LieAlgebra::so3(), v(&[0.0, 0.0, 1.0]), &Mat::from_row_slice(3, 1, &[0.0, 0.0, 1.0])).unwrap()
    }

    #[test]
    fn full_turn_returns_covector() {
        let so3 = LieAlgebra::so3();
        let p = SprayPoint::new(v(&[0.0, 0.0, 2.0 * PI]), v(&[0.3, -0.2, 0.9]));
        let q = spray_flow(&so3, 1.0, &p).unwrap();
        assert!(linalg::max_abs_vec(&(q.xi - &p.xi)) < 1e-12);
    }

    #[test]
    fn omega_at_origin_is_canonical_plus_bracket() {
        let alg = LieAlgebra::sl2();
        let base = SprayPoint::new(Vector::zeros(3), v(&[0.2, 0.5, -0.1]));
        let u = SprayPoint::new(v(&[1.0, 0.3, 0.0]), v(&[0.0, 0.4, 0.7]));
        let w = SprayPoint::new(v(&[0.1, -0.2, 0.5]), v(&[1.0, 0.0, 0.2]));
        let got = omega_g(&alg, &base, &u, &w).unwrap();
        let want = u.xi.dot(&w.x) - w.xi.dot(&u.x) + base.xi.dot(&alg.bracket(&u.x, &w.x).unwrap());
        assert!((got - want).abs() < 1e-14);
        let m = omega_g_matrix(&alg, &base).unwrap();
        assert!((u.stacked().dot(&(&m * w.stacked())) - want).abs() < 1e-14);
    }

    #[test]
    fn omega_degenerates_at_two_pi() {
        let base = SprayPoint::new(v(&[0.0, 0.0, 2.0 * PI]), v(&[0.0, 0.0, 1.0]));
        let w = omega_g_matrix(&LieAlgebra::so3(), &base).unwrap();
        assert!(linalg::min_singular_value(&w) < 1e-8);
        assert!(matches!(dual_pair_residuals(&LieAlgebra::so3(), &base, FdStep::default()), Err(Error::SingularBase { .. })));
    }

    #[test]
    fn abelian_dual_pair_is_exact() {
        let alg = LieAlgebra::abelian(2);
        let r = dual_pair_residuals(&alg, &SprayPoint::new(v(&[0.3, 0.1]), v(&[1.0, 2.0])), FdStep::default()).unwrap();
        assert!(r.max() < 1e-12);
    }

    #[test]
    fn omega_v_fiber_block_is_minus_w_x() {
        let t = so3_line();
        let omega = omega_v_on_conormal(&t);
        let e = v(&[0.0, 0.0, 0.2]);
        let w = omega.value(&e).unwrap();
        let split = t.split_at(&t.point(&v(&[0.2]))).unwrap();
        let fiber = w.view((0, 0), (2, 2)).into_owned();
        assert!(linalg::max_abs(&(fiber + split.conormal_pairing)) < 1e-12);
    }

    #[test]
    fn normal_form_on_zero_section_is_tight() {
        let t = so3_line();
        let sigma = omega_v_on_conormal(&t);
        let map = chart_exp_map(&t, FdStep::default());
        let r = normal_form_residual(&t, &sigma, &map, &v(&[0.0, 0.0, 0.05])).unwrap();
        assert!(r < 1e-9, "{r}");
    }
}
