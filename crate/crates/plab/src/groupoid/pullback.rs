//! The pullback groupoid `G_X^E = E ×_X G_X ×_X E` over `p: E = R^m × X -> X`,
//! with `omega_E = -t^* sigma + p^* omega_X + s^* sigma`.
//!
//! Arrows are `(e', gamma, e)` with `p(e') = t(gamma)` and `p(e) = s(gamma)`;
//! tangents are laid out as `[e'; a; xi'; e]` with `(a, xi')` right-trivialized.

use crate::dirac;
use crate::error::{Error, Result};
use crate::fields::{exterior_derivative, fd_jacobian, FdStep, PointTwoForm};
use crate::linalg::{self, Mat, Vector};
use crate::report::{evaluate, VerificationReport};
use crate::sample::Sampler;
use crate::spray::{omega_g_matrix, SprayPoint};
use crate::transversal::dirac_local_model;

use super::action::{omega_big_g_matrix, ActionGroupoidPoint, COMPOSABLE_TOL};
use super::restrict::{RestrictedGroupoid, FD_KERNEL_RTOL, NONDEGENERACY_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArrow {
    pub target: Vector,
    pub arrow: ActionGroupoidPoint,
    pub source: Vector,
}

#[derive(Clone)]
pub struct PullbackModel {
    gx: RestrictedGroupoid,
    sigma: PointTwoForm,
    fiber_dim: usize,
}

impl std::fmt::Debug for PullbackModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PullbackModel").field("gx", &self.gx).field("fiber_dim", &self.fiber_dim).finish_non_exhaustive()
    }
}

impl PullbackModel {
    /// `sigma` lives on `E` in coordinates `e = (a, u)`, `a in R^m`, `u` the coordinates of `X`.
    pub fn new(gx: RestrictedGroupoid, sigma: PointTwoForm, fiber_dim: usize) -> Result<Self> {
        let want = fiber_dim + gx.transversal().dim();
        if sigma.dim() != want {
            return Err(Error::BlockDimensionMismatch(format!(
                "sigma has dimension {}, expected fiber {} + base {}",
                sigma.dim(),
                fiber_dim,
                gx.transversal().dim()
            )));
        }
        Ok(Self { gx, sigma, fiber_dim })
    }

    pub fn restricted(&self) -> &RestrictedGroupoid {
        &self.gx
    }

    pub fn e_dim(&self) -> usize {
        self.fiber_dim + self.gx.transversal().dim()
    }

    fn g_dim(&self) -> usize {
        self.gx.groupoid().dim()
    }

    /// Dimension of the ambient tangent layout `[e'; a; xi'; e]`.
    pub fn ambient_dim(&self) -> usize {
        2 * self.e_dim() + 2 * self.g_dim()
    }

    pub fn project(&self, e: &Vector) -> Vector {
        e.rows(self.fiber_dim, self.gx.transversal().dim()).into_owned()
    }

    pub fn source(&self, a: &ModelArrow) -> Vector {
        a.source.clone()
    }

    pub fn target(&self, a: &ModelArrow) -> Vector {
        a.target.clone()
    }

    pub fn unit(&self, e: &Vector) -> ModelArrow {
        let xi = self.gx.transversal().point(&self.project(e));
        ModelArrow { target: e.clone(), arrow: self.gx.groupoid().unit(&xi), source: e.clone() }
    }

    pub fn inverse(&self, a: &ModelArrow) -> Result<ModelArrow> {
        Ok(ModelArrow { target: a.source.clone(), arrow: self.gx.groupoid().inverse(&a.arrow)?, source: a.target.clone() })
    }

    /// `(e'', g2, e') ∘ (e', g1, e) = (e'', g2 ∘ g1, e)`.
    pub fn compose(&self, after: &ModelArrow, before: &ModelArrow) -> Result<ModelArrow> {
        let mismatch = linalg::max_abs_vec(&(&after.source - &before.target));
        if mismatch > COMPOSABLE_TOL * (1.0 + linalg::max_abs_vec(&before.target)) {
            return Err(Error::NotComposable { mismatch });
        }
        Ok(ModelArrow {
            target: after.target.clone(),
            arrow: self.gx.groupoid().compose(&after.arrow, &before.arrow)?,
            source: before.source.clone(),
        })
    }

    /// Multiplication formula without the composability check, for use along
    /// finite-difference curves.
    fn multiply_unchecked(&self, after: &ModelArrow, before: &ModelArrow) -> ModelArrow {
        ModelArrow {
            target: after.target.clone(),
            arrow: ActionGroupoidPoint::new(&before.arrow.g * &after.arrow.g, before.arrow.xi.clone()),
            source: before.source.clone(),
        }
    }

    pub fn constraints(&self, a: &ModelArrow) -> Result<Vector> {
        let x = self.gx.transversal();
        let grp = self.gx.groupoid();
        let t = grp.target(&a.arrow)?;
        let s = grp.source(&a.arrow);
        let conormal = x.conormal_basis();
        Ok(linalg::concat(&[
            &(self.project(&a.target) - x.coords(&t)),
            &(conormal.transpose() * (&t - x.base())),
            &(self.project(&a.source) - x.coords(&s)),
            &(conormal.transpose() * (&s - x.base())),
        ]))
    }

    pub fn check_member(&self, a: &ModelArrow) -> Result<()> {
        let residual = linalg::max_abs_vec(&self.constraints(a)?);
        if residual > self.gx.transversal().snap_tol() {
            return Err(Error::NotMember { residual });
        }
        Ok(())
    }

    pub fn displace(&self, a: &ModelArrow, v: &Vector, t: f64) -> Result<ModelArrow> {
        let (ne, n) = (self.e_dim(), self.g_dim());
        let de_t = v.rows(0, ne);
        let dg = v.rows(ne, 2 * n).into_owned();
        let de_s = v.rows(ne + 2 * n, ne);
        Ok(ModelArrow { target: &a.target + de_t * t, arrow: self.gx.groupoid().displace(&a.arrow, &dg, t)?, source: &a.source + de_s * t })
    }

    /// `blockdiag(-sigma(e'), Omega_G(xi), sigma(e))` on the ambient layout.
    pub fn form_matrix(&self, a: &ModelArrow) -> Result<Mat> {
        let w = omega_big_g_matrix(self.gx.groupoid().rep().algebra(), &a.arrow.xi)?;
        Ok(linalg::block_diag(&[&(-self.sigma.value(&a.target)?), &w, &self.sigma.value(&a.source)?]))
    }

    pub fn tangent_space(&self, a: &ModelArrow, fd: FdStep) -> Result<Mat> {
        self.check_member(a)?;
        let h = fd.at(&a.arrow.xi);
        let f = |v: &Vector| self.constraints(&self.displace(a, v, 1.0)?);
        let jac = fd_jacobian(&f, &Vector::zeros(self.ambient_dim()), h)?;
        Ok(linalg::kernel(&jac, FD_KERNEL_RTOL))
    }

    /// `omega_E` on a basis of the tangent space.
    pub fn omega_e(&self, a: &ModelArrow, tangent: &Mat) -> Result<Mat> {
        Ok(tangent.transpose() * self.form_matrix(a)? * tangent)
    }

    /// The base bivector `pi_X^sigma` at `e`.
    pub fn base_bivector(&self, e: &Vector) -> Result<Mat> {
        let pi_x = self.gx.transversal().tangential_bivector(&self.project(e))?;
        dirac_local_model(&pi_x, self.fiber_dim, &self.sigma.value(e)?)
    }

    /// Arrow over a sampled member of `G_X` with fibers in a ball of `fiber_radius`.
    pub fn sample_arrow(&self, s: &mut Sampler, radius: f64, fiber_radius: f64) -> Result<ModelArrow> {
        let gamma = self.gx.sample_member(s, radius)?;
        self.arrow_over(s, gamma, fiber_radius)
    }

    fn arrow_over(&self, s: &mut Sampler, gamma: ActionGroupoidPoint, fiber_radius: f64) -> Result<ModelArrow> {
        let x = self.gx.transversal();
        let grp = self.gx.groupoid();
        let target = linalg::concat(&[&s.ball(self.fiber_dim, fiber_radius), &x.coords(&grp.target(&gamma)?)]);
        let source = linalg::concat(&[&s.ball(self.fiber_dim, fiber_radius), &x.coords(&grp.source(&gamma))]);
        Ok(ModelArrow { target, arrow: gamma, source })
    }

    /// Composable `(after, before)` with both arrows sampled near the base point.
    pub fn sample_composable(&self, s: &mut Sampler, radius: f64, fiber_radius: f64) -> Result<(ModelArrow, ModelArrow)> {
        let before = self.sample_arrow(s, radius, fiber_radius)?;
        let x = self.gx.transversal();
        let conormal = x.conormal_basis();
        let raw = s.ball(self.g_dim(), radius);
        let x_free = &raw - conormal * (conormal.transpose() * &raw);
        let t = self.gx.groupoid().target(&before.arrow)?;
        let gamma = self.gx.member_from(&t, &x_free)?;
        let mut after = self.arrow_over(s, gamma, fiber_radius)?;
        after.source = before.target.clone();
        Ok((after, before))
    }

    /// `|d omega_E|` on the tangent space, from the chart
    /// `z -> (e' + z1, exp(rho(z2)) g, xi + z3, e + z4)` in which `Omega_G`
    /// becomes `Omega_g` at `(z2, xi + z3)`.
    pub fn closedness_residual(&self, a: &ModelArrow, fd: FdStep) -> Result<f64> {
        let (ne, n) = (self.e_dim(), self.g_dim());
        let k = self.tangent_space(a, fd)?;
        let alg = self.gx.groupoid().rep().algebra().clone();
        let sigma = self.sigma.clone();
        let (e_t, xi, e_s) = (a.target.clone(), a.arrow.xi.clone(), a.source.clone());
        let field = PointTwoForm::new(self.ambient_dim(), move |z| {
            let z1 = z.rows(0, ne).into_owned();
            let z2 = z.rows(ne, n).into_owned();
            let z3 = z.rows(ne + n, n).into_owned();
            let z4 = z.rows(ne + 2 * n, ne).into_owned();
            let w = omega_g_matrix(&alg, &SprayPoint::new(z2, &xi + z3))?;
            Ok(linalg::block_diag(&[&(-sigma.value(&(&e_t + z1))?), &w, &sigma.value(&(&e_s + z4))?]))
        })
        .with_step(fd);
        Ok(exterior_derivative(&field, &Vector::zeros(self.ambient_dim()))?.pull_back(&k).max_abs())
    }

    pub fn nondegeneracy(&self, a: &ModelArrow, fd: FdStep) -> Result<f64> {
        let k = self.tangent_space(a, fd)?;
        Ok(linalg::min_singular_value(&self.omega_e(a, &k)?))
    }

    /// `max |m^* omega_E - pr_1^* omega_E - pr_2^* omega_E|` on the tangent
    /// space of composable pairs.
    pub fn multiplicativity_residual(&self, after: &ModelArrow, before: &ModelArrow, fd: FdStep) -> Result<f64> {
        let d = self.ambient_dim();
        let ne = self.e_dim();
        let h = fd.at(&before.arrow.xi);
        let pair_constraints = |v: &Vector| -> Result<Vector> {
            let a = self.displace(after, &v.rows(0, d).into_owned(), 1.0)?;
            let b = self.displace(before, &v.rows(d, d).into_owned(), 1.0)?;
            Ok(linalg::concat(&[&self.constraints(&a)?, &self.constraints(&b)?, &(&a.source - &b.target)]))
        };
        let jac = fd_jacobian(&pair_constraints, &Vector::zeros(2 * d), h)?;
        let k = linalg::kernel(&jac, FD_KERNEL_RTOL);
        if k.ncols() != 3 * ne {
            return Err(Error::DimensionDrop { expected: 3 * ne, got: k.ncols() });
        }
        let grp = self.gx.groupoid();
        let n = self.g_dim();
        let mut k_prod = Mat::zeros(d, k.ncols());
        for c in 0..k.ncols() {
            let va = k.column(c).rows(0, d).into_owned();
            let vb = k.column(c).rows(d, d).into_owned();
            let curve = |t: f64| -> Result<ModelArrow> {
                Ok(self.multiply_unchecked(&self.displace(after, &va, t)?, &self.displace(before, &vb, t)?))
            };
            let (p, m) = (curve(h)?, curve(-h)?);
            let gamma = grp.curve_tangent(&|t| Ok(curve(t)?.arrow), h)?;
            let col = linalg::concat(&[&((&p.target - &m.target) / (2.0 * h)), &gamma, &((&p.source - &m.source) / (2.0 * h))]);
            debug_assert_eq!(col.len(), 2 * ne + 2 * n);
            k_prod.set_column(c, &col);
        }
        let k_after = k.rows(0, d).into_owned();
        let k_before = k.rows(d, d).into_owned();
        let prod = self.compose(after, before)?;
        let lhs = k_prod.transpose() * self.form_matrix(&prod)? * &k_prod;
        let rhs = k_after.transpose() * self.form_matrix(after)? * &k_after + k_before.transpose() * self.form_matrix(before)? * &k_before;
        Ok(linalg::max_abs(&(lhs - rhs)))
    }

    /// Distance between `(t, s)_! graph(omega_E)` and `graph(-pi ⊕ pi)` at `a`.
    pub fn forward_dirac_residual(&self, a: &ModelArrow, fd: FdStep) -> Result<f64> {
        let (ne, n) = (self.e_dim(), self.g_dim());
        let k = self.tangent_space(a, fd)?;
        let omega = self.omega_e(a, &k)?;
        let omega = (&omega - omega.transpose()) * 0.5;
        let ts = linalg::vstack(&[&k.rows(0, ne).into_owned(), &k.rows(ne + 2 * n, ne).into_owned()]);
        let pushed = dirac::forward_image(&ts, &dirac::graph_of_twoform(&omega)?)?;
        let want = linalg::block_diag(&[&(-self.base_bivector(&a.target)?), &self.base_bivector(&a.source)?]);
        Ok(pushed.distance(&dirac::graph_of_bivector(&want)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCertifyOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub fd: FdStep,
    /// Radius for `G_X` samples; defaults to `0.1 (1 + |lambda|)`.
    pub radius: Option<f64>,
    /// Radius for the fiber coordinates of `E`; defaults to the same.
    pub fiber_radius: Option<f64>,
}

impl Default for ModelCertifyOptions {
    fn default() -> Self {
        Self { samples: 20, tol: 1e-6, seed: 42, fd: FdStep::default(), radius: None, fiber_radius: None }
    }
}

/// Closed, nondegenerate, multiplicative, and `(t, s)` forward Dirac.
pub fn certify_pullback_model(model: &PullbackModel, opts: &ModelCertifyOptions) -> Vec<VerificationReport> {
    let default_radius = 0.1 * (1.0 + model.gx.transversal().base().norm());
    let radius = opts.radius.unwrap_or(default_radius);
    let fiber_radius = opts.fiber_radius.unwrap_or(default_radius);
    let mut s = Sampler::new(opts.seed);
    let arrows: Vec<Result<ModelArrow>> = (0..opts.samples).map(|_| model.sample_arrow(&mut s, radius, fiber_radius)).collect();
    let pairs: Vec<Result<(ModelArrow, ModelArrow)>> =
        (0..opts.samples).map(|_| model.sample_composable(&mut s, radius, fiber_radius)).collect();
    let arrow_of = |a: &Result<ModelArrow>| a.as_ref().map_err(Clone::clone).cloned();

    let closed = evaluate(&arrows, |a| model.closedness_residual(&arrow_of(a)?, opts.fd));
    let svs: Vec<std::result::Result<f64, String>> =
        arrows.iter().map(|a| arrow_of(a).and_then(|a| model.nondegeneracy(&a, opts.fd)).map_err(|e| e.to_string())).collect();
    let mult = evaluate(&pairs, |p| {
        let (after, before) = p.as_ref().map_err(Clone::clone)?;
        model.multiplicativity_residual(after, before, opts.fd)
    });
    let dirac = evaluate(&arrows, |a| model.forward_dirac_residual(&arrow_of(a)?, opts.fd));
    vec![
        VerificationReport::from_outcomes("pullback_closed", opts.tol, Some(opts.seed), &closed),
        VerificationReport::nondegeneracy("pullback_nondegenerate", NONDEGENERACY_THRESHOLD, Some(opts.seed), &svs),
        VerificationReport::from_outcomes("pullback_multiplicative", opts.tol, Some(opts.seed), &mult),
        VerificationReport::from_outcomes("pullback_forward_dirac", opts.tol, Some(opts.seed), &dirac)
            .with_note("the isomorphism with the symplectic groupoid of the base is not constructed; both sides are certified separately"),
    ]
}
