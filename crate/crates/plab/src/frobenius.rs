//! Frobenius subalgebras `h ⊂ g`, the form `omega_lambda`, the splitting of
//! `g*` along the restriction map `r: g* -> h*`, the Vorobjev decomposition
//! `pi_g = pi_v + pi_h`, and quadraticity of the transverse structure.
//!
//! `h` is given by a basis matrix `H` (`n x d`, columns in `g`); `h`-coordinates
//! are coefficients in that basis and `r(xi) = H^T xi`.

use serde::Serialize;

use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};
use crate::fields::{fit_polynomial_degree, schouten, FdStep, FitReport, PointBivector, SampleGrid};
use crate::linalg::{self, Mat, Vector, RANK_RTOL};
use crate::report::{evaluate, VerificationReport};
use crate::sample::Sampler;
use crate::transversal::AffineTransversal;
use crate::{dirac, LinearSubspace};

/// `B_lambda` counts as degenerate below this smallest singular value.
pub const FROBENIUS_SV_TOL: f64 = 1e-8;
pub const SUBALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusPair {
    g: LieAlgebra,
    h_basis: Mat,
    h: LieAlgebra,
    lambda: Vector,
    /// Orthonormal basis of `h°` in `g*`.
    annihilator: Mat,
    /// `r^{-1}(lambda)`; its tangent basis is `annihilator`.
    x_lambda: AffineTransversal,
    /// Minimum-norm `xi` with `r(xi) = lambda`.
    xi_ref: Vector,
    b_min_sv: f64,
}

impl FrobeniusPair {
    pub fn new(g: LieAlgebra, h_basis: Mat, lambda: Vector) -> Result<Self> {
        let n = g.dim();
        if h_basis.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h_basis.nrows() });
        }
        let d = h_basis.ncols();
        if lambda.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lambda.len() });
        }
        if d % 2 == 1 {
            return Err(Error::NotFrobenius { min_sv: 0.0 });
        }
        let h = if d == 0 { LieAlgebra::from_table(0, Vec::new())? } else { g.subalgebra(&h_basis, SUBALGEBRA_TOL)? };
        let b = h.poisson_matrix(&lambda)?;
        let b_min_sv = linalg::min_singular_value(&b);
        if b_min_sv <= FROBENIUS_SV_TOL {
            return Err(Error::NotFrobenius { min_sv: b_min_sv });
        }
        let annihilator = if d == 0 { Mat::identity(n, n) } else { LinearSubspace::new(&h_basis)?.annihilator().basis().clone() };
        let gram = h_basis.transpose() * &h_basis;
        let xi_ref = if d == 0 {
            Vector::zeros(n)
        } else {
            &h_basis * linalg::inverse(&gram).ok_or_else(|| Error::Invalid("h basis is degenerate".into()))? * &lambda
        };
        let x_lambda = AffineTransversal::new(g.clone(), xi_ref.clone(), &annihilator)?;
        let annihilator = x_lambda.tangent_basis().clone();
        Ok(Self { g, h_basis, h, lambda, annihilator, x_lambda, xi_ref, b_min_sv })
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.g
    }

    pub fn subalgebra(&self) -> &LieAlgebra {
        &self.h
    }

    pub fn h_basis(&self) -> &Mat {
        &self.h_basis
    }

    pub fn lambda(&self) -> &Vector {
        &self.lambda
    }

    pub fn annihilator(&self) -> &Mat {
        &self.annihilator
    }

    pub fn reference_extension(&self) -> &Vector {
        &self.xi_ref
    }

    /// Smallest singular value of `B_lambda`.
    pub fn b_min_singular_value(&self) -> f64 {
        self.b_min_sv
    }

    pub fn restrict(&self, xi: &Vector) -> Vector {
        self.h_basis.transpose() * xi
    }

    /// Minimum-norm extension of `mu` to `g`.
    pub fn extension(&self, mu: &Vector) -> Result<Vector> {
        if self.h_basis.ncols() == 0 {
            return Ok(Vector::zeros(self.g.dim()));
        }
        let gram = self.h_basis.transpose() * &self.h_basis;
        Ok(&self.h_basis * linalg::inverse(&gram).ok_or_else(|| Error::Invalid("h basis is degenerate".into()))? * mu)
    }

    /// The fiber `r^{-1}(mu)`, an affine transversal with directions `h°`.
    pub fn fiber(&self, mu: &Vector) -> Result<AffineTransversal> {
        if mu == &self.lambda {
            return Ok(self.x_lambda.clone());
        }
        AffineTransversal::new(self.g.clone(), self.extension(mu)?, &self.annihilator)
    }

    pub fn default_radius(&self) -> f64 {
        0.1 * (1.0 + self.xi_ref.norm())
    }

    /// `omega_lambda` at `x0` as a `d x d` matrix: `-Xi^T B_lambda Xi` with
    /// `Xi = Xi_{x0}` computed in `h`.
    pub fn omega_lambda_matrix(&self, x0: &Vector) -> Result<Mat> {
        let xi_op = self.h.xi_operator(x0)?;
        let b = self.h.poisson_matrix(&self.lambda)?;
        let w = -(xi_op.transpose() * b * &xi_op);
        Ok((&w - w.transpose()) * 0.5)
    }

    /// `omega_lambda(x0)(x, y) = -lambda([Xi x, Xi y])`.
    pub fn omega_lambda(&self, x0: &Vector, x: &Vector, y: &Vector) -> Result<f64> {
        Ok(x.dot(&(self.omega_lambda_matrix(x0)? * y)))
    }

    /// `Phi(x, u) = coad_exp(H x, xi_ref + A u)` on `h × X_lambda`.
    pub fn splitting_map(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        let xi = &self.xi_ref + &self.annihilator * u;
        self.g.coad_exp(&(&self.h_basis * x), &xi)
    }

    /// `max |Phi_* (omega_lambda^{-1} ⊕ pi_X) - pi_g|` and the commuting
    /// square `r(Phi(x, u)) = coad_exp_h(x, lambda)` at one point.
    pub fn splitting_residual(&self, x: &Vector, u: &Vector, fd: FdStep) -> Result<f64> {
        let d = self.h_basis.ncols();
        let k = self.annihilator.ncols();
        let fiber = self.fiber(&self.lambda)?;
        let omega = self.omega_lambda_matrix(x)?;
        let omega_inv = linalg::inverse(&omega).ok_or(Error::SingularBase { min_sv: linalg::min_singular_value(&omega) })?;
        let pi_x = fiber.tangential_bivector(u)?;
        let domain = linalg::block_diag(&[&omega_inv, &pi_x]);
        let p = linalg::concat(&[x, u]);
        let map = |q: &Vector| self.splitting_map(&q.rows(0, d).into_owned(), &q.rows(d, k).into_owned());
        let jac = crate::fields::fd_jacobian(&map, &p, fd.at(&p))?;
        let image = map(&p)?;
        let pushed = &jac * domain * jac.transpose();
        let bivector = linalg::max_abs(&(pushed - self.g.poisson_matrix(&image)?));
        let square = linalg::max_abs_vec(&(self.restrict(&image) - self.h.coad_exp(x, &self.lambda)?));
        Ok(bivector.max(square))
    }

    /// `hor_xi: T_mu h* -> g*` (an `n x d` matrix), the lift by `v -> ad_x^T xi`
    /// with `ad_x^T mu = v`, `x in h`.
    pub fn horizontal_lift(&self, xi: &Vector) -> Result<Mat> {
        let (n_mat, b) = self.isotropy_data(xi)?;
        let b_inv = linalg::inverse(&b).ok_or(Error::SingularIsotropy { min_sv: linalg::min_singular_value(&b) })?;
        Ok(-(n_mat * b_inv))
    }

    /// `N = [ad_{H e_i}^T xi]` and `B_mu = pi_h(r(xi))`.
    fn isotropy_data(&self, xi: &Vector) -> Result<(Mat, Mat)> {
        let n = self.g.dim();
        let d = self.h_basis.ncols();
        let mut n_mat = Mat::zeros(n, d);
        for i in 0..d {
            let x = self.h_basis.column(i).into_owned();
            n_mat.set_column(i, &(self.g.ad_matrix(&x)?.transpose() * xi));
        }
        let b = self.h.poisson_matrix(&self.restrict(xi))?;
        let min_sv = linalg::min_singular_value(&b);
        if min_sv <= FROBENIUS_SV_TOL * (1.0 + linalg::max_abs(&b)) {
            return Err(Error::SingularIsotropy { min_sv });
        }
        Ok((n_mat, b))
    }

    /// `(pi_v, pi_h)` at `xi` with `pi_h = hor (pi_{h, mu}) hor^T` and `pi_v = pi_g - pi_h`.
    pub fn vorobjev_decompose(&self, xi: &Vector) -> Result<(Mat, Mat)> {
        if self.h_basis.ncols() == 0 {
            return Ok((self.g.poisson_matrix(xi)?, Mat::zeros(self.g.dim(), self.g.dim())));
        }
        let (n_mat, b) = self.isotropy_data(xi)?;
        let b_inv = linalg::inverse(&b).ok_or(Error::SingularIsotropy { min_sv: linalg::min_singular_value(&b) })?;
        let pi_h = -(&n_mat * b_inv * n_mat.transpose());
        let pi_h = (&pi_h - pi_h.transpose()) * 0.5;
        let pi_v = self.g.poisson_matrix(xi)? - &pi_h;
        Ok((pi_v, pi_h))
    }

    pub fn vertical_field(&self, fd: FdStep) -> PointBivector {
        let p = self.clone();
        PointBivector::new(self.g.dim(), move |xi| Ok(p.vorobjev_decompose(xi)?.0)).with_step(fd)
    }

    pub fn horizontal_field(&self, fd: FdStep) -> PointBivector {
        let p = self.clone();
        PointBivector::new(self.g.dim(), move |xi| Ok(p.vorobjev_decompose(xi)?.1)).with_step(fd)
    }

    /// Range containment, the three Schouten brackets, and `r` pushing
    /// `pi_g` and `pi_h` to `pi_{h*}` at one point.
    pub fn vorobjev_residuals(&self, xi: &Vector, fd: FdStep) -> Result<VorobjevResiduals> {
        let (pi_v, pi_h) = self.vorobjev_decompose(xi)?;
        let scale = linalg::max_abs(&self.g.poisson_matrix(xi)?).max(f64::MIN_POSITIVE);
        let range_vertical = outside_component(&pi_v, &self.annihilator) / scale;
        let range_horizontal = if self.h_basis.ncols() == 0 {
            linalg::max_abs(&pi_h) / scale
        } else {
            outside_component(&pi_h, &self.isotropy_data(xi)?.0) / scale
        };
        let v = self.vertical_field(fd);
        let h = self.horizontal_field(fd);
        let schouten_vv = schouten(&v, &v, xi)?.max_abs();
        let schouten_hh = schouten(&h, &h, xi)?.max_abs();
        let schouten_vh = schouten(&v, &h, xi)?.max_abs();
        let r = self.h_basis.transpose();
        let target = dirac::graph_of_bivector(&self.h.poisson_matrix(&self.restrict(xi))?)?;
        let forward_dirac = dirac::forward_image(&r, &dirac::graph_of_bivector(&self.g.poisson_matrix(xi)?)?)?
            .distance(&target)
            .max(dirac::forward_image(&r, &dirac::graph_of_bivector(&pi_h)?)?.distance(&target));
        Ok(VorobjevResiduals { range_vertical, range_horizontal, schouten_vv, schouten_hh, schouten_vh, forward_dirac })
    }

    /// The transverse structure on `r^{-1}(mu)` in the coordinates of its
    /// directions `h°`: `A^T pi_v A`.
    pub fn transverse_field(&self, mu: &Vector) -> Result<PointBivector> {
        let base = self.extension(mu)?;
        let p = self.clone();
        let a = self.annihilator.clone();
        Ok(PointBivector::new(a.ncols(), move |u| {
            let (pi_v, _) = p.vorobjev_decompose(&(&base + &a * u))?;
            Ok(a.transpose() * pi_v * &a)
        }))
    }
}

/// `max |(I - P) m|` with `P` the orthogonal projector onto the column span of `sup`.
fn outside_component(m: &Mat, sup: &Mat) -> f64 {
    let q = linalg::orth(sup, RANK_RTOL);
    linalg::max_abs(&(m - &q * (q.transpose() * m)))
}

/// Range residuals are relative to `|pi_g(xi)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VorobjevResiduals {
    pub range_vertical: f64,
    pub range_horizontal: f64,
    pub schouten_vv: f64,
    pub schouten_hh: f64,
    pub schouten_vh: f64,
    pub forward_dirac: f64,
}

impl VorobjevResiduals {
    pub fn max(&self) -> f64 {
        [self.range_vertical, self.range_horizontal, self.schouten_vv, self.schouten_hh, self.schouten_vh, self.forward_dirac]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub fd: FdStep,
    /// Defaults to `0.1 (1 + |xi_ref|)`.
    pub radius: Option<f64>,
}

impl Default for FrobeniusOptions {
    fn default() -> Self {
        Self { samples: 100, tol: 1e-6, seed: 42, fd: FdStep::default(), radius: None }
    }
}

pub fn weinstein_splitting_check(p: &FrobeniusPair, opts: &FrobeniusOptions) -> VerificationReport {
    let radius = opts.radius.unwrap_or_else(|| p.default_radius());
    let (d, k) = (p.h_basis.ncols(), p.annihilator.ncols());
    let mut s = Sampler::new(opts.seed);
    let points: Vec<(Vector, Vector)> = (0..opts.samples).map(|_| (s.ball(d, radius), s.ball(k, radius))).collect();
    let outcomes = match p.fiber(&p.lambda) {
        Ok(_) => evaluate(&points, |(x, u)| p.splitting_residual(x, u, opts.fd)),
        Err(e) => vec![Err(e.to_string()); points.len()],
    };
    VerificationReport::from_outcomes("weinstein_splitting", opts.tol, Some(opts.seed), &outcomes)
        .with_note(format!("ball radius {radius}; the quotient by the discrete stabilizer is not constructed"))
}

/// Samples `xi` in a ball around the reference extension of `lambda`.
pub fn check_vorobjev(p: &FrobeniusPair, opts: &FrobeniusOptions) -> VerificationReport {
    let radius = opts.radius.unwrap_or_else(|| p.default_radius());
    let mut s = Sampler::new(opts.seed);
    let points: Vec<Vector> = (0..opts.samples).map(|_| &p.xi_ref + s.ball(p.g.dim(), radius)).collect();
    let outcomes = evaluate(&points, |xi| Ok(p.vorobjev_residuals(xi, opts.fd)?.max()));
    VerificationReport::from_outcomes("vorobjev", opts.tol, Some(opts.seed), &outcomes).with_note(format!("ball radius {radius}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticityReport {
    pub fit: FitReport,
    /// Relative residual of the quadratic fit.
    pub quadratic_residual: f64,
    pub cubic_residual: f64,
}

pub fn transverse_quadraticity(p: &FrobeniusPair, mu: &Vector, radius: f64, tol: f64, seed: u64) -> Result<QuadraticityReport> {
    let field = p.transverse_field(mu)?;
    let center = Vector::zeros(p.annihilator.ncols());
    let fit = fit_polynomial_degree(&field, &center, radius, 3, SampleGrid::Auto { seed }, tol)?;
    Ok(QuadraticityReport { quadratic_residual: fit.residuals[2], cubic_residual: fit.residuals[3], fit })
}

/// Passes when the fitted degree is at most two and both the quadratic and
/// cubic fit residuals are within `tol`.
pub fn verify_quadraticity(p: &FrobeniusPair, tol: f64, seed: u64, radius: Option<f64>) -> VerificationReport {
    let radius = radius.unwrap_or_else(|| p.default_radius());
    match transverse_quadraticity(p, &p.lambda.clone(), radius, tol, seed) {
        Ok(q) => {
            let outcome = if q.fit.degree <= 2 { Ok(q.quadratic_residual.max(q.cubic_residual)) } else { Ok(f64::INFINITY) };
            VerificationReport::single("transverse_quadraticity", tol, outcome)
                .with_note(format!("fitted degree {}; cubic residual {:e}", q.fit.degree, q.cubic_residual))
        }
        Err(e) => VerificationReport::single("transverse_quadraticity", tol, Err(e.to_string())),
    }
}

/// Smallest `|x0|` along sampled directions in `h` where `omega_lambda(x0)`
/// degenerates (relative singular value below `1e-8`), capped at `max_radius`.
pub fn nondegeneracy_radius(p: &FrobeniusPair, directions: usize, max_radius: f64, seed: u64) -> f64 {
    let d = p.h_basis.ncols();
    if d == 0 {
        return max_radius;
    }
    let scale = p.b_min_sv;
    let ok = |x: &Vector| {
        p.omega_lambda_matrix(x)
            .map(|w| {
                linalg::min_singular_value(&w) > 1e-8 * scale
                    && p.h.xi_operator(x).map(|m| linalg::min_singular_value(&m) > 1e-8).unwrap_or(false)
            })
            .unwrap_or(false)
    };
    let mut s = Sampler::new(seed);
    let step = max_radius / 200.0;
    let mut best = max_radius;
    for _ in 0..directions {
        let mut dir = s.normal(d);
        dir /= dir.norm();
        let mut t = 0.0;
        while t < best {
            let next = t + step;
            if !ok(&(&dir * next)) {
                let (mut lo, mut hi) = (t, next);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if ok(&(&dir * mid)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.min(hi);
                break;
            }
            t = next;
        }
    }
    best
}
