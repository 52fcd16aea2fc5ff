use crate::error::{Error, Result};
use crate::fields::{fd_jacobian, FdStep};
use crate::linalg::{self, Mat, Vector};
use crate::report::{evaluate, VerificationReport};
use crate::sample::Sampler;
use crate::transversal::AffineTransversal;

use super::action::{omega_big_g_matrix, ActionGroupoid, ActionGroupoidPoint};

/// Relative rank tolerance for kernels of finite-difference Jacobians.
pub const FD_KERNEL_RTOL: f64 = 1e-7;
pub const NONDEGENERACY_THRESHOLD: f64 = 1e-8;

/// `G_X = (t, s)^{-1}(X × X)` inside `G ⋉ g*`.
#[derive(Debug, Clone)]
pub struct RestrictedGroupoid {
    grp: ActionGroupoid,
    x: AffineTransversal,
}

impl RestrictedGroupoid {
    pub fn new(grp: ActionGroupoid, x: AffineTransversal) -> Result<Self> {
        if grp.rep().algebra() != x.algebra() {
            return Err(Error::Invalid("transversal and representation use different algebras".into()));
        }
        Ok(Self { grp, x })
    }

    pub fn groupoid(&self) -> &ActionGroupoid {
        &self.grp
    }

    pub fn transversal(&self) -> &AffineTransversal {
        &self.x
    }

    /// `dim G_X = 2 dim X`.
    pub fn expected_dim(&self) -> usize {
        2 * self.x.dim()
    }

    /// `[A^T (s - lambda); A^T (t - lambda)]`.
    pub fn constraints(&self, a: &ActionGroupoidPoint) -> Result<Vector> {
        let conormal = self.x.conormal_basis();
        let lambda = self.x.base();
        let s = conormal.transpose() * (self.grp.source(a) - lambda);
        let t = conormal.transpose() * (self.grp.target(a)? - lambda);
        Ok(linalg::concat(&[&s, &t]))
    }

    pub fn membership_residual(&self, a: &ActionGroupoidPoint) -> Result<f64> {
        Ok(self.x.distance(&self.grp.source(a)).max(self.x.distance(&self.grp.target(a)?)))
    }

    pub fn check_member(&self, a: &ActionGroupoidPoint) -> Result<()> {
        let residual = self.membership_residual(a)?;
        if residual > self.x.snap_tol() {
            return Err(Error::NotMember { residual });
        }
        Ok(())
    }

    /// Orthonormal basis (right-trivialized coordinates) of `T_a G_X`.
    pub fn tangent_space(&self, a: &ActionGroupoidPoint, fd: FdStep) -> Result<Mat> {
        self.check_member(a)?;
        let n = self.grp.dim();
        let h = fd.at(&a.xi);
        let f = |v: &Vector| self.constraints(&self.grp.displace(a, v, 1.0)?);
        let jac = fd_jacobian(&f, &Vector::zeros(2 * n), h)?;
        Ok(linalg::kernel(&jac, FD_KERNEL_RTOL))
    }

    /// `omega_X = Omega_G` on the columns of `tangent`.
    pub fn restricted_form(&self, a: &ActionGroupoidPoint, tangent: &Mat) -> Result<Mat> {
        let w = omega_big_g_matrix(self.grp.rep().algebra(), &a.xi)?;
        Ok(tangent.transpose() * w * tangent)
    }

    /// Solves `A^T (coad_exp(x_free + A y, xi) - lambda) = 0` for `y` by Newton
    /// and returns `(exp(rho(x)), xi)`.
    pub fn member_from(&self, xi: &Vector, x_free: &Vector) -> Result<ActionGroupoidPoint> {
        let xi = self.x.snap(xi)?;
        let alg = self.grp.rep().algebra();
        let conormal = self.x.conormal_basis();
        let lambda = self.x.base();
        let m = conormal.ncols();
        let residual = |y: &Vector| -> Result<Vector> {
            let x = x_free + conormal * y;
            Ok(conormal.transpose() * (alg.coad_exp(&x, &xi)? - lambda))
        };
        let mut y = Vector::zeros(m);
        let goal = 1e-13 * (1.0 + lambda.norm());
        let mut r = residual(&y)?;
        let mut iters = 0;
        while r.norm() > goal {
            if iters == 50 {
                return Err(Error::NonConvergence(format!("member solve stalled at residual {:e}", r.norm())));
            }
            let jac = fd_jacobian(&residual, &y, 1e-6 * (1.0 + y.norm()))?;
            let (step, _) = linalg::lstsq_vec(&jac, &r)?;
            y -= step;
            r = residual(&y)?;
            iters += 1;
        }
        let x = x_free + conormal * y;
        let arrow = self.grp.arrow(self.grp.rep().exp(&x)?, xi)?;
        self.check_member(&arrow)?;
        Ok(arrow)
    }

    /// Member with `s` in a ball of `radius` around the base point and a
    /// free group component of the same size.
    pub fn sample_member(&self, s: &mut Sampler, radius: f64) -> Result<ActionGroupoidPoint> {
        let n = self.grp.dim();
        let conormal = self.x.conormal_basis();
        let xi = self.x.point(&s.ball(self.x.dim(), radius));
        let raw = s.ball(n, radius);
        let x_free = &raw - conormal * (conormal.transpose() * &raw);
        self.member_from(&xi, &x_free)
    }
}

/// Membership, tangent dimension and nondegeneracy of `omega_X` at sampled members.
pub fn verify_restriction(rx: &RestrictedGroupoid, samples: usize, seed: u64, fd: FdStep) -> Vec<VerificationReport> {
    let mut s = Sampler::new(seed);
    let radius = 0.1 * (1.0 + rx.x.base().norm());
    let members: Vec<Result<ActionGroupoidPoint>> = (0..samples).map(|_| rx.sample_member(&mut s, radius)).collect();
    let member_of = |m: &Result<ActionGroupoidPoint>| m.as_ref().map_err(Clone::clone).cloned();

    let membership = evaluate(&members, |m| rx.membership_residual(&member_of(m)?));
    let tangents: Vec<Result<(ActionGroupoidPoint, Mat)>> = members
        .iter()
        .map(|m| {
            let a = member_of(m)?;
            let k = rx.tangent_space(&a, fd)?;
            Ok((a, k))
        })
        .collect();
    let expected = rx.expected_dim();
    let dims = evaluate(&tangents, |t| {
        let (_, k) = t.as_ref().map_err(Clone::clone)?;
        Ok((k.ncols() as f64 - expected as f64).abs())
    });
    let svs: Vec<std::result::Result<f64, String>> = tangents
        .iter()
        .map(|t| {
            let (a, k) = t.as_ref().map_err(|e| e.to_string())?;
            let w = rx.restricted_form(a, k).map_err(|e| e.to_string())?;
            Ok(linalg::min_singular_value(&w))
        })
        .collect();
    vec![
        VerificationReport::from_outcomes("restricted_membership", rx.x.snap_tol(), Some(seed), &membership),
        VerificationReport::from_outcomes("restricted_tangent_dim", 0.0, Some(seed), &dims)
            .with_note(format!("expected dim G_X = {expected}")),
        VerificationReport::nondegeneracy("restricted_nondegenerate", NONDEGENERACY_THRESHOLD, Some(seed), &svs),
    ]
}
