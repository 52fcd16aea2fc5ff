//! Action groupoids `G ⋉ g*` over faithful matrix representations, the form
//! `Omega_G`, restriction to transversals and the pullback-groupoid model.
//!
//! Conventions: `s(g, xi) = xi`, `t(g, xi) = Ad_g^T xi`, and the composite of
//! `(g, t(h, eta))` after `(h, eta)` is `(h g, eta)`. Tangent vectors to `G`
//! are right-trivialized, `a = g' g^{-1}`, and come from the curves
//! `exp(t rho(a)) g`. In these coordinates `Omega_G` at `(g, xi0)` is
//! `xi'(b) - eta'(a) + xi0([a, b])`, `s` is Poisson and `t` anti-Poisson.

mod action;
mod pullback;
mod rep;
mod restrict;

pub use action::{
    check_multiplicative, check_multiplicative_named, groupoid_axioms_residual, multiplicativity_residual, omega_big_g, omega_big_g_matrix,
    random_composable_triple, random_linear_two_form, verify_groupoid_axioms, verify_omega_big_g_nondegenerate, ActionGroupoid,
    ActionGroupoidPoint, ComposablePair, GroupoidForm, OmegaG, WithSourcePullback, AXIOM_TOL, COMPOSABLE_TOL,
};
pub use pullback::{certify_pullback_model, ModelArrow, ModelCertifyOptions, PullbackModel};
pub use rep::{coadjoint_action, MatrixRep, HOMOMORPHISM_TOL};
pub use restrict::{verify_restriction, RestrictedGroupoid, FD_KERNEL_RTOL, NONDEGENERACY_THRESHOLD};

use crate::error::Result;
use crate::linalg::{Mat, Vector};
use crate::spray::omega_v_on_conormal;
use crate::transversal::AffineTransversal;

/// `G_X^E` over the conormal chart `E = L° × X` with `sigma = omega_V`.
pub fn omega_v_model(rep: &MatrixRep, x: &AffineTransversal) -> Result<PullbackModel> {
    let gx = RestrictedGroupoid::new(ActionGroupoid::new(rep.clone()), x.clone())?;
    PullbackModel::new(gx, omega_v_on_conormal(x), x.codim())
}

/// `V × (H ⋉ h*) × V` with `h` spanned by the tangent directions of `x`
/// (read as elements of `g`), `W = h*` in the coordinates of `x`, and
/// `sigma = omega_V` of `x`.
pub fn isotropy_model(rep: &MatrixRep, x: &AffineTransversal) -> Result<PullbackModel> {
    let basis = x.tangent_basis();
    let h = rep.algebra().subalgebra(basis, 1e-12)?;
    let rho_h: Vec<Mat> = (0..basis.ncols()).map(|j| rep.represent(&basis.column(j).into_owned())).collect();
    let rep_h = MatrixRep::new(h.clone(), rho_h)?;
    let k = basis.ncols();
    let w = AffineTransversal::new(h, Vector::zeros(k), &Mat::identity(k, k))?;
    let gx = RestrictedGroupoid::new(ActionGroupoid::new(rep_h), w)?;
    PullbackModel::new(gx, omega_v_on_conormal(x), x.codim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieAlgebra;
    use crate::error::Error;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    fn so3_line() -> AffineTransversal {
        AffineTransversal::new(LieAlgebra::so3(), v(&[0.0, 0.0, 1.0]), &Mat::from_row_slice(3, 1, &[0.0, 0.0, 1.0])).unwrap()
    }

    fn assert_all_pass(reports: &[crate::VerificationReport]) {
        for r in reports {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn so3_line_model_certifies() {
        let model = omega_v_model(&MatrixRep::so3_defining(), &so3_line()).unwrap();
        assert_all_pass(&certify_pullback_model(&model, &ModelCertifyOptions { samples: 8, ..Default::default() }));
    }

    #[test]
    fn so3_isotropy_model_certifies() {
        let model = isotropy_model(&MatrixRep::so3_defining(), &so3_line()).unwrap();
        assert_all_pass(&certify_pullback_model(&model, &ModelCertifyOptions { samples: 8, ..Default::default() }));
    }

    #[test]
    fn point_transversal_gives_pair_groupoid() {
        let x = AffineTransversal::new(LieAlgebra::aff1(), v(&[0.0, 1.0]), &Mat::zeros(2, 0)).unwrap();
        let model = omega_v_model(&MatrixRep::aff1_defining(), &x).unwrap();
        let mut s = crate::sample::Sampler::new(5);
        let a = model.sample_arrow(&mut s, 0.1, 0.1).unwrap();
        assert!(a.arrow.distance(&model.restricted().groupoid().unit(&v(&[0.0, 1.0]))) < 1e-12);
        assert_all_pass(&certify_pullback_model(&model, &ModelCertifyOptions { samples: 6, ..Default::default() }));
    }

    #[test]
    fn sigma_dimension_checked() {
        let x = so3_line();
        let gx = RestrictedGroupoid::new(ActionGroupoid::new(MatrixRep::so3_defining()), x.clone()).unwrap();
        let bad = PullbackModel::new(gx, omega_v_on_conormal(&x), 1);
        assert!(matches!(bad, Err(Error::BlockDimensionMismatch(_))));
    }
}
