use crate::error::{Error, Result};
use crate::fields::{FdStep, PointTwoForm};
use crate::linalg::{self, Mat, Vector};
use crate::report::{evaluate, VerificationReport};
use crate::sample::Sampler;

use super::rep::{coadjoint_action, MatrixRep};

/// Relative tolerance for `s(first) = t(second)`.
pub const COMPOSABLE_TOL: f64 = 1e-9;
pub const AXIOM_TOL: f64 = 1e-10;

/// Arrow `(g, xi)` of `G ⋉ g*` with `s = xi` and `t = Ad_g^T xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGroupoidPoint {
    pub g: Mat,
    pub xi: Vector,
}

impl ActionGroupoidPoint {
    pub fn new(g: Mat, xi: Vector) -> Self {
        Self { g, xi }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::max_abs(&(&self.g - &other.g)).max(linalg::max_abs_vec(&(&self.xi - &other.xi)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionGroupoid {
    rep: MatrixRep,
}

impl ActionGroupoid {
    pub fn new(rep: MatrixRep) -> Self {
        Self { rep }
    }

    pub fn rep(&self) -> &MatrixRep {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.algebra().dim()
    }

    pub fn arrow(&self, g: Mat, xi: Vector) -> Result<ActionGroupoidPoint> {
        let n = self.dim();
        if xi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
        }
        let size = self.rep.size();
        if g.shape() != (size, size) {
            return Err(Error::DimensionMismatch { expected: size, got: g.nrows() });
        }
        if g.determinant().abs() <= f64::EPSILON {
            return Err(Error::Invalid("group element is singular".into()));
        }
        Ok(ActionGroupoidPoint::new(g, xi))
    }

    /// `(exp(rho(x_1)) ... exp(rho(x_r)), xi)`.
    pub fn arrow_from_word(&self, word: &[Vector], xi: Vector) -> Result<ActionGroupoidPoint> {
        self.arrow(self.rep.word(word)?, xi)
    }

    pub fn source(&self, a: &ActionGroupoidPoint) -> Vector {
        a.xi.clone()
    }

    pub fn target(&self, a: &ActionGroupoidPoint) -> Result<Vector> {
        coadjoint_action(&self.rep, &a.g, &a.xi)
    }

    pub fn unit(&self, xi: &Vector) -> ActionGroupoidPoint {
        ActionGroupoidPoint::new(Mat::identity(self.rep.size(), self.rep.size()), xi.clone())
    }

    pub fn inverse(&self, a: &ActionGroupoidPoint) -> Result<ActionGroupoidPoint> {
        let g_inv = linalg::inverse(&a.g).ok_or_else(|| Error::Invalid("group element is singular".into()))?;
        Ok(ActionGroupoidPoint::new(g_inv, self.target(a)?))
    }

    /// `first ∘ second`, defined when `s(first) = t(second)`; the product is
    /// `(g_second g_first, s(second))`.
    pub fn compose(&self, first: &ActionGroupoidPoint, second: &ActionGroupoidPoint) -> Result<ActionGroupoidPoint> {
        let t = self.target(second)?;
        let mismatch = linalg::max_abs_vec(&(&first.xi - &t));
        if mismatch > COMPOSABLE_TOL * (1.0 + linalg::max_abs_vec(&t)) {
            return Err(Error::NotComposable { mismatch });
        }
        Ok(ActionGroupoidPoint::new(&second.g * &first.g, second.xi.clone()))
    }

    /// Random word of `1..=3` exponentials with entries in a ball of `radius`.
    pub fn random_group_element(&self, s: &mut Sampler, radius: f64) -> Result<Mat> {
        let len = 1 + (s.uniform(0.0, 3.0) as usize).min(2);
        let word: Vec<Vector> = (0..len).map(|_| s.ball(self.dim(), radius)).collect();
        self.rep.word(&word)
    }

    /// Right-trivialized tangent `(g' g^{-1}, xi')` of a curve, by central differences.
    pub fn curve_tangent(&self, curve: &dyn Fn(f64) -> Result<ActionGroupoidPoint>, h: f64) -> Result<Vector> {
        let (p, m, c) = (curve(h)?, curve(-h)?, curve(0.0)?);
        let c_inv = linalg::inverse(&c.g).ok_or_else(|| Error::Invalid("group element is singular".into()))?;
        let dg = (&p.g - &m.g) / (2.0 * h);
        let a = self.rep.algebra_element(&(dg * c_inv))?;
        let dxi = (&p.xi - &m.xi) / (2.0 * h);
        Ok(linalg::concat(&[&a, &dxi]))
    }

    /// The curve `(exp(t rho(a)) g, xi + t xi')` through `arrow` with right-trivialized velocity `v`.
    pub fn displace(&self, arrow: &ActionGroupoidPoint, v: &Vector, t: f64) -> Result<ActionGroupoidPoint> {
        let n = self.dim();
        let a = v.rows(0, n).into_owned();
        let dxi = v.rows(n, n).into_owned();
        Ok(ActionGroupoidPoint::new(self.rep.exp(&(a * t))? * &arrow.g, &arrow.xi + dxi * t))
    }
}

/// A two-form on `G ⋉ g*` given by its matrix in right-trivialized coordinates `[a; xi']`.
pub trait GroupoidForm: Sync {
    fn matrix(&self, at: &ActionGroupoidPoint) -> Result<Mat>;
}

/// `Omega_G((a, xi'), (b, eta')) = xi'(b) - eta'(a) + xi0([a, b])` at `(g, xi0)`.
pub fn omega_big_g_matrix(alg: &crate::algebra::LieAlgebra, xi0: &Vector) -> Result<Mat> {
    let n = alg.dim();
    let mut w = Mat::zeros(2 * n, 2 * n);
    w.view_mut((0, 0), (n, n)).copy_from(&alg.poisson_matrix(xi0)?);
    w.view_mut((0, n), (n, n)).copy_from(&(-Mat::identity(n, n)));
    w.view_mut((n, 0), (n, n)).copy_from(&Mat::identity(n, n));
    Ok(w)
}

pub fn omega_big_g(grp: &ActionGroupoid, at: &ActionGroupoidPoint, u: &Vector, v: &Vector) -> Result<f64> {
    Ok(u.dot(&(omega_big_g_matrix(grp.rep().algebra(), &at.xi)? * v)))
}

#[derive(Debug, Clone)]
pub struct OmegaG {
    grp: ActionGroupoid,
}

impl OmegaG {
    pub fn new(grp: &ActionGroupoid) -> Self {
        Self { grp: grp.clone() }
    }
}

impl GroupoidForm for OmegaG {
    fn matrix(&self, at: &ActionGroupoidPoint) -> Result<Mat> {
        omega_big_g_matrix(self.grp.rep().algebra(), &at.xi)
    }
}

/// `form + s^* beta`; not multiplicative for any nonzero `beta`.
pub struct WithSourcePullback<'a, F: GroupoidForm> {
    pub form: &'a F,
    pub beta: PointTwoForm,
}

impl<F: GroupoidForm> GroupoidForm for WithSourcePullback<'_, F> {
    fn matrix(&self, at: &ActionGroupoidPoint) -> Result<Mat> {
        let mut w = self.form.matrix(at)?;
        let n = at.xi.len();
        let b = self.beta.value(&at.xi)?;
        let mut block = w.view_mut((n, n), (n, n));
        block += b;
        Ok(w)
    }
}

/// Linear two-form `beta(xi)_{ij} = sum_k C_ijk xi_k` with random `C`; closed
/// only by accident.
pub fn random_linear_two_form(n: usize, seed: u64) -> PointTwoForm {
    let mut s = Sampler::new(seed);
    let coeffs: Vec<Mat> = (0..n).map(|_| s.antisymmetric(n)).collect();
    PointTwoForm::new(n, move |xi| {
        let mut b = Mat::zeros(n, n);
        for (k, c) in coeffs.iter().enumerate() {
            b += c * xi[k];
        }
        Ok(b)
    })
}

/// Structure-map axioms on random composable triples `(a1, a2, a3)`.
pub fn groupoid_axioms_residual(grp: &ActionGroupoid, triple: &[ActionGroupoidPoint; 3]) -> Result<f64> {
    let [a1, a2, a3] = triple;
    let mut worst = 0.0_f64;
    let mut note = |r: f64| worst = worst.max(r);

    let m23 = grp.compose(a2, a3)?;
    note(linalg::max_abs_vec(&(grp.source(&m23) - grp.source(a3))));
    note(linalg::max_abs_vec(&(grp.target(&m23)? - grp.target(a2)?)));

    let left = grp.compose(&grp.compose(a1, a2)?, a3)?;
    let right = grp.compose(a1, &m23)?;
    note(left.distance(&right));

    for a in [a1, a2, a3] {
        let s = grp.source(a);
        let t = grp.target(a)?;
        note(grp.compose(a, &grp.unit(&s))?.distance(a));
        note(grp.compose(&grp.unit(&t), a)?.distance(a));
        let inv = grp.inverse(a)?;
        note(grp.compose(&inv, a)?.distance(&grp.unit(&s)));
        note(grp.compose(a, &inv)?.distance(&grp.unit(&t)));
    }
    Ok(worst)
}

pub fn random_composable_triple(grp: &ActionGroupoid, s: &mut Sampler, radius: f64) -> Result<[ActionGroupoidPoint; 3]> {
    let a3 = ActionGroupoidPoint::new(grp.random_group_element(s, radius)?, s.ball(grp.dim(), radius));
    let a2 = ActionGroupoidPoint::new(grp.random_group_element(s, radius)?, grp.target(&a3)?);
    let a1 = ActionGroupoidPoint::new(grp.random_group_element(s, radius)?, grp.target(&a2)?);
    Ok([a1, a2, a3])
}

pub fn verify_groupoid_axioms(grp: &ActionGroupoid, words: usize, seed: u64) -> VerificationReport {
    let mut s = Sampler::new(seed);
    let triples: Vec<Result<[ActionGroupoidPoint; 3]>> = (0..words).map(|_| random_composable_triple(grp, &mut s, 1.0)).collect();
    let outcomes = evaluate(&triples, |t| groupoid_axioms_residual(grp, t.as_ref().map_err(Clone::clone)?));
    VerificationReport::from_outcomes("groupoid_axioms", AXIOM_TOL, Some(seed), &outcomes)
}

/// Composable pair parametrized by `(g, h, eta)`: `first = (g, t(h, eta))`, `second = (h, eta)`.
#[derive(Debug, Clone)]
pub struct ComposablePair {
    pub g: Mat,
    pub h: Mat,
    pub eta: Vector,
}

/// `max |m^* w - pr_1^* w - pr_2^* w|` over the `3n` coordinate directions
/// `(a, b, eta')` of the curves `exp(t a) g`, `exp(t b) h`, `eta + t eta'`.
pub fn multiplicativity_residual(grp: &ActionGroupoid, form: &dyn GroupoidForm, pair: &ComposablePair, fd: FdStep) -> Result<f64> {
    let n = grp.dim();
    let rep = grp.rep();
    let h_step = fd.at(&pair.eta);
    let mut t_first = Mat::zeros(2 * n, 3 * n);
    let mut t_second = Mat::zeros(2 * n, 3 * n);
    let mut t_prod = Mat::zeros(2 * n, 3 * n);
    for d in 0..3 * n {
        let mut dir = Vector::zeros(3 * n);
        dir[d] = 1.0;
        let a = dir.rows(0, n).into_owned();
        let b = dir.rows(n, n).into_owned();
        let e = dir.rows(2 * n, n).into_owned();
        let curves = |t: f64| -> Result<(ActionGroupoidPoint, ActionGroupoidPoint)> {
            let g = rep.exp(&(&a * t))? * &pair.g;
            let h = rep.exp(&(&b * t))? * &pair.h;
            let second = ActionGroupoidPoint::new(h, &pair.eta + &e * t);
            let first = ActionGroupoidPoint::new(g, grp.target(&second)?);
            Ok((first, second))
        };
        let tf = grp.curve_tangent(&|t| Ok(curves(t)?.0), h_step)?;
        let ts = grp.curve_tangent(&|t| Ok(curves(t)?.1), h_step)?;
        let tp = grp.curve_tangent(
            &|t| {
                let (f, s) = curves(t)?;
                grp.compose(&f, &s)
            },
            h_step,
        )?;
        t_first.set_column(d, &tf);
        t_second.set_column(d, &ts);
        t_prod.set_column(d, &tp);
    }
    let second = ActionGroupoidPoint::new(pair.h.clone(), pair.eta.clone());
    let first = ActionGroupoidPoint::new(pair.g.clone(), grp.target(&second)?);
    let prod = grp.compose(&first, &second)?;
    let lhs = t_prod.transpose() * form.matrix(&prod)? * &t_prod;
    let rhs = t_first.transpose() * form.matrix(&first)? * &t_first + t_second.transpose() * form.matrix(&second)? * &t_second;
    Ok(linalg::max_abs(&(lhs - rhs)))
}

pub fn check_multiplicative(
    grp: &ActionGroupoid,
    form: &dyn GroupoidForm,
    samples: usize,
    tol: f64,
    seed: u64,
    fd: FdStep,
) -> VerificationReport {
    check_multiplicative_named(grp, form, samples, tol, seed, fd, "multiplicative")
}

pub fn check_multiplicative_named(
    grp: &ActionGroupoid,
    form: &dyn GroupoidForm,
    samples: usize,
    tol: f64,
    seed: u64,
    fd: FdStep,
    name: &str,
) -> VerificationReport {
    let mut s = Sampler::new(seed);
    let pairs: Vec<Result<ComposablePair>> = (0..samples)
        .map(|_| {
            Ok(ComposablePair {
                g: grp.random_group_element(&mut s, 1.0)?,
                h: grp.random_group_element(&mut s, 1.0)?,
                eta: s.ball(grp.dim(), 1.0),
            })
        })
        .collect();
    let outcomes = evaluate(&pairs, |p| multiplicativity_residual(grp, form, p.as_ref().map_err(Clone::clone)?, fd));
    VerificationReport::from_outcomes(name, tol, Some(seed), &outcomes)
}

/// Smallest singular value of `Omega_G` over sampled arrows.
pub fn verify_omega_big_g_nondegenerate(grp: &ActionGroupoid, samples: usize, seed: u64) -> VerificationReport {
    let mut s = Sampler::new(seed);
    let xis: Vec<Vector> = (0..samples).map(|_| s.ball(grp.dim(), 1.0)).collect();
    let alg = grp.rep().algebra();
    let svs: Vec<f64> = xis.iter().map(|xi| omega_big_g_matrix(alg, xi).map(|w| linalg::min_singular_value(&w)).unwrap_or(0.0)).collect();
    VerificationReport::nondegeneracy("omega_G_nondegenerate", 1e-8, Some(seed), &svs.into_iter().map(Ok).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieAlgebra;

    #[test]
    fn so3_axioms_and_multiplicativity() {
        let grp = ActionGroupoid::new(MatrixRep::so3_defining());
        let axioms = verify_groupoid_axioms(&grp, 200, 1);
        assert!(axioms.pass, "{axioms:?}");
        let form = OmegaG::new(&grp);
        let mult = check_multiplicative(&grp, &form, 20, 1e-6, 2, FdStep::default());
        assert!(mult.pass, "{mult:?}");
    }

    #[test]
    fn source_pullback_breaks_multiplicativity() {
        let grp = ActionGroupoid::new(MatrixRep::so3_defining());
        let form = OmegaG::new(&grp);
        let bad = WithSourcePullback { form: &form, beta: random_linear_two_form(3, 7) };
        let r = check_multiplicative(&grp, &bad, 10, 1e-6, 2, FdStep::default());
        assert!(!r.pass && r.max_residual > 1e-3, "{r:?}");
    }

    #[test]
    fn abelian_canonical_pairing() {
        let alg = LieAlgebra::abelian(2);
        let w = omega_big_g_matrix(&alg, &Vector::from_vec(vec![3.0, -1.0])).unwrap();
        let u = Vector::from_vec(vec![1.0, 0.0, 0.0, 2.0]);
        let v = Vector::from_vec(vec![0.0, 1.0, 5.0, 0.0]);
        // xi_u(b) - eta_v(a) = 2*1 - 5*1
        assert_eq!(u.dot(&(&w * &v)), -3.0);
    }

    #[test]
    fn mismatched_pair_rejected() {
        let grp = ActionGroupoid::new(MatrixRep::sl2_defining());
        let a = grp.unit(&Vector::from_vec(vec![1.0, 0.0, 0.0]));
        let b = grp.unit(&Vector::from_vec(vec![0.0, 1.0, 0.0]));
        assert!(matches!(grp.compose(&a, &b), Err(Error::NotComposable { .. })));
    }
}
